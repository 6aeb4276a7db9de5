use needlet_radon::estimators::{
    hard_threshold, thresh_needlet, FrameCache, ThresholdKind, ThresholdRule,
};
use needlet_radon::harness::lp_error;
use needlet_radon::image::ReconstructedImage;
use needlet_radon::needlet::{filter_a, filter_b, NeedletFrame};
use needlet_radon::orthopoly::{gegenbauer_eval, jacobi_eval, GegenbauerParam, JacobiParams};
use needlet_radon::sim::{observe, projection_coeffs, shepp_logan};
use needlet_radon::svd_basis::{enumerate_indices, index_count, DiskPoint, SvdCoeffs, SvdIndex};
use proptest::prelude::*;

fn band_limited(k_max: usize, below: usize) -> impl Strategy<Value = SvdCoeffs> {
    prop::collection::vec(-1.0f64..1.0, index_count(below)).prop_map(move |head| {
        let mut c = SvdCoeffs::zeros(k_max);
        c.values_mut()[..head.len()].copy_from_slice(&head);
        c
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hard_threshold_keeps_or_kills(x in -10.0f64..10.0, t in 0.0f64..10.0) {
        let y = hard_threshold(x, t);
        prop_assert!(y == 0.0 || y == x);
        prop_assert_eq!(y == x, x.abs() >= t);
    }

    #[test]
    fn filter_shape(t in 0.0f64..4.0) {
        let a = filter_a(t);
        prop_assert!((0.0..=1.0).contains(&a));
        if t <= 0.5 { prop_assert_eq!(a, 1.0); }
        if t >= 1.0 { prop_assert_eq!(a, 0.0); }
        prop_assert!(filter_a(t + 0.01) <= a);
        let b = filter_b(t);
        prop_assert!(b >= 0.0);
        if !(0.5..=2.0).contains(&t) { prop_assert_eq!(b, 0.0); }
    }

    #[test]
    fn index_positions_are_dense(k in 0usize..60, step in 0usize..60, sin in any::<bool>()) {
        // k - l even
        let l = k - 2 * (step % (k / 2 + 1));
        let i = if sin && l > 0 { 2 } else { 1 };
        let idx = SvdIndex::new(k, l, i).unwrap();
        prop_assert!(idx.position() < index_count(k + 1));
        prop_assert!(idx.position() >= index_count(k));
        prop_assert_eq!(enumerate_indices(k + 1)[idx.position()], idx);
    }

    #[test]
    fn gegenbauer_is_chebyshev_second_kind(n in 0usize..200, phi in 0.01f64..3.13) {
        let c = gegenbauer_eval(n, GegenbauerParam::new(1.0).unwrap(), phi.cos()).unwrap();
        prop_assert!((c * phi.sin() - ((n + 1) as f64 * phi).sin()).abs() < 1e-10);
    }

    #[test]
    fn jacobi_endpoint(n in 0usize..50, alpha in 0u32..10, beta in 0u32..10) {
        let p = JacobiParams::new(f64::from(alpha), f64::from(beta)).unwrap();
        let binom = (1..=n).fold(1.0, |acc, m| acc * (m as f64 + f64::from(alpha)) / m as f64);
        let v = jacobi_eval(n, p, 1.0).unwrap();
        prop_assert!((v - binom).abs() <= 1e-12 * binom);
    }

    #[test]
    fn parseval_and_reproduction(alpha in band_limited(16, 8)) {
        let frame = NeedletFrame::new(4).unwrap();
        let beta = frame.analysis(&alpha).unwrap();
        let energy = alpha.energy().max(1e-300);
        prop_assert!((beta.energy() - alpha.energy()).abs() <= 1e-9 * energy);
        let back = frame.synthesis(&beta, 16).unwrap();
        for (a, b) in back.values().iter().zip(alpha.values()) {
            prop_assert!((a - b).abs() <= 1e-9 * energy.sqrt());
        }
    }

    #[test]
    fn coefficient_csv_round_trip(alpha in band_limited(6, 6)) {
        prop_assert_eq!(SvdCoeffs::from_csv(&alpha.to_csv()).unwrap(), alpha);
    }

    #[test]
    fn phantom_vanishes_off_disk(r in 1.0001f64..3.0, theta in 0.0f64..6.3) {
        let p = DiskPoint::from_polar(r, theta);
        prop_assert_eq!(shepp_logan().density(p), 0.0);
    }

    #[test]
    fn lp_distance_is_a_metric(p in 1.0f64..12.0, shift in -2.0f64..2.0) {
        let a = ReconstructedImage::from_fn(32, |q| q.x * q.y).unwrap();
        let b = ReconstructedImage::from_fn(32, |q| q.x + shift).unwrap();
        let c = ReconstructedImage::from_fn(32, |q| shift * q.y).unwrap();
        let ab = lp_error(&a, &b, p).unwrap();
        prop_assert!(ab >= 0.0);
        prop_assert_eq!(lp_error(&a, &a, p).unwrap(), 0.0);
        prop_assert!((ab - lp_error(&b, &a, p).unwrap()).abs() < 1e-12);
        prop_assert!(ab <= lp_error(&a, &c, p).unwrap() + lp_error(&c, &b, p).unwrap() + 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    /// Raising κ never adds a kept needlet coefficient.
    #[test]
    fn kept_sets_nest_in_kappa(seed in 0u64..1000, k1 in 0.0f64..4.0, dk in 0.0f64..3.0) {
        let alpha = projection_coeffs(&shepp_logan(), 16).unwrap();
        let obs = observe(&alpha, 0.02, seed).unwrap();
        let frame = FrameCache::default().get(4).unwrap();
        let lo = thresh_needlet(&obs, &ThresholdRule::new(ThresholdKind::Needlet, k1, 0.02).unwrap(), &frame).unwrap();
        let hi = thresh_needlet(&obs, &ThresholdRule::new(ThresholdKind::Needlet, k1 + dk, 0.02).unwrap(), &frame).unwrap();
        for (a, b) in lo.levels.iter().flatten().zip(hi.levels.iter().flatten()) {
            prop_assert!(*b == 0.0 || a == b);
        }
    }
}
