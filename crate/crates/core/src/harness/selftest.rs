//! Quick invariant checks run by `needlet-radon selftest`.

use std::f64::consts::PI;

use crate::cubature::{disk_cubature, gauss_legendre, needlet_grid};
use crate::needlet::{filter_b, NeedletFrame};
use crate::sim::{observe, projection_coeffs, shepp_logan, unit_disk};
use crate::svd_basis::{
    eigenvalue, enumerate_indices, eval_all_f, eval_f, eval_g, index_count, DiskPoint, SvdCoeffs,
};

#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, value: f64, tol: f64) -> Check {
    Check {
        name,
        passed: value.is_finite() && value <= tol,
        detail: format!("{value:.3e} (tolerance {tol:.0e})"),
    }
}

fn gram_deviation() -> f64 {
    let k_max = 9;
    let cub = disk_cubature(2 * k_max).expect("small rule");
    let m = index_count(k_max);
    let mut gram = vec![0.0; m * m];
    let mut vals = vec![0.0; m];
    for (&p, &w) in cub.nodes().iter().zip(cub.weights()) {
        eval_all_f(k_max, p, &mut vals);
        for a in 0..m {
            for b in 0..m {
                gram[a * m + b] += w * vals[a] * vals[b];
            }
        }
    }
    (0..m * m)
        .map(|i| (gram[i] - if i / m == i % m { 1.0 } else { 0.0 }).abs())
        .fold(0.0, f64::max)
}

fn intertwining_deviation() -> f64 {
    let (x, w) = gauss_legendre(12).expect("small rule");
    let mut worst = 0.0f64;
    for idx in enumerate_indices(7) {
        for (theta, s) in [(0.3, -0.4), (2.1, 0.75), (4.0, 0.1)] {
            let half = (1.0f64 - s * s).sqrt();
            let (st, ct) = f64::sin_cos(theta);
            let line: f64 = x
                .iter()
                .zip(&w)
                .map(|(t, wt)| {
                    let t = half * t;
                    let p = DiskPoint {
                        x: s * ct - t * st,
                        y: s * st + t * ct,
                    };
                    wt * half * eval_f(idx, p).expect("inside disk")
                })
                .sum();
            let want = eigenvalue(idx.k) * eval_g(idx, theta, s).expect("valid index");
            worst = worst.max((line - want).abs());
        }
    }
    worst
}

fn cubature_deviation() -> f64 {
    (0..=4u32)
        .map(|j| {
            let grid = needlet_grid(j).expect("small grid");
            let c = grid.cubature();
            let top = c.exact_degree() / 2;
            (0..=top)
                .map(|m| {
                    let got: f64 = c
                        .nodes()
                        .iter()
                        .zip(c.weights())
                        .map(|(p, w)| w * (p.x * p.x + p.y * p.y).powi(m as i32))
                        .sum();
                    (got - PI / (m as f64 + 1.0)).abs()
                })
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

fn partition_deviation() -> f64 {
    (0..=400)
        .map(|n| {
            let t = 1.0 + n as f64 * 199.0 / 400.0;
            let s: f64 = (0..10).map(|j| filter_b(t * (-(j as f64)).exp2())).sum();
            (s - 1.0).abs()
        })
        .fold(0.0, f64::max)
}

fn round_trip_deviation() -> f64 {
    let frame = NeedletFrame::new(4).expect("small frame");
    let k_max = frame.required_k_max();
    let mut alpha = SvdCoeffs::zeros(k_max);
    for (n, v) in alpha.values_mut()[..index_count(8)].iter_mut().enumerate() {
        *v = (n as f64 * 0.37).sin();
    }
    let beta = frame.analysis(&alpha).expect("enough degrees");
    let back = frame.synthesis(&beta, k_max).expect("matching shape");
    let parseval = (beta.energy() - alpha.energy()).abs() / alpha.energy();
    let recon = back
        .values()
        .iter()
        .zip(alpha.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    parseval.max(recon)
}

fn coefficient_deviation() -> f64 {
    let disk = projection_coeffs(&unit_disk(), 8).expect("ellipse phantom");
    let off: f64 = disk.values()[1..]
        .iter()
        .map(|v| v.abs())
        .fold(0.0, f64::max);
    (disk.values()[0] - PI.sqrt()).abs().max(off)
}

fn determinism_deviation() -> f64 {
    let alpha = projection_coeffs(&shepp_logan(), 16).expect("ellipse phantom");
    let a = observe(&alpha, 0.01, 11).expect("valid noise level");
    let b = observe(&alpha, 0.01, 11).expect("valid noise level");
    if a == b {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Runs every check; none of them panics on failure.
pub fn selftest() -> Vec<Check> {
    vec![
        check("svd basis orthonormality", gram_deviation(), 1e-10),
        check("radon intertwining", intertwining_deviation(), 1e-10),
        check("needlet grid exactness", cubature_deviation(), 1e-10),
        check("filter partition of unity", partition_deviation(), 1e-12),
        check("tight frame round trip", round_trip_deviation(), 1e-9),
        check("phantom coefficients", coefficient_deviation(), 1e-12),
        check("observation determinism", determinism_deviation(), 0.0),
    ]
}
