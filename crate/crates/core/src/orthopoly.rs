//! Jacobi and Gegenbauer polynomials.
//!
//! Values use the classical normalization `P_n^{(a,b)}(1) = binom(n+a, n)` and
//! `C_n^λ(1) = Γ(n+2λ) / (n! Γ(2λ))`, and are produced by the forward
//! three-term recurrence in the degree.

use statrs::function::gamma::{gamma, ln_gamma};

use crate::error::{Error, Result};

/// Parameters `(alpha, beta)` of the Jacobi weight `(1-t)^alpha (1+t)^beta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JacobiParams {
    alpha: f64,
    beta: f64,
}

impl JacobiParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > -1.0 && beta > -1.0) {
            return Err(Error::InvalidParameter(format!(
                "jacobi parameters must exceed -1, got alpha={alpha}, beta={beta}"
            )));
        }
        Ok(Self { alpha, beta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

/// Parameter `lambda > -1/2` of `C_n^lambda`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GegenbauerParam(f64);

impl GegenbauerParam {
    pub fn new(lambda: f64) -> Result<Self> {
        // NaN fails the comparison too
        if lambda.partial_cmp(&-0.5) != Some(std::cmp::Ordering::Greater) {
            return Err(Error::InvalidParameter(format!(
                "gegenbauer parameter must exceed -1/2, got {lambda}"
            )));
        }
        Ok(Self(lambda))
    }

    pub fn lambda(&self) -> f64 {
        self.0
    }
}

fn check_unit_interval(t: f64) -> Result<()> {
    if !(-1.0..=1.0).contains(&t) {
        return Err(Error::Domain(format!("argument {t} outside [-1, 1]")));
    }
    Ok(())
}

/// `ln |Γ(x)|` for any non-pole real `x`.
fn ln_abs_gamma(x: f64) -> f64 {
    if x > 0.0 {
        ln_gamma(x)
    } else {
        gamma(x).abs().ln()
    }
}

/// Fills `out[n] = P_n^{(a,b)}(t)` for `n = 0..out.len()`.
///
/// No domain checks; callers guarantee `t` in `[-1, 1]`.
pub fn jacobi_sequence(params: JacobiParams, t: f64, out: &mut [f64]) {
    let (a, b) = (params.alpha, params.beta);
    let Some(first) = out.first_mut() else {
        return;
    };
    *first = 1.0;
    if out.len() == 1 {
        return;
    }
    out[1] = (a + 1.0) + (a + b + 2.0) * (t - 1.0) / 2.0;
    let ab = a + b;
    let a2b2 = a * a - b * b;
    for n in 2..out.len() {
        let nf = n as f64;
        let c = 2.0 * nf + ab;
        let lead = 2.0 * nf * (nf + ab) * (c - 2.0);
        let mid = (c - 1.0) * (c * (c - 2.0) * t + a2b2);
        let tail = 2.0 * (nf + a - 1.0) * (nf + b - 1.0) * c;
        out[n] = (mid * out[n - 1] - tail * out[n - 2]) / lead;
    }
}

pub fn jacobi_eval(n: usize, params: JacobiParams, t: f64) -> Result<f64> {
    check_unit_interval(t)?;
    let mut seq = vec![0.0; n + 1];
    jacobi_sequence(params, t, &mut seq);
    Ok(seq[n])
}

/// Squared norm `h_n` of `P_n^{(a,b)}` against `(1-t)^a (1+t)^b dt`.
pub fn jacobi_norm(n: usize, params: JacobiParams) -> f64 {
    let (a, b) = (params.alpha, params.beta);
    let nf = n as f64;
    let scale = (a + b + 1.0) * std::f64::consts::LN_2;
    if n == 0 {
        // The general form has 0/0 at a + b = -1; use the Beta integral.
        return (scale + ln_gamma(a + 1.0) + ln_gamma(b + 1.0) - ln_gamma(a + b + 2.0)).exp();
    }
    let log =
        scale - (2.0 * nf + a + b + 1.0).ln() + ln_gamma(nf + a + 1.0) + ln_gamma(nf + b + 1.0)
            - ln_gamma(nf + 1.0)
            - ln_gamma(nf + a + b + 1.0);
    log.exp()
}

/// Fills `out[n] = C_n^lambda(t)`.
pub fn gegenbauer_sequence(param: GegenbauerParam, t: f64, out: &mut [f64]) {
    let lambda = param.0;
    let Some(first) = out.first_mut() else {
        return;
    };
    *first = 1.0;
    if out.len() == 1 {
        return;
    }
    out[1] = 2.0 * lambda * t;
    for n in 2..out.len() {
        let nf = n as f64;
        out[n] = (2.0 * (nf + lambda - 1.0) * t * out[n - 1]
            - (nf + 2.0 * lambda - 2.0) * out[n - 2])
            / nf;
    }
}

pub fn gegenbauer_eval(n: usize, param: GegenbauerParam, t: f64) -> Result<f64> {
    check_unit_interval(t)?;
    let mut seq = vec![0.0; n + 1];
    gegenbauer_sequence(param, t, &mut seq);
    Ok(seq[n])
}

/// Squared norm `h_n^{(lambda)}` of `C_n^lambda` against `(1-t^2)^{lambda-1/2} dt`.
pub fn gegenbauer_norm(n: usize, param: GegenbauerParam) -> f64 {
    let lambda = param.0;
    let nf = n as f64;
    if n == 0 {
        // Γ(2λ)/((λ) Γ(λ)^2) is singular at λ = 0; use the Beta integral.
        let pi = std::f64::consts::PI;
        return (0.5 * pi.ln() + ln_gamma(lambda + 0.5) - ln_gamma(lambda + 1.0)).exp();
    }
    if lambda == 0.0 {
        // C_n^0 vanishes identically for n >= 1.
        return 0.0;
    }
    let log = (1.0 - 2.0 * lambda) * std::f64::consts::LN_2 + std::f64::consts::PI.ln()
        - 2.0 * ln_abs_gamma(lambda)
        + ln_gamma(nf + 2.0 * lambda)
        - (nf + lambda).ln()
        - ln_gamma(nf + 1.0);
    log.exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    /// Gauss-Legendre nodes and weights from Newton on the Legendre recurrence.
    fn legendre_rule(m: usize) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(m);
        for i in 0..m {
            let mut x = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=m {
                    let kf = k as f64;
                    let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                    p0 = p1;
                    p1 = p2;
                }
                let dp = m as f64 * (x * p1 - p0) / (x * x - 1.0);
                let step = p1 / dp;
                x -= step;
                if step.abs() < 1e-15 {
                    break;
                }
            }
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=m {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let dp = m as f64 * (x * p1 - p0) / (x * x - 1.0);
            out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
        }
        out
    }

    fn binom(n: f64, k: usize) -> f64 {
        (0..k).fold(1.0, |acc, i| acc * (n - i as f64) / (i as f64 + 1.0))
    }

    /// Explicit finite-sum representation, independent of the recurrence.
    fn jacobi_explicit(n: usize, a: f64, b: f64, t: f64) -> f64 {
        (0..=n)
            .map(|s| {
                binom(n as f64 + a, n - s)
                    * binom(n as f64 + b, s)
                    * ((t - 1.0) / 2.0).powi(s as i32)
                    * ((t + 1.0) / 2.0).powi((n - s) as i32)
            })
            .sum()
    }

    fn jp(a: f64, b: f64) -> JacobiParams {
        JacobiParams::new(a, b).unwrap()
    }

    #[test]
    fn degree_zero_is_one() {
        assert_eq!(jacobi_eval(0, jp(0.3, 2.0), -0.4).unwrap(), 1.0);
        assert_eq!(
            gegenbauer_eval(0, GegenbauerParam::new(1.0).unwrap(), 0.3).unwrap(),
            1.0
        );
    }

    #[test]
    fn jacobi_endpoint_normalization() {
        assert!((jacobi_eval(5, jp(0.0, 3.0), 1.0).unwrap() - 1.0).abs() < 1e-14);
        for a in 0..6 {
            for n in 0..=50 {
                let v = jacobi_eval(n, jp(a as f64, 7.0), 1.0).unwrap();
                let exact = binom((n + a) as f64, n);
                assert!(
                    (v - exact).abs() <= 1e-12 * exact,
                    "n={n} a={a}: {v} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn jacobi_degree_one() {
        assert!((jacobi_eval(1, jp(0.0, 1.0), 0.0).unwrap() + 0.5).abs() < 1e-15);
    }

    #[test]
    fn jacobi_matches_explicit_sum() {
        for &(a, b) in &[(0.0, 0.0), (0.0, 3.0), (1.0, 2.0), (0.5, -0.5)] {
            for n in 0..12 {
                for &t in &[-1.0, -0.7, 0.0, 0.33, 0.9, 1.0] {
                    let got = jacobi_eval(n, jp(a, b), t).unwrap();
                    let want = jacobi_explicit(n, a, b, t);
                    assert!((got - want).abs() < 1e-11 * want.abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn jacobi_norm_values() {
        assert!((jacobi_norm(0, jp(0.0, 0.0)) - 2.0).abs() < 1e-14);
        assert!((jacobi_norm(0, jp(0.0, 1.0)) - 2.0).abs() < 1e-14);
        let rule = legendre_rule(12);
        let numeric: f64 = rule
            .iter()
            .map(|&(t, w)| w * jacobi_explicit(3, 0.0, 2.0, t).powi(2) * (1.0 + t).powi(2))
            .sum();
        let h = jacobi_norm(3, jp(0.0, 2.0));
        assert!((h - numeric).abs() < 1e-10 * numeric, "{h} vs {numeric}");
    }

    #[test]
    fn jacobi_orthogonality_under_quadrature() {
        let rule = legendre_rule(60);
        for &(a, b) in &[(0.0, 0.0), (0.0, 4.0), (2.0, 1.0)] {
            let p = jp(a, b);
            for n in 0..=30 {
                for m in 0..n {
                    let ip: f64 = rule
                        .iter()
                        .map(|&(t, w)| {
                            w * jacobi_eval(n, p, t).unwrap()
                                * jacobi_eval(m, p, t).unwrap()
                                * (1.0 - t).powf(a)
                                * (1.0 + t).powf(b)
                        })
                        .sum();
                    let scale = (jacobi_norm(n, p) * jacobi_norm(m, p)).sqrt();
                    assert!(ip.abs() < 1e-9 * scale, "a={a} b={b} n={n} m={m}: {ip}");
                }
            }
        }
    }

    #[test]
    fn gegenbauer_values() {
        let one = GegenbauerParam::new(1.0).unwrap();
        assert!((gegenbauer_eval(2, one, 1.0).unwrap() - 3.0).abs() < 1e-14);
        assert!((gegenbauer_eval(1, one, 0.5).unwrap() - 1.0).abs() < 1e-15);
        let half = GegenbauerParam::new(0.5).unwrap();
        // Legendre P_2(t) = (3t^2 - 1)/2
        assert!((gegenbauer_eval(2, half, 0.4).unwrap() - (3.0 * 0.16 - 1.0) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn gegenbauer_matches_chebyshev_second_kind() {
        let one = GegenbauerParam::new(1.0).unwrap();
        let mut seq = vec![0.0; 201];
        for step in 0..400 {
            let phi = 0.01 + (PI - 0.02) * step as f64 / 399.0;
            gegenbauer_sequence(one, phi.cos(), &mut seq);
            for (n, v) in seq.iter().enumerate() {
                let want = ((n as f64 + 1.0) * phi).sin();
                assert!((v * phi.sin() - want).abs() < 1e-10, "n={n} phi={phi}");
            }
        }
    }

    #[test]
    fn gegenbauer_norm_values() {
        let one = GegenbauerParam::new(1.0).unwrap();
        // Gauss-Chebyshev of the second kind is exact for p(t) sqrt(1-t^2).
        let m = 40;
        let cheb = |n: usize| -> f64 {
            (1..=m)
                .map(|i| {
                    let th = i as f64 * PI / (m as f64 + 1.0);
                    let w = PI / (m as f64 + 1.0) * th.sin().powi(2);
                    w * gegenbauer_eval(n, one, th.cos()).unwrap().powi(2)
                })
                .sum()
        };
        for n in [0, 7] {
            let h = gegenbauer_norm(n, one);
            assert!((h - PI / 2.0).abs() < 1e-13);
            assert!((cheb(n) - PI / 2.0).abs() < 1e-12);
        }
        let half = GegenbauerParam::new(0.5).unwrap();
        assert!((gegenbauer_norm(2, half) - 0.4).abs() < 1e-14);
        let rule = legendre_rule(10);
        let numeric: f64 = rule
            .iter()
            .map(|&(t, w)| w * gegenbauer_eval(2, half, t).unwrap().powi(2))
            .sum();
        assert!((numeric - 0.4).abs() < 1e-13);
        // Chebyshev first kind limit: h_0 = pi for lambda -> 0.
        let zero = GegenbauerParam::new(0.0).unwrap();
        assert!((gegenbauer_norm(0, zero) - PI).abs() < 1e-13);
    }

    #[test]
    fn domain_and_parameter_errors() {
        assert!(JacobiParams::new(-1.0, 0.0).is_err());
        assert!(JacobiParams::new(0.0, f64::NAN).is_err());
        assert!(GegenbauerParam::new(-0.5).is_err());
        assert!(jacobi_eval(3, jp(0.0, 0.0), 1.0001).is_err());
        assert!(gegenbauer_eval(3, GegenbauerParam::new(1.0).unwrap(), -1.5).is_err());
    }
}
