//! Positive product cubature on the unit disk.
//!
//! A rule of degree `n` takes `M = n + 1` equispaced angles and the
//! `⌈(n+1)/2⌉`-point Gauss rule for `r dr` on `[0, 1]`; it integrates every
//! polynomial of total degree `<= n` exactly. The needlet grid of level `j`
//! is the rule of degree `2^{j+2}`.

use std::f64::consts::PI;

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::orthopoly::{jacobi_sequence, JacobiParams};
use crate::svd_basis::DiskPoint;

/// Default cap on the number of nodes of a generated rule.
pub const DEFAULT_NODE_CAP: usize = 1 << 22;

/// Upper bound on `ω_{j,ξ} / (2^{-2j} W_j(ξ))`, `W_j(ξ) = 2^{-j} + sqrt(1-|ξ|²)`.
///
/// The ratio grows with `j` towards roughly 1.7 (1.67 at `j = 8`); checked
/// whenever a grid is built.
pub const WEIGHT_SCALE_BOUND: f64 = 2.0;

const NEWTON_TOL: f64 = 1e-14;
const NEWTON_MAX_ITER: usize = 200;

/// Gauss-Jacobi rule with `m` nodes for the weight `(1-t)^a (1+t)^b` on `[-1, 1]`.
///
/// Nodes come out ascending. Newton iteration with deflation against the
/// roots already found.
pub fn gauss_jacobi(m: usize, params: JacobiParams) -> Result<(Vec<f64>, Vec<f64>)> {
    if m == 0 {
        return Err(Error::InvalidParameter(
            "a Gauss rule needs at least one node".into(),
        ));
    }
    let (a, b) = (params.alpha(), params.beta());
    let shifted = JacobiParams::new(a + 1.0, b + 1.0)?;
    let mf = m as f64;
    let deriv_scale = (mf + a + b + 1.0) / 2.0;
    let mut p = vec![0.0; m + 1];
    let mut q = vec![0.0; m];
    let mut eval = |x: f64| -> (f64, f64) {
        jacobi_sequence(params, x, &mut p);
        jacobi_sequence(shifted, x, &mut q);
        (p[m], deriv_scale * q[m - 1])
    };

    let mut nodes: Vec<f64> = Vec::with_capacity(m);
    let mut derivs = Vec::with_capacity(m);
    for i in 1..=m {
        let guess = PI * (4.0 * i as f64 - 1.0 + 2.0 * a) / (4.0 * mf + 2.0 * a + 2.0 * b + 2.0);
        let mut x = guess.cos();
        let mut converged = false;
        for _ in 0..NEWTON_MAX_ITER {
            let (val, der) = eval(x);
            let deflate: f64 = nodes.iter().map(|&r| 1.0 / (x - r)).sum();
            let step = val / (der - val * deflate);
            x = (x - step).clamp(-1.0 + 1e-300, 1.0 - 1e-300);
            if step.abs() <= NEWTON_TOL {
                converged = true;
                break;
            }
        }
        if !converged || !x.is_finite() {
            return Err(Error::Convergence(format!(
                "gauss-jacobi node {i} of {m} (a={a}, b={b})"
            )));
        }
        nodes.push(x);
        derivs.push(eval(x).1);
    }

    // 2^{a+b+1} Γ(m+a+1) Γ(m+b+1) / (Γ(m+a+b+1) m!)
    let c = (a + b + 1.0).exp2() * gamma_ratio(mf + 1.0, a) / gamma_ratio(mf + b + 1.0, a);
    let mut rule: Vec<(f64, f64)> = nodes
        .iter()
        .zip(&derivs)
        .map(|(&x, &d)| (x, c / ((1.0 - x * x) * d * d)))
        .collect();
    rule.sort_by(|l, r| l.0.total_cmp(&r.0));
    Ok(rule.into_iter().unzip())
}

/// `Γ(x + d) / Γ(x)`, exact in floating point for small integer `d`.
fn gamma_ratio(x: f64, d: f64) -> f64 {
    if (0.0..=64.0).contains(&d) && d.fract() == 0.0 {
        (0..d as usize).map(|i| x + i as f64).product()
    } else {
        (ln_gamma(x + d) - ln_gamma(x)).exp()
    }
}

/// Gauss rule for the weight `r dr` on `[0, 1]`; exact for degree `<= 2m - 1`.
pub fn gauss_radial(m: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let (u, w) = gauss_jacobi(m, JacobiParams::new(0.0, 1.0)?)?;
    Ok((
        u.iter().map(|x| (1.0 + x) / 2.0).collect(),
        w.iter().map(|v| v / 4.0).collect(),
    ))
}

/// Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(m: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    gauss_jacobi(m, JacobiParams::new(0.0, 0.0)?)
}

/// Positive cubature on the disk with a product structure.
///
/// Node `a * angular_count + q` sits at radius `radii[a]` and angle
/// `angle_offset + 2π q / angular_count`.
#[derive(Debug, Clone)]
pub struct Cubature {
    nodes: Vec<DiskPoint>,
    weights: Vec<f64>,
    exact_degree: usize,
    radii: Vec<f64>,
    radial_weights: Vec<f64>,
    angular_count: usize,
    angle_offset: f64,
}

impl Cubature {
    pub fn nodes(&self) -> &[DiskPoint] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn exact_degree(&self) -> usize {
        self.exact_degree
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    /// Gauss weights of the radial factor (against `r dr`).
    pub fn radial_weights(&self) -> &[f64] {
        &self.radial_weights
    }

    pub fn angular_count(&self) -> usize {
        self.angular_count
    }

    pub fn radial_count(&self) -> usize {
        self.radii.len()
    }

    pub fn angle_offset(&self) -> f64 {
        self.angle_offset
    }

    pub fn angle(&self, q: usize) -> f64 {
        self.angle_offset + 2.0 * PI * q as f64 / self.angular_count as f64
    }

    pub fn angular_weight(&self) -> f64 {
        2.0 * PI / self.angular_count as f64
    }
}

pub fn disk_cubature(degree: usize) -> Result<Cubature> {
    disk_cubature_with(degree, 0.0, DEFAULT_NODE_CAP)
}

/// Product rule of the given degree with all angles shifted by `angle_offset`.
pub fn disk_cubature_with(degree: usize, angle_offset: f64, cap: usize) -> Result<Cubature> {
    let angular_count = degree + 1;
    let radial_count = (degree + 1).div_ceil(2);
    let count = angular_count * radial_count;
    if count > cap {
        return Err(Error::ResourceCap { count, cap });
    }
    let (radii, radial_weights) = gauss_radial(radial_count)?;
    let dtheta = 2.0 * PI / angular_count as f64;
    let mut nodes = Vec::with_capacity(count);
    let mut weights = Vec::with_capacity(count);
    for (&r, &w) in radii.iter().zip(&radial_weights) {
        for q in 0..angular_count {
            nodes.push(DiskPoint::from_polar(r, angle_offset + dtheta * q as f64));
            weights.push(dtheta * w);
        }
    }
    Ok(Cubature {
        nodes,
        weights,
        exact_degree: degree,
        radii,
        radial_weights,
        angular_count,
        angle_offset,
    })
}

/// `W_j(ξ) = 2^{-j} + sqrt(1 - |ξ|²)`.
pub fn boundary_scale(j: u32, p: DiskPoint) -> f64 {
    let r2 = (p.x * p.x + p.y * p.y).min(1.0);
    (-(j as f64)).exp2() + (1.0 - r2).sqrt()
}

/// Cubature nodes `χ_j` and weights `ω_{j,ξ}` of needlet level `j`.
#[derive(Debug, Clone)]
pub struct NeedletGrid {
    level: u32,
    cubature: Cubature,
}

impl NeedletGrid {
    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn cubature(&self) -> &Cubature {
        &self.cubature
    }

    pub fn angular_count(&self) -> usize {
        self.cubature.angular_count
    }

    pub fn radial_count(&self) -> usize {
        self.cubature.radii.len()
    }

    pub fn len(&self) -> usize {
        self.cubature.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cubature.is_empty()
    }

    /// Largest `ω_{j,ξ} / (2^{-2j} W_j(ξ))` over the grid.
    pub fn weight_scale_ratio(&self) -> f64 {
        let j = self.level;
        let dyadic = (-2.0 * j as f64).exp2();
        self.cubature
            .nodes
            .iter()
            .zip(&self.cubature.weights)
            .map(|(&p, &w)| w / (dyadic * boundary_scale(j, p)))
            .fold(0.0, f64::max)
    }
}

pub fn needlet_grid(j: u32) -> Result<NeedletGrid> {
    needlet_grid_with(j, 0.0, DEFAULT_NODE_CAP)
}

pub fn needlet_grid_with(j: u32, angle_offset: f64, cap: usize) -> Result<NeedletGrid> {
    if j > 24 {
        return Err(Error::InvalidParameter(format!(
            "needlet level {j} is too large"
        )));
    }
    let degree = 1usize << (j + 2);
    let grid = NeedletGrid {
        level: j,
        cubature: disk_cubature_with(degree, angle_offset, cap)?,
    };
    let ratio = grid.weight_scale_ratio();
    if ratio > WEIGHT_SCALE_BOUND {
        return Err(Error::Domain(format!(
            "level {j} weight scaling ratio {ratio} exceeds {WEIGHT_SCALE_BOUND}"
        )));
    }
    Ok(grid)
}

/// `Σ_nodes weight · f(node)`.
pub fn integrate<F: FnMut(DiskPoint) -> f64>(c: &Cubature, mut f: F) -> Result<f64> {
    let mut total = 0.0;
    for (&p, &w) in c.nodes.iter().zip(&c.weights) {
        let v = f(p);
        if !v.is_finite() {
            return Err(Error::NonFinite(format!("integrand at ({}, {})", p.x, p.y)));
        }
        total += w * v;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::svd_basis::{eval_f, SvdIndex};

    /// `∫_{disk} x^a y^b` in closed form: zero unless both exponents are even.
    fn disk_moment(a: u32, b: u32) -> f64 {
        if a % 2 == 1 || b % 2 == 1 {
            return 0.0;
        }
        // ∫ r^{a+b+1} dr · ∫ cos^a sin^b = 2 Γ((a+1)/2) Γ((b+1)/2) / Γ((a+b+2)/2) / (a+b+2)
        let (af, bf) = (a as f64, b as f64);
        let ang = 2.0
            * (ln_gamma((af + 1.0) / 2.0) + ln_gamma((bf + 1.0) / 2.0)
                - ln_gamma((af + bf + 2.0) / 2.0))
            .exp();
        ang / (af + bf + 2.0)
    }

    #[test]
    fn radial_rule_examples() {
        let (x, w) = gauss_radial(1).unwrap();
        assert!((x[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((w[0] - 0.5).abs() < 1e-15);
        let (_, w) = gauss_radial(5).unwrap();
        assert!((w.iter().sum::<f64>() - 0.5).abs() < 1e-14);
        let (x, w) = gauss_radial(3).unwrap();
        let m4: f64 = x.iter().zip(&w).map(|(r, w)| w * r.powi(4)).sum();
        assert!((m4 - 1.0 / 6.0).abs() < 1e-13);
    }

    #[test]
    fn radial_rule_exactness_and_positivity() {
        for m in [1usize, 2, 7, 33, 120, 545] {
            let (x, w) = gauss_radial(m).unwrap();
            assert!(w.iter().all(|&v| v > 0.0));
            assert!(x.windows(2).all(|p| p[0] < p[1]));
            assert!(x.iter().all(|&r| r > 0.0 && r < 1.0));
            for deg in [0, m, 2 * m - 1] {
                let got: f64 = x.iter().zip(&w).map(|(r, w)| w * r.powi(deg as i32)).sum();
                let want = 1.0 / (deg as f64 + 2.0);
                assert!(
                    (got - want).abs() < 1e-13,
                    "m={m} deg={deg}: {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn legendre_rule_integrates_polynomials() {
        let (x, w) = gauss_legendre(400).unwrap();
        let got: f64 = x.iter().zip(&w).map(|(t, w)| w * t.powi(10)).sum();
        assert!((got - 2.0 / 11.0).abs() < 1e-13);
    }

    #[test]
    fn disk_cubature_examples() {
        let c = disk_cubature(4).unwrap();
        let one = integrate(&c, |_| 1.0).unwrap();
        assert!((one - PI).abs() < 1e-12);
        let x2 = integrate(&c, |p| p.x * p.x).unwrap();
        assert!((x2 - PI / 4.0).abs() < 1e-11);
        let c6 = disk_cubature(6).unwrap();
        let x2y2 = integrate(&c6, |p| p.x * p.x * p.y * p.y).unwrap();
        assert!((x2y2 - PI / 24.0).abs() < 1e-11);
    }

    #[test]
    fn monomial_exactness() {
        for degree in [0usize, 1, 4, 9, 16, 32] {
            let c = disk_cubature_with(degree, 0.37, DEFAULT_NODE_CAP).unwrap();
            assert!((c.weights().iter().sum::<f64>() - PI).abs() < 1e-12 * PI);
            for total in 0..=degree as u32 {
                for a in 0..=total {
                    let b = total - a;
                    let got = integrate(&c, |p| p.x.powi(a as i32) * p.y.powi(b as i32)).unwrap();
                    let want = disk_moment(a, b);
                    let tol = if want == 0.0 {
                        1e-14
                    } else {
                        1e-10 * want.abs()
                    };
                    assert!(
                        (got - want).abs() < tol,
                        "deg={degree} a={a} b={b}: {got} vs {want}"
                    );
                }
            }
        }
    }

    #[test]
    fn basis_integrals() {
        let c = disk_cubature(0).unwrap();
        let f0 = SvdIndex::new(0, 0, 1).unwrap();
        let v = integrate(&c, |p| eval_f(f0, p).unwrap().powi(2)).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
        let c6 = disk_cubature(6).unwrap();
        let (a, b) = (
            SvdIndex::new(3, 1, 1).unwrap(),
            SvdIndex::new(3, 1, 2).unwrap(),
        );
        let v = integrate(&c6, |p| eval_f(a, p).unwrap() * eval_f(b, p).unwrap()).unwrap();
        assert!(v.abs() < 1e-10);
    }

    #[test]
    fn integrate_rejects_non_finite() {
        let c = disk_cubature(2).unwrap();
        assert!(matches!(
            integrate(&c, |_| f64::NAN),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn needlet_grid_shapes() {
        let g0 = needlet_grid(0).unwrap();
        assert_eq!(g0.cubature().exact_degree(), 4);
        assert_eq!(g0.angular_count(), 5);
        assert_eq!(g0.radial_count(), 3);
        let g3 = needlet_grid(3).unwrap();
        assert_eq!(g3.cubature().exact_degree(), 32);
        assert_eq!(g3.len(), 33 * 17);
    }

    #[test]
    fn node_cap_enforced() {
        assert!(matches!(
            needlet_grid_with(4, 0.0, 100),
            Err(Error::ResourceCap {
                count: 2145,
                cap: 100
            })
        ));
    }

    #[test]
    fn weight_scaling_is_level_independent() {
        for j in 0..=8 {
            let g = needlet_grid(j).unwrap();
            let ratio = g.weight_scale_ratio();
            assert!(ratio > 0.0 && ratio <= WEIGHT_SCALE_BOUND, "j={j}: {ratio}");
            assert!(g.cubature().weights().iter().all(|&w| w > 0.0));
        }
    }
}
