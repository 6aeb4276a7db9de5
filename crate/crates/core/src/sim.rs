//! Phantoms, their projections and SVD coefficients, and the noisy observation.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::cubature::{disk_cubature_with, DEFAULT_NODE_CAP};
use crate::error::{Error, Result};
use crate::image::ReconstructedImage;
use crate::orthopoly::{gegenbauer_sequence, GegenbauerParam};
use crate::svd_basis::{eigenvalue, harmonic_scale, DiskPoint, RadialTable, SvdCoeffs};

/// Ellipse with additive intensity. `angle` rotates the `a` axis away from `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ellipse {
    pub cx: f64,
    pub cy: f64,
    pub a: f64,
    pub b: f64,
    pub angle: f64,
    pub intensity: f64,
}

impl Ellipse {
    pub fn contains(&self, p: DiskPoint) -> bool {
        let (dx, dy) = (p.x - self.cx, p.y - self.cy);
        let (s, c) = self.angle.sin_cos();
        let u = dx * c + dy * s;
        let v = -dx * s + dy * c;
        (u / self.a).powi(2) + (v / self.b).powi(2) <= 1.0
    }

    /// Half-width of the ellipse along direction `theta` (support function).
    fn half_width(&self, theta: f64) -> f64 {
        let phi = theta - self.angle;
        ((self.a * phi.cos()).powi(2) + (self.b * phi.sin()).powi(2)).sqrt()
    }

    /// Length of the chord `{y : <y, (cos θ, sin θ)> = s}` through the ellipse.
    pub fn chord(&self, theta: f64, s: f64) -> f64 {
        let w = self.half_width(theta);
        let offset = s - (self.cx * theta.cos() + self.cy * theta.sin());
        if offset.abs() >= w {
            return 0.0;
        }
        2.0 * self.a * self.b * (w * w - offset * offset).sqrt() / (w * w)
    }

    /// Largest distance from the origin to a boundary point.
    fn reach(&self) -> f64 {
        (0..3600)
            .map(|n| {
                let t = 2.0 * PI * n as f64 / 3600.0;
                let (s, c) = self.angle.sin_cos();
                let (u, v) = (self.a * t.cos(), self.b * t.sin());
                (self.cx + u * c - v * s).hypot(self.cy + u * s + v * c)
            })
            .fold(0.0, f64::max)
    }
}

type DensityFn = Arc<dyn Fn(DiskPoint) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Shape {
    Ellipses(Vec<Ellipse>),
    Function(DensityFn),
}

/// Density on the unit disk, zero outside it.
#[derive(Clone)]
pub struct Phantom {
    name: String,
    shape: Shape,
}

impl fmt::Debug for Phantom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut d = f.debug_struct("Phantom");
        d.field("name", &self.name);
        if let Shape::Ellipses(e) = &self.shape {
            d.field("ellipses", e);
        }
        d.finish()
    }
}

/// Names accepted by [`Phantom::by_name`].
pub const PHANTOM_NAMES: [&str; 2] = ["shepp-logan", "disk"];

/// Original Shepp-Logan table: `(cx, cy, a, b, angle in degrees, intensity)`.
const SHEPP_LOGAN: [(f64, f64, f64, f64, f64, f64); 10] = [
    (0.0, 0.0, 0.69, 0.92, 0.0, 2.0),
    (0.0, -0.0184, 0.6624, 0.874, 0.0, -0.98),
    (0.22, 0.0, 0.11, 0.31, -18.0, -0.02),
    (-0.22, 0.0, 0.16, 0.41, 18.0, -0.02),
    (0.0, 0.35, 0.21, 0.25, 0.0, 0.01),
    (0.0, 0.1, 0.046, 0.046, 0.0, 0.01),
    (0.0, -0.1, 0.046, 0.046, 0.0, 0.01),
    (-0.08, -0.605, 0.046, 0.023, 0.0, 0.01),
    (0.0, -0.605, 0.023, 0.023, 0.0, 0.01),
    (0.06, -0.605, 0.023, 0.046, 0.0, 0.01),
];

impl Phantom {
    /// Ellipse phantom; every ellipse must lie inside the closed unit disk.
    pub fn from_ellipses(name: impl Into<String>, ellipses: Vec<Ellipse>) -> Result<Self> {
        for e in &ellipses {
            let ok = [e.cx, e.cy, e.a, e.b, e.angle, e.intensity]
                .iter()
                .all(|v| v.is_finite())
                && e.a > 0.0
                && e.b > 0.0
                && e.reach() <= 1.0 + 1e-12;
            if !ok {
                return Err(Error::InvalidParameter(format!(
                    "ellipse {e:?} is degenerate or leaves the unit disk"
                )));
            }
        }
        Ok(Self {
            name: name.into(),
            shape: Shape::Ellipses(ellipses),
        })
    }

    pub fn from_fn(
        name: impl Into<String>,
        density: impl Fn(DiskPoint) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            shape: Shape::Function(Arc::new(density)),
        }
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "shepp-logan" => Ok(shepp_logan()),
            "disk" => Ok(unit_disk()),
            other => Err(Error::InvalidParameter(format!(
                "unknown phantom `{other}` (known: {})",
                PHANTOM_NAMES.join(", ")
            ))),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn ellipses(&self) -> Option<&[Ellipse]> {
        match &self.shape {
            Shape::Ellipses(e) => Some(e),
            Shape::Function(_) => None,
        }
    }

    pub fn density(&self, p: DiskPoint) -> f64 {
        if p.x * p.x + p.y * p.y > 1.0 {
            return 0.0;
        }
        match &self.shape {
            Shape::Ellipses(es) => es
                .iter()
                .filter(|e| e.contains(p))
                .map(|e| e.intensity)
                .sum(),
            Shape::Function(f) => f(p),
        }
    }

    /// Samples the density on an `n×n` grid.
    pub fn rasterize(&self, n: usize) -> Result<ReconstructedImage> {
        ReconstructedImage::from_fn(n, |p| self.density(p))
    }
}

pub fn shepp_logan() -> Phantom {
    let ellipses = SHEPP_LOGAN
        .iter()
        .map(|&(cx, cy, a, b, deg, intensity)| Ellipse {
            cx,
            cy,
            a,
            b,
            angle: deg.to_radians(),
            intensity,
        })
        .collect();
    Phantom::from_ellipses("shepp-logan", ellipses).expect("table fits the disk")
}

/// Indicator of the unit disk.
pub fn unit_disk() -> Phantom {
    let e = Ellipse {
        cx: 0.0,
        cy: 0.0,
        a: 1.0,
        b: 1.0,
        angle: 0.0,
        intensity: 1.0,
    };
    Phantom::from_ellipses("disk", vec![e]).expect("unit disk fits")
}

/// Line integral of the density over `{<y, (cos θ, sin θ)> = s}`.
pub fn radon_analytic(ph: &Phantom, theta: f64, s: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&s) {
        return Err(Error::Domain(format!("offset s={s} outside [-1, 1]")));
    }
    let es = ph
        .ellipses()
        .ok_or_else(|| Error::UnsupportedPhantom(format!("`{}` has no ellipse table", ph.name)))?;
    Ok(es.iter().map(|e| e.intensity * e.chord(theta, s)).sum())
}

/// Rejects fine-cubature degrees below `2·k_max + 16`.
pub fn min_quality_degree(k_max: usize) -> usize {
    2 * k_max + 16
}

pub fn default_quality_degree(k_max: usize) -> usize {
    4 * k_max + 64
}

/// `α_{k,l,i} = ∫ f_{k,l,i} · density` by fine product cubature.
pub fn true_coeffs(ph: &Phantom, k_max: usize, quality_degree: usize) -> Result<SvdCoeffs> {
    let need = min_quality_degree(k_max);
    if quality_degree < need {
        return Err(Error::InsufficientDegree {
            have: quality_degree,
            need,
        });
    }
    let cub = disk_cubature_with(quality_degree, 0.0, DEFAULT_NODE_CAP)?;
    let m = cub.angular_count();
    let ang_w = cub.angular_weight();
    let trig: Vec<Vec<(f64, f64)>> = (0..m)
        .map(|q| {
            let theta = cub.angle(q);
            (0..k_max.max(1))
                .map(|l| {
                    let (s, c) = (l as f64 * theta).sin_cos();
                    (c, s)
                })
                .collect()
        })
        .collect();
    let mut out = SvdCoeffs::zeros(k_max);
    let mut cos_m = vec![0.0; k_max];
    let mut sin_m = vec![0.0; k_max];
    for (a, (&r, &w)) in cub.radii().iter().zip(cub.radial_weights()).enumerate() {
        cos_m.iter_mut().for_each(|v| *v = 0.0);
        sin_m.iter_mut().for_each(|v| *v = 0.0);
        for (q, tr) in trig.iter().enumerate() {
            let d = ph.density(cub.nodes()[a * m + q]);
            if d == 0.0 {
                continue;
            }
            for l in 0..k_max {
                cos_m[l] += d * tr[l].0;
                sin_m[l] += d * tr[l].1;
            }
        }
        let table = RadialTable::new(k_max, r);
        accumulate_moments(&table, w * ang_w, &cos_m, &sin_m, &mut out);
    }
    check_finite(&out)?;
    Ok(out)
}

/// Adds `scale · R_{k,l} · c_l · (cos or sin moment)` into every coefficient.
fn accumulate_moments(
    table: &RadialTable,
    scale: f64,
    cos_m: &[f64],
    sin_m: &[f64],
    out: &mut SvdCoeffs,
) {
    for k in 0..out.k_max() {
        let block = out.degree_block_mut(k);
        for l in (k % 2..=k).step_by(2) {
            let w = scale * table.get(k, l) * harmonic_scale(l);
            if l == 0 {
                block[0] += w * cos_m[0];
            } else {
                block[l - 1] += w * cos_m[l];
                block[l] += w * sin_m[l];
            }
        }
    }
}

/// Exact SVD coefficients of an ellipse phantom through its projections.
///
/// Uses `α = λ_k^{-1} <Rf, g_{k,l,i}>`. For one ellipse the inner `s`-integral
/// becomes `2ab ∫ sqrt(1-t²) U_k(s_c(θ) + w(θ) t) dt`, a trigonometric
/// polynomial of degree `k` in `θ`, so Gauss-Chebyshev in `t` and an
/// equispaced rule in `θ` are both exact.
pub fn projection_coeffs(ph: &Phantom, k_max: usize) -> Result<SvdCoeffs> {
    let es = ph
        .ellipses()
        .ok_or_else(|| Error::UnsupportedPhantom(format!("`{}` has no ellipse table", ph.name)))?;
    let mut out = SvdCoeffs::zeros(k_max);
    if k_max == 0 {
        return Ok(out);
    }
    let angles = 2 * k_max + 2;
    let t_nodes = k_max / 2 + 1;
    let (ts, tw) = gauss_chebyshev_second(t_nodes);
    let u_param = GegenbauerParam::new(1.0)?;
    let mut u_vals = vec![0.0; k_max];
    let mut moments = vec![0.0; k_max];
    let d_theta = 2.0 * PI / angles as f64;
    for q in 0..angles {
        let theta = q as f64 * d_theta;
        moments.iter_mut().for_each(|v| *v = 0.0);
        for e in es {
            let w = e.half_width(theta);
            let sc = e.cx * theta.cos() + e.cy * theta.sin();
            let scale = e.intensity * 2.0 * e.a * e.b;
            for (&t, &wt) in ts.iter().zip(&tw) {
                gegenbauer_sequence(u_param, sc + w * t, &mut u_vals);
                for (m, u) in moments.iter_mut().zip(&u_vals) {
                    *m += scale * wt * u;
                }
            }
        }
        for (k, moment) in moments.iter().enumerate().take(k_max) {
            let factor = d_theta * (2.0 / PI).sqrt() * moment / eigenvalue(k);
            let block = out.degree_block_mut(k);
            for l in (k % 2..=k).step_by(2) {
                let c = harmonic_scale(l);
                let (s, co) = (l as f64 * theta).sin_cos();
                if l == 0 {
                    block[0] += factor * c;
                } else {
                    block[l - 1] += factor * c * co;
                    block[l] += factor * c * s;
                }
            }
        }
    }
    check_finite(&out)?;
    Ok(out)
}

/// Nodes and weights for `∫ sqrt(1-t²) g(t) dt`, exact to degree `2n - 1`.
pub fn gauss_chebyshev_second(n: usize) -> (Vec<f64>, Vec<f64>) {
    (1..=n)
        .map(|j| {
            let phi = j as f64 * PI / (n + 1) as f64;
            (phi.cos(), PI / (n + 1) as f64 * phi.sin().powi(2))
        })
        .unzip()
}

/// Exact coefficients when available, fine cubature otherwise.
pub fn reference_coeffs(ph: &Phantom, k_max: usize) -> Result<SvdCoeffs> {
    match ph.ellipses() {
        Some(_) => projection_coeffs(ph, k_max),
        None => true_coeffs(ph, k_max, default_quality_degree(k_max)),
    }
}

fn check_finite(c: &SvdCoeffs) -> Result<()> {
    if c.values().iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite("phantom coefficients".into()))
    }
}

/// Noisy SVD coefficients `α̂ = α + (ε/λ_k) Z`.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub alpha_hat: SvdCoeffs,
    pub epsilon: f64,
    pub seed: u64,
}

impl Observation {
    pub fn k_max(&self) -> usize {
        self.alpha_hat.k_max()
    }
}

/// Standard normal draw number `index` of stream `seed`.
///
/// ChaCha8 keyed by `seed` (via `SeedableRng::seed_from_u64`); draw `index`
/// reads the 64-bit word at position `2·index`, maps it to the open interval
/// `(0, 1)` as `(w >> 11 + 1/2)·2^-53` and applies the normal quantile. Draws are
/// order-independent.
pub fn normal_draw(seed: u64, index: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_word_pos(2 * index as u128);
    let u = ((rng.next_u64() >> 11) as f64 + 0.5) * (-53f64).exp2();
    standard_normal().inverse_cdf(u)
}

fn standard_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal")
}

/// Fills `out[n]` with draw `start + n` of stream `seed`.
pub fn normal_draws(seed: u64, start: u64, out: &mut [f64]) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_word_pos(2 * start as u128);
    let normal = standard_normal();
    for v in out {
        let u = ((rng.next_u64() >> 11) as f64 + 0.5) * (-53f64).exp2();
        *v = normal.inverse_cdf(u);
    }
}

pub fn observe(alpha: &SvdCoeffs, epsilon: f64, seed: u64) -> Result<Observation> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "noise level {epsilon} outside (0, 1)"
        )));
    }
    Ok(observe_unchecked(alpha, epsilon, seed))
}

/// Same as [`observe`] but accepts any `ε ≥ 0`; `ε = 0` returns `α` unchanged.
pub fn observe_unchecked(alpha: &SvdCoeffs, epsilon: f64, seed: u64) -> Observation {
    let mut alpha_hat = alpha.clone();
    if epsilon != 0.0 {
        let mut z = vec![0.0; alpha.len()];
        normal_draws(seed, 0, &mut z);
        for k in 0..alpha.k_max() {
            let sd = epsilon / eigenvalue(k);
            let start = crate::svd_basis::degree_offset(k);
            for (v, zi) in alpha_hat.degree_block_mut(k).iter_mut().zip(&z[start..]) {
                *v += sd * zi;
            }
        }
    }
    Observation {
        alpha_hat,
        epsilon,
        seed,
    }
}
