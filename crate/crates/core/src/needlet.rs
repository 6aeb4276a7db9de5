//! Needlet tight frame on the disk.
//!
//! Level `j >= 0` has one needlet per node `ξ` of the level-`j` product grid,
//! `ψ_{j,ξ}(x) = sqrt(ω_{j,ξ}) Σ_k sqrt(b(k/2^j)) Σ_{l,i} f_{k,l,i}(ξ) f_{k,l,i}(x)`.
//! Level `-1` is carried as the degree-0 SVD coefficient. Both transforms
//! exploit the product structure of the grid: a radial contraction per
//! `(l, i)` followed by an angular sum per node.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::Arc;

use crate::cubature::{needlet_grid_with, NeedletGrid, DEFAULT_NODE_CAP};
use crate::error::{Error, Result};
use crate::svd_basis::{harmonic_scale, index_count, DiskPoint, RadialTable, SvdCoeffs};

/// Polar patch used to locate `sup |ψ_{j,ξ}|`: 41 radii out to `8·2^{-j}`
/// times 41 directions, result inflated by 5%.
const SUP_PATCH_RADII: usize = 41;
const SUP_PATCH_ANGLES: usize = 41;
const SUP_PATCH_EXTENT: f64 = 8.0;
const SUP_INFLATION: f64 = 1.05;

fn bump(u: f64) -> f64 {
    if u > 0.0 {
        (-1.0 / u).exp()
    } else {
        0.0
    }
}

/// Default smooth cut-off: 1 on `[0, 1/2]`, 0 on `[1, ∞)`.
pub fn filter_a(t: f64) -> f64 {
    if t <= 0.5 {
        1.0
    } else if t >= 1.0 {
        0.0
    } else {
        let up = bump(2.0 * (1.0 - t));
        up / (up + bump(2.0 * t - 1.0))
    }
}

/// `b(t) = a(t/2) - a(t)`, supported in `[1/2, 2]`.
pub fn filter_b(t: f64) -> f64 {
    filter_a(t / 2.0) - filter_a(t)
}

/// Littlewood-Paley pair `(a, b)` built from a cut-off function.
#[derive(Clone)]
pub struct Filter {
    cutoff: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl std::fmt::Debug for Filter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Filter").finish_non_exhaustive()
    }
}

impl Default for Filter {
    fn default() -> Self {
        Self {
            cutoff: Arc::new(filter_a),
        }
    }
}

impl Filter {
    /// Wraps a custom cut-off after spot-checking its plateau, support and range.
    pub fn new(cutoff: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Result<Self> {
        for n in 0..=200 {
            let t = n as f64 / 100.0;
            let v = cutoff(t);
            let ok = if t <= 0.5 {
                v == 1.0
            } else if t >= 1.0 {
                v == 0.0
            } else {
                (0.0..=1.0).contains(&v) && v <= cutoff(t - 0.01)
            };
            if !ok {
                return Err(Error::InvalidParameter(format!(
                    "cut-off value {v} at t={t} is not admissible"
                )));
            }
        }
        Ok(Self {
            cutoff: Arc::new(cutoff),
        })
    }

    pub fn a(&self, t: f64) -> f64 {
        (self.cutoff)(t)
    }

    pub fn b(&self, t: f64) -> f64 {
        self.a(t / 2.0) - self.a(t)
    }
}

/// Degrees `[lo, hi)` where `b(k/2^j)` can be non-zero.
pub fn level_band(j: u32) -> (usize, usize) {
    let lo = if j == 0 { 1 } else { 1usize << (j - 1) };
    (lo, 1usize << (j + 1))
}

struct LevelPlan {
    grid: NeedletGrid,
    k_lo: usize,
    k_hi: usize,
    /// `sqrt(b(k/2^j))` for `k in k_lo..k_hi`.
    band: Vec<f64>,
    /// `sqrt(ω)` per radial node.
    sqrt_weight: Vec<f64>,
    radial: Vec<RadialTable>,
    /// `(cos lθ_q, sin lθ_q)` at `q * k_hi + l`.
    trig: Vec<(f64, f64)>,
}

impl LevelPlan {
    fn new(j: u32, angle_offset: f64, filter: &Filter) -> Result<Self> {
        let grid = needlet_grid_with(j, angle_offset, DEFAULT_NODE_CAP)?;
        let (k_lo, k_hi) = level_band(j);
        let scale = (j as f64).exp2();
        let band = (k_lo..k_hi)
            .map(|k| filter.b(k as f64 / scale).max(0.0).sqrt())
            .collect();
        let cub = grid.cubature();
        let ang_w = cub.angular_weight();
        let sqrt_weight = cub
            .radial_weights()
            .iter()
            .map(|w| (ang_w * w).sqrt())
            .collect();
        let radial = cub
            .radii()
            .iter()
            .map(|&r| RadialTable::new(k_hi, r))
            .collect();
        let mut trig = Vec::with_capacity(cub.angular_count() * k_hi);
        for q in 0..cub.angular_count() {
            let theta = cub.angle(q);
            for l in 0..k_hi {
                let (s, c) = (l as f64 * theta).sin_cos();
                trig.push((c, s));
            }
        }
        Ok(Self {
            grid,
            k_lo,
            k_hi,
            band,
            sqrt_weight,
            radial,
            trig,
        })
    }

    fn m(&self) -> usize {
        self.grid.angular_count()
    }

    #[inline]
    fn band(&self, k: usize) -> f64 {
        self.band[k - self.k_lo]
    }

    /// Lowest degree `>= k_lo` with the parity of `l` that is also `>= l`.
    fn first_degree(&self, l: usize) -> usize {
        let mut k = self.k_lo.max(l);
        if (k - l) % 2 == 1 {
            k += 1;
        }
        k
    }

    fn analyze(&self, alpha: &SvdCoeffs, out: &mut [f64]) {
        let m = self.m();
        let k_hi = self.k_hi;
        let mut cos_part = vec![0.0; k_hi];
        let mut sin_part = vec![0.0; k_hi];
        for (a, radial) in self.radial.iter().enumerate() {
            for l in 0..k_hi {
                let (mut c_acc, mut s_acc) = (0.0, 0.0);
                let mut k = self.first_degree(l);
                while k < k_hi {
                    let w = self.band(k) * radial.get(k, l);
                    let block = alpha.degree_block(k);
                    if l == 0 {
                        c_acc += w * block[0];
                    } else {
                        c_acc += w * block[l - 1];
                        s_acc += w * block[l];
                    }
                    k += 2;
                }
                let c = harmonic_scale(l);
                cos_part[l] = c * c_acc;
                sin_part[l] = c * s_acc;
            }
            let sw = self.sqrt_weight[a];
            for q in 0..m {
                let trig = &self.trig[q * k_hi..(q + 1) * k_hi];
                let mut acc = 0.0;
                for l in 0..k_hi {
                    acc += cos_part[l] * trig[l].0 + sin_part[l] * trig[l].1;
                }
                out[a * m + q] = sw * acc;
            }
        }
    }

    fn synthesize_into(&self, values: &[f64], alpha: &mut SvdCoeffs) {
        let m = self.m();
        let k_hi = self.k_hi;
        let k_top = k_hi.min(alpha.k_max());
        let mut cos_part = vec![0.0; k_hi];
        let mut sin_part = vec![0.0; k_hi];
        for (a, radial) in self.radial.iter().enumerate() {
            cos_part.iter_mut().for_each(|v| *v = 0.0);
            sin_part.iter_mut().for_each(|v| *v = 0.0);
            let row = &values[a * m..(a + 1) * m];
            for (q, &beta) in row.iter().enumerate() {
                if beta == 0.0 {
                    continue;
                }
                let trig = &self.trig[q * k_hi..(q + 1) * k_hi];
                for l in 0..k_hi {
                    cos_part[l] += beta * trig[l].0;
                    sin_part[l] += beta * trig[l].1;
                }
            }
            let sw = self.sqrt_weight[a];
            for l in 0..k_top {
                let c = sw * harmonic_scale(l);
                let (cp, sp) = (c * cos_part[l], c * sin_part[l]);
                let mut k = self.first_degree(l);
                while k < k_top {
                    let w = self.band(k) * radial.get(k, l);
                    let block = alpha.degree_block_mut(k);
                    if l == 0 {
                        block[0] += w * cp;
                    } else {
                        block[l - 1] += w * cp;
                        block[l] += w * sp;
                    }
                    k += 2;
                }
            }
        }
    }

    /// `Σ_{k < k_limit} b(k/2^j) λ_k^{-2} Σ_{l,i} f_{k,l,i}(ξ)²` at each radial node, times `ω`.
    fn variance_by_radius(&self, k_limit: usize) -> Vec<f64> {
        self.radial
            .iter()
            .zip(&self.sqrt_weight)
            .map(|(radial, sw)| {
                let mut total = 0.0;
                for k in self.k_lo..self.k_hi.min(k_limit) {
                    let b = self.band(k).powi(2);
                    let inv_eig2 = (k + 1) as f64 / (4.0 * PI);
                    let mut s = 0.0;
                    for l in (k % 2..=k).step_by(2) {
                        s += (radial.get(k, l) * harmonic_scale(l)).powi(2);
                    }
                    total += b * inv_eig2 * s;
                }
                sw * sw * total
            })
            .collect()
    }

    /// `ψ_{j,ξ}(p)` for `ξ` on radial node `a` at angle `theta_xi`.
    fn needlet_value(&self, a: usize, theta_xi: f64, p: DiskPoint) -> f64 {
        let table = RadialTable::new(self.k_hi, p.r().min(1.0));
        self.needlet_value_with(a, theta_xi, p.theta(), &table)
    }

    fn needlet_value_with(
        &self,
        a: usize,
        theta_xi: f64,
        theta_p: f64,
        table: &RadialTable,
    ) -> f64 {
        let radial = &self.radial[a];
        let dtheta = theta_p - theta_xi;
        let mut total = 0.0;
        for k in self.k_lo..self.k_hi {
            let mut s = 0.0;
            for l in (k % 2..=k).step_by(2) {
                s += radial.get(k, l)
                    * table.get(k, l)
                    * harmonic_scale(l).powi(2)
                    * (l as f64 * dtheta).cos();
            }
            total += self.band(k) * s;
        }
        self.sqrt_weight[a] * total
    }

    fn sup_norm_by_radius(&self) -> Vec<f64> {
        let extent = SUP_PATCH_EXTENT * (-(self.grid.level() as f64)).exp2();
        let radii = self.grid.cubature().radii();
        radii
            .iter()
            .enumerate()
            .map(|(a, &r_xi)| {
                let mut best = 0.0f64;
                for u in 0..SUP_PATCH_RADII {
                    let rho = extent * u as f64 / (SUP_PATCH_RADII - 1) as f64;
                    let dirs = if u == 0 { 1 } else { SUP_PATCH_ANGLES };
                    for v in 0..dirs {
                        let phi = 2.0 * PI * v as f64 / SUP_PATCH_ANGLES as f64;
                        let p = DiskPoint {
                            x: r_xi + rho * phi.cos(),
                            y: rho * phi.sin(),
                        };
                        if p.x * p.x + p.y * p.y > 1.0 {
                            continue;
                        }
                        best = best.max(self.needlet_value(a, 0.0, p).abs());
                    }
                }
                SUP_INFLATION * best
            })
            .collect()
    }
}

/// Needlet frame with levels `0..levels` plus the scaling level `-1`.
pub struct NeedletFrame {
    levels: Vec<LevelPlan>,
    angle_offset: f64,
}

impl std::fmt::Debug for NeedletFrame {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("NeedletFrame")
            .field("levels", &self.levels.len())
            .field("angle_offset", &self.angle_offset)
            .finish()
    }
}

impl NeedletFrame {
    pub fn new(levels: u32) -> Result<Self> {
        Self::with_options(levels, 0.0, &Filter::default())
    }

    /// Frame whose level grids are all rotated by `angle_offset`.
    pub fn with_options(levels: u32, angle_offset: f64, filter: &Filter) -> Result<Self> {
        if levels > 10 {
            return Err(Error::InvalidParameter(format!(
                "{levels} needlet levels is beyond the supported range"
            )));
        }
        let levels = (0..levels)
            .map(|j| LevelPlan::new(j, angle_offset, filter))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            levels,
            angle_offset,
        })
    }

    /// Number of levels `J` (levels `0..J`).
    pub fn levels(&self) -> u32 {
        self.levels.len() as u32
    }

    /// Degree bound `2^J` the analysis needs.
    pub fn required_k_max(&self) -> usize {
        1usize << self.levels.len()
    }

    pub fn angle_offset(&self) -> f64 {
        self.angle_offset
    }

    pub fn grid(&self, j: u32) -> &NeedletGrid {
        &self.levels[j as usize].grid
    }

    fn plan(&self, j: u32) -> Result<&LevelPlan> {
        self.levels.get(j as usize).ok_or_else(|| {
            Error::Domain(format!(
                "level {j} outside the frame's {} levels",
                self.levels.len()
            ))
        })
    }

    /// Shape-compatible all-zero coefficients.
    pub fn zeros(&self) -> NeedletCoeffs {
        NeedletCoeffs {
            scaling: 0.0,
            levels: self
                .levels
                .iter()
                .map(|p| vec![0.0; p.grid.len()])
                .collect(),
        }
    }

    /// `β_{j,ξ} = sqrt(ω) Σ_k sqrt(b(k/2^j)) Σ_{l,i} f_{k,l,i}(ξ) α_{k,l,i}`.
    pub fn analysis(&self, alpha: &SvdCoeffs) -> Result<NeedletCoeffs> {
        let need = self.required_k_max();
        if alpha.k_max() < need {
            return Err(Error::InsufficientDegree {
                have: alpha.k_max(),
                need,
            });
        }
        let mut out = self.zeros();
        out.scaling = if alpha.k_max() > 0 {
            alpha.values()[0]
        } else {
            0.0
        };
        for (plan, values) in self.levels.iter().zip(out.levels.iter_mut()) {
            plan.analyze(alpha, values);
        }
        Ok(out)
    }

    /// Adjoint of [`analysis`](Self::analysis), truncated to degrees `< k_max`.
    pub fn synthesis(&self, beta: &NeedletCoeffs, k_max: usize) -> Result<SvdCoeffs> {
        self.check_shape(beta)?;
        if k_max > self.required_k_max() {
            return Err(Error::InvalidParameter(format!(
                "synthesis to k_max={k_max} exceeds the frame bound {}",
                self.required_k_max()
            )));
        }
        let mut alpha = SvdCoeffs::zeros(k_max);
        if k_max > 0 {
            alpha.values_mut()[0] += beta.scaling;
        }
        for (plan, values) in self.levels.iter().zip(&beta.levels) {
            plan.synthesize_into(values, &mut alpha);
        }
        Ok(alpha)
    }

    pub fn check_shape(&self, beta: &NeedletCoeffs) -> Result<()> {
        let ok = beta.levels.len() == self.levels.len()
            && beta
                .levels
                .iter()
                .zip(&self.levels)
                .all(|(v, p)| v.len() == p.grid.len());
        if ok {
            Ok(())
        } else {
            Err(Error::ShapeMismatch(
                "needlet coefficients do not match the frame".into(),
            ))
        }
    }

    /// Standard deviation of each `β̂_{j,ξ}` under unit-level white noise.
    pub fn noise_profile(&self) -> NoiseProfile {
        self.noise_profile_band(usize::MAX)
    }

    /// Noise profile when only degrees `< k_limit` carry noise (the rest are
    /// unobserved and enter the analysis as zeros).
    pub fn noise_profile_band(&self, k_limit: usize) -> NoiseProfile {
        let sigma = self
            .levels
            .iter()
            .map(|plan| {
                let m = plan.m();
                plan.variance_by_radius(k_limit)
                    .into_iter()
                    .flat_map(|v| std::iter::repeat_n(v.sqrt(), m))
                    .collect()
            })
            .collect();
        NoiseProfile { sigma }
    }

    /// Estimated `sup |ψ_{j,ξ}|` for every node of every level.
    pub fn sup_norms(&self) -> NeedletSupNorms {
        let values = self
            .levels
            .iter()
            .map(|plan| {
                let m = plan.m();
                plan.sup_norm_by_radius()
                    .into_iter()
                    .flat_map(|v| std::iter::repeat_n(v, m))
                    .collect()
            })
            .collect();
        NeedletSupNorms { values }
    }

    /// `ψ_{j,ξ}(p)` for node `node` of level `j`.
    pub fn eval_needlet(&self, j: u32, node: usize, p: DiskPoint) -> Result<f64> {
        let plan = self.plan(j)?;
        if node >= plan.grid.len() {
            return Err(Error::Domain(format!(
                "node {node} outside level {j} ({} nodes)",
                plan.grid.len()
            )));
        }
        if !p.in_disk() {
            return Err(Error::Domain(format!(
                "point ({}, {}) outside the unit disk",
                p.x, p.y
            )));
        }
        let m = plan.m();
        let theta_xi = plan.grid.cubature().angle(node % m);
        Ok(plan.needlet_value(node / m, theta_xi, p))
    }

    /// SVD coefficients of `ψ_{j,ξ}` itself, degrees `< k_max`.
    pub fn needlet_coeffs(&self, j: u32, node: usize, k_max: usize) -> Result<SvdCoeffs> {
        let mut beta = self.zeros();
        let slot = beta
            .levels
            .get_mut(j as usize)
            .and_then(|v| v.get_mut(node))
            .ok_or_else(|| Error::Domain(format!("no node {node} at level {j}")))?;
        *slot = 1.0;
        self.synthesis(&beta, k_max)
    }
}

/// `ψ_{j,ξ}(p)` on the unrotated level-`j` grid.
pub fn needlet_eval(j: u32, xi_index: usize, p: DiskPoint, k_max: usize) -> Result<f64> {
    let (_, hi) = level_band(j);
    if k_max < hi {
        return Err(Error::InsufficientDegree {
            have: k_max,
            need: hi,
        });
    }
    let plan = LevelPlan::new(j, 0.0, &Filter::default())?;
    if xi_index >= plan.grid.len() {
        return Err(Error::Domain(format!("node {xi_index} outside level {j}")));
    }
    if !p.in_disk() {
        return Err(Error::Domain(format!(
            "point ({}, {}) outside the unit disk",
            p.x, p.y
        )));
    }
    let m = plan.m();
    Ok(plan.needlet_value(xi_index / m, plan.grid.cubature().angle(xi_index % m), p))
}

/// Frame coefficients: scaling value plus one array per level.
#[derive(Debug, Clone, PartialEq)]
pub struct NeedletCoeffs {
    pub scaling: f64,
    pub levels: Vec<Vec<f64>>,
}

impl NeedletCoeffs {
    pub fn energy(&self) -> f64 {
        self.scaling * self.scaling + self.levels.iter().flatten().map(|v| v * v).sum::<f64>()
    }

    /// Number of level `>= 0` coefficients that are non-zero.
    pub fn nonzero_count(&self) -> usize {
        self.levels.iter().flatten().filter(|v| **v != 0.0).count()
    }

    pub fn coefficient_count(&self) -> usize {
        self.levels.iter().map(Vec::len).sum()
    }

    /// Keeps levels `< keep` and zeroes the rest.
    pub fn truncated(&self, keep: u32) -> Self {
        let mut out = self.clone();
        for level in out.levels.iter_mut().skip(keep as usize) {
            level.iter_mut().for_each(|v| *v = 0.0);
        }
        out
    }

    /// CSV with header `j,node_index,xi_x,xi_y,value`; level -1 sits at the origin.
    pub fn to_csv(&self, frame: &NeedletFrame) -> Result<String> {
        frame.check_shape(self)?;
        let mut out = String::from("j,node_index,xi_x,xi_y,value\n");
        let _ = writeln!(out, "-1,0,{:.16e},{:.16e},{:.16e}", 0.0, 0.0, self.scaling);
        for (j, values) in self.levels.iter().enumerate() {
            let nodes = frame.grid(j as u32).cubature().nodes();
            for (n, (p, v)) in nodes.iter().zip(values).enumerate() {
                let _ = writeln!(out, "{j},{n},{:.16e},{:.16e},{:.16e}", p.x, p.y, v);
            }
        }
        Ok(out)
    }
}

/// Per-coefficient noise standard deviation at unit noise level.
#[derive(Debug, Clone)]
pub struct NoiseProfile {
    sigma: Vec<Vec<f64>>,
}

impl NoiseProfile {
    pub fn sigma(&self, j: u32, node: usize) -> f64 {
        self.sigma[j as usize][node]
    }

    pub fn level(&self, j: u32) -> &[f64] {
        &self.sigma[j as usize]
    }

    pub fn levels(&self) -> u32 {
        self.sigma.len() as u32
    }

    /// `max_ξ σ_{j,ξ}² 2^{-j}`.
    pub fn scaled_max_variance(&self, j: u32) -> f64 {
        let scale = (-(j as f64)).exp2();
        self.sigma[j as usize]
            .iter()
            .map(|s| s * s * scale)
            .fold(0.0, f64::max)
    }
}

/// Estimated `‖ψ_{j,ξ}‖_∞` per level and node.
#[derive(Debug, Clone)]
pub struct NeedletSupNorms {
    values: Vec<Vec<f64>>,
}

impl NeedletSupNorms {
    pub fn get(&self, j: u32, node: usize) -> f64 {
        self.values[j as usize][node]
    }

    pub fn level(&self, j: u32) -> &[f64] {
        &self.values[j as usize]
    }

    pub fn levels(&self) -> u32 {
        self.values.len() as u32
    }
}

/// Coefficient vector of `ψ_{j,ξ}` computed straight from the definition.
///
/// Slow; used to cross-check the fast transforms.
pub fn needlet_coeffs_direct(grid: &NeedletGrid, node: usize, k_max: usize) -> SvdCoeffs {
    let j = grid.level();
    let scale = (j as f64).exp2();
    let xi = grid.cubature().nodes()[node];
    let w = grid.cubature().weights()[node];
    let mut basis = vec![0.0; index_count(k_max)];
    crate::svd_basis::eval_all_f(k_max, xi, &mut basis);
    let mut out = SvdCoeffs::zeros(k_max);
    for (idx, b) in crate::svd_basis::enumerate_indices(k_max)
        .into_iter()
        .zip(basis)
    {
        let band = filter_b(idx.k as f64 / scale).max(0.0).sqrt();
        out.set(idx, w.sqrt() * band * b);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cubature::{disk_cubature, integrate};
    use crate::svd_basis::{enumerate_indices, eval_all_f, SvdIndex};

    fn pseudo_random(n: usize, seed: u64) -> Vec<f64> {
        let mut state = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
        (0..n)
            .map(|_| {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                (state >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
            })
            .collect()
    }

    #[test]
    fn cutoff_examples() {
        assert_eq!(filter_a(0.25), 1.0);
        assert_eq!(filter_a(1.5), 0.0);
        assert!((filter_a(0.75) - 0.5).abs() < 1e-15);
        assert_eq!(filter_b(1.0), 1.0);
        assert_eq!(filter_b(0.4), 0.0);
        assert_eq!(filter_b(2.0), 0.0);
        assert_eq!(filter_b(0.0), 0.0);
    }

    #[test]
    fn cutoff_is_monotone_and_bounded() {
        let mut prev = 1.0;
        for n in 0..=2000 {
            let t = n as f64 / 1000.0;
            let a = filter_a(t);
            assert!((0.0..=1.0).contains(&a));
            assert!(a <= prev);
            assert!(filter_b(t) >= 0.0);
            prev = a;
        }
    }

    #[test]
    fn dyadic_partition_of_unity() {
        let s: f64 = (0..=8).map(|j| filter_b(3.7 * (-(j as f64)).exp2())).sum();
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn custom_filter_validation() {
        assert!(Filter::new(|t: f64| if t <= 0.5 {
            1.0
        } else if t >= 1.0 {
            0.0
        } else {
            2.0 - 2.0 * t
        })
        .is_ok());
        assert!(Filter::new(|t: f64| if t < 1.0 { 1.0 } else { 0.5 }).is_err());
        assert!(Filter::new(|t: f64| if t <= 0.5 {
            1.0
        } else if t >= 1.0 {
            0.0
        } else {
            t
        })
        .is_err());
    }

    #[test]
    fn analysis_of_constant_and_degree_one() {
        let frame = NeedletFrame::new(3).unwrap();
        let k_max = frame.required_k_max();
        let beta = frame
            .analysis(&SvdCoeffs::unit(k_max, SvdIndex::new(0, 0, 1).unwrap()))
            .unwrap();
        assert_eq!(beta.scaling, 1.0);
        assert!(beta.levels.iter().flatten().all(|v| *v == 0.0));

        let idx = SvdIndex::new(1, 1, 1).unwrap();
        let beta = frame.analysis(&SvdCoeffs::unit(k_max, idx)).unwrap();
        assert_eq!(beta.scaling, 0.0);
        assert!(beta.levels[1..].iter().flatten().all(|v| v.abs() < 1e-15));
        let grid = frame.grid(0).cubature();
        for (n, (&p, &w)) in grid.nodes().iter().zip(grid.weights()).enumerate() {
            let want = w.sqrt() * crate::svd_basis::eval_f(idx, p).unwrap();
            assert!((beta.levels[0][n] - want).abs() < 1e-14);
        }
    }

    #[test]
    fn analysis_requires_degree() {
        let frame = NeedletFrame::new(3).unwrap();
        assert!(matches!(
            frame.analysis(&SvdCoeffs::zeros(7)),
            Err(Error::InsufficientDegree { have: 7, need: 8 })
        ));
    }

    #[test]
    fn fast_synthesis_matches_definition() {
        let frame = NeedletFrame::new(3).unwrap();
        for (j, node) in [(0u32, 3usize), (1, 17), (2, 40), (2, 0)] {
            let fast = frame.needlet_coeffs(j, node, 8).unwrap();
            let slow = needlet_coeffs_direct(frame.grid(j), node, 8);
            for (a, b) in fast.values().iter().zip(slow.values()) {
                assert!((a - b).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn analysis_is_adjoint_of_synthesis() {
        let frame = NeedletFrame::new(4).unwrap();
        let k_max = frame.required_k_max();
        let alpha = SvdCoeffs::from_values(k_max, pseudo_random(index_count(k_max), 3)).unwrap();
        let mut beta = frame.zeros();
        for (n, level) in beta.levels.iter_mut().enumerate() {
            let vals = pseudo_random(level.len(), 11 + n as u64);
            level.copy_from_slice(&vals);
        }
        beta.scaling = 0.4;
        let lhs: f64 = {
            let a = frame.analysis(&alpha).unwrap();
            a.scaling * beta.scaling
                + a.levels
                    .iter()
                    .flatten()
                    .zip(beta.levels.iter().flatten())
                    .map(|(x, y)| x * y)
                    .sum::<f64>()
        };
        let syn = frame.synthesis(&beta, k_max).unwrap();
        let rhs: f64 = syn
            .values()
            .iter()
            .zip(alpha.values())
            .map(|(x, y)| x * y)
            .sum();
        assert!(
            (lhs - rhs).abs() < 1e-11 * lhs.abs().max(1.0),
            "{lhs} vs {rhs}"
        );
    }

    #[test]
    fn parseval_and_reproduction() {
        let levels = 4;
        let frame = NeedletFrame::new(levels).unwrap();
        let k_max = frame.required_k_max();
        let band_limit = 1usize << (levels - 1);
        let mut alpha = SvdCoeffs::zeros(k_max);
        let vals = pseudo_random(index_count(band_limit), 5);
        alpha.values_mut()[..vals.len()].copy_from_slice(&vals);
        let beta = frame.analysis(&alpha).unwrap();
        let rel = (beta.energy() - alpha.energy()).abs() / alpha.energy();
        assert!(rel < 1e-9, "parseval {rel}");
        let back = frame.synthesis(&beta, k_max).unwrap();
        for (a, b) in back.values().iter().zip(alpha.values()) {
            assert!((a - b).abs() < 1e-9 * alpha.energy().sqrt());
        }
    }

    #[test]
    fn synthesis_edge_cases() {
        let frame = NeedletFrame::new(3).unwrap();
        let zero = frame.synthesis(&frame.zeros(), 8).unwrap();
        assert!(zero.values().iter().all(|v| *v == 0.0));
        assert!(frame.synthesis(&frame.zeros(), 9).is_err());
        let mut bad = frame.zeros();
        bad.levels.pop();
        assert!(frame.synthesis(&bad, 8).is_err());

        // single coefficient at level 0
        let node = 4;
        let mut beta = frame.zeros();
        beta.levels[0][node] = 1.0;
        let alpha = frame.synthesis(&beta, 8).unwrap();
        let grid = frame.grid(0).cubature();
        let (xi, w) = (grid.nodes()[node], grid.weights()[node]);
        let mut basis = vec![0.0; index_count(8)];
        eval_all_f(8, xi, &mut basis);
        for (n, idx) in enumerate_indices(8).into_iter().enumerate() {
            let want = w.sqrt() * filter_b(idx.k as f64).sqrt() * basis[n];
            assert!((alpha.values()[n] - want).abs() < 1e-14, "{idx:?}");
        }
    }

    #[test]
    fn needlets_have_zero_mean_and_bounded_norm() {
        let frame = NeedletFrame::new(5).unwrap();
        let cub = disk_cubature(70).unwrap();
        for j in 0..5u32 {
            let len = frame.grid(j).len();
            for node in [0, len / 3, len - 1] {
                let c = frame.needlet_coeffs(j, node, 32).unwrap();
                assert!(c.energy().sqrt() <= 1.0 + 1e-9, "j={j} node={node}");
                if j <= 2 {
                    let mean =
                        integrate(&cub, |p| frame.eval_needlet(j, node, p).unwrap()).unwrap();
                    assert!(mean.abs() < 1e-10, "j={j}: {mean}");
                }
            }
        }
        assert!(needlet_eval(2, 0, DiskPoint { x: 0.0, y: 0.0 }, 4).is_err());
        assert!(needlet_eval(2, 10_000, DiskPoint { x: 0.0, y: 0.0 }, 8).is_err());
    }

    #[test]
    fn pointwise_evaluation_matches_coefficients() {
        let frame = NeedletFrame::new(3).unwrap();
        let c = frame.needlet_coeffs(2, 57, 8).unwrap();
        for p in [DiskPoint { x: 0.1, y: -0.3 }, DiskPoint { x: -0.8, y: 0.5 }] {
            let direct = frame.eval_needlet(2, 57, p).unwrap();
            assert!((direct - c.eval(p)).abs() < 1e-12);
            let free = needlet_eval(2, 57, p, 8).unwrap();
            assert!((direct - free).abs() < 1e-12);
        }
    }

    #[test]
    fn noise_profile_matches_coefficient_norm() {
        let frame = NeedletFrame::new(4).unwrap();
        let profile = frame.noise_profile();
        for j in 0..4u32 {
            let len = frame.grid(j).len();
            for node in [1, len / 2, len - 2] {
                let c = frame.needlet_coeffs(j, node, 16).unwrap();
                let var: f64 = c
                    .iter()
                    .map(|(idx, v)| v * v * (idx.k + 1) as f64 / (4.0 * PI))
                    .sum();
                assert!((profile.sigma(j, node).powi(2) - var).abs() < 1e-12 * var);
            }
        }
    }

    #[test]
    fn csv_layout() {
        let frame = NeedletFrame::new(2).unwrap();
        let beta = frame.zeros();
        let text = beta.to_csv(&frame).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "j,node_index,xi_x,xi_y,value");
        assert_eq!(lines.len(), 2 + frame.grid(0).len() + frame.grid(1).len());
        assert!(lines[1].starts_with("-1,0,"));
    }
}
