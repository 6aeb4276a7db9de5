//! Singular system of the 2-D Radon transform.
//!
//! On the disk the basis is
//! `f_{k,l,i}(r, θ) = sqrt(2k+2) P_{(k-l)/2}^{(0,l)}(2r²-1) r^l Y_{l,i}(θ)`
//! and on the cylinder `S¹ × [-1, 1]`
//! `g_{k,l,i}(θ, s) = (π/2)^{-1/2} sqrt(1-s²) C_k^1(s) Y_{l,i}(θ)`,
//! with `R f_{k,l,i} = λ_k g_{k,l,i}` and `λ_k = 2 sqrt(π) / sqrt(k+1)`.
//!
//! Coefficients are stored densely in the order `(k, l, i)` ascending; the
//! degree-`k` block has exactly `k + 1` entries. The branch `(l = 0, i = 2)`
//! is the zero function and is not part of the index set.

use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::orthopoly::{gegenbauer_sequence, jacobi_sequence, GegenbauerParam, JacobiParams};

/// Slack allowed on `|p| <= 1` for points produced by floating-point maps.
const DISK_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SvdIndex {
    pub k: usize,
    pub l: usize,
    pub i: u8,
}

impl SvdIndex {
    pub fn new(k: usize, l: usize, i: u8) -> Result<Self> {
        let idx = Self { k, l, i };
        if !idx.is_valid() {
            return Err(Error::Domain(format!("invalid SVD index ({k},{l},{i})")));
        }
        Ok(idx)
    }

    pub fn is_valid(&self) -> bool {
        self.l <= self.k
            && (self.k - self.l).is_multiple_of(2)
            && (self.i == 1 || self.i == 2)
            && !(self.l == 0 && self.i == 2)
    }

    /// Position in the dense coefficient layout.
    pub fn position(&self) -> usize {
        let within = if self.l == 0 {
            0
        } else {
            self.l - 1 + (self.i as usize - 1)
        };
        degree_offset(self.k) + within
    }
}

/// Number of basis functions of degree `< k_max`.
pub fn index_count(k_max: usize) -> usize {
    k_max * (k_max + 1) / 2
}

/// Position of the first index of degree `k`.
pub fn degree_offset(k: usize) -> usize {
    k * (k + 1) / 2
}

pub fn enumerate_indices(k_max: usize) -> Vec<SvdIndex> {
    let mut out = Vec::with_capacity(index_count(k_max));
    for k in 0..k_max {
        for l in (k % 2..=k).step_by(2) {
            out.push(SvdIndex { k, l, i: 1 });
            if l > 0 {
                out.push(SvdIndex { k, l, i: 2 });
            }
        }
    }
    out
}

/// Eigenvalue `λ_k` of the Radon singular system.
pub fn eigenvalue(k: usize) -> f64 {
    2.0 * PI.sqrt() / ((k + 1) as f64).sqrt()
}

/// Point of the closed unit disk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiskPoint {
    pub x: f64,
    pub y: f64,
}

impl DiskPoint {
    pub fn new(x: f64, y: f64) -> Result<Self> {
        let p = Self { x, y };
        if !p.in_disk() {
            return Err(Error::Domain(format!(
                "point ({x}, {y}) outside the unit disk"
            )));
        }
        Ok(p)
    }

    pub fn from_polar(r: f64, theta: f64) -> Self {
        Self {
            x: r * theta.cos(),
            y: r * theta.sin(),
        }
    }

    pub fn r(&self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn theta(&self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn in_disk(&self) -> bool {
        self.x.is_finite()
            && self.y.is_finite()
            && self.x * self.x + self.y * self.y <= 1.0 + DISK_SLACK
    }
}

/// Normalizing constant of the circular harmonics `Y_{l,i}`.
pub fn harmonic_scale(l: usize) -> f64 {
    if l == 0 {
        1.0 / (2.0 * PI).sqrt()
    } else {
        1.0 / PI.sqrt()
    }
}

/// `Y_{l,i}(θ)`.
pub fn harmonic(l: usize, i: u8, theta: f64) -> f64 {
    let c = harmonic_scale(l);
    if i == 1 {
        c * (l as f64 * theta).cos()
    } else {
        c * (l as f64 * theta).sin()
    }
}

/// Radial factors `sqrt(2k+2) P_{(k-l)/2}^{(0,l)}(2r²-1) r^l` at one radius,
/// for all admissible `(k, l)` with `k < k_max`.
#[derive(Debug, Clone)]
pub struct RadialTable {
    k_max: usize,
    values: Vec<f64>,
}

/// Offset of degree `k` in the `(k, l)` layout (`⌊k/2⌋ + 1` entries per degree).
fn kl_offset(k: usize) -> usize {
    if k == 0 {
        0
    } else {
        k + (k - 1) * (k - 1) / 4
    }
}

impl RadialTable {
    pub fn new(k_max: usize, r: f64) -> Self {
        let mut values = vec![0.0; kl_offset(k_max)];
        let t = (2.0 * r * r - 1.0).clamp(-1.0, 1.0);
        let mut seq = vec![0.0; k_max / 2 + 1];
        let mut r_pow = 1.0;
        for l in 0..k_max {
            let count = (k_max - 1 - l) / 2 + 1;
            let params =
                JacobiParams::new(0.0, l as f64).expect("l >= 0 is a valid Jacobi parameter");
            jacobi_sequence(params, t, &mut seq[..count]);
            for (n, p) in seq[..count].iter().enumerate() {
                let k = l + 2 * n;
                values[kl_offset(k) + l / 2] = ((2 * k + 2) as f64).sqrt() * p * r_pow;
            }
            r_pow *= r;
        }
        Self { k_max, values }
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    /// Radial factor of `(k, l)`; `k - l` must be even and `k < k_max`.
    #[inline]
    pub fn get(&self, k: usize, l: usize) -> f64 {
        debug_assert!(l <= k && (k - l).is_multiple_of(2) && k < self.k_max);
        self.values[kl_offset(k) + l / 2]
    }
}

/// Evaluates every `f_{k,l,i}` with `k < k_max` at `p`, in layout order.
pub fn eval_all_f(k_max: usize, p: DiskPoint, out: &mut [f64]) {
    assert_eq!(out.len(), index_count(k_max));
    let radial = RadialTable::new(k_max, p.r().min(1.0));
    let theta = p.theta();
    let mut pos = 0;
    for k in 0..k_max {
        for l in (k % 2..=k).step_by(2) {
            let rad = radial.get(k, l);
            let c = harmonic_scale(l);
            let (s, co) = (l as f64 * theta).sin_cos();
            out[pos] = rad * c * co;
            pos += 1;
            if l > 0 {
                out[pos] = rad * c * s;
                pos += 1;
            }
        }
    }
}

pub fn eval_f(idx: SvdIndex, p: DiskPoint) -> Result<f64> {
    if !idx.is_valid() {
        return Err(Error::Domain(format!("invalid SVD index {idx:?}")));
    }
    if !p.in_disk() {
        return Err(Error::Domain(format!(
            "point ({}, {}) outside the unit disk",
            p.x, p.y
        )));
    }
    let r = p.r().min(1.0);
    let n = (idx.k - idx.l) / 2;
    let mut seq = vec![0.0; n + 1];
    let params = JacobiParams::new(0.0, idx.l as f64)?;
    jacobi_sequence(params, (2.0 * r * r - 1.0).clamp(-1.0, 1.0), &mut seq);
    let rad = ((2 * idx.k + 2) as f64).sqrt() * seq[n] * r.powi(idx.l as i32);
    Ok(rad * harmonic(idx.l, idx.i, p.theta()))
}

pub fn eval_g(idx: SvdIndex, theta: f64, s: f64) -> Result<f64> {
    if !idx.is_valid() {
        return Err(Error::Domain(format!("invalid SVD index {idx:?}")));
    }
    if !(-1.0..=1.0).contains(&s) {
        return Err(Error::Domain(format!("offset {s} outside [-1, 1]")));
    }
    let mut seq = vec![0.0; idx.k + 1];
    gegenbauer_sequence(GegenbauerParam::new(1.0)?, s, &mut seq);
    let amp = (2.0 / PI).sqrt() * (1.0 - s * s).sqrt();
    Ok(amp * seq[idx.k] * harmonic(idx.l, idx.i, theta))
}

/// Dense SVD coefficient vector over all indices of degree `< k_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdCoeffs {
    k_max: usize,
    values: Vec<f64>,
}

impl SvdCoeffs {
    pub fn zeros(k_max: usize) -> Self {
        Self {
            k_max,
            values: vec![0.0; index_count(k_max)],
        }
    }

    pub fn from_values(k_max: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != index_count(k_max) {
            return Err(Error::ShapeMismatch(format!(
                "{} values for k_max={k_max}, expected {}",
                values.len(),
                index_count(k_max)
            )));
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("coefficient at position {bad}")));
        }
        Ok(Self { k_max, values })
    }

    pub fn unit(k_max: usize, idx: SvdIndex) -> Self {
        let mut c = Self::zeros(k_max);
        c.values[idx.position()] = 1.0;
        c
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn get(&self, idx: SvdIndex) -> f64 {
        if idx.k >= self.k_max {
            0.0
        } else {
            self.values[idx.position()]
        }
    }

    pub fn set(&mut self, idx: SvdIndex, value: f64) {
        self.values[idx.position()] = value;
    }

    /// Coefficients of degree `k`.
    pub fn degree_block(&self, k: usize) -> &[f64] {
        &self.values[degree_offset(k)..degree_offset(k + 1)]
    }

    pub fn degree_block_mut(&mut self, k: usize) -> &mut [f64] {
        &mut self.values[degree_offset(k)..degree_offset(k + 1)]
    }

    pub fn iter(&self) -> impl Iterator<Item = (SvdIndex, f64)> + '_ {
        enumerate_indices(self.k_max)
            .into_iter()
            .zip(self.values.iter().copied())
    }

    /// Squared `L²` norm of the represented function.
    pub fn energy(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    /// Copy re-dimensioned to `k_max`, dropping or zero-padding degrees.
    pub fn resized(&self, k_max: usize) -> Self {
        let mut values = vec![0.0; index_count(k_max)];
        let n = values.len().min(self.values.len());
        values[..n].copy_from_slice(&self.values[..n]);
        Self { k_max, values }
    }

    /// Evaluates the expansion at a point of the disk.
    pub fn eval(&self, p: DiskPoint) -> f64 {
        let mut basis = vec![0.0; self.values.len()];
        eval_all_f(self.k_max, p, &mut basis);
        basis.iter().zip(&self.values).map(|(b, a)| b * a).sum()
    }

    /// CSV with header `k,l,i,value`, one row per index in layout order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,l,i,value\n");
        for (idx, v) in self.iter() {
            let _ = writeln!(out, "{},{},{},{:.16e}", idx.k, idx.l, idx.i, v);
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        match lines.next() {
            Some("k,l,i,value") => {}
            other => return Err(Error::Parse(format!("unexpected header {other:?}"))),
        }
        let mut entries = Vec::new();
        for (n, line) in lines.enumerate() {
            let fields: Vec<&str> = line.split(',').collect();
            let parse_err = || Error::Parse(format!("row {}: `{line}`", n + 2));
            if fields.len() != 4 {
                return Err(parse_err());
            }
            let k: usize = fields[0].parse().map_err(|_| parse_err())?;
            let l: usize = fields[1].parse().map_err(|_| parse_err())?;
            let i: u8 = fields[2].parse().map_err(|_| parse_err())?;
            let v: f64 = fields[3].parse().map_err(|_| parse_err())?;
            entries.push((SvdIndex::new(k, l, i)?, v));
        }
        let k_max = entries.iter().map(|(idx, _)| idx.k + 1).max().unwrap_or(0);
        let expected = enumerate_indices(k_max);
        if expected.len() != entries.len()
            || expected.iter().zip(&entries).any(|(a, (b, _))| a != b)
        {
            return Err(Error::Parse("rows are not in canonical index order".into()));
        }
        Self::from_values(k_max, entries.into_iter().map(|(_, v)| v).collect())
    }
}
