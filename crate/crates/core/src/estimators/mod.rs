//! Linear and thresholded SVD and needlet estimators.
//!
//! Every estimator maps an [`Observation`] to SVD coefficients `α*`; images
//! come from [`reconstruct`]. Needlet estimators share prepared frames
//! (noise profile, sup-norms) through a [`FrameCache`].
//!
//! `TN` and `TN_dyadic` analyse on the full scale range [`full_levels`],
//! zero-padding `α̂` past the observed degrees; `TN_sup` stops at `J_ε`.

mod registry;
mod render;

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::needlet::{NeedletCoeffs, NeedletFrame, NeedletSupNorms, NoiseProfile};
use crate::sim::Observation;
use crate::svd_basis::{eigenvalue, SvdCoeffs};

pub use crate::image::{average_images as average_estimates, ReconstructedImage};
pub use registry::{EstimateInput, Estimator, Registry, Tuning};
pub use render::{
    disk_pixels, evaluate_blocks, reconstruct, reconstruct_many, PixelBlock, BLOCK_PIXELS,
};

/// `x` if `|x| >= t`, else 0.
pub fn hard_threshold(x: f64, t: f64) -> f64 {
    if x.abs() >= t {
        x
    } else {
        0.0
    }
}

/// `c_ε = ε sqrt(log 1/ε)`.
pub fn noise_scale(epsilon: f64) -> f64 {
    epsilon * (1.0 / epsilon).ln().sqrt()
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "noise level {epsilon} outside (0, 1)"
        )))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LevelRule {
    /// Largest `J` with `2^{1.5 J} <= 1/c_ε`.
    Standard,
    /// `⌊log2(1/c_ε) / 2⌋`.
    SupNorm,
}

/// Finest level index `J_ε` for noise level `epsilon`.
pub fn max_level(epsilon: f64, rule: LevelRule) -> Result<u32> {
    check_epsilon(epsilon)?;
    let budget = (1.0 / noise_scale(epsilon)).log2();
    let j = match rule {
        LevelRule::Standard => (budget / 1.5).floor(),
        LevelRule::SupNorm => (budget / 2.0).floor(),
    };
    Ok(j.max(0.0) as u32)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdKind {
    /// `T_k = κ c_ε / λ_k`.
    Svd,
    /// `T_{j,ξ} = κ σ_{j,ξ} c_ε`.
    Needlet,
    /// Keep iff `|β| ‖ψ_{j,ξ}‖_∞ >= κ 2^{2j} c_ε`.
    NeedletSup,
    /// `T_j = κ 2^{j/2} c_ε`.
    NeedletDyadic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdRule {
    kind: ThresholdKind,
    kappa: f64,
    epsilon: f64,
}

impl ThresholdRule {
    /// `κ = 0` is accepted and disables thresholding.
    pub fn new(kind: ThresholdKind, kappa: f64, epsilon: f64) -> Result<Self> {
        check_epsilon(epsilon)?;
        if !(kappa >= 0.0 && kappa.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "threshold constant κ={kappa} must be finite and >= 0"
            )));
        }
        Ok(Self {
            kind,
            kappa,
            epsilon,
        })
    }

    pub fn kind(&self) -> ThresholdKind {
        self.kind
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn c_eps(&self) -> f64 {
        noise_scale(self.epsilon)
    }

    /// SVD threshold at degree `k`.
    pub fn svd_threshold(&self, k: usize) -> f64 {
        self.kappa * self.c_eps() / eigenvalue(k)
    }

    fn expect(&self, kinds: &[ThresholdKind]) -> Result<()> {
        if kinds.contains(&self.kind) {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "{:?} rule used with the wrong estimator",
                self.kind
            )))
        }
    }
}

/// `α̂` truncated to degrees `< k_cut`.
pub fn linear_svd(obs: &Observation, k_cut: usize) -> Result<SvdCoeffs> {
    check_cut(obs, k_cut)?;
    Ok(obs.alpha_hat.resized(k_cut).resized(obs.k_max()))
}

fn check_cut(obs: &Observation, k_cut: usize) -> Result<()> {
    if k_cut > obs.k_max() {
        return Err(Error::InvalidParameter(format!(
            "degree cut {k_cut} exceeds the observed k_max {}",
            obs.k_max()
        )));
    }
    Ok(())
}

/// Entrywise hard thresholding of `α̂` at `T_k`, degrees `< k_cut`.
pub fn thresh_svd(obs: &Observation, rule: &ThresholdRule, k_cut: usize) -> Result<SvdCoeffs> {
    rule.expect(&[ThresholdKind::Svd])?;
    let mut out = linear_svd(obs, k_cut)?;
    for k in 0..k_cut {
        let t = rule.svd_threshold(k);
        for v in out.degree_block_mut(k) {
            *v = hard_threshold(*v, t);
        }
    }
    Ok(out)
}

/// Frame with its noise profile and lazily computed sup-norms.
pub struct PreparedFrame {
    frame: NeedletFrame,
    noise: NoiseProfile,
    sup: OnceLock<NeedletSupNorms>,
}

impl std::fmt::Debug for PreparedFrame {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PreparedFrame")
            .field("frame", &self.frame)
            .finish_non_exhaustive()
    }
}

impl PreparedFrame {
    pub fn new(frame: NeedletFrame) -> Self {
        Self::with_band(frame, usize::MAX)
    }

    /// Noise profile counts only degrees `< k_limit`; higher ones enter the analysis as exact zeros.
    pub fn with_band(frame: NeedletFrame, k_limit: usize) -> Self {
        let noise = frame.noise_profile_band(k_limit);
        Self {
            frame,
            noise,
            sup: OnceLock::new(),
        }
    }

    pub fn frame(&self) -> &NeedletFrame {
        &self.frame
    }

    pub fn noise(&self) -> &NoiseProfile {
        &self.noise
    }

    pub fn sup_norms(&self) -> &NeedletSupNorms {
        self.sup.get_or_init(|| self.frame.sup_norms())
    }

    /// Analysis of `alpha`, zero-padded up to the frame's top degree when shorter.
    pub fn analyze(&self, alpha: &SvdCoeffs) -> Result<NeedletCoeffs> {
        let need = self.frame.required_k_max();
        if alpha.k_max() < need {
            self.frame.analysis(&alpha.resized(need))
        } else {
            self.frame.analysis(alpha)
        }
    }
}

/// Prepared frames keyed by level count and noise band, for one grid rotation.
#[derive(Debug)]
pub struct FrameCache {
    angle_offset: f64,
    frames: Mutex<BTreeMap<(u32, usize), Arc<PreparedFrame>>>,
}

impl Default for FrameCache {
    fn default() -> Self {
        Self::new(0.0)
    }
}

impl FrameCache {
    pub fn new(angle_offset: f64) -> Self {
        Self {
            angle_offset,
            frames: Mutex::new(BTreeMap::new()),
        }
    }

    pub fn angle_offset(&self) -> f64 {
        self.angle_offset
    }

    pub fn get(&self, levels: u32) -> Result<Arc<PreparedFrame>> {
        self.get_band(levels, usize::MAX)
    }

    /// Frame whose noise profile counts degrees `< k_limit` only.
    pub fn get_band(&self, levels: u32, k_limit: usize) -> Result<Arc<PreparedFrame>> {
        let k_limit = k_limit.min(1usize << levels);
        let key = (levels, k_limit);
        let mut frames = self.frames.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(f) = frames.get(&key) {
            return Ok(Arc::clone(f));
        }
        let frame = NeedletFrame::with_options(levels, self.angle_offset, &Default::default())?;
        let prepared = Arc::new(PreparedFrame::with_band(frame, k_limit));
        frames.insert(key, Arc::clone(&prepared));
        Ok(prepared)
    }
}

/// Smallest level count whose exact band `k < 2^{levels-1}` holds every degree `< k_max`.
pub fn full_levels(k_max: usize) -> u32 {
    k_max.max(1).next_power_of_two().ilog2() + 1
}

/// Number of needlet levels `0..=J_ε`, capped so that `2^levels <= k_max`.
pub fn needlet_levels(epsilon: f64, rule: LevelRule, k_max: usize) -> Result<u32> {
    let cap = k_max.max(1).ilog2();
    Ok((max_level(epsilon, rule)? + 1).min(cap))
}

/// `analysis(α̂)` with every level `j >= 0` hard-thresholded per `rule`.
pub fn thresh_needlet(
    obs: &Observation,
    rule: &ThresholdRule,
    frame: &PreparedFrame,
) -> Result<NeedletCoeffs> {
    rule.expect(&[ThresholdKind::Needlet, ThresholdKind::NeedletDyadic])?;
    let mut beta = frame.analyze(&obs.alpha_hat)?;
    let c = rule.kappa * rule.c_eps();
    for (j, level) in beta.levels.iter_mut().enumerate() {
        match rule.kind {
            ThresholdKind::Needlet => {
                for (v, s) in level.iter_mut().zip(frame.noise.level(j as u32)) {
                    *v = hard_threshold(*v, c * s);
                }
            }
            _ => {
                let t = c * (j as f64 / 2.0).exp2();
                level.iter_mut().for_each(|v| *v = hard_threshold(*v, t));
            }
        }
    }
    Ok(beta)
}

/// Sup-norm weighted keep rule; a zero coefficient is always dropped.
pub fn thresh_needlet_sup(
    obs: &Observation,
    rule: &ThresholdRule,
    frame: &PreparedFrame,
) -> Result<NeedletCoeffs> {
    rule.expect(&[ThresholdKind::NeedletSup])?;
    let mut beta = frame.analyze(&obs.alpha_hat)?;
    let sup = frame.sup_norms();
    let c = rule.kappa * rule.c_eps();
    for (j, level) in beta.levels.iter_mut().enumerate() {
        let t = c * (2.0 * j as f64).exp2();
        for (v, s) in level.iter_mut().zip(sup.level(j as u32)) {
            if !(*v != 0.0 && v.abs() * s >= t) {
                *v = 0.0;
            }
        }
    }
    Ok(beta)
}

/// `synthesis(β)` padded with zeros up to `k_max`.
pub fn needlet_to_svd(
    frame: &PreparedFrame,
    beta: &NeedletCoeffs,
    k_max: usize,
) -> Result<SvdCoeffs> {
    let top = frame.frame.required_k_max().min(k_max);
    Ok(frame.frame.synthesis(beta, top)?.resized(k_max))
}
