//! Estimators as trait objects, registered by name.

use std::collections::BTreeMap;

use super::{
    full_levels, linear_svd, needlet_levels, needlet_to_svd, thresh_needlet, thresh_needlet_sup,
    thresh_svd, FrameCache, LevelRule, PreparedFrame, ThresholdKind, ThresholdRule,
};
use crate::error::{Error, Result};
use crate::sim::Observation;
use crate::svd_basis::SvdCoeffs;

/// What the free parameter of an estimator means.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tuning {
    /// Resolution (degree cut or level count); only the oracle choice is reported.
    Scale,
    /// Threshold constant κ.
    Kappa,
}

/// Everything an estimator may look at.
#[derive(Debug, Clone, Copy)]
pub struct EstimateInput<'a> {
    pub obs: &'a Observation,
    pub frames: &'a FrameCache,
    /// Fixed needlet level count instead of the estimator's own choice.
    pub levels_override: Option<u32>,
}

impl EstimateInput<'_> {
    /// `None` means the full range covering every observed degree.
    fn levels(&self, rule: Option<LevelRule>) -> Result<u32> {
        let k_max = self.obs.k_max();
        let cap = full_levels(k_max);
        match (self.levels_override, rule) {
            (Some(j), _) if j == 0 || j > cap => Err(Error::InvalidParameter(format!(
                "{j} needlet levels outside 1..={cap} for k_max {k_max}"
            ))),
            (Some(j), _) => Ok(j),
            (None, Some(rule)) => needlet_levels(self.obs.epsilon, rule, k_max),
            (None, None) => Ok(cap),
        }
    }

    fn frame(&self, rule: Option<LevelRule>) -> Result<std::sync::Arc<PreparedFrame>> {
        self.frames.get_band(self.levels(rule)?, self.obs.k_max())
    }

    fn rule(&self, kind: ThresholdKind, kappa: f64) -> Result<ThresholdRule> {
        ThresholdRule::new(kind, kappa, self.obs.epsilon)
    }
}

pub trait Estimator: Send + Sync {
    fn name(&self) -> &'static str;

    fn tuning(&self) -> Tuning;

    /// Parameter values scanned by the oracle; κ-tuned estimators scan `kappas`.
    fn sweep(&self, input: &EstimateInput<'_>, kappas: &[f64]) -> Result<Vec<f64>>;

    /// `α*` with the observation's `k_max`.
    fn estimate(&self, input: &EstimateInput<'_>, param: f64) -> Result<SvdCoeffs>;
}

struct LinearSvd;

impl Estimator for LinearSvd {
    fn name(&self) -> &'static str {
        "LS"
    }

    fn tuning(&self) -> Tuning {
        Tuning::Scale
    }

    /// Dyadic degree cuts `1, 2, 4, …, k_max`.
    fn sweep(&self, input: &EstimateInput<'_>, _: &[f64]) -> Result<Vec<f64>> {
        let k_max = input.obs.k_max();
        let mut cuts: Vec<f64> = (0..)
            .map(|s| (1usize << s) as f64)
            .take_while(|c| *c <= k_max as f64)
            .collect();
        if cuts.last() != Some(&(k_max as f64)) {
            cuts.push(k_max as f64);
        }
        Ok(cuts)
    }

    fn estimate(&self, input: &EstimateInput<'_>, param: f64) -> Result<SvdCoeffs> {
        linear_svd(input.obs, as_count(param)?)
    }
}

struct LinearNeedlet;

impl Estimator for LinearNeedlet {
    fn name(&self) -> &'static str {
        "LN"
    }

    fn tuning(&self) -> Tuning {
        Tuning::Scale
    }

    /// Number of retained levels `0..=J`.
    fn sweep(&self, input: &EstimateInput<'_>, _: &[f64]) -> Result<Vec<f64>> {
        Ok((0..=input.levels(None)?).map(f64::from).collect())
    }

    fn estimate(&self, input: &EstimateInput<'_>, param: f64) -> Result<SvdCoeffs> {
        let frame = input.frame(None)?;
        let keep = as_count(param)?;
        let beta = frame.analyze(&input.obs.alpha_hat)?.truncated(keep as u32);
        needlet_to_svd(&frame, &beta, input.obs.k_max())
    }
}

struct ThreshSvd;

impl Estimator for ThreshSvd {
    fn name(&self) -> &'static str {
        "TS"
    }

    fn tuning(&self) -> Tuning {
        Tuning::Kappa
    }

    fn sweep(&self, _: &EstimateInput<'_>, kappas: &[f64]) -> Result<Vec<f64>> {
        Ok(kappas.to_vec())
    }

    fn estimate(&self, input: &EstimateInput<'_>, param: f64) -> Result<SvdCoeffs> {
        thresh_svd(
            input.obs,
            &input.rule(ThresholdKind::Svd, param)?,
            input.obs.k_max(),
        )
    }
}

struct ThreshNeedlet {
    name: &'static str,
    kind: ThresholdKind,
    /// `None` uses the full range of observed degrees.
    levels: Option<LevelRule>,
}

impl Estimator for ThreshNeedlet {
    fn name(&self) -> &'static str {
        self.name
    }

    fn tuning(&self) -> Tuning {
        Tuning::Kappa
    }

    fn sweep(&self, _: &EstimateInput<'_>, kappas: &[f64]) -> Result<Vec<f64>> {
        Ok(kappas.to_vec())
    }

    fn estimate(&self, input: &EstimateInput<'_>, param: f64) -> Result<SvdCoeffs> {
        let frame = input.frame(self.levels)?;
        let rule = input.rule(self.kind, param)?;
        let beta = match self.kind {
            ThresholdKind::NeedletSup => thresh_needlet_sup(input.obs, &rule, &frame)?,
            _ => thresh_needlet(input.obs, &rule, &frame)?,
        };
        needlet_to_svd(&frame, &beta, input.obs.k_max())
    }
}

fn as_count(param: f64) -> Result<usize> {
    if param >= 0.0 && param.fract() == 0.0 && param < 1e9 {
        Ok(param as usize)
    } else {
        Err(Error::InvalidParameter(format!(
            "scale parameter {param} is not a count"
        )))
    }
}

/// Name-keyed estimator table.
pub struct Registry {
    entries: BTreeMap<&'static str, Box<dyn Estimator>>,
}

impl std::fmt::Debug for Registry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list().entries(self.entries.keys()).finish()
    }
}

impl Default for Registry {
    /// `LS`, `LN`, `TS`, `TN`, `TN_sup`, plus `TN_dyadic` (`2^{j/2}` thresholds).
    fn default() -> Self {
        let mut reg = Self::empty();
        reg.register(Box::new(LinearSvd));
        reg.register(Box::new(LinearNeedlet));
        reg.register(Box::new(ThreshSvd));
        reg.register(Box::new(ThreshNeedlet {
            name: "TN",
            kind: ThresholdKind::Needlet,
            levels: None,
        }));
        reg.register(Box::new(ThreshNeedlet {
            name: "TN_sup",
            kind: ThresholdKind::NeedletSup,
            levels: Some(LevelRule::SupNorm),
        }));
        reg.register(Box::new(ThreshNeedlet {
            name: "TN_dyadic",
            kind: ThresholdKind::NeedletDyadic,
            levels: None,
        }));
        reg
    }
}

impl Registry {
    pub fn empty() -> Self {
        Self {
            entries: BTreeMap::new(),
        }
    }

    /// Adds or replaces the estimator under its own name.
    pub fn register(&mut self, estimator: Box<dyn Estimator>) {
        self.entries.insert(estimator.name(), estimator);
    }

    pub fn get(&self, name: &str) -> Result<&dyn Estimator> {
        self.entries.get(name).map(|b| b.as_ref()).ok_or_else(|| {
            Error::InvalidParameter(format!(
                "unknown estimator `{name}` (known: {})",
                self.names().join(", ")
            ))
        })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.keys().copied().collect()
    }
}
