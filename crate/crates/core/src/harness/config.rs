//! Flat `key = value` experiment configuration.
//!
//! ```text
//! # comment
//! phantom     = shepp-logan
//! epsilons    = 0.001, 0.002, 0.004
//! kappas      = 3
//! kappa_sweep = 0, 0.5, 1, 1.5, 2, 2.5, 3, 4, 5
//! norms       = 1, 2, inf
//! estimators  = LS, LN, TS, TN, TN_sup
//! seeds       = 1, 2, 3
//! grid        = 256
//! k_max       = 64
//! levels      = 5            # optional fixed needlet level count, at most log2(k_max)+1
//! record_wall_time = false
//! ```
//!
//! Lists are comma separated. Unknown or repeated keys are errors.

use std::collections::BTreeSet;
use std::path::Path;

use crate::error::{Error, Result};
use crate::estimators::full_levels;
use crate::sim::Phantom;

/// All keys accepted in a config file.
pub const CONFIG_KEYS: [&str; 11] = [
    "phantom",
    "epsilons",
    "kappas",
    "kappa_sweep",
    "norms",
    "estimators",
    "seeds",
    "grid",
    "k_max",
    "levels",
    "record_wall_time",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub phantom: String,
    pub epsilons: Vec<f64>,
    /// κ values reported as fixed-κ rows.
    pub kappas: Vec<f64>,
    /// Additional κ values scanned by the oracle rows.
    pub kappa_sweep: Vec<f64>,
    /// `p` values; `f64::INFINITY` is the sup norm.
    pub norms: Vec<f64>,
    pub estimators: Vec<String>,
    pub seeds: Vec<u64>,
    pub grid: usize,
    pub k_max: usize,
    pub levels: Option<u32>,
    /// Off by default so reruns are byte-identical.
    pub record_wall_time: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            phantom: "shepp-logan".into(),
            epsilons: (0..7).map(|k| f64::from(1 << k) / 1000.0).collect(),
            kappas: vec![3.0],
            kappa_sweep: (0..=12).map(|n| f64::from(n) / 2.0).collect(),
            norms: vec![1.0, 2.0, 4.0, 6.0, 8.0, 10.0, f64::INFINITY],
            estimators: ["LS", "LN", "TS", "TN", "TN_sup"]
                .map(String::from)
                .to_vec(),
            seeds: (1..=5).collect(),
            grid: 256,
            k_max: 64,
            levels: None,
            record_wall_time: false,
        }
    }
}

fn config_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Config {
        line,
        msg: msg.into(),
    }
}

fn parse_list<T>(line: usize, value: &str, item: impl Fn(&str) -> Option<T>) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .map(|s| item(s).ok_or_else(|| config_err(line, format!("cannot parse list item `{s}`"))))
        .collect()
}

pub fn parse_norm(s: &str) -> Option<f64> {
    match s {
        "inf" | "Inf" | "infinity" | "∞" => Some(f64::INFINITY),
        _ => s.parse::<f64>().ok().filter(|p| p.is_finite()),
    }
}

fn parse_bool(s: &str) -> Option<bool> {
    match s {
        "true" | "yes" | "1" => Some(true),
        "false" | "no" | "0" => Some(false),
        _ => None,
    }
}

impl ExperimentConfig {
    /// Parses a config; keys not present keep their defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut seen = BTreeSet::new();
        for (n, raw) in text.lines().enumerate() {
            let line = n + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| config_err(line, "expected `key = value`"))?;
            let (key, value) = (key.trim(), value.trim());
            if !CONFIG_KEYS.contains(&key) {
                return Err(config_err(line, format!("unknown key `{key}`")));
            }
            if !seen.insert(key.to_string()) {
                return Err(config_err(line, format!("key `{key}` given twice")));
            }
            if value.is_empty() {
                return Err(config_err(line, format!("key `{key}` has no value")));
            }
            let number = |s: &str| s.parse::<f64>().ok().filter(|v| v.is_finite());
            match key {
                "phantom" => cfg.phantom = value.to_string(),
                "epsilons" => cfg.epsilons = parse_list(line, value, number)?,
                "kappas" => cfg.kappas = parse_list(line, value, number)?,
                "kappa_sweep" => cfg.kappa_sweep = parse_list(line, value, number)?,
                "norms" => cfg.norms = parse_list(line, value, parse_norm)?,
                "estimators" => cfg.estimators = parse_list(line, value, |s| Some(s.to_string()))?,
                "seeds" => cfg.seeds = parse_list(line, value, |s| s.parse().ok())?,
                "grid" => {
                    cfg.grid = value
                        .parse()
                        .map_err(|_| config_err(line, "grid must be an integer"))?
                }
                "k_max" => {
                    cfg.k_max = value
                        .parse()
                        .map_err(|_| config_err(line, "k_max must be an integer"))?
                }
                "levels" => {
                    cfg.levels = Some(
                        value
                            .parse()
                            .map_err(|_| config_err(line, "levels must be an integer"))?,
                    )
                }
                "record_wall_time" => {
                    cfg.record_wall_time = parse_bool(value)
                        .ok_or_else(|| config_err(line, "record_wall_time must be true or false"))?
                }
                _ => unreachable!("key list checked above"),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Checks ranges; line 0 marks errors not tied to a single line.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(config_err(0, msg));
        Phantom::by_name(&self.phantom).map_err(|e| config_err(0, e.to_string()))?;
        for (name, empty) in [
            ("epsilons", self.epsilons.is_empty()),
            ("kappas", self.kappas.is_empty()),
            ("norms", self.norms.is_empty()),
            ("estimators", self.estimators.is_empty()),
            ("seeds", self.seeds.is_empty()),
        ] {
            if empty {
                return fail(format!("`{name}` must not be empty"));
            }
        }
        if let Some(eps) = self.epsilons.iter().find(|e| !(**e > 0.0 && **e < 1.0)) {
            return fail(format!("noise level {eps} outside (0, 1)"));
        }
        if let Some(k) = self
            .kappas
            .iter()
            .chain(&self.kappa_sweep)
            .find(|k| **k < 0.0)
        {
            return fail(format!("κ={k} is negative"));
        }
        if let Some(p) = self.norms.iter().find(|p| **p < 1.0) {
            return fail(format!("norm exponent {p} below 1"));
        }
        if self.grid < 32 {
            return fail(format!("grid {} below 32", self.grid));
        }
        // 512 keeps the full needlet range within the 10-level frame limit
        if self.k_max == 0 || self.k_max > 512 {
            return fail(format!("k_max {} outside 1..=512", self.k_max));
        }
        if let Some(j) = self.levels {
            let cap = full_levels(self.k_max);
            if j == 0 || j > cap {
                return fail(format!(
                    "levels {j} outside 1..={cap} for k_max {}",
                    self.k_max
                ));
            }
        }
        Ok(())
    }
}
