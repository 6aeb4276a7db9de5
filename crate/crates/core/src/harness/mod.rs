//! Error metrics and the estimator comparison study.
//!
//! A run has three stages. First, every candidate `α*` is computed for every
//! (ε, seed) cell in parallel. Second, one pass over pixel blocks accumulates
//! `Σ|f̂ - f|^p` for all candidates and norms. Third, rows are assembled: the
//! fixed-κ rows plus one `oracle_*` row per estimator that picks the best
//! parameter per norm. Blocks and cells are reduced in a fixed order, so the
//! CSV does not depend on the number of threads.

mod config;
mod selftest;

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use ndarray::Array2;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimators::{
    evaluate_blocks, reconstruct, EstimateInput, FrameCache, Registry, Tuning,
};
use crate::image::ReconstructedImage;
use crate::sim::{observe, reference_coeffs, Phantom};
use crate::svd_basis::{index_count, SvdCoeffs};

pub use config::{parse_norm, ExperimentConfig, CONFIG_KEYS};
pub use selftest::{selftest, Check};

pub const CSV_HEADER: &str = "estimator,p,epsilon,kappa,seed,error,wall_time";

/// Prefix of rows holding the best parameter per norm.
pub const ORACLE_PREFIX: &str = "oracle_";

/// Running `Σ |d|^p` (or `max |d|` for `p = ∞`).
#[derive(Debug, Clone, Copy)]
struct PowerSum {
    p: f64,
    int_p: Option<i32>,
}

impl PowerSum {
    fn new(p: f64) -> Self {
        let int_p = (p.is_finite() && p.fract() == 0.0 && p <= 64.0).then_some(p as i32);
        Self { p, int_p }
    }

    #[inline]
    fn add(&self, acc: f64, d: f64) -> f64 {
        match (self.p.is_infinite(), self.int_p) {
            (true, _) => acc.max(d),
            (false, Some(i)) => acc + d.powi(i),
            (false, None) => acc + d.powf(self.p),
        }
    }

    fn combine(&self, a: f64, b: f64) -> f64 {
        if self.p.is_infinite() {
            a.max(b)
        } else {
            a + b
        }
    }

    fn finish(&self, acc: f64, pixel_area: f64) -> f64 {
        if self.p.is_infinite() {
            acc
        } else {
            (acc * pixel_area).powf(1.0 / self.p)
        }
    }
}

fn check_norm(p: f64) -> Result<()> {
    if p >= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "norm exponent {p} below 1"
        )))
    }
}

/// Grid `L_p` distance over the disk mask with pixel area `(2/N)²`.
pub fn lp_error(truth: &ReconstructedImage, est: &ReconstructedImage, p: f64) -> Result<f64> {
    check_norm(p)?;
    if truth.n() != est.n() {
        return Err(Error::ShapeMismatch(format!(
            "grids {} and {} differ",
            truth.n(),
            est.n()
        )));
    }
    let sum = PowerSum::new(p);
    let acc = truth
        .values()
        .iter()
        .zip(est.values())
        .zip(truth.mask())
        .filter(|(_, m)| **m)
        .fold(0.0, |acc, ((a, b), _)| sum.add(acc, (a - b).abs()));
    Ok(sum.finish(acc, pixel_area(truth.n())))
}

pub fn pixel_area(n: usize) -> f64 {
    (2.0 / n as f64).powi(2)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub estimator: String,
    pub p: f64,
    pub epsilon: f64,
    /// κ for fixed rows; the selected parameter for `oracle_*` rows.
    pub kappa: f64,
    pub seed: u64,
    /// NaN when the cell failed.
    pub error: f64,
    pub wall_time: f64,
}

impl ResultRow {
    fn sort_key_cmp(&self, other: &Self) -> Ordering {
        self.estimator
            .cmp(&other.estimator)
            .then(self.p.total_cmp(&other.p))
            .then(self.epsilon.total_cmp(&other.epsilon))
            .then(self.kappa.total_cmp(&other.kappa))
            .then(self.seed.cmp(&other.seed))
    }

    pub fn is_oracle(&self) -> bool {
        self.estimator.starts_with(ORACLE_PREFIX)
    }
}

fn fmt_num(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else {
        format!("{v:.16e}")
    }
}

pub fn rows_to_csv(rows: &[ResultRow]) -> String {
    let mut out = format!("{CSV_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.estimator,
            fmt_num(r.p),
            fmt_num(r.epsilon),
            fmt_num(r.kappa),
            r.seed,
            fmt_num(r.error),
            fmt_num(r.wall_time)
        );
    }
    out
}

pub fn emit_csv(rows: &[ResultRow], path: &Path) -> Result<()> {
    std::fs::write(path, rows_to_csv(rows)).map_err(|e| Error::io(path, e))
}

pub fn parse_csv(text: &str) -> Result<Vec<ResultRow>> {
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err(Error::Parse(format!("missing header `{CSV_HEADER}`")));
    }
    lines
        .enumerate()
        .map(|(n, line)| {
            let bad = |what: &str| Error::Parse(format!("row {}: bad {what}", n + 1));
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 7 {
                return Err(bad("field count"));
            }
            let num = |i: usize, what: &str| f[i].parse::<f64>().map_err(|_| bad(what));
            Ok(ResultRow {
                estimator: f[0].to_string(),
                p: num(1, "p")?,
                epsilon: num(2, "epsilon")?,
                kappa: num(3, "kappa")?,
                seed: f[4].parse().map_err(|_| bad("seed"))?,
                error: num(5, "error")?,
                wall_time: num(6, "wall_time")?,
            })
        })
        .collect()
}

/// Runs `f` on a pool with `threads` workers (0 = rayon default).
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

#[derive(Debug, Clone)]
struct Candidate {
    estimator: usize,
    param: f64,
    column: Option<usize>,
    wall_time: f64,
    failure: Option<String>,
}

/// `(ε, seed, candidates with their α*)` straight out of stage 1.
type CellOutput = (f64, u64, Vec<(Candidate, Option<SvdCoeffs>)>);

#[derive(Debug, Clone)]
struct Cell {
    epsilon: f64,
    seed: u64,
    candidates: Vec<Candidate>,
}

/// One estimate kept for image output.
#[derive(Debug, Clone)]
pub struct Selection {
    pub label: String,
    pub epsilon: f64,
    pub seed: u64,
    pub alpha: SvdCoeffs,
}

#[derive(Debug, Clone)]
pub struct Experiment {
    pub rows: Vec<ResultRow>,
    /// Cells that failed, with the reason; their rows carry NaN errors.
    pub failures: Vec<String>,
    pub truth: ReconstructedImage,
    /// Fixed-κ and L2-oracle estimates for the first seed of every ε.
    pub selections: Vec<Selection>,
}

fn sorted_params(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// Runs the study on the current rayon pool.
pub fn run_experiment(cfg: &ExperimentConfig, registry: &Registry) -> Result<Experiment> {
    cfg.validate()?;
    let estimators = cfg
        .estimators
        .iter()
        .map(|name| {
            registry.get(name).map_err(|e| Error::Config {
                line: 0,
                msg: e.to_string(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let phantom = Phantom::by_name(&cfg.phantom)?;
    let truth = phantom.rasterize(cfg.grid)?;
    let alpha = reference_coeffs(&phantom, cfg.k_max)?;
    let kappas = sorted_params(cfg.kappas.iter().chain(&cfg.kappa_sweep).copied().collect());
    let frames = FrameCache::default();

    let cell_keys: Vec<(f64, u64)> = cfg
        .epsilons
        .iter()
        .flat_map(|&e| cfg.seeds.iter().map(move |&s| (e, s)))
        .collect();
    let computed: Vec<CellOutput> = cell_keys
        .par_iter()
        .map(|&(epsilon, seed)| {
            let mut out = Vec::new();
            let obs = match observe(&alpha, epsilon, seed) {
                Ok(obs) => obs,
                Err(e) => {
                    for (ei, _) in estimators.iter().enumerate() {
                        out.push((failed(ei, f64::NAN, e.to_string()), None));
                    }
                    return (epsilon, seed, out);
                }
            };
            let input = EstimateInput {
                obs: &obs,
                frames: &frames,
                levels_override: cfg.levels,
            };
            for (ei, est) in estimators.iter().enumerate() {
                let params = match est.sweep(&input, &kappas) {
                    Ok(p) => sorted_params(p),
                    Err(e) => {
                        out.push((failed(ei, f64::NAN, e.to_string()), None));
                        continue;
                    }
                };
                for param in params {
                    let start = Instant::now();
                    let result = est.estimate(&input, param).and_then(|a| {
                        if a.values().iter().all(|v| v.is_finite()) {
                            Ok(a)
                        } else {
                            Err(Error::NonFinite(format!("{} estimate", est.name())))
                        }
                    });
                    let wall = if cfg.record_wall_time {
                        start.elapsed().as_secs_f64()
                    } else {
                        0.0
                    };
                    match result {
                        Ok(a) => out.push((
                            Candidate {
                                estimator: ei,
                                param,
                                column: None,
                                wall_time: wall,
                                failure: None,
                            },
                            Some(a),
                        )),
                        Err(e) => out.push((failed(ei, param, e.to_string()), None)),
                    }
                }
            }
            (epsilon, seed, out)
        })
        .collect();

    // Identical estimates (e.g. neighbouring κ keeping the same set) share a column.
    let mut columns: Vec<SvdCoeffs> = Vec::new();
    let mut seen: HashMap<Vec<u64>, usize> = HashMap::new();
    let cells: Vec<Cell> = computed
        .into_iter()
        .map(|(epsilon, seed, cands)| Cell {
            epsilon,
            seed,
            candidates: cands
                .into_iter()
                .map(|(mut c, a)| {
                    if let Some(a) = a {
                        let key: Vec<u64> = a.values().iter().map(|v| v.to_bits()).collect();
                        let next = columns.len();
                        let col = *seen.entry(key).or_insert(next);
                        if col == next {
                            columns.push(a);
                        }
                        c.column = Some(col);
                    }
                    c
                })
                .collect(),
        })
        .collect();

    let errors = score_columns(&truth, &columns, cfg.k_max, &cfg.norms)?;
    let (rows, failures, selections) = assemble_rows(cfg, &estimators, &cells, &errors, &columns);
    Ok(Experiment {
        rows,
        failures,
        truth,
        selections,
    })
}

fn failed(estimator: usize, param: f64, msg: String) -> Candidate {
    Candidate {
        estimator,
        param,
        column: None,
        wall_time: 0.0,
        failure: Some(msg),
    }
}

/// `errors[col * norms.len() + q]` for every column and norm.
fn score_columns(
    truth: &ReconstructedImage,
    columns: &[SvdCoeffs],
    k_max: usize,
    norms: &[f64],
) -> Result<Vec<f64>> {
    let n = truth.n();
    let sums: Vec<PowerSum> = norms.iter().map(|&p| PowerSum::new(p)).collect();
    let mut matrix = Array2::<f64>::zeros((index_count(k_max), columns.len()));
    for (c, a) in columns.iter().enumerate() {
        for (r, v) in a.values().iter().enumerate() {
            matrix[[r, c]] = *v;
        }
    }
    let truth_values = truth.values();
    let partials = evaluate_blocks(n, k_max, &matrix, |block| {
        let mut acc = vec![0.0; columns.len() * sums.len()];
        for (row, &idx) in block.pixels.iter().enumerate() {
            let t = truth_values[idx];
            for (c, v) in block.values.row(row).iter().enumerate() {
                let d = (v - t).abs();
                for (q, s) in sums.iter().enumerate() {
                    let slot = &mut acc[c * sums.len() + q];
                    *slot = s.add(*slot, d);
                }
            }
        }
        acc
    })?;
    let mut total = vec![0.0; columns.len() * sums.len()];
    for part in partials {
        for (i, v) in part.into_iter().enumerate() {
            total[i] = sums[i % sums.len()].combine(total[i], v);
        }
    }
    let area = pixel_area(n);
    Ok(total
        .iter()
        .enumerate()
        .map(|(i, acc)| sums[i % sums.len()].finish(*acc, area))
        .collect())
}

fn assemble_rows(
    cfg: &ExperimentConfig,
    estimators: &[&dyn crate::estimators::Estimator],
    cells: &[Cell],
    errors: &[f64],
    columns: &[SvdCoeffs],
) -> (Vec<ResultRow>, Vec<String>, Vec<Selection>) {
    let nn = cfg.norms.len();
    let first_seed = cfg.seeds[0];
    let image_norm = cfg.norms.iter().position(|p| *p == 2.0).unwrap_or(0);
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let mut selections = Vec::new();
    for cell in cells {
        for c in cell.candidates.iter().filter(|c| c.failure.is_some()) {
            failures.push(format!(
                "{} ε={} seed={} param={}: {}",
                estimators[c.estimator].name(),
                cell.epsilon,
                cell.seed,
                c.param,
                c.failure.as_deref().unwrap_or_default()
            ));
        }
        for (ei, est) in estimators.iter().enumerate() {
            let cands: Vec<&Candidate> = cell
                .candidates
                .iter()
                .filter(|c| c.estimator == ei)
                .collect();
            let error_of =
                |c: &Candidate, q: usize| c.column.map_or(f64::NAN, |col| errors[col * nn + q]);
            let row = |name: String, p: f64, kappa: f64, error: f64, wall_time: f64| ResultRow {
                estimator: name,
                p,
                epsilon: cell.epsilon,
                kappa,
                seed: cell.seed,
                error,
                wall_time,
            };
            if est.tuning() == Tuning::Kappa {
                for &kappa in &cfg.kappas {
                    let c = cands.iter().find(|c| c.param == kappa);
                    for (q, &p) in cfg.norms.iter().enumerate() {
                        let (err, wall) =
                            c.map_or((f64::NAN, 0.0), |c| (error_of(c, q), c.wall_time));
                        rows.push(row(est.name().to_string(), p, kappa, err, wall));
                    }
                    if cell.seed == first_seed {
                        if let Some(col) = c.and_then(|c| c.column) {
                            selections.push(Selection {
                                label: format!("{}_k{}", est.name(), kappa),
                                epsilon: cell.epsilon,
                                seed: cell.seed,
                                alpha: columns[col].clone(),
                            });
                        }
                    }
                }
            }
            for (q, &p) in cfg.norms.iter().enumerate() {
                // first minimum in ascending parameter order
                let best = cands.iter().filter(|c| error_of(c, q).is_finite()).fold(
                    None::<&&Candidate>,
                    |best, c| match best {
                        Some(b) if error_of(b, q) <= error_of(c, q) => Some(b),
                        _ => Some(c),
                    },
                );
                let (param, err, wall) = best.map_or((f64::NAN, f64::NAN, 0.0), |c| {
                    (c.param, error_of(c, q), c.wall_time)
                });
                rows.push(row(
                    format!("{ORACLE_PREFIX}{}", est.name()),
                    p,
                    param,
                    err,
                    wall,
                ));
                if q == image_norm && cell.seed == first_seed {
                    if let Some(col) = best.and_then(|c| c.column) {
                        selections.push(Selection {
                            label: format!("{ORACLE_PREFIX}{}", est.name()),
                            epsilon: cell.epsilon,
                            seed: cell.seed,
                            alpha: columns[col].clone(),
                        });
                    }
                }
            }
        }
    }
    rows.sort_by(ResultRow::sort_key_cmp);
    (rows, failures, selections)
}

/// Number of rows a successful run produces.
pub fn expected_row_count(cfg: &ExperimentConfig, registry: &Registry) -> Result<usize> {
    let per_cell: usize = cfg
        .estimators
        .iter()
        .map(|name| {
            registry.get(name).map(|e| match e.tuning() {
                Tuning::Kappa => cfg.kappas.len() + 1,
                Tuning::Scale => 1,
            })
        })
        .sum::<Result<usize>>()?;
    Ok(per_cell * cfg.epsilons.len() * cfg.seeds.len() * cfg.norms.len())
}

/// Writes `truth.pgm` and one PGM per selected estimate into `dir`.
pub fn emit_images(exp: &Experiment, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    exp.truth.write_pgm(&dir.join("truth.pgm"))?;
    let n = exp.truth.n();
    for sel in &exp.selections {
        let img = reconstruct(&sel.alpha, n)?;
        let name = format!("{}_eps{}_seed{}.pgm", sel.label, sel.epsilon, sel.seed);
        img.write_pgm(&dir.join(name))?;
    }
    Ok(())
}
