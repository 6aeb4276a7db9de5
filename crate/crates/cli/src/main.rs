use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use needlet_radon::estimators::Registry;
use needlet_radon::harness::{
    emit_csv, emit_images, run_experiment, selftest, with_threads, ExperimentConfig,
};
use needlet_radon::sim::{reference_coeffs, Phantom};
use needlet_radon::Error;

const THREADS_VAR: &str = "NEEDLET_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "needlet-radon",
    version,
    about = "Needlet thresholding for noisy Radon data on the disk"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the estimator comparison described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory for results.csv and images/.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Worker threads; overrides NEEDLET_THREADS.
        #[arg(long)]
        threads: Option<usize>,
        /// Skip the PGM images.
        #[arg(long)]
        no_images: bool,
    },
    /// Rasterize a phantom to an 8-bit PGM.
    RenderPhantom {
        #[arg(long)]
        name: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the SVD coefficients of a phantom as CSV.
    DumpCoeffs {
        #[arg(long)]
        phantom: String,
        #[arg(long)]
        kmax: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the built-in invariant checks.
    Selftest,
}

/// A run that finished but hit numerical failures in some cells.
#[derive(Debug)]
struct NumericalFailure(String);

impl std::fmt::Display for NumericalFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for NumericalFailure {}

fn thread_count(flag: Option<usize>) -> Result<usize> {
    if let Some(k) = flag {
        return Ok(k);
    }
    match std::env::var(THREADS_VAR) {
        Ok(v) => v.trim().parse().map_err(|_| {
            Error::Config {
                line: 0,
                msg: format!("{THREADS_VAR}={v} is not a thread count"),
            }
            .into()
        }),
        Err(_) => Ok(0),
    }
}

fn run(config: &Path, out: &Path, threads: Option<usize>, images: bool) -> Result<()> {
    let cfg =
        ExperimentConfig::load(config).with_context(|| format!("loading {}", config.display()))?;
    let threads = thread_count(threads)?;
    let registry = Registry::default();
    let exp = with_threads(threads, || run_experiment(&cfg, &registry))??;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let csv = out.join("results.csv");
    emit_csv(&exp.rows, &csv)?;
    if images {
        emit_images(&exp, &out.join("images"))?;
    }
    println!("wrote {} rows to {}", exp.rows.len(), csv.display());
    if !exp.failures.is_empty() {
        for f in &exp.failures {
            eprintln!("failed: {f}");
        }
        return Err(
            NumericalFailure(format!("{} estimator calls failed", exp.failures.len())).into(),
        );
    }
    Ok(())
}

fn render_phantom(name: &str, n: usize, out: &Path) -> Result<()> {
    let img = Phantom::by_name(name)?.rasterize(n)?;
    img.write_pgm(out)?;
    Ok(())
}

fn dump_coeffs(phantom: &str, k_max: usize, out: &Path) -> Result<()> {
    let coeffs = reference_coeffs(&Phantom::by_name(phantom)?, k_max)?;
    std::fs::write(out, coeffs.to_csv()).map_err(|e| Error::io(out, e))?;
    Ok(())
}

fn run_selftest() -> Result<()> {
    let checks = selftest();
    for c in &checks {
        println!(
            "{} {}: {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    if failed > 0 {
        return Err(NumericalFailure(format!("{failed} self-test checks failed")).into());
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<NumericalFailure>().is_some() {
        return 3;
    }
    match err.downcast_ref::<Error>() {
        Some(e) if e.is_config() || matches!(e, Error::Io { .. }) => 2,
        Some(_) => 3,
        None => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run {
            config,
            out,
            threads,
            no_images,
        } => run(config, out, *threads, !no_images),
        Command::RenderPhantom { name, n, out } => render_phantom(name, *n, out),
        Command::DumpCoeffs { phantom, kmax, out } => dump_coeffs(phantom, *kmax, out),
        Command::Selftest => run_selftest(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        let numeric: anyhow::Error = NumericalFailure("2 estimator calls failed".into()).into();
        assert_eq!(exit_code(&numeric), 3);
        assert_eq!(exit_code(&Error::NonFinite("alpha".into()).into()), 3);
        assert_eq!(exit_code(&Error::Convergence("nodes".into()).into()), 3);
        let cfg = Error::Config {
            line: 3,
            msg: "bad".into(),
        };
        assert_eq!(exit_code(&cfg.into()), 2);
        let io = Error::io("x.cfg", std::io::Error::from(std::io::ErrorKind::NotFound));
        assert_eq!(
            exit_code(&anyhow::Error::from(io).context("loading x.cfg")),
            2
        );
    }
}
