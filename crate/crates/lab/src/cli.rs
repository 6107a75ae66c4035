//! Subcommands and their output files.
//!
//! Every subcommand writes into `--out` (default `.`) and records what it
//! wrote in `manifest_<command>.json`. Output files are a pure function of
//! the configuration and seed; only the manifest's wall time varies.
//!
//! | command       | files                                   |
//! |---------------|-----------------------------------------|
//! | `sample`      | `realization_<replica>.json`            |
//! | `defect`      | `defect_<replica>.csv`                  |
//! | `verify`      | `verify_report.json`                    |
//! | `sweep`       | `sweep.csv`                             |
//! | `covariogram` | `covariogram.csv`                       |
//!
//! Exit status: 0 ok, 1 configuration, IO or statistics error, 2 window
//! exhausted, 3 lambda too small, and `3 + failures` when the verification
//! battery fails.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use rayon::ThreadPool;
use vacancy_core::coupling::windowed_realization;
use vacancy_core::vacancy::trace_defect;

use crate::config::Config;
use crate::io::{self, Manifest};
use crate::sim;
use crate::stats::Covariogram;
use crate::verify::{self, BatteryReport};
use crate::Error;

#[derive(Debug, Parser)]
#[command(name = "vacancy-lab", version, about = "Coupled Poisson line / Boolean disc simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides `run.seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Worker threads; falls back to VACANCY_LAB_THREADS.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Comma-separated subset of the verification battery.
    #[arg(long, global = true, value_delimiter = ',')]
    pub tests: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Sample coupled realizations.
    Sample,
    /// Defect traces, one CSV per replica.
    Defect,
    /// Run the verification battery.
    Verify,
    /// Convergence-rate sweep over a grid of intensities.
    Sweep,
    /// Covariogram of the scaled defect.
    Covariogram,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Sample => "sample",
            Command::Defect => "defect",
            Command::Verify => "verify",
            Command::Sweep => "sweep",
            Command::Covariogram => "covariogram",
        }
    }
}

/// Loads the configuration and applies command-line overrides.
pub fn load_config(cli: &Cli) -> Result<Config, Error> {
    let mut cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.run.seed = seed;
    }
    if !cli.tests.is_empty() {
        cfg.verify.tests = cli.tests.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Runs one invocation and returns its exit status.
pub fn execute(cli: &Cli) -> Result<u8, Error> {
    let cfg = load_config(cli)?;
    let pool = sim::pool(sim::thread_count(cli.threads)?)?;
    let start = Instant::now();
    let mut manifest = Manifest::new(cli.command.name(), &cfg);
    let result = match cli.command {
        Command::Sample => cmd_sample(&cfg, &pool, &cli.out, &mut manifest),
        Command::Defect => cmd_defect(&cfg, &pool, &cli.out, &mut manifest),
        Command::Verify => cmd_verify(&cfg, &pool, &cli.out, &mut manifest).map(|r| r.failures),
        Command::Sweep => cmd_sweep(&cfg, &pool, &cli.out, &mut manifest).map(|_| 0),
        Command::Covariogram => cmd_covariogram(&cfg, &pool, &cli.out, &mut manifest).map(|_| 0),
    };
    manifest.wall_time_s = start.elapsed().as_secs_f64();
    if let Err(e) = &result {
        manifest.summary.insert("error".into(), e.to_string().into());
    }
    manifest.write(&cli.out)?;
    let failures = result?;
    Ok(if failures == 0 { 0 } else { (3 + failures).min(255) as u8 })
}

fn emit(out: &Path, name: &str, bytes: &[u8], manifest: &mut Manifest) -> Result<(), Error> {
    io::write_file(&out.join(name), bytes)?;
    manifest.outputs.push(name.into());
    Ok(())
}

/// Writes one realization per replica. Returns 0, the count of failures
/// being reported through the error instead.
pub fn cmd_sample(cfg: &Config, pool: &ThreadPool, out: &Path, manifest: &mut Manifest) -> Result<usize, Error> {
    let rc = cfg.run_config()?;
    let results = sim::par_map(pool, rc.replicas as u64, |k| windowed_realization(&rc, k));
    let mut certified = Vec::new();
    let mut first_err = None;
    for (k, r) in results.into_iter().enumerate() {
        match r {
            Ok(r) => {
                emit(out, &format!("realization_{k}.json"), &io::realization_json(&r), manifest)?;
                certified.push(r.certified);
            }
            Err(e) => {
                certified.push(false);
                first_err.get_or_insert(Error::WindowExhausted { replica: k as u64, message: e.to_string() });
            }
        }
    }
    manifest.summary.insert("certified".into(), certified.into());
    first_err.map_or(Ok(0), Err)
}

/// Writes one defect trace per replica; any sentinel (undefined `d_bar`)
/// is reported after all traces are on disk.
pub fn cmd_defect(cfg: &Config, pool: &ThreadPool, out: &Path, manifest: &mut Manifest) -> Result<usize, Error> {
    let rc = cfg.run_config()?;
    let results = sim::par_map(pool, rc.replicas as u64, |k| {
        windowed_realization(&rc, k).map(|r| trace_defect(&r, rc.grid_size))
    });
    let mut exhausted = None;
    let mut sentinels = Vec::new();
    for (k, r) in results.into_iter().enumerate() {
        match r {
            Ok(trace) => {
                emit(out, &format!("defect_{k}.csv"), &io::trace_csv(&trace), manifest)?;
                if trace.has_sentinel() {
                    sentinels.push(k);
                }
            }
            Err(e) => {
                exhausted.get_or_insert(Error::WindowExhausted { replica: k as u64, message: e.to_string() });
            }
        }
    }
    if let Some(e) = exhausted {
        return Err(e);
    }
    if !sentinels.is_empty() {
        return Err(Error::LambdaTooSmall(format!(
            "d_bar undefined on the grid for replicas {sentinels:?} at lambda_sq {}",
            rc.lambda_sq
        )));
    }
    Ok(0)
}

pub fn cmd_verify(cfg: &Config, pool: &ThreadPool, out: &Path, manifest: &mut Manifest) -> Result<BatteryReport, Error> {
    let report = verify::run_battery(cfg, pool, &cfg.verify.tests)?;
    emit(out, "verify_report.json", &io::to_json(&report), manifest)?;
    for t in &report.tests {
        eprintln!("{} {} (seed {})", if t.pass { "PASS" } else { "FAIL" }, t.name, t.seed);
    }
    manifest.summary.insert("failures".into(), report.failures.into());
    manifest.summary.insert(
        "test_seeds".into(),
        report.tests.iter().map(|t| (t.name.clone(), serde_json::Value::from(t.seed))).collect(),
    );
    Ok(report)
}

pub fn cmd_sweep(cfg: &Config, pool: &ThreadPool, out: &Path, manifest: &mut Manifest) -> Result<sim::Sweep, Error> {
    if cfg.sweep.lambda_sq.len() < 3 {
        return Err(Error::Config("sweep.lambda_sq needs at least 3 values".into()));
    }
    let rc = cfg.run_config()?;
    let sw = sim::sweep(pool, &rc, &cfg.sweep.lambda_sq, cfg.sweep.replicas);
    emit(out, "sweep.csv", &io::csv_bytes(&sim::Sweep::HEADER, &sw.csv_rows()), manifest)?;
    Ok(sw)
}

pub fn cmd_covariogram(cfg: &Config, pool: &ThreadPool, out: &Path, manifest: &mut Manifest) -> Result<Covariogram, Error> {
    let cc = &cfg.covariogram;
    if cc.samples < 1000 {
        return Err(Error::Config("covariogram.samples must be at least 1000".into()));
    }
    let rc = cfg.run_config()?;
    let c = sim::covariogram(pool, &rc, cc.samples, cc.grid_size, cc.trim)?;
    emit(out, "covariogram.csv", &io::csv_bytes(&Covariogram::HEADER, &c.rows()), manifest)?;
    Ok(c)
}
