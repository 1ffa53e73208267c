//! Command-line front end.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use crate::config::{ExperimentConfig, ExperimentKind, REFERENCE};
use crate::error::{HarnessError, Result};
use crate::{bound, demo, output, rmse, simulate, timing};

#[derive(Debug, Parser)]
#[command(
    name = "rmusic",
    version,
    about = "R-MUSIC direction-of-arrival experiments",
    after_help = REFERENCE
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML config file; `experiment.kind` must match the subcommand.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed, overriding `experiment.seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads for Monte Carlo trials (timing runs on one thread).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Sweep {
    M,
    K,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Pseudo-spectra of every method on one scene, plus a peak table.
    Demo,
    /// Subspace-stage timing over an M or K sweep.
    Bench {
        /// Sweep axis when no config file is given.
        #[arg(long, value_enum, default_value = "m")]
        sweep: Sweep,
    },
    /// DoA RMSE against SNR by Monte Carlo.
    Rmse,
    /// Sketched low-rank approximation residual against the best rank-K one.
    Bound,
    /// Dump one synthesized snapshot matrix.
    Simulate,
}

impl Command {
    fn accepts(&self, kind: ExperimentKind) -> bool {
        matches!(
            (self, kind),
            (Command::Demo, ExperimentKind::SpectrumDemo)
                | (Command::Bench { .. }, ExperimentKind::TimingVsM | ExperimentKind::TimingVsK)
                | (Command::Rmse, ExperimentKind::RmseVsSnr)
                | (Command::Bound, ExperimentKind::BoundCheck)
                | (Command::Simulate, ExperimentKind::Simulate)
        )
    }

    fn default_kind(&self) -> ExperimentKind {
        match self {
            Command::Demo => ExperimentKind::SpectrumDemo,
            Command::Bench { sweep: Sweep::M } => ExperimentKind::TimingVsM,
            Command::Bench { sweep: Sweep::K } => ExperimentKind::TimingVsK,
            Command::Rmse => ExperimentKind::RmseVsSnr,
            Command::Bound => ExperimentKind::BoundCheck,
            Command::Simulate => ExperimentKind::Simulate,
        }
    }
}

/// Loads, overrides and validates the config for `cli`.
pub fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let cfg = ExperimentConfig::load(path)?;
            if !cli.command.accepts(cfg.experiment.kind) {
                return Err(HarnessError::Config(format!(
                    "{}: experiment.kind = {} does not match this subcommand",
                    path.display(),
                    cfg.experiment.kind
                )));
            }
            cfg
        }
        None => ExperimentConfig::for_kind(cli.command.default_kind()),
    };
    if let Some(seed) = cli.seed {
        cfg.experiment.seed = seed;
    }
    cfg.resolve()
}

fn execute(cli: &Cli) -> Result<String> {
    let cfg = load_config(cli)?;
    let dir = output::prepare_dir(&cli.out)?;
    let start = Instant::now();
    let summary = match cfg.experiment.kind {
        ExperimentKind::SpectrumDemo => {
            let run = demo::run_spectrum_demo(&cfg, &dir)?;
            let failed = run.outputs.iter().filter(|(_, o)| o.is_err()).count();
            format!("{} spectra written, {failed} failed", run.outputs.len() - failed)
        }
        ExperimentKind::TimingVsM | ExperimentKind::TimingVsK => {
            let recs = timing::run_timing_sweep(&cfg)?;
            timing::write_timing_csv(&recs, &dir.join("timing.csv"))?;
            let skipped = recs.iter().filter(|r| r.skip_reason.is_some()).count();
            format!("{} timing rows, {skipped} skipped", recs.len())
        }
        ExperimentKind::RmseVsSnr => {
            let recs = rmse::run_rmse_sweep(&cfg)?;
            rmse::write_rmse_csv(&recs, &dir.join("rmse.csv"))?;
            format!("{} rmse rows", recs.len())
        }
        ExperimentKind::BoundCheck => {
            let recs = bound::run_bound_check(&cfg)?;
            bound::write_bound_csv(&recs, &dir)?;
            bound::summarize(&recs)
                .iter()
                .map(|s| {
                    format!("K={} {:?}: p95 {}", s.k, s.sizes, output::fmt_opt(s.p95))
                })
                .collect::<Vec<_>>()
                .join("; ")
        }
        ExperimentKind::Simulate => {
            let (scene, y) = simulate::simulate(&cfg)?;
            simulate::write_simulation(&scene, &y, &dir)?;
            format!("{}x{} snapshots", y.rows(), y.cols())
        }
    };
    output::write_meta(&dir, &cfg, &[("total".to_string(), start.elapsed())])?;
    Ok(format!("{}: {summary} -> {}", cfg.experiment.kind, display(&dir)))
}

fn display(p: &Path) -> String {
    p.display().to_string()
}

/// Parses `args` and runs the subcommand; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let threads = match (&cli.command, cli.threads) {
        (_, Some(0)) => {
            eprintln!("config error: --threads must be at least 1");
            return 1;
        }
        (_, Some(n)) => Some(n),
        (Command::Bench { .. }, None) => Some(1),
        _ => None,
    };
    let result = match threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| execute(&cli)),
            Err(e) => {
                eprintln!("error: thread pool: {e}");
                return 2;
            }
        },
        None => execute(&cli),
    };
    match result {
        Ok(line) => {
            println!("{line}");
            0
        }
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
