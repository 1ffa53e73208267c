//! RMSE against SNR by Monte Carlo.
//!
//! Trial `t` draws its DoAs, gains and noise from `trial_seed(master, t)`,
//! so every SNR point sees the same scenes. Missed peaks are charged the
//! grid half-range as error, and a trial whose estimator fails is charged
//! that for every target. `rmse.csv` columns:
//! `method,snr_db,trials,rmse_deg,shortfall,failures`.

use std::path::Path;

use rayon::prelude::*;
use rmusic_core::pipeline::run_method;
use rmusic_core::spectrum::doa_squared_errors;
use rmusic_core::subspace::Method;

use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::output::fmt_f;
use crate::trial;

#[derive(Debug, Clone, PartialEq)]
pub struct RmseRecord {
    pub method: Method,
    pub snr_db: f64,
    pub trials: usize,
    pub rmse_deg: f64,
    /// Missed peaks summed over trials, failed trials included.
    pub shortfall: usize,
    /// Trials in which the estimator returned an error.
    pub failures: usize,
}

#[derive(Debug, Clone)]
struct TrialOutcome {
    sq_errors: f64,
    shortfall: usize,
    failed: bool,
}

fn run_trial(cfg: &ExperimentConfig, snr_db: f64, t: u64, methods: &[Method]) -> Result<Vec<TrialOutcome>> {
    let seed = trial::trial_seed(cfg.experiment.seed, t);
    let m = cfg.num_elements();
    let grid = cfg.grid()?;
    let penalty = grid.half_range();
    let truth = trial::trial_doas(cfg, seed)?;
    let k = truth.len();
    let r = trial::covariance(cfg, m, cfg.num_snapshots(), &truth, snr_db, seed)?;
    let geom = trial::geometry(cfg, m)?;
    let opts = trial::pipeline_options(cfg, m, k, seed)?;
    methods
        .iter()
        .map(|&method| match run_method(method, &r, k, &geom, &grid, &opts) {
            Ok(o) => {
                let sq = doa_squared_errors(&o.doas.angles_deg, &truth, penalty)?;
                Ok(TrialOutcome { sq_errors: sq.iter().sum(), shortfall: o.doas.shortfall, failed: false })
            }
            Err(_) => Ok(TrialOutcome {
                sq_errors: k as f64 * penalty * penalty,
                shortfall: k,
                failed: true,
            }),
        })
        .collect()
}

/// One record per (method, SNR) in config order.
pub fn run_rmse_sweep(cfg: &ExperimentConfig) -> Result<Vec<RmseRecord>> {
    let methods = cfg.methods();
    let trials = cfg.experiment.trials;
    let k = cfg.scene.num_targets;
    let mut records = Vec::new();
    for &snr in &cfg.rmse.snr_db {
        let outcomes: Vec<Vec<TrialOutcome>> = (0..trials as u64)
            .into_par_iter()
            .map(|t| run_trial(cfg, snr, t, &methods))
            .collect::<Result<_>>()?;
        for (mi, &method) in methods.iter().enumerate() {
            let column = outcomes.iter().map(|o| &o[mi]);
            let total: f64 = column.clone().map(|o| o.sq_errors).sum();
            records.push(RmseRecord {
                method,
                snr_db: snr,
                trials,
                rmse_deg: (total / (trials * k) as f64).sqrt(),
                shortfall: column.clone().map(|o| o.shortfall).sum(),
                failures: column.filter(|o| o.failed).count(),
            });
        }
    }
    Ok(records)
}

pub fn write_rmse_csv(records: &[RmseRecord], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["method", "snr_db", "trials", "rmse_deg", "shortfall", "failures"])?;
    for r in records {
        w.write_record([
            r.method.tag().to_string(),
            fmt_f(r.snr_db),
            r.trials.to_string(),
            fmt_f(r.rmse_deg),
            r.shortfall.to_string(),
            r.failures.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
