//! Subspace-stage timing sweeps over `M` or `K`.
//!
//! Each point synthesizes one covariance (not timed), runs `warmup` untimed
//! calls and then `repetitions` timed calls of the estimator's subspace
//! stage, and records the median. When the warm-up call projects the timed
//! runs past `budget_s`, the point and every later point of that method are
//! skipped with a reason. `timing.csv` columns:
//! `method,m,k,n,elapsed_s,repetitions,seed,status,skip_reason`.

use std::path::Path;
use std::time::Duration;

use rmusic_core::pipeline::time_subspace_stage;
use rmusic_core::subspace::Method;

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::{HarnessError, Result};
use crate::output::fmt_opt;
use crate::trial;

#[derive(Debug, Clone, PartialEq)]
pub struct TimingRecord {
    pub method: Method,
    pub m: usize,
    pub k: usize,
    pub n: usize,
    /// Median seconds; `None` when skipped.
    pub elapsed_s: Option<f64>,
    pub repetitions: usize,
    pub seed: u64,
    pub skip_reason: Option<String>,
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 { values[n / 2] } else { 0.5 * (values[n / 2 - 1] + values[n / 2]) }
}

/// `(M, K)` points of the configured sweep.
pub fn sweep_points(cfg: &ExperimentConfig) -> Result<Vec<(usize, usize)>> {
    let t = &cfg.timing;
    match cfg.experiment.kind {
        ExperimentKind::TimingVsM => Ok(t.m_values.iter().map(|&m| (m, t.fixed_k)).collect()),
        ExperimentKind::TimingVsK => Ok(t.k_values.iter().map(|&k| (t.fixed_m, k)).collect()),
        other => Err(HarnessError::Config(format!("experiment.kind: {other} is not a timing sweep"))),
    }
}

/// `K` DoAs evenly spaced over the preset range.
pub fn spread_doas(cfg: &ExperimentConfig, k: usize) -> Vec<f64> {
    let (lo, hi) = cfg.scene.preset.range_deg();
    (0..k).map(|i| lo + (i as f64 + 0.5) * (hi - lo) / k as f64).collect()
}

/// Times one method at one point; the inner `Err` is a budget skip reason.
fn time_point(
    cfg: &ExperimentConfig,
    method: Method,
    m: usize,
    k: usize,
    seed: u64,
) -> Result<std::result::Result<f64, String>> {
    let n = m;
    let doas = spread_doas(cfg, k);
    let r = trial::covariance(cfg, m, n, &doas, cfg.scene.snr_db, seed)?;
    let opts = trial::pipeline_options(cfg, m, k, seed)?;
    if method == Method::RMusic {
        opts.sketch.validate_for(m, k)?;
    }
    let t = &cfg.timing;
    let mut first = Duration::ZERO;
    for i in 0..t.warmup.max(1) {
        let d = time_subspace_stage(method, &r, k, &opts)?;
        if i == 0 {
            first = d;
        }
    }
    let projected = first.as_secs_f64() * t.repetitions as f64;
    if projected > t.budget_s {
        return Ok(Err(format!("projected {projected:.1} s exceeds budget {} s", t.budget_s)));
    }
    let mut times = (0..t.repetitions)
        .map(|_| time_subspace_stage(method, &r, k, &opts).map(|d| d.as_secs_f64()))
        .collect::<rmusic_core::Result<Vec<f64>>>()?;
    Ok(Ok(median(&mut times)))
}

pub fn run_timing_sweep(cfg: &ExperimentConfig) -> Result<Vec<TimingRecord>> {
    let points = sweep_points(cfg)?;
    let mut out = Vec::new();
    for method in cfg.methods() {
        let mut over_budget: Option<String> = None;
        for &(m, k) in &points {
            let seed = trial::trial_seed(cfg.experiment.seed, (m * 1000 + k) as u64);
            let res = match &over_budget {
                Some(_) => Err("skipped after an earlier point exceeded the budget".to_string()),
                None => time_point(cfg, method, m, k, seed)?,
            };
            if let Err(reason) = &res {
                over_budget.get_or_insert_with(|| reason.clone());
            }
            out.push(TimingRecord {
                method,
                m,
                k,
                n: m,
                elapsed_s: res.as_ref().ok().copied(),
                repetitions: cfg.timing.repetitions,
                seed,
                skip_reason: res.err(),
            });
        }
    }
    Ok(out)
}

pub fn write_timing_csv(records: &[TimingRecord], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["method", "m", "k", "n", "elapsed_s", "repetitions", "seed", "status", "skip_reason"])?;
    for r in records {
        w.write_record([
            r.method.tag().to_string(),
            r.m.to_string(),
            r.k.to_string(),
            r.n.to_string(),
            fmt_opt(r.elapsed_s),
            r.repetitions.to_string(),
            r.seed.to_string(),
            if r.skip_reason.is_some() { "skipped" } else { "ok" }.to_string(),
            r.skip_reason.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}
