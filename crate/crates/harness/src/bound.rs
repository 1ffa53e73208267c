//! Low-rank approximation bound check.
//!
//! Builds `R = R_K + E` from a random unitary `Q`: `R_K` has `K` eigenvalues
//! uniform in `[1, 10]`, `E` has `M−K` eigenvalues uniform in `[0, 1]`
//! rescaled so `‖E‖_F = tail_ratio·‖R_K‖_F`. Then `‖R − R_K‖_F² = ‖E‖_F²`
//! exactly, and each seed reports `‖C·X̂ − R‖_F² / ‖R − R_K‖_F²`.
//!
//! `bound.csv`: `k,sizes,s,s1,s0,trial,best_residual,lra_residual,ratio,status`
//! with status `ok`, `exact` (ratio undefined because `R` is rank `K`) or
//! `failed`. `bound_summary.csv`: `k,sizes,count,median,p95,max`.

use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use rmusic_core::numerics::{qr_thin, ComplexMatrix};
use rmusic_core::seed;
use rmusic_core::subspace::{rank_k_svd_via_sketch, CovarianceMatrix};
use rmusic_core::Complex64;

use crate::config::{sketch_sizes, ExperimentConfig, SketchSizes};
use crate::error::Result;
use crate::output::{fmt_f, fmt_opt, quantile};
use crate::trial::trial_seed;

const MATRIX_STREAM: u64 = 0x1004;
/// Below this fraction of `‖R‖_F²` the tail counts as zero.
const EXACT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct BoundRecord {
    pub k: usize,
    pub sizes: SketchSizes,
    pub s: usize,
    pub s1: usize,
    pub s0: usize,
    pub trial: u64,
    pub best_residual: f64,
    pub lra_residual: Option<f64>,
    pub ratio: Option<f64>,
    pub status: &'static str,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundSummary {
    pub k: usize,
    pub sizes: SketchSizes,
    pub count: usize,
    pub median: Option<f64>,
    pub p95: Option<f64>,
    pub max: Option<f64>,
}

/// `R_K + E` and `‖E‖_F²`.
pub fn low_rank_plus_tail(m: usize, k: usize, tail_ratio: f64, seed: u64) -> Result<(CovarianceMatrix, f64)> {
    let mut rng = seed::rng(seed, MATRIX_STREAM);
    let g = ComplexMatrix::from_fn(m, m, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })?;
    let q = qr_thin(&g)?.q;
    let head: Vec<f64> = (0..k).map(|_| rng.random_range(1.0..=10.0)).collect();
    let tail: Vec<f64> = (k..m).map(|_| rng.random::<f64>()).collect();
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let scale = if norm(&tail) > 0.0 { tail_ratio * norm(&head) / norm(&tail) } else { 0.0 };
    let diag: Vec<f64> = head.into_iter().chain(tail.into_iter().map(|x| x * scale)).collect();
    let best = diag[k..].iter().map(|x| x * x).sum::<f64>();
    let r = q.matmul(&ComplexMatrix::from_diag(&diag)?)?.matmul(&q.adjoint())?;
    Ok((CovarianceMatrix::new(r)?, best))
}

fn one_trial(cfg: &ExperimentConfig, m: usize, k: usize, sizes: SketchSizes, t: u64) -> Result<BoundRecord> {
    let seed = trial_seed(cfg.experiment.seed, t);
    let sk = sketch_sizes(sizes, k, cfg.sketch.eta, &cfg.sketch).with_seed(seed);
    let (r, best) = low_rank_plus_tail(m, k, cfg.bound.tail_ratio, seed)?;
    let scale = r.matrix().frobenius_norm().powi(2);
    let mut rec = BoundRecord {
        k,
        sizes,
        s: sk.s,
        s1: sk.s1,
        s0: sk.s0,
        trial: t,
        best_residual: best,
        lra_residual: None,
        ratio: None,
        status: "failed",
    };
    if let Ok((_, residual)) = rank_k_svd_via_sketch(&r, &sk, k) {
        rec.lra_residual = Some(residual);
        if best <= EXACT_TOL * scale {
            rec.status = "exact";
        } else {
            rec.ratio = Some(residual / best);
            rec.status = "ok";
        }
    }
    Ok(rec)
}

pub fn run_bound_check(cfg: &ExperimentConfig) -> Result<Vec<BoundRecord>> {
    let m = cfg.num_elements();
    let mut out = Vec::new();
    for &k in &cfg.bound.k_values {
        for &sizes in &cfg.bound.sizes {
            sketch_sizes(sizes, k, cfg.sketch.eta, &cfg.sketch).validate_for(m, k)?;
            let recs: Vec<BoundRecord> = (0..cfg.experiment.trials as u64)
                .into_par_iter()
                .map(|t| one_trial(cfg, m, k, sizes, t))
                .collect::<Result<_>>()?;
            out.extend(recs);
        }
    }
    Ok(out)
}

pub fn summarize(records: &[BoundRecord]) -> Vec<BoundSummary> {
    let mut keys: Vec<(usize, SketchSizes)> = Vec::new();
    for r in records {
        if !keys.contains(&(r.k, r.sizes)) {
            keys.push((r.k, r.sizes));
        }
    }
    keys.into_iter()
        .map(|(k, sizes)| {
            let ratios: Vec<f64> =
                records.iter().filter(|r| r.k == k && r.sizes == sizes).filter_map(|r| r.ratio).collect();
            BoundSummary {
                k,
                sizes,
                count: ratios.len(),
                median: quantile(&ratios, 0.5),
                p95: quantile(&ratios, 0.95),
                max: quantile(&ratios, 1.0),
            }
        })
        .collect()
}

fn sizes_tag(s: SketchSizes) -> &'static str {
    match s {
        SketchSizes::Heuristic => "heuristic",
        SketchSizes::Theorem => "theorem",
    }
}

pub fn write_bound_csv(records: &[BoundRecord], dir: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(dir.join("bound.csv"))?;
    w.write_record([
        "k", "sizes", "s", "s1", "s0", "trial", "best_residual", "lra_residual", "ratio", "status",
    ])?;
    for r in records {
        w.write_record([
            r.k.to_string(),
            sizes_tag(r.sizes).to_string(),
            r.s.to_string(),
            r.s1.to_string(),
            r.s0.to_string(),
            r.trial.to_string(),
            fmt_f(r.best_residual),
            fmt_opt(r.lra_residual),
            fmt_opt(r.ratio),
            r.status.to_string(),
        ])?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join("bound_summary.csv"))?;
    w.write_record(["k", "sizes", "count", "median", "p95", "max"])?;
    for s in summarize(records) {
        w.write_record([
            s.k.to_string(),
            sizes_tag(s.sizes).to_string(),
            s.count.to_string(),
            fmt_opt(s.median),
            fmt_opt(s.p95),
            fmt_opt(s.max),
        ])?;
    }
    w.flush()?;
    Ok(())
}
