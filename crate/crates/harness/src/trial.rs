//! Per-trial scene construction and seed fan-out.
//!
//! Trial `t` of a run with master seed `s` uses
//! `derive(derive(s, TRIALS), t)`; everything random inside the trial
//! (DoAs, gains, sources, noise, sketches) is keyed off that one value
//! through the library's own stream labels.

use rmusic_core::array_sim::{generate_snapshots, ArrayGeometry, Scene};
use rmusic_core::pipeline::PipelineOptions;
use rmusic_core::seed;
use rmusic_core::sketching::SketchOperators;
use rmusic_core::subspace::{sample_covariance, CovarianceMatrix};

use crate::config::ExperimentConfig;
use crate::error::Result;

pub const TRIALS: u64 = 0x1001;

pub fn trial_seed(master: u64, trial: u64) -> u64 {
    seed::derive(seed::derive(master, TRIALS), trial)
}

/// Sorted ground-truth DoAs: the configured list, or a fresh preset draw.
pub fn trial_doas(cfg: &ExperimentConfig, seed: u64) -> Result<Vec<f64>> {
    let s = &cfg.scene;
    let mut d = match &s.doas_deg {
        Some(d) => d.clone(),
        None => s.preset.draw(s.num_targets, s.min_separation_deg, seed)?,
    };
    d.sort_by(f64::total_cmp);
    Ok(d)
}

pub fn geometry(cfg: &ExperimentConfig, m: usize) -> Result<ArrayGeometry> {
    Ok(ArrayGeometry::new(m, cfg.scene.spacing_ratio)?)
}

pub fn scene(cfg: &ExperimentConfig, m: usize, n: usize, doas: &[f64], snr_db: f64, seed: u64) -> Result<Scene> {
    Ok(Scene::with_default_gains(doas, geometry(cfg, m)?, snr_db, n, seed)?)
}

/// Sample covariance of one synthesized snapshot block.
pub fn covariance(
    cfg: &ExperimentConfig,
    m: usize,
    n: usize,
    doas: &[f64],
    snr_db: f64,
    seed: u64,
) -> Result<CovarianceMatrix> {
    let sc = scene(cfg, m, n, doas, snr_db, seed)?;
    Ok(sample_covariance(&generate_snapshots(&sc, seed)?)?)
}

/// Estimator options for rank `k`; with `sketch.reuse` the R-MUSIC
/// operators are drawn here rather than inside each call.
pub fn pipeline_options(cfg: &ExperimentConfig, m: usize, k: usize, seed: u64) -> Result<PipelineOptions> {
    let sketch = cfg.sketch_for(k, seed);
    let operators = if cfg.sketch.reuse {
        sketch.validate_for(m, k)?;
        Some(SketchOperators::draw(&sketch, m)?)
    } else {
        None
    };
    Ok(PipelineOptions {
        sketch,
        operators,
        propagator_kernel: cfg.estimators.propagator_kernel,
        loading: cfg.estimators.loading,
    })
}
