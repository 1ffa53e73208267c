//! Spectrum demo: one scene, one pseudo-spectrum per estimator and a peak
//! table.
//!
//! Files: `spectrum_<method>.csv` (`theta_deg,value`), `peaks.csv`
//! (`method,target,true_deg,estimate_deg,abs_error_deg`) and `status.csv`
//! (`method,status,peaks_found,shortfall,message`). A failing estimator is
//! recorded in `status.csv` and does not stop the others.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;
use std::time::Duration;

use rmusic_core::pipeline::{run_method, MethodOutput};
use rmusic_core::spectrum::format_angle;
use rmusic_core::subspace::Method;

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::{HarnessError, Result};
use crate::output::fmt_f;
use crate::trial;

#[derive(Debug)]
pub struct DemoRun {
    pub truth_deg: Vec<f64>,
    pub outputs: Vec<(Method, std::result::Result<MethodOutput, String>)>,
}

impl DemoRun {
    pub fn output(&self, method: Method) -> Option<&MethodOutput> {
        self.outputs.iter().find(|(m, _)| *m == method).and_then(|(_, o)| o.as_ref().ok())
    }

    pub fn subspace_time(&self) -> Duration {
        self.outputs.iter().filter_map(|(_, o)| o.as_ref().ok()).map(|o| o.elapsed).sum()
    }
}

/// Runs every configured method on the scene drawn from `seed`.
pub fn evaluate(cfg: &ExperimentConfig, seed: u64) -> Result<DemoRun> {
    let m = cfg.num_elements();
    let n = cfg.num_snapshots();
    let truth = trial::trial_doas(cfg, seed)?;
    let k = truth.len();
    let r = trial::covariance(cfg, m, n, &truth, cfg.scene.snr_db, seed)?;
    let geom = trial::geometry(cfg, m)?;
    let grid = cfg.grid()?;
    let opts = trial::pipeline_options(cfg, m, k, seed)?;
    let outputs = cfg
        .methods()
        .into_iter()
        .map(|method| {
            let out = run_method(method, &r, k, &geom, &grid, &opts).map_err(|e| e.to_string());
            (method, out)
        })
        .collect();
    Ok(DemoRun { truth_deg: truth, outputs })
}

/// Nearest estimated peak to each true angle, `None` when nothing was found.
pub fn nearest_estimates(estimates: &[f64], truth: &[f64]) -> Vec<Option<f64>> {
    truth
        .iter()
        .map(|t| {
            estimates
                .iter()
                .copied()
                .min_by(|a, b| (a - t).abs().total_cmp(&(b - t).abs()).then(a.total_cmp(b)))
        })
        .collect()
}

pub fn run_spectrum_demo(cfg: &ExperimentConfig, out: &Path) -> Result<DemoRun> {
    if cfg.experiment.kind != ExperimentKind::SpectrumDemo {
        return Err(HarnessError::Config(format!(
            "experiment.kind: expected spectrum-demo, got {}",
            cfg.experiment.kind
        )));
    }
    let run = evaluate(cfg, cfg.experiment.seed)?;
    write_demo(&run, out)?;
    Ok(run)
}

pub fn write_demo(run: &DemoRun, out: &Path) -> Result<()> {
    let mut peaks = csv::Writer::from_path(out.join("peaks.csv"))?;
    peaks.write_record(["method", "target", "true_deg", "estimate_deg", "abs_error_deg"])?;
    let mut status = csv::Writer::from_path(out.join("status.csv"))?;
    status.write_record(["method", "status", "peaks_found", "shortfall", "message"])?;

    for (method, res) in &run.outputs {
        match res {
            Ok(o) => {
                let file = File::create(out.join(format!("spectrum_{}.csv", method.tag())))?;
                o.spectrum.write_csv(BufWriter::new(file))?;
                let near = nearest_estimates(&o.doas.angles_deg, &run.truth_deg);
                for (i, (t, e)) in run.truth_deg.iter().zip(near).enumerate() {
                    peaks.write_record([
                        method.tag().to_string(),
                        i.to_string(),
                        format_angle(*t),
                        e.map(format_angle).unwrap_or_default(),
                        e.map(|e| fmt_f((e - t).abs())).unwrap_or_default(),
                    ])?;
                }
                status.write_record([
                    method.tag(),
                    "ok",
                    &o.doas.angles_deg.len().to_string(),
                    &o.doas.shortfall.to_string(),
                    "",
                ])?;
            }
            Err(msg) => {
                status.write_record([
                    method.tag(),
                    "failed",
                    "0",
                    &run.truth_deg.len().to_string(),
                    msg.as_str(),
                ])?;
            }
        }
    }
    peaks.flush()?;
    status.flush()?;
    Ok(())
}
