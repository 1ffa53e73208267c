//! Snapshot dump.
//!
//! `snapshots.csv`: `element,snapshot,re,im`, one row per entry of `Y`.
//! `scene.csv`: `target,doa_deg,gain_re,gain_im,snr_db,noise_variance`.

use std::path::Path;

use rmusic_core::array_sim::{generate_snapshots, Scene};
use rmusic_core::numerics::ComplexMatrix;

use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::output::fmt_f;
use crate::trial;

pub fn simulate(cfg: &ExperimentConfig) -> Result<(Scene, ComplexMatrix)> {
    let seed = cfg.experiment.seed;
    let doas = trial::trial_doas(cfg, seed)?;
    let scene = trial::scene(cfg, cfg.num_elements(), cfg.num_snapshots(), &doas, cfg.scene.snr_db, seed)?;
    let y = generate_snapshots(&scene, seed)?;
    Ok((scene, y))
}

pub fn write_simulation(scene: &Scene, y: &ComplexMatrix, dir: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(dir.join("snapshots.csv"))?;
    w.write_record(["element", "snapshot", "re", "im"])?;
    for j in 0..y.cols() {
        for i in 0..y.rows() {
            let z = y.get(i, j);
            w.write_record([i.to_string(), j.to_string(), fmt_f(z.re), fmt_f(z.im)])?;
        }
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join("scene.csv"))?;
    w.write_record(["target", "doa_deg", "gain_re", "gain_im", "snr_db", "noise_variance"])?;
    for (i, t) in scene.targets.iter().enumerate() {
        w.write_record([
            i.to_string(),
            fmt_f(t.doa_deg),
            fmt_f(t.gain.re),
            fmt_f(t.gain.im),
            fmt_f(scene.snr_db),
            fmt_f(scene.noise_variance()),
        ])?;
    }
    w.flush()?;
    Ok(())
}
