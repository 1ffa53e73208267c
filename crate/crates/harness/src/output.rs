//! Output directory, `meta.txt` and shared CSV helpers.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use crate::config::ExperimentConfig;
use crate::error::Result;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn prepare_dir(dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    Ok(dir.to_path_buf())
}

pub fn host_description() -> String {
    let threads = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    format!("{}-{}, {threads} hardware threads", std::env::consts::OS, std::env::consts::ARCH)
}

/// Writes `meta.txt`: version, seed, host, wall times, then the resolved
/// config.
pub fn write_meta(dir: &Path, cfg: &ExperimentConfig, timings: &[(String, Duration)]) -> Result<()> {
    let mut s = String::new();
    let _ = writeln!(s, "artifact: rmusic-harness {VERSION}");
    let _ = writeln!(s, "kind: {}", cfg.experiment.kind);
    let _ = writeln!(s, "seed: {}", cfg.experiment.seed);
    let _ = writeln!(s, "host: {}", host_description());
    let _ = writeln!(s, "rayon threads: {}", rayon::current_num_threads());
    for (label, d) in timings {
        let _ = writeln!(s, "time {label}: {:.6} s", d.as_secs_f64());
    }
    let _ = writeln!(s, "\n# resolved config\n{}", cfg.to_toml());
    fs::write(dir.join("meta.txt"), s)?;
    Ok(())
}

/// Shortest round-trip text for a float; empty for `None`.
pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:e}")).unwrap_or_default()
}

pub fn fmt_f(x: f64) -> String {
    format!("{x:e}")
}

/// Nearest-rank quantile of unsorted data; `None` when empty.
pub fn quantile(values: &[f64], q: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let rank = ((q * v.len() as f64).ceil() as usize).clamp(1, v.len());
    Some(v[rank - 1])
}
