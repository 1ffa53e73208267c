//! Experiment configuration.
//!
//! Configs are TOML. Only `experiment.kind` is required; every other field
//! has a default, and the fully resolved config is echoed into each run's
//! `meta.txt`. See [`REFERENCE`] for the schema.

use std::fmt;
use std::path::Path;

use rmusic_core::array_sim::{ArrayGeometry, DoaPreset};
use rmusic_core::pipeline::PropagatorKernel;
use rmusic_core::sketching::SketchConfig;
use rmusic_core::spectrum::AngularGrid;
use rmusic_core::subspace::Method;
use serde::{Deserialize, Serialize};

use crate::error::HarnessError;

/// Field reference printed by `--help`.
pub const REFERENCE: &str = "\
CONFIG FILE (TOML)

[experiment]
  kind                 required; spectrum-demo | timing-vs-M | timing-vs-K |
                       rmse-vs-snr | bound-check | simulate. Must match the
                       subcommand (demo, bench, rmse, bound, simulate).
  seed                 master seed (default 0; --seed overrides)
  trials               Monte Carlo trials per point (default 100)
  methods              estimators, from music, r-music, k-svd, propagator,
                       inverse. Default per kind: demo uses
                       [music, r-music, propagator]; timing uses
                       [music, r-music, k-svd, propagator]; rmse uses all five.

[scene]
  num_elements         array size M (default 300 for demo and simulate,
                       200 for rmse-vs-snr and bound-check)
  num_snapshots        snapshots N (default N = M)
  num_targets          K (default 9)
  snr_db               total source power over per-element noise variance,
                       in dB (default -5)
  spacing_ratio        element spacing over wavelength, in (0, 0.5] (default 0.5)
  doas_deg             explicit target DoAs; when absent they are drawn
                       from `preset` for every trial
  preset               broadside = [-60, 60] deg, edge = [70, 88] deg
                       (default broadside)
  min_separation_deg   minimum pairwise separation of drawn DoAs (default 3)

[sketch]
  sizes                heuristic: s = K, s1 = ceil((1+eta)s), s0 = 2K;
                       theorem: s = K, s1 = 4K, s0 = 4K + K^2 (default heuristic)
  s, s0, s1            explicit overrides of the sizes above
  eta                  in (0, 1) (default 0.5)
  reuse                draw the sketches once per point, outside the timed
                       region (default false: drawn inside every call)
  oversampled_basis    keep all s columns of the R-MUSIC basis (default false)

[grid]
  start_deg, stop_deg  angular range (default -90, 90)
  step_deg             grid step (default 0.1)

[estimators]
  propagator_kernel    classical = 1/|P^H a1 - a2|^2, orthonormal =
                       projector onto the orthonormalized noise subspace
                       (default classical)
  loading              diagonal loading of the inverse baseline
                       (default 1e-6 trace(R)/M)

[timing]
  m_values             M sweep for timing-vs-M (default [100, 200, 400, 700, 1000])
  k_values             K sweep for timing-vs-K (default [5, 10, 15, 20, 25, 30])
  fixed_k              K used by the M sweep (default 9)
  fixed_m              M used by the K sweep (default 700)
  repetitions          timed repetitions per point, at least 5 (default 5)
  warmup               untimed warm-up runs (default 1)
  budget_s             per-point budget; a method whose projected cost
                       exceeds it is skipped with a reason (default 60)

[rmse]
  snr_db               SNR grid in dB (default [-10, -5, 0, 5, 10, 15, 20])

[bound]
  k_values             ranks to test (default [3, 9])
  tail_ratio           |E|_F / |R_K|_F of the constructed residual (default 0.1)
  sizes                sketch size families to run (default [theorem, heuristic])
";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExperimentKind {
    #[serde(rename = "spectrum-demo")]
    SpectrumDemo,
    #[serde(rename = "timing-vs-M", alias = "timing-vs-m")]
    TimingVsM,
    #[serde(rename = "timing-vs-K", alias = "timing-vs-k")]
    TimingVsK,
    #[serde(rename = "rmse-vs-snr")]
    RmseVsSnr,
    #[serde(rename = "bound-check")]
    BoundCheck,
    #[serde(rename = "simulate")]
    Simulate,
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExperimentKind::SpectrumDemo => "spectrum-demo",
            ExperimentKind::TimingVsM => "timing-vs-M",
            ExperimentKind::TimingVsK => "timing-vs-K",
            ExperimentKind::RmseVsSnr => "rmse-vs-snr",
            ExperimentKind::BoundCheck => "bound-check",
            ExperimentKind::Simulate => "simulate",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SketchSizes {
    Heuristic,
    Theorem,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "defaults::trials")]
    pub trials: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub methods: Option<Vec<Method>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_elements: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_snapshots: Option<usize>,
    #[serde(default = "defaults::num_targets")]
    pub num_targets: usize,
    #[serde(default = "defaults::snr_db")]
    pub snr_db: f64,
    #[serde(default = "defaults::spacing_ratio")]
    pub spacing_ratio: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub doas_deg: Option<Vec<f64>>,
    #[serde(default = "defaults::preset")]
    pub preset: DoaPreset,
    #[serde(default = "defaults::min_separation_deg")]
    pub min_separation_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SketchSection {
    #[serde(default = "defaults::sizes")]
    pub sizes: SketchSizes,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s0: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s1: Option<usize>,
    #[serde(default = "defaults::eta")]
    pub eta: f64,
    #[serde(default)]
    pub reuse: bool,
    #[serde(default)]
    pub oversampled_basis: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(default = "defaults::start_deg")]
    pub start_deg: f64,
    #[serde(default = "defaults::stop_deg")]
    pub stop_deg: f64,
    #[serde(default = "defaults::step_deg")]
    pub step_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorSection {
    #[serde(default)]
    pub propagator_kernel: PropagatorKernel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loading: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimingSection {
    #[serde(default = "defaults::m_values")]
    pub m_values: Vec<usize>,
    #[serde(default = "defaults::k_values")]
    pub k_values: Vec<usize>,
    #[serde(default = "defaults::num_targets")]
    pub fixed_k: usize,
    #[serde(default = "defaults::fixed_m")]
    pub fixed_m: usize,
    #[serde(default = "defaults::repetitions")]
    pub repetitions: usize,
    #[serde(default = "defaults::warmup")]
    pub warmup: usize,
    #[serde(default = "defaults::budget_s")]
    pub budget_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RmseSection {
    #[serde(default = "defaults::snr_grid")]
    pub snr_db: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundSection {
    #[serde(default = "defaults::bound_k_values")]
    pub k_values: Vec<usize>,
    #[serde(default = "defaults::tail_ratio")]
    pub tail_ratio: f64,
    #[serde(default = "defaults::bound_sizes")]
    pub sizes: Vec<SketchSizes>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub scene: SceneSection,
    #[serde(default)]
    pub sketch: SketchSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub estimators: EstimatorSection,
    #[serde(default)]
    pub timing: TimingSection,
    #[serde(default)]
    pub rmse: RmseSection,
    #[serde(default)]
    pub bound: BoundSection,
}

mod defaults {
    use super::*;

    pub fn trials() -> usize {
        100
    }
    pub fn num_targets() -> usize {
        9
    }
    pub fn snr_db() -> f64 {
        -5.0
    }
    pub fn spacing_ratio() -> f64 {
        0.5
    }
    pub fn preset() -> DoaPreset {
        DoaPreset::Broadside
    }
    pub fn min_separation_deg() -> f64 {
        3.0
    }
    pub fn sizes() -> SketchSizes {
        SketchSizes::Heuristic
    }
    pub fn eta() -> f64 {
        0.5
    }
    pub fn start_deg() -> f64 {
        -90.0
    }
    pub fn stop_deg() -> f64 {
        90.0
    }
    pub fn step_deg() -> f64 {
        0.1
    }
    pub fn m_values() -> Vec<usize> {
        vec![100, 200, 400, 700, 1000]
    }
    pub fn k_values() -> Vec<usize> {
        vec![5, 10, 15, 20, 25, 30]
    }
    pub fn fixed_m() -> usize {
        700
    }
    pub fn repetitions() -> usize {
        5
    }
    pub fn warmup() -> usize {
        1
    }
    pub fn budget_s() -> f64 {
        60.0
    }
    pub fn snr_grid() -> Vec<f64> {
        vec![-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0]
    }
    pub fn bound_k_values() -> Vec<usize> {
        vec![3, 9]
    }
    pub fn tail_ratio() -> f64 {
        0.1
    }
    pub fn bound_sizes() -> Vec<SketchSizes> {
        vec![SketchSizes::Theorem, SketchSizes::Heuristic]
    }
}

macro_rules! default_via_serde {
    ($($t:ty),*) => {$(
        impl Default for $t {
            fn default() -> Self {
                toml::from_str("").expect("all fields have defaults")
            }
        }
    )*};
}

default_via_serde!(
    SceneSection,
    SketchSection,
    GridSection,
    EstimatorSection,
    TimingSection,
    RmseSection,
    BoundSection
);

fn invalid(field: &str, msg: impl fmt::Display) -> HarnessError {
    HarnessError::Config(format!("{field}: {msg}"))
}

impl ExperimentConfig {
    /// Defaults for `kind`.
    pub fn for_kind(kind: ExperimentKind) -> Self {
        Self {
            experiment: ExperimentSection { kind, seed: 0, trials: defaults::trials(), methods: None },
            scene: SceneSection::default(),
            sketch: SketchSection::default(),
            grid: GridSection::default(),
            estimators: EstimatorSection::default(),
            timing: TimingSection::default(),
            rmse: RmseSection::default(),
            bound: BoundSection::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            HarnessError::Config(msg) => HarnessError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Fills kind-dependent defaults and checks every constraint.
    pub fn resolve(mut self) -> Result<Self, HarnessError> {
        let kind = self.experiment.kind;
        if self.experiment.methods.is_none() {
            self.experiment.methods = Some(match kind {
                ExperimentKind::SpectrumDemo => vec![Method::Music, Method::RMusic, Method::Propagator],
                ExperimentKind::TimingVsM | ExperimentKind::TimingVsK => {
                    vec![Method::Music, Method::RMusic, Method::KSvd, Method::Propagator]
                }
                _ => Method::ALL.to_vec(),
            });
        }
        if self.scene.num_elements.is_none() {
            self.scene.num_elements = Some(match kind {
                ExperimentKind::RmseVsSnr | ExperimentKind::BoundCheck => 200,
                _ => 300,
            });
        }
        if self.scene.num_snapshots.is_none() {
            self.scene.num_snapshots = self.scene.num_elements;
        }
        if let Some(d) = &self.scene.doas_deg {
            self.scene.num_targets = d.len();
        }
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<(), HarnessError> {
        let e = &self.experiment;
        if e.trials == 0 {
            return Err(invalid("experiment.trials", "must be at least 1"));
        }
        if e.methods.as_ref().is_some_and(Vec::is_empty) {
            return Err(invalid("experiment.methods", "must not be empty"));
        }

        let s = &self.scene;
        let m = s.num_elements.unwrap_or(2);
        ArrayGeometry::new(m, s.spacing_ratio).map_err(|err| invalid("scene", err))?;
        if s.num_snapshots == Some(0) {
            return Err(invalid("scene.num_snapshots", "must be at least 1"));
        }
        if s.num_targets == 0 || s.num_targets >= m {
            return Err(invalid("scene.num_targets", format!("must lie in 1..{m}")));
        }
        if !s.snr_db.is_finite() {
            return Err(invalid("scene.snr_db", "must be finite"));
        }
        if !(s.min_separation_deg >= 0.0) {
            return Err(invalid("scene.min_separation_deg", "must be non-negative"));
        }
        if let Some(d) = &s.doas_deg {
            if d.is_empty() || d.iter().any(|x| !(*x > -90.0 && *x < 90.0)) {
                return Err(invalid("scene.doas_deg", "need at least one DoA, each in (-90, 90)"));
            }
        }

        self.grid().map_err(|err| invalid("grid", err))?;

        let sk = &self.sketch;
        if !(sk.eta > 0.0 && sk.eta < 1.0) {
            return Err(invalid("sketch.eta", "must lie in (0, 1)"));
        }
        if self.uses(Method::RMusic) && matches!(e.kind, ExperimentKind::SpectrumDemo | ExperimentKind::RmseVsSnr)
        {
            self.sketch_for(s.num_targets, 0)
                .validate_for(m, s.num_targets)
                .map_err(|err| invalid("sketch", err))?;
        }

        if let Some(l) = self.estimators.loading {
            if !(l.is_finite() && l >= 0.0) {
                return Err(invalid("estimators.loading", "must be finite and non-negative"));
            }
        }

        let t = &self.timing;
        if t.repetitions < 5 {
            return Err(invalid("timing.repetitions", "must be at least 5"));
        }
        if !(t.budget_s > 0.0) {
            return Err(invalid("timing.budget_s", "must be positive"));
        }
        match e.kind {
            ExperimentKind::TimingVsM => {
                if t.m_values.is_empty() || t.m_values.iter().any(|&mm| mm <= t.fixed_k || mm < 2) {
                    return Err(invalid("timing.m_values", "need a non-empty list with every M > fixed_k"));
                }
            }
            ExperimentKind::TimingVsK => {
                if t.k_values.is_empty() || t.k_values.iter().any(|&k| k == 0 || k >= t.fixed_m) {
                    return Err(invalid("timing.k_values", "need a non-empty list with every K in 1..fixed_m"));
                }
            }
            _ => {}
        }

        if e.kind == ExperimentKind::RmseVsSnr
            && (self.rmse.snr_db.is_empty() || self.rmse.snr_db.iter().any(|x| !x.is_finite()))
        {
            return Err(invalid("rmse.snr_db", "need a non-empty list of finite values"));
        }

        let b = &self.bound;
        if e.kind != ExperimentKind::BoundCheck {
            return Ok(());
        }
        if b.k_values.is_empty() || b.k_values.iter().any(|&k| k == 0 || k >= m) {
            return Err(invalid("bound.k_values", format!("need a non-empty list with every K in 1..{m}")));
        }
        if !(b.tail_ratio >= 0.0 && b.tail_ratio.is_finite()) {
            return Err(invalid("bound.tail_ratio", "must be finite and non-negative"));
        }
        if b.sizes.is_empty() {
            return Err(invalid("bound.sizes", "must not be empty"));
        }
        Ok(())
    }

    pub fn methods(&self) -> Vec<Method> {
        self.experiment.methods.clone().unwrap_or_default()
    }

    pub fn uses(&self, m: Method) -> bool {
        self.experiment.methods.as_ref().is_some_and(|v| v.contains(&m))
    }

    pub fn num_elements(&self) -> usize {
        self.scene.num_elements.unwrap_or(300)
    }

    pub fn num_snapshots(&self) -> usize {
        self.scene.num_snapshots.unwrap_or_else(|| self.num_elements())
    }

    pub fn grid(&self) -> Result<AngularGrid, rmusic_core::Error> {
        AngularGrid::new(self.grid.start_deg, self.grid.stop_deg, self.grid.step_deg)
    }

    /// Sketch configuration for rank `k` with the configured size family and
    /// overrides.
    pub fn sketch_for(&self, k: usize, seed: u64) -> SketchConfig {
        sketch_sizes(self.sketch.sizes, k, self.sketch.eta, &self.sketch).with_seed(seed)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

pub(crate) fn sketch_sizes(
    sizes: SketchSizes,
    k: usize,
    eta: f64,
    overrides: &SketchSection,
) -> SketchConfig {
    let mut cfg = match sizes {
        SketchSizes::Heuristic => SketchConfig::with_eta(k, eta),
        SketchSizes::Theorem => SketchConfig { eta, ..SketchConfig::theorem_scale(k) },
    };
    if let Some(s) = overrides.s {
        cfg.s = s;
    }
    if let Some(s0) = overrides.s0 {
        cfg.s0 = s0;
    }
    if let Some(s1) = overrides.s1 {
        cfg.s1 = s1;
    }
    cfg.oversampled_basis = overrides.oversampled_basis;
    cfg
}
