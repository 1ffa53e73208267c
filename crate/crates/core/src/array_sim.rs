//! Uniform-linear-array scene synthesis.
//!
//! Snapshots follow the narrowband post-dechirp model
//! `Y = A(θ)·diag(α)·Φ + W`: unit-power circular Gaussian source symbols
//! `Φ`, white circular Gaussian noise `W`, and steering vectors
//! `a_m(θ) = exp(j·2π·m·(d/λ)·sin θ)`. The same positive-phase convention is
//! used by the estimators, so synthesized and estimated angles agree in sign.

use std::f64::consts::PI;

use faer::Mat;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::ComplexMatrix;
use crate::seed::{self, stream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrayGeometry {
    pub num_elements: usize,
    /// Element spacing over wavelength, `d/λ`.
    pub spacing_ratio: f64,
}

impl ArrayGeometry {
    pub fn new(num_elements: usize, spacing_ratio: f64) -> Result<Self> {
        let g = Self { num_elements, spacing_ratio };
        g.validate()?;
        Ok(g)
    }

    /// Half-wavelength spacing.
    pub fn half_wavelength(num_elements: usize) -> Result<Self> {
        Self::new(num_elements, 0.5)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_elements < 2 {
            return Err(Error::InvalidScene(format!(
                "array needs at least 2 elements, got {}",
                self.num_elements
            )));
        }
        if !(self.spacing_ratio > 0.0 && self.spacing_ratio <= 0.5) {
            return Err(Error::InvalidScene(format!(
                "spacing ratio must lie in (0, 0.5], got {}",
                self.spacing_ratio
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub doa_deg: f64,
    pub gain: Complex64,
    /// Carried for completeness; the DoA pipeline ignores it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub toa_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub targets: Vec<Target>,
    pub array: ArrayGeometry,
    pub snr_db: f64,
    pub num_snapshots: usize,
}

impl Scene {
    /// Scene whose gains have magnitude `1/√K` and seeded uniform phases, so
    /// total source power is one.
    pub fn with_default_gains(
        doas_deg: &[f64],
        array: ArrayGeometry,
        snr_db: f64,
        num_snapshots: usize,
        seed: u64,
    ) -> Result<Self> {
        let targets = default_gains(doas_deg.len(), seed)
            .into_iter()
            .zip(doas_deg)
            .map(|(gain, &doa_deg)| Target { doa_deg, gain, toa_s: None })
            .collect();
        let scene = Self { targets, array, snr_db, num_snapshots };
        scene.validate()?;
        Ok(scene)
    }

    pub fn num_targets(&self) -> usize {
        self.targets.len()
    }

    /// Ground-truth DoAs in ascending order.
    pub fn sorted_doas(&self) -> Vec<f64> {
        let mut d: Vec<f64> = self.targets.iter().map(|t| t.doa_deg).collect();
        d.sort_by(f64::total_cmp);
        d
    }

    pub fn validate(&self) -> Result<()> {
        self.array.validate()?;
        let k = self.targets.len();
        if k == 0 {
            return Err(Error::InvalidScene("scene has no targets".into()));
        }
        if k >= self.array.num_elements {
            return Err(Error::InvalidScene(format!(
                "{k} targets need more than {} array elements",
                self.array.num_elements
            )));
        }
        if self.num_snapshots == 0 {
            return Err(Error::InvalidScene("num_snapshots must be positive".into()));
        }
        if !self.snr_db.is_finite() {
            return Err(Error::InvalidScene("snr_db must be finite".into()));
        }
        for t in &self.targets {
            if !(t.doa_deg > -90.0 && t.doa_deg < 90.0) {
                return Err(Error::InvalidScene(format!(
                    "DoA {} deg outside (-90, 90)",
                    t.doa_deg
                )));
            }
            if !(t.gain.norm() > 0.0) || !t.gain.re.is_finite() || !t.gain.im.is_finite() {
                return Err(Error::InvalidScene("target gain must be nonzero and finite".into()));
            }
        }
        let doas = self.sorted_doas();
        if doas.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidScene("target DoAs must be pairwise distinct".into()));
        }
        Ok(())
    }

    /// Per-element noise variance: `Σ|α_k|² / 10^(SNR/10)`.
    pub fn noise_variance(&self) -> f64 {
        let power: f64 = self.targets.iter().map(|t| t.gain.norm_sqr()).sum();
        power / 10f64.powf(self.snr_db / 10.0)
    }
}

/// `K` gains of magnitude `1/√K` with seeded uniform phase.
pub fn default_gains(k: usize, seed: u64) -> Vec<Complex64> {
    let mut rng = seed::rng(seed, stream::GAINS);
    let mag = 1.0 / (k.max(1) as f64).sqrt();
    (0..k)
        .map(|_| Complex64::from_polar(mag, 2.0 * PI * rng.random::<f64>()))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FmcwParams {
    pub init_freq_rad_s: f64,
    pub bandwidth_rad_s: f64,
    pub symbol_period_s: f64,
}

impl FmcwParams {
    pub fn new(init_freq_rad_s: f64, bandwidth_rad_s: f64, symbol_period_s: f64) -> Result<Self> {
        let p = Self { init_freq_rad_s, bandwidth_rad_s, symbol_period_s };
        if [init_freq_rad_s, bandwidth_rad_s, symbol_period_s]
            .iter()
            .any(|v| !(v.is_finite() && *v > 0.0))
        {
            return Err(Error::Domain("FMCW parameters must be finite and positive".into()));
        }
        Ok(p)
    }

    /// `μ = w_B / T_sym`.
    pub fn chirp_rate(&self) -> f64 {
        self.bandwidth_rad_s / self.symbol_period_s
    }
}

/// `s(t) = exp(j(w_s·t + μt²/2))` on `0 ≤ t < T_sym`.
pub fn fmcw_chirp(params: &FmcwParams, t: f64) -> Result<Complex64> {
    if !(t >= 0.0 && t < params.symbol_period_s) {
        return Err(Error::Domain(format!(
            "t = {t} outside [0, {})",
            params.symbol_period_s
        )));
    }
    Ok(Complex64::from_polar(1.0, chirp_phase(params, t)))
}

fn chirp_phase(params: &FmcwParams, t: f64) -> f64 {
    params.init_freq_rad_s * t + 0.5 * params.chirp_rate() * t * t
}

/// De-chirped echo `s(t)·conj(s(t − τ))` of a single return delayed by `τ`.
///
/// The result is a tone at the beat frequency `μτ` (rad/s); `t` must satisfy
/// `τ ≤ t < T_sym` so both chirps are inside their sweep.
pub fn dechirp(params: &FmcwParams, delay_s: f64, t: f64) -> Result<Complex64> {
    if !(delay_s >= 0.0) {
        return Err(Error::Domain(format!("delay {delay_s} must be non-negative")));
    }
    let tx = fmcw_chirp(params, t)?;
    let rx = fmcw_chirp(params, t - delay_s)?;
    Ok(tx * rx.conj())
}

/// Steering vector `a_m(θ) = exp(j·2π·m·(d/λ)·sin θ)`, `m = 0..M`.
pub fn steering_vector(geom: &ArrayGeometry, theta_deg: f64) -> Result<Vec<Complex64>> {
    if !(-90.0..=90.0).contains(&theta_deg) {
        return Err(Error::Domain(format!("angle {theta_deg} deg outside [-90, 90]")));
    }
    Ok(steering_unchecked(geom, theta_deg))
}

pub(crate) fn steering_unchecked(geom: &ArrayGeometry, theta_deg: f64) -> Vec<Complex64> {
    let phase = 2.0 * PI * geom.spacing_ratio * theta_deg.to_radians().sin();
    (0..geom.num_elements)
        .map(|m| Complex64::from_polar(1.0, phase * m as f64))
        .collect()
}

/// `A(θ)`: steering vectors stacked column-wise.
pub fn steering_matrix(geom: &ArrayGeometry, thetas_deg: &[f64]) -> Result<ComplexMatrix> {
    let cols = thetas_deg
        .iter()
        .map(|&t| steering_vector(geom, t))
        .collect::<Result<Vec<_>>>()?;
    ComplexMatrix::from_fn(geom.num_elements, cols.len(), |i, j| cols[j][i])
}

/// Signal and noise components of a snapshot matrix, kept separate so that
/// tests can check each against its model.
#[derive(Debug, Clone)]
pub struct SnapshotParts {
    pub signal: ComplexMatrix,
    pub noise: ComplexMatrix,
    pub noise_variance: f64,
}

impl SnapshotParts {
    pub fn combined(&self) -> ComplexMatrix {
        self.signal.add(&self.noise).expect("parts share a shape")
    }
}

fn circular_gaussian(rng: &mut ChaCha8Rng, std: f64) -> Complex64 {
    let s = std * std::f64::consts::FRAC_1_SQRT_2;
    Complex64::new(s * rng.sample::<f64, _>(StandardNormal), s * rng.sample::<f64, _>(StandardNormal))
}

pub fn generate_snapshot_parts(scene: &Scene, seed: u64) -> Result<SnapshotParts> {
    scene.validate()?;
    let m = scene.array.num_elements;
    let n = scene.num_snapshots;
    let k = scene.num_targets();

    let mut src_rng = seed::rng(seed, stream::SOURCES);
    let sources = Mat::from_fn(k, n, |i, _| {
        scene.targets[i].gain * circular_gaussian(&mut src_rng, 1.0)
    });
    // faer fills column-major; draw order is (target, snapshot) within each
    // snapshot column, which is fixed for a given (K, N).
    let doas: Vec<f64> = scene.targets.iter().map(|t| t.doa_deg).collect();
    let a = steering_matrix(&scene.array, &doas)?;
    let signal = a.as_mat() * sources.as_ref();

    let noise_variance = scene.noise_variance();
    let std = noise_variance.sqrt();
    let mut noise_rng = seed::rng(seed, stream::NOISE);
    let noise = Mat::from_fn(m, n, |_, _| circular_gaussian(&mut noise_rng, std));

    Ok(SnapshotParts {
        signal: ComplexMatrix::from_mat(signal)?,
        noise: ComplexMatrix::from_mat(noise)?,
        noise_variance,
    })
}

/// `M×N` snapshot matrix for `scene`; bit-identical for a fixed seed.
pub fn generate_snapshots(scene: &Scene, seed: u64) -> Result<ComplexMatrix> {
    Ok(generate_snapshot_parts(scene, seed)?.combined())
}

/// Sorted DoAs drawn uniformly from `[lo, hi]` with pairwise separation of at
/// least `min_sep` degrees (rejection sampling).
pub fn draw_doas(k: usize, lo: f64, hi: f64, min_sep: f64, seed: u64) -> Result<Vec<f64>> {
    if k == 0 || !(lo < hi) {
        return Err(Error::InvalidScene(format!("cannot draw {k} DoAs from [{lo}, {hi}]")));
    }
    if (k - 1) as f64 * min_sep > hi - lo {
        return Err(Error::InvalidScene(format!(
            "{k} DoAs with {min_sep} deg separation do not fit in [{lo}, {hi}]"
        )));
    }
    let mut rng = seed::rng(seed, stream::DOAS);
    for _ in 0..100_000 {
        let mut d: Vec<f64> = (0..k).map(|_| rng.random_range(lo..=hi)).collect();
        d.sort_by(f64::total_cmp);
        if d.windows(2).all(|w| w[1] - w[0] >= min_sep) {
            return Ok(d);
        }
    }
    Err(Error::InvalidScene(format!(
        "rejection sampling failed for {k} DoAs in [{lo}, {hi}] with {min_sep} deg separation"
    )))
}

/// Angular region DoAs are drawn from in Monte Carlo sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DoaPreset {
    /// `[-60°, 60°]`.
    Broadside,
    /// `[70°, 88°]`, near endfire.
    Edge,
}

impl DoaPreset {
    pub fn range_deg(self) -> (f64, f64) {
        match self {
            DoaPreset::Broadside => (-60.0, 60.0),
            DoaPreset::Edge => (70.0, 88.0),
        }
    }

    pub fn draw(self, k: usize, min_sep: f64, seed: u64) -> Result<Vec<f64>> {
        let (lo, hi) = self.range_deg();
        draw_doas(k, lo, hi, min_sep, seed)
    }
}
