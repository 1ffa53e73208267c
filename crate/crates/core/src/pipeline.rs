//! Covariance → pseudo-spectrum → DoAs for any [`Method`].

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::array_sim::ArrayGeometry;
use crate::error::Result;
use crate::sketching::{SketchConfig, SketchOperators};
use crate::spectrum::{
    find_peaks, spectrum_from_kernel, spectrum_from_noise_basis, spectrum_from_propagator,
    spectrum_from_signal_basis, AngularGrid, DoaEstimate, PseudoSpectrum,
};
use crate::subspace::{
    default_loading, exact_ksvd_subspace, exact_music_subspace, inverse_spectrum_weights,
    propagator_estimate, rmusic_subspace, rmusic_subspace_with, CovarianceMatrix, Method,
};

/// How the Propagator pseudo-spectrum is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PropagatorKernel {
    /// `1/‖P̂ᴴa₁ − a₂‖²`, the propagator's own noise-subspace matrix.
    #[default]
    Classical,
    /// `1/‖(I − U_sU_sᴴ)a‖²` with the orthonormalized signal basis.
    Orthonormal,
}

#[derive(Debug, Clone)]
pub struct PipelineOptions {
    /// Sketch sizes and seed for R-MUSIC.
    pub sketch: SketchConfig,
    /// Pre-drawn R-MUSIC operators; when set their generation is not timed.
    pub operators: Option<SketchOperators>,
    pub propagator_kernel: PropagatorKernel,
    /// Diagonal loading for the inverse baseline; `None` uses
    /// [`default_loading`].
    pub loading: Option<f64>,
}

impl PipelineOptions {
    pub fn for_rank(k: usize) -> Self {
        Self {
            sketch: SketchConfig::for_rank(k),
            operators: None,
            propagator_kernel: PropagatorKernel::default(),
            loading: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MethodOutput {
    pub method: Method,
    pub spectrum: PseudoSpectrum,
    pub doas: DoaEstimate,
    /// Time spent in the subspace (or weight) computation only.
    pub elapsed: Duration,
}

/// Runs the timed estimation stage of `method` and returns its wall time.
pub fn time_subspace_stage(
    method: Method,
    r: &CovarianceMatrix,
    k: usize,
    opts: &PipelineOptions,
) -> Result<Duration> {
    Ok(match method {
        Method::Music => exact_music_subspace(r, k)?.0.elapsed,
        Method::RMusic => match &opts.operators {
            Some(ops) => rmusic_subspace_with(r, k, &opts.sketch, ops)?.elapsed,
            None => rmusic_subspace(r, k, &opts.sketch)?.elapsed,
        },
        Method::KSvd => exact_ksvd_subspace(r, k)?.elapsed,
        Method::Propagator => propagator_estimate(r, k)?.signal.elapsed,
        Method::Inverse => {
            let start = Instant::now();
            let delta = opts.loading.unwrap_or_else(|| default_loading(r));
            inverse_spectrum_weights(r, delta)?;
            start.elapsed()
        }
    })
}

/// Pseudo-spectrum of `method` on `grid`, with the subspace-stage time.
pub fn method_spectrum(
    method: Method,
    r: &CovarianceMatrix,
    k: usize,
    geom: &ArrayGeometry,
    grid: &AngularGrid,
    opts: &PipelineOptions,
) -> Result<(PseudoSpectrum, Duration)> {
    match method {
        Method::Music => {
            let (est, noise) = exact_music_subspace(r, k)?;
            Ok((spectrum_from_noise_basis(&noise, geom, grid)?, est.elapsed))
        }
        Method::RMusic => {
            let est = match &opts.operators {
                Some(ops) => rmusic_subspace_with(r, k, &opts.sketch, ops)?,
                None => rmusic_subspace(r, k, &opts.sketch)?,
            };
            Ok((spectrum_from_signal_basis(&est.basis, geom, grid)?, est.elapsed))
        }
        Method::KSvd => {
            let est = exact_ksvd_subspace(r, k)?;
            Ok((spectrum_from_signal_basis(&est.basis, geom, grid)?, est.elapsed))
        }
        Method::Propagator => {
            let est = propagator_estimate(r, k)?;
            let spec = match opts.propagator_kernel {
                PropagatorKernel::Classical => spectrum_from_propagator(&est.propagator, geom, grid)?,
                PropagatorKernel::Orthonormal => {
                    spectrum_from_signal_basis(&est.signal.basis, geom, grid)?
                }
            };
            Ok((spec, est.signal.elapsed))
        }
        Method::Inverse => {
            let start = Instant::now();
            let delta = opts.loading.unwrap_or_else(|| default_loading(r));
            let w = inverse_spectrum_weights(r, delta)?;
            let elapsed = start.elapsed();
            Ok((spectrum_from_kernel(&w, geom, grid)?, elapsed))
        }
    }
}

/// Spectrum plus the `K` strongest peaks at the grid's default separation.
pub fn run_method(
    method: Method,
    r: &CovarianceMatrix,
    k: usize,
    geom: &ArrayGeometry,
    grid: &AngularGrid,
    opts: &PipelineOptions,
) -> Result<MethodOutput> {
    let (spectrum, elapsed) = method_spectrum(method, r, k, geom, grid, opts)?;
    let doas = find_peaks(&spectrum, k, grid.default_min_separation());
    Ok(MethodOutput { method, spectrum, doas, elapsed })
}
