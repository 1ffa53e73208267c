//! Signal-subspace estimators.
//!
//! Every estimator takes a [`CovarianceMatrix`] and the model order `K` and
//! returns an orthonormal `M×K` basis, except the matrix-inverse baseline,
//! which only produces spectrum weights.

mod lanczos;
mod propagator;
mod rmusic;

pub use lanczos::exact_ksvd_subspace;
pub use propagator::{propagator_estimate, propagator_subspace, PropagatorEstimate};
pub use rmusic::{rank_k_svd_via_sketch, rmusic_subspace, rmusic_subspace_with, SketchedSvd};

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use faer::linalg::solvers::DenseSolveCore;
use faer::{Mat, Side};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{dim_err, Error, Result};
use crate::numerics::{svd_full, ComplexMatrix, ONE};
use crate::sketching::SketchConfig;

/// Hermitian `M×M` spatial covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    r: ComplexMatrix,
}

impl CovarianceMatrix {
    /// Wraps a square matrix, replacing it with its Hermitian part
    /// `(R + Rᴴ)/2`.
    pub fn new(r: ComplexMatrix) -> Result<Self> {
        let (m, n) = r.shape();
        if m != n {
            return dim_err(format!("covariance must be square, got {m}x{n}"));
        }
        let src = r.as_mat();
        let sym = Mat::from_fn(m, m, |i, j| (src[(i, j)] + src[(j, i)].conj()) * 0.5);
        Ok(Self { r: ComplexMatrix::from_mat_unchecked(sym) })
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.r
    }

    pub fn dim(&self) -> usize {
        self.r.rows()
    }

    /// Real part of the trace (the imaginary part is zero by construction).
    pub fn trace(&self) -> f64 {
        self.r.trace().re
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.r
    }
}

/// `R = (1/N)·Y·Yᴴ`, symmetrized.
pub fn sample_covariance(y: &ComplexMatrix) -> Result<CovarianceMatrix> {
    let n = y.cols() as f64;
    let prod = y.as_mat() * y.as_mat().adjoint();
    let scaled = Mat::from_fn(prod.nrows(), prod.ncols(), |i, j| prod[(i, j)] / n);
    CovarianceMatrix::new(ComplexMatrix::from_mat(scaled)?)
}

/// Estimator tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "music")]
    Music,
    #[serde(rename = "r-music")]
    RMusic,
    #[serde(rename = "k-svd")]
    KSvd,
    #[serde(rename = "propagator")]
    Propagator,
    #[serde(rename = "inverse")]
    Inverse,
}

impl Method {
    pub const ALL: [Method; 5] =
        [Method::Music, Method::RMusic, Method::KSvd, Method::Propagator, Method::Inverse];

    pub fn tag(self) -> &'static str {
        match self {
            Method::Music => "music",
            Method::RMusic => "r-music",
            Method::KSvd => "k-svd",
            Method::Propagator => "propagator",
            Method::Inverse => "inverse",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.tag() == s)
            .ok_or_else(|| Error::Domain(format!("unknown method `{s}`")))
    }
}

#[derive(Debug, Clone)]
pub struct SubspaceEstimate {
    /// `M×K`, orthonormal columns.
    pub basis: ComplexMatrix,
    pub singular_values: Option<Vec<f64>>,
    pub method: Method,
    /// Wall time of the estimator's own work.
    pub elapsed: Duration,
    pub config_echo: Option<SketchConfig>,
}

fn check_rank(m: usize, k: usize) -> Result<()> {
    if k == 0 || k >= m {
        return dim_err(format!("model order {k} outside 1..{m}"));
    }
    Ok(())
}

/// Full SVD of `R`; returns the leading `K` left singular vectors and the
/// remaining `M−K` as the noise basis.
pub fn exact_music_subspace(
    r: &CovarianceMatrix,
    k: usize,
) -> Result<(SubspaceEstimate, ComplexMatrix)> {
    check_rank(r.dim(), k)?;
    let start = Instant::now();
    let svd = svd_full(r.matrix())?;
    let basis = svd.u.leading_columns(k)?;
    let elapsed = start.elapsed();
    let noise = svd.u.trailing_columns(k)?;
    let est = SubspaceEstimate {
        basis,
        singular_values: Some(svd.singular_values[..k].to_vec()),
        method: Method::Music,
        elapsed,
        config_echo: None,
    };
    Ok((est, noise))
}

/// Diagonal loading `1e-6·trace(R)/M`.
pub fn default_loading(r: &CovarianceMatrix) -> f64 {
    1e-6 * r.trace() / r.dim() as f64
}

/// `(R + loading·I)⁻¹`, by Cholesky.
pub fn inverse_spectrum_weights(r: &CovarianceMatrix, loading: f64) -> Result<ComplexMatrix> {
    if !loading.is_finite() || loading < 0.0 {
        return Err(Error::Domain(format!("loading must be finite and non-negative, got {loading}")));
    }
    let m = r.dim();
    let src = r.matrix().as_mat();
    let loaded = Mat::from_fn(m, m, |i, j| {
        if i == j {
            src[(i, j)] + ONE * loading
        } else {
            src[(i, j)]
        }
    });
    let llt = loaded
        .llt(Side::Lower)
        .map_err(|_| Error::RankDeficiency("R + loading·I is not positive definite".into()))?;
    let l = llt.L();
    let diag: Vec<f64> = (0..m).map(|i| l[(i, i)].re).collect();
    let (lo, hi) = diag.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &d| (a.min(d), b.max(d)));
    if !(lo > 0.0) || (lo / hi).powi(2) < 1e-15 {
        return Err(Error::RankDeficiency(format!(
            "R + loading·I is numerically singular (pivot ratio {:.3e})",
            (lo / hi).powi(2)
        )));
    }
    ComplexMatrix::from_mat(llt.inverse())
}

/// `aᴴ·W·a` for Hermitian weights `W`.
pub(crate) fn quadratic_form(w: &ComplexMatrix, a: &[Complex64]) -> f64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (j, &aj) in a.iter().enumerate() {
        let col = w.col_slice(j);
        let mut inner = Complex64::new(0.0, 0.0);
        for (i, &ai) in a.iter().enumerate() {
            inner += ai.conj() * col[i];
        }
        acc += inner * aj;
    }
    acc.re
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::principal_angles;
    use crate::seed;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn random(m: usize, n: usize, seed: u64) -> ComplexMatrix {
        let mut rng = seed::rng(seed, 0x5u64);
        ComplexMatrix::from_fn(m, n, |_, _| {
            Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        })
        .unwrap()
    }

    fn random_psd(m: usize, seed: u64) -> CovarianceMatrix {
        let g = random(m, m, seed);
        CovarianceMatrix::new(g.matmul(&g.adjoint()).unwrap()).unwrap()
    }

    #[test]
    fn covariance_trivial_cases() {
        let y = ComplexMatrix::from_real(2, 1, &[1.0, 0.0]).unwrap();
        let r = sample_covariance(&y).unwrap();
        assert_eq!(*r.matrix(), ComplexMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, 0.0]).unwrap());
        let z = sample_covariance(&ComplexMatrix::zeros(3, 4).unwrap()).unwrap();
        assert_eq!(*z.matrix(), ComplexMatrix::zeros(3, 3).unwrap());
        assert!(CovarianceMatrix::new(ComplexMatrix::zeros(2, 3).unwrap()).is_err());
    }

    #[test]
    fn covariance_matches_triple_loop() {
        let y = random(8, 50, 4);
        let r = sample_covariance(&y).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                let mut acc = Complex64::new(0.0, 0.0);
                for t in 0..50 {
                    acc += y.get(i, t) * y.get(j, t).conj();
                }
                acc /= 50.0;
                assert!((r.matrix().get(i, j) - acc).norm() < 1e-12);
            }
        }
        assert!(r.matrix().hermitian_defect() <= 1e-10 * r.matrix().frobenius_norm());
    }

    #[test]
    fn covariance_is_psd() {
        let r = sample_covariance(&random(12, 7, 8)).unwrap();
        let eig = r.matrix().as_mat().self_adjoint_eigenvalues(Side::Lower).unwrap();
        let floor = -1e-10 * r.matrix().frobenius_norm();
        assert!(eig.iter().all(|&l| l >= floor));
    }

    #[test]
    fn method_tags_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.tag().parse::<Method>().unwrap(), m);
        }
        assert!("esprit".parse::<Method>().is_err());
    }

    #[test]
    fn music_on_diagonal() {
        let r = CovarianceMatrix::new(ComplexMatrix::from_diag(&[5.0, 1.0, 0.1, 0.1]).unwrap())
            .unwrap();
        let (sig, noise) = exact_music_subspace(&r, 2).unwrap();
        let axes = ComplexMatrix::from_real(4, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0])
            .unwrap();
        let angles = principal_angles(&sig.basis, &axes).unwrap();
        assert!(angles.iter().all(|&a| a < 1e-12));
        assert_eq!(noise.shape(), (4, 2));
        assert!(sig.basis.adjoint().matmul(&noise).unwrap().frobenius_norm() < 1e-12);
        assert_eq!(sig.singular_values.as_deref(), Some(&[5.0, 1.0][..]));
    }

    #[test]
    fn music_on_scaled_identity() {
        let r = CovarianceMatrix::new(ComplexMatrix::identity(5).unwrap().scale(0.3)).unwrap();
        let (sig, noise) = exact_music_subspace(&r, 1).unwrap();
        assert!(sig.basis.orthonormality_defect() < 1e-12);
        let full = ComplexMatrix::from_fn(5, 5, |i, j| {
            if j == 0 { sig.basis.get(i, 0) } else { noise.get(i, j - 1) }
        })
        .unwrap();
        assert!(full.orthonormality_defect() < 1e-12);
        assert!(exact_music_subspace(&r, 5).is_err());
        assert!(exact_music_subspace(&r, 0).is_err());
    }

    #[test]
    fn inverse_weights() {
        let eye = CovarianceMatrix::new(ComplexMatrix::identity(4).unwrap()).unwrap();
        let w = inverse_spectrum_weights(&eye, 0.0).unwrap();
        assert!(w.sub(&ComplexMatrix::identity(4).unwrap()).unwrap().frobenius_norm() < 1e-14);

        let d = CovarianceMatrix::new(ComplexMatrix::from_diag(&[2.0, 4.0, 0.5]).unwrap()).unwrap();
        let w = inverse_spectrum_weights(&d, 0.5).unwrap();
        let expected = ComplexMatrix::from_diag(&[1.0 / 2.5, 1.0 / 4.5, 1.0]).unwrap();
        assert!(w.sub(&expected).unwrap().frobenius_norm() < 1e-14);

        let r = random_psd(15, 2);
        let delta = default_loading(&r);
        let w = inverse_spectrum_weights(&r, delta).unwrap();
        let loaded = r.matrix().add(&ComplexMatrix::identity(15).unwrap().scale(delta)).unwrap();
        let prod = loaded.matmul(&w).unwrap();
        assert!(prod.sub(&ComplexMatrix::identity(15).unwrap()).unwrap().frobenius_norm() < 1e-8);

        let singular = CovarianceMatrix::new(ComplexMatrix::from_diag(&[1.0, 0.0]).unwrap()).unwrap();
        assert!(matches!(inverse_spectrum_weights(&singular, 0.0), Err(Error::RankDeficiency(_))));
    }

    #[test]
    fn quadratic_form_matches_dense() {
        let r = random_psd(6, 3);
        let a: Vec<Complex64> = random(6, 1, 9).column(0);
        let dense = ComplexMatrix::from_column(&a)
            .unwrap()
            .adjoint()
            .matmul(r.matrix())
            .unwrap()
            .matmul(&ComplexMatrix::from_column(&a).unwrap())
            .unwrap();
        assert!((quadratic_form(r.matrix(), &a) - dense.get(0, 0).re).abs() < 1e-10);
    }
}
