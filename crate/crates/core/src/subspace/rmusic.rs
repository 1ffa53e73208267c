//! Randomized low-rank SVD of the covariance and the R-MUSIC basis.
//!
//! With `S` the range sketch and `S_X` the composite sketch:
//!
//! ```text
//! C = R·S                      (M×s)
//! A = S_Xᵀ·C, B = S_Xᵀ·R       (s1×s, s1×M)
//! A = Q_A·Ω_A                  thin QR
//! X̂ = Ω_A⁺·Q_Aᴴ·B              (s×M)
//! Q_Aᴴ·B ≈ U_B·Σ_B·V_Bᴴ        truncated to K terms
//! D = C·Ω_A⁺·U_B·Σ_B = Ū·Σ̄·W ᴴ  thin SVD, V̄ = V_B·W
//! ```
//!
//! `Ū·Σ̄·V̄ᴴ` is the rank-`K` approximation of `R`. No `M×M×M` product is
//! formed: the dense work is `R·S` (`M²s`), one count-sketch pass over `R`
//! (`M²` reads) and products with `s0`, `s1` or `s` inner dimension.

use std::time::Instant;

use faer::Mat;
use num_complex::Complex64;

use super::{check_rank, CovarianceMatrix, Method, SubspaceEstimate};
use crate::error::{Error, Result};
use crate::numerics::{
    adjoint_matmul, decomp, frobenius, matmul, ComplexMatrix, SvdResult, DEFAULT_RCOND,
};
use crate::sketching::{Sketch, SketchConfig, SketchOperators};

/// Output of the sketched factorization.
#[derive(Debug, Clone)]
pub struct SketchedSvd {
    /// `Ū`, `Σ̄`, `V̄` truncated to the requested rank.
    pub svd: SvdResult,
    /// `C·Ω_A⁺` (`M×s`), kept so callers can form `C·X̂` without repeating
    /// the pipeline.
    c_omega: Mat<Complex64>,
    /// `Q_Aᴴ·B` (`s×M`).
    qb: Mat<Complex64>,
}

impl SketchedSvd {
    /// `‖C·X̂ − R‖_F²` with the untruncated factor `X̂ = Ω_A⁺·Q_Aᴴ·B`.
    pub fn lra_residual(&self, r: &CovarianceMatrix) -> f64 {
        let approx = matmul(self.c_omega.as_ref(), self.qb.as_ref());
        let diff = &approx - r.matrix().as_mat();
        frobenius(diff.as_ref()).powi(2)
    }
}

pub(crate) fn sketched_svd(
    r: &CovarianceMatrix,
    rank: usize,
    ops: &SketchOperators,
) -> Result<SketchedSvd> {
    let rm = r.matrix();
    let c = ops.range.apply_right(rm)?;
    let a = ops.composite.apply_left(&c)?;
    let b = ops.composite.apply_left(rm)?;

    let (q_a, omega) = decomp::qr_parts(a.as_mat());
    let qb = adjoint_matmul(q_a.as_ref(), b.as_mat());
    let omega_pinv = decomp::tri_pinv_mat(omega.as_ref(), DEFAULT_RCOND)?;
    if frobenius(omega_pinv.as_ref()) == 0.0 {
        return Err(Error::RankDeficiency("sketched factor Ω_A is zero".into()));
    }

    let (u_b, s_b, v_b) = decomp::svd_parts(qb.as_ref())?;
    let rank = rank.min(s_b.len());
    let u_b_scaled = Mat::from_fn(u_b.nrows(), rank, |i, j| u_b[(i, j)] * s_b[j]);
    let c_omega = matmul(c.as_mat(), omega_pinv.as_ref());
    let d = matmul(c_omega.as_ref(), u_b_scaled.as_ref());

    let (u_bar, sigma, w) = decomp::svd_parts(d.as_ref())?;
    if sigma.first().copied().unwrap_or(0.0) == 0.0 {
        return Err(Error::RankDeficiency("sketched approximation of R vanished".into()));
    }
    let v_bar = matmul(v_b.get(.., ..rank), w.as_ref());
    Ok(SketchedSvd {
        svd: SvdResult {
            u: ComplexMatrix::from_mat(u_bar)?,
            singular_values: sigma,
            v: ComplexMatrix::from_mat(v_bar)?,
        },
        c_omega,
        qb,
    })
}

fn basis_rank(k: usize, cfg: &SketchConfig) -> usize {
    if cfg.oversampled_basis {
        cfg.s
    } else {
        k
    }
}

fn finish(
    r: &CovarianceMatrix,
    k: usize,
    cfg: &SketchConfig,
    ops: &SketchOperators,
) -> Result<(ComplexMatrix, Vec<f64>)> {
    let sk = sketched_svd(r, basis_rank(k, cfg), ops)?;
    let basis = decomp::orthonormalize(sk.svd.u.as_mat());
    Ok((ComplexMatrix::from_mat(basis)?, sk.svd.singular_values))
}

/// R-MUSIC signal basis. Sketches are drawn from `cfg.seed` inside the timed
/// region.
pub fn rmusic_subspace(
    r: &CovarianceMatrix,
    k: usize,
    cfg: &SketchConfig,
) -> Result<SubspaceEstimate> {
    check_rank(r.dim(), k)?;
    cfg.validate_for(r.dim(), k)?;
    let start = Instant::now();
    let ops = SketchOperators::draw(cfg, r.dim())?;
    let (basis, sv) = finish(r, k, cfg, &ops)?;
    Ok(SubspaceEstimate {
        basis,
        singular_values: Some(sv),
        method: Method::RMusic,
        elapsed: start.elapsed(),
        config_echo: Some(*cfg),
    })
}

/// As [`rmusic_subspace`] but with pre-drawn operators, which are excluded
/// from the recorded time.
pub fn rmusic_subspace_with(
    r: &CovarianceMatrix,
    k: usize,
    cfg: &SketchConfig,
    ops: &SketchOperators,
) -> Result<SubspaceEstimate> {
    check_rank(r.dim(), k)?;
    cfg.validate_for(r.dim(), k)?;
    if ops.range.rows() != r.dim() || ops.range.cols() != cfg.s || ops.composite.cols() != cfg.s1 {
        return Err(Error::InvalidSketch("operators do not match the configuration".into()));
    }
    let start = Instant::now();
    let (basis, sv) = finish(r, k, cfg, ops)?;
    Ok(SubspaceEstimate {
        basis,
        singular_values: Some(sv),
        method: Method::RMusic,
        elapsed: start.elapsed(),
        config_echo: Some(*cfg),
    })
}

/// Rank-`K` sketched SVD `(Ū, Σ̄, V̄)` and the residual `‖C·X̂ − R‖_F²`.
pub fn rank_k_svd_via_sketch(
    r: &CovarianceMatrix,
    cfg: &SketchConfig,
    k: usize,
) -> Result<(SvdResult, f64)> {
    check_rank(r.dim(), k)?;
    cfg.validate_for(r.dim(), k)?;
    let ops = SketchOperators::draw(cfg, r.dim())?;
    let sk = sketched_svd(r, k, &ops)?;
    let residual = sk.lra_residual(r);
    Ok((sk.svd, residual))
}
