//! Propagator baseline.
//!
//! With `R = [G | H]`, `G` the first `K` columns, the propagator is the
//! least-squares solution `P̂ = (GᴴG)⁻¹·GᴴH` (`K×(M−K)`). The noise subspace
//! is spanned by `Q_n = [P̂ ; −I_{M−K}]` and its orthogonal complement, the
//! signal subspace, by `[I_K ; P̂ᴴ]`.

use std::time::Instant;

use faer::linalg::solvers::Solve;
use faer::{Mat, Side};

use super::{check_rank, CovarianceMatrix, Method, SubspaceEstimate};
use crate::error::{Error, Result};
use crate::numerics::{adjoint, adjoint_matmul, decomp, matmul, ComplexMatrix, ONE, ZERO};

/// Smallest acceptable `(min/max)²` ratio of the Cholesky pivots of `GᴴG`.
const PIVOT_RCOND: f64 = 1e-14;

#[derive(Debug, Clone)]
pub struct PropagatorEstimate {
    /// Orthonormal basis of `span([I_K ; P̂ᴴ])`.
    pub signal: SubspaceEstimate,
    /// `P̂`, `K×(M−K)`.
    pub propagator: ComplexMatrix,
}

impl PropagatorEstimate {
    /// Orthogonal projector onto the noise subspace, `I − U_s·U_sᴴ`.
    pub fn noise_projector(&self) -> ComplexMatrix {
        let u = self.signal.basis.as_mat();
        let m = u.nrows();
        let uu = matmul(u, adjoint(u).as_ref());
        let p = Mat::from_fn(m, m, |i, j| if i == j { ONE - uu[(i, j)] } else { -uu[(i, j)] });
        ComplexMatrix::from_mat_unchecked(p)
    }
}

/// Propagator and its signal basis. Only `M×K`-sized factorizations are
/// performed.
pub fn propagator_estimate(r: &CovarianceMatrix, k: usize) -> Result<PropagatorEstimate> {
    let m = r.dim();
    check_rank(m, k)?;
    let start = Instant::now();
    let rm = r.matrix().as_mat();
    let g = rm.get(.., ..k);
    let h = rm.get(.., k..);

    let gram = adjoint_matmul(g, g);
    let llt = gram
        .llt(Side::Lower)
        .map_err(|_| Error::RankDeficiency("GᴴG is not positive definite".into()))?;
    let l = llt.L();
    let (lo, hi) =
        (0..k).map(|i| l[(i, i)].re).fold((f64::INFINITY, 0.0f64), |(a, b), d| (a.min(d), b.max(d)));
    if !(lo > 0.0) || (lo / hi).powi(2) < PIVOT_RCOND {
        return Err(Error::RankDeficiency(format!(
            "GᴴG is numerically singular (pivot ratio {:.3e})",
            (lo / hi).powi(2)
        )));
    }
    let gh = adjoint_matmul(g, h);
    let p = llt.solve(gh.as_ref());

    let stacked = Mat::from_fn(m, k, |i, j| {
        if i < k {
            if i == j { ONE } else { ZERO }
        } else {
            p[(j, i - k)].conj()
        }
    });
    let basis = decomp::orthonormalize(stacked.as_ref());
    let elapsed = start.elapsed();
    Ok(PropagatorEstimate {
        signal: SubspaceEstimate {
            basis: ComplexMatrix::from_mat(basis)?,
            singular_values: None,
            method: Method::Propagator,
            elapsed,
            config_echo: None,
        },
        propagator: ComplexMatrix::from_mat(p)?,
    })
}

/// Signal basis and `M×M` noise projector.
pub fn propagator_subspace(
    r: &CovarianceMatrix,
    k: usize,
) -> Result<(SubspaceEstimate, ComplexMatrix)> {
    let est = propagator_estimate(r, k)?;
    let proj = est.noise_projector();
    Ok((est.signal, proj))
}

/// `Q_n·(Q_nᴴ·Q_n)⁻¹·Q_nᴴ` formed literally; a reference for small `M`.
#[cfg(test)]
fn literal_noise_projector(p: &ComplexMatrix) -> Result<ComplexMatrix> {
    let (k, rest) = p.shape();
    let m = k + rest;
    let qn = Mat::from_fn(m, rest, |i, j| {
        if i < k {
            p.get(i, j)
        } else if i - k == j {
            -ONE
        } else {
            ZERO
        }
    });
    let gram = qn.adjoint() * &qn;
    let inv = gram
        .llt(Side::Lower)
        .map_err(|_| Error::RankDeficiency("Q_nᴴQ_n is singular".into()))?
        .solve(adjoint(qn.as_ref()));
    ComplexMatrix::from_mat(&qn * &inv)
}
