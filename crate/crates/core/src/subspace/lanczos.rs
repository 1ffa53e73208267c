//! Exact top-`K` singular subspace by block Lanczos.
//!
//! Block size `K`, full reorthogonalization against the whole Krylov basis,
//! and Rayleigh–Ritz on `T = Qᴴ·(R·Q)` after every block. Iteration stops
//! when every wanted Ritz residual `‖R·y − θ·y‖` is below `1e-12·|θ_max|` or
//! the Krylov space fills `ℂ^M`, in which case the projection is exact.

use std::time::Instant;

use faer::{Mat, Side};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use super::{check_rank, CovarianceMatrix, Method, SubspaceEstimate};
use crate::error::{Error, Result};
use crate::numerics::{adjoint_matmul, decomp, matmul, ComplexMatrix};
use crate::seed::{self, stream};

const TOL: f64 = 1e-12;
const START_SEED: u64 = 0x4B5644;

/// Removes the components of `w` along the orthonormal columns of `q`, twice.
fn project_out(q: &Mat<Complex64>, w: &mut Mat<Complex64>) {
    if q.ncols() == 0 {
        return;
    }
    for _ in 0..2 {
        let coef = adjoint_matmul(q.as_ref(), w.as_ref());
        let along = matmul(q.as_ref(), coef.as_ref());
        *w = &*w - &along;
    }
}

/// Orthonormal block spanning `w` after removing `q`; columns lost to
/// cancellation are replaced by fresh random directions.
fn next_block(
    q: &Mat<Complex64>,
    mut w: Mat<Complex64>,
    scale: f64,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> Mat<Complex64> {
    let (m, b) = w.shape();
    project_out(q, &mut w);
    let (block, r) = decomp::qr_parts(w.as_ref());
    let good: Vec<usize> = (0..b).filter(|&i| r[(i, i)].norm() > 1e-10 * scale).collect();
    if good.len() == b {
        return block;
    }
    let mut fill = Mat::from_fn(m, b, |i, j| {
        if j < good.len() {
            block[(i, good[j])]
        } else {
            Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        }
    });
    project_out(q, &mut fill);
    decomp::orthonormalize(fill.as_ref())
}

fn hstack(a: &Mat<Complex64>, b: &Mat<Complex64>) -> Mat<Complex64> {
    let split = a.ncols();
    Mat::from_fn(a.nrows(), split + b.ncols(), |i, j| {
        if j < split { a[(i, j)] } else { b[(i, j - split)] }
    })
}

/// Top-`K` left singular vectors of `R` by block Lanczos.
///
/// `R` is Hermitian, so its singular vectors are eigenvectors and the
/// wanted ones belong to the `K` eigenvalues of largest magnitude.
pub fn exact_ksvd_subspace(r: &CovarianceMatrix, k: usize) -> Result<SubspaceEstimate> {
    let m = r.dim();
    check_rank(m, k)?;
    let start = Instant::now();
    let rm = r.matrix().as_mat();
    let scale = r.matrix().frobenius_norm();

    let mut rng = seed::rng(START_SEED, stream::LANCZOS_START);
    let x0 = Mat::from_fn(m, k, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let mut q = decomp::orthonormalize(x0.as_ref());
    let mut rq = matmul(rm, q.as_ref());

    loop {
        let d = q.ncols();
        let t = adjoint_matmul(q.as_ref(), rq.as_ref());
        let t = Mat::from_fn(d, d, |i, j| (t[(i, j)] + t[(j, i)].conj()) * 0.5);
        let eig = t
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::Numerical(format!("Ritz eigensolver failed: {e:?}")))?;
        let theta: Vec<f64> = eig.S().column_vector().iter().map(|z| z.re).collect();
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| theta[b].abs().total_cmp(&theta[a].abs()).then(a.cmp(&b)));
        let wanted = &order[..k];
        let z = Mat::from_fn(d, k, |i, j| eig.U()[(i, wanted[j])]);
        let y = matmul(q.as_ref(), z.as_ref());

        let converged = {
            let ry = matmul(rq.as_ref(), z.as_ref());
            let theta_max = theta[order[0]].abs();
            (0..k).all(|j| {
                let th = theta[wanted[j]];
                let res: f64 = (0..m).map(|i| (ry[(i, j)] - y[(i, j)] * th).norm_sqr()).sum();
                res.sqrt() <= TOL * theta_max
            })
        };
        if converged || d == m {
            let basis = decomp::orthonormalize(y.as_ref());
            let sv: Vec<f64> = wanted.iter().map(|&i| theta[i].abs()).collect();
            return Ok(SubspaceEstimate {
                basis: ComplexMatrix::from_mat(basis)?,
                singular_values: Some(sv),
                method: Method::KSvd,
                elapsed: start.elapsed(),
                config_echo: None,
            });
        }

        let width = k.min(m - d);
        let last = rq.get(.., d - k..d - k + width).to_owned();
        let block = next_block(&q, last, scale, &mut rng);
        let r_block = matmul(rm, block.as_ref());
        q = hstack(&q, &block);
        rq = hstack(&rq, &r_block);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{principal_angles, svd_full};
    use rand::Rng;

    fn random_psd(m: usize, seed: u64) -> CovarianceMatrix {
        let mut rng = seed::rng(seed, 0x99);
        let g = ComplexMatrix::from_fn(m, m, |_, _| {
            Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        })
        .unwrap();
        CovarianceMatrix::new(g.matmul(&g.adjoint()).unwrap()).unwrap()
    }

    #[test]
    fn diagonal_case() {
        let r = CovarianceMatrix::new(ComplexMatrix::from_diag(&[4.0, 3.0, 2.0, 1.0]).unwrap())
            .unwrap();
        let est = exact_ksvd_subspace(&r, 2).unwrap();
        let axes =
            ComplexMatrix::from_real(4, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let angles = principal_angles(&est.basis, &axes).unwrap();
        assert!(angles.iter().all(|&a| a < 1e-10), "{angles:?}");
        let sv = est.singular_values.unwrap();
        assert!((sv[0] - 4.0).abs() < 1e-12 && (sv[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn gapless_identity() {
        let r = CovarianceMatrix::new(ComplexMatrix::identity(6).unwrap()).unwrap();
        let est = exact_ksvd_subspace(&r, 2).unwrap();
        assert_eq!(est.basis.shape(), (6, 2));
        assert!(est.basis.orthonormality_defect() < 1e-12);
    }

    #[test]
    fn matches_full_svd_on_random_psd() {
        for seed in 0..5 {
            let r = random_psd(40, seed);
            let est = exact_ksvd_subspace(&r, 5).unwrap();
            let full = svd_full(r.matrix()).unwrap();
            let top = full.u.leading_columns(5).unwrap();
            let angles = principal_angles(&est.basis, &top).unwrap();
            assert!(angles.iter().all(|&a| a < 1e-8), "seed {seed}: {angles:?}");
            let sv = est.singular_values.unwrap();
            for (a, b) in sv.iter().zip(&full.singular_values) {
                assert!((a - b).abs() <= 1e-10 * full.singular_values[0]);
            }
        }
    }

    #[test]
    fn low_rank_input_triggers_block_refill() {
        let mut rng = seed::rng(4, 0x98);
        let g = ComplexMatrix::from_fn(30, 2, |_, _| {
            Complex64::new(rng.random::<f64>(), rng.random::<f64>())
        })
        .unwrap();
        let r = CovarianceMatrix::new(g.matmul(&g.adjoint()).unwrap()).unwrap();
        let est = exact_ksvd_subspace(&r, 3).unwrap();
        assert!(est.basis.orthonormality_defect() < 1e-10);
        let angles = principal_angles(&g, &est.basis).unwrap();
        assert!(angles.iter().all(|&a| a < 1e-8));
    }
}
