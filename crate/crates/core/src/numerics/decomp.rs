use faer::{Mat, MatRef};
use num_complex::Complex64;

use super::{adjoint_matmul, matmul, ComplexMatrix, ZERO};
use crate::error::{dim_err, Error, Result};

/// Relative cutoff used when pseudo-inverting sketched triangular factors.
pub const DEFAULT_RCOND: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct QrResult {
    /// `m×k`, orthonormal columns.
    pub q: ComplexMatrix,
    /// `k×k`, upper triangular with exact zeros below the diagonal.
    pub r: ComplexMatrix,
}

#[derive(Debug, Clone)]
pub struct SvdResult {
    pub u: ComplexMatrix,
    /// Non-increasing, non-negative.
    pub singular_values: Vec<f64>,
    pub v: ComplexMatrix,
}

impl SvdResult {
    pub fn rank(&self) -> usize {
        self.singular_values.len()
    }

    /// `U·diag(σ)·Vᴴ`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let us = Mat::from_fn(self.u.rows(), self.rank(), |i, j| {
            self.u.get(i, j) * self.singular_values[j]
        });
        let prod = us.as_ref() * self.v.as_mat().adjoint();
        ComplexMatrix::from_mat_unchecked(prod)
    }
}

/// Thin Householder QR of a tall matrix.
pub fn qr_thin(a: &ComplexMatrix) -> Result<QrResult> {
    let (m, n) = a.shape();
    if m < n {
        return dim_err(format!("qr_thin needs rows >= cols, got {m}x{n}"));
    }
    if !a.is_finite() {
        return Err(Error::Numerical("qr_thin input is not finite".into()));
    }
    let (q, r) = qr_parts(a.as_mat());
    Ok(QrResult {
        q: ComplexMatrix::from_mat_unchecked(q),
        r: ComplexMatrix::from_mat_unchecked(r),
    })
}

pub(crate) fn qr_parts(a: MatRef<'_, Complex64>) -> (Mat<Complex64>, Mat<Complex64>) {
    let qr = a.qr();
    let q = qr.compute_thin_Q();
    let raw = qr.thin_R();
    let k = raw.nrows();
    let r = Mat::from_fn(k, k, |i, j| if i > j { ZERO } else { raw[(i, j)] });
    (q, r)
}

/// Orthonormal basis for the columns of `a` (thin QR's `Q`).
pub(crate) fn orthonormalize(a: MatRef<'_, Complex64>) -> Mat<Complex64> {
    a.qr().compute_thin_Q()
}

/// Economy SVD: for an `m×n` input, `r = min(m, n)` singular triplets.
pub fn svd_full(a: &ComplexMatrix) -> Result<SvdResult> {
    if !a.is_finite() {
        return Err(Error::Numerical("svd input is not finite".into()));
    }
    let (u, s, v) = svd_parts(a.as_mat())?;
    Ok(SvdResult {
        u: ComplexMatrix::from_mat_unchecked(u),
        singular_values: s,
        v: ComplexMatrix::from_mat_unchecked(v),
    })
}

pub(crate) fn svd_parts(
    a: MatRef<'_, Complex64>,
) -> Result<(Mat<Complex64>, Vec<f64>, Mat<Complex64>)> {
    let svd = a
        .thin_svd()
        .map_err(|e| Error::Numerical(format!("svd did not converge: {e:?}")))?;
    let s: Vec<f64> = svd.S().column_vector().iter().map(|z| z.re).collect();
    if s.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numerical("svd produced non-finite singular values".into()));
    }
    Ok((svd.U().to_owned(), s, svd.V().to_owned()))
}

/// Keeps the leading `k` singular triplets.
pub fn svd_truncate(result: SvdResult, k: usize) -> Result<SvdResult> {
    let r = result.rank();
    if k == 0 || k > r {
        return dim_err(format!("truncation rank {k} outside 1..={r}"));
    }
    if k == r {
        return Ok(result);
    }
    Ok(SvdResult {
        u: result.u.leading_columns(k)?,
        singular_values: result.singular_values[..k].to_vec(),
        v: result.v.leading_columns(k)?,
    })
}

/// Moore–Penrose inverse of an upper-triangular factor.
///
/// Plain back substitution when every `|r_ii| ≥ rcond·max|r_jj|`; otherwise
/// the factor is treated as rank deficient and inverted through its SVD with
/// the same relative cutoff on singular values.
pub fn tri_pinv(r: &ComplexMatrix, rcond: f64) -> Result<ComplexMatrix> {
    let (n, m) = r.shape();
    if n != m {
        return dim_err(format!("tri_pinv needs a square factor, got {n}x{m}"));
    }
    if !(rcond > 0.0 && rcond < 1.0) {
        return Err(Error::Domain(format!("rcond must lie in (0, 1), got {rcond}")));
    }
    if !r.is_finite() {
        return Err(Error::Numerical("tri_pinv input is not finite".into()));
    }
    for j in 0..n {
        for i in j + 1..n {
            if r.get(i, j) != ZERO {
                return Err(Error::Domain(format!(
                    "factor is not upper triangular: entry ({i},{j}) is nonzero"
                )));
            }
        }
    }
    Ok(ComplexMatrix::from_mat_unchecked(tri_pinv_mat(r.as_mat(), rcond)?))
}

pub(crate) fn tri_pinv_mat(r: MatRef<'_, Complex64>, rcond: f64) -> Result<Mat<Complex64>> {
    let n = r.nrows();
    let dmax = (0..n).map(|i| r[(i, i)].norm()).fold(0.0, f64::max);
    let well_posed = dmax > 0.0 && (0..n).all(|i| r[(i, i)].norm() >= rcond * dmax);
    if !well_posed {
        return pinv_mat(r, rcond);
    }
    let mut x = Mat::<Complex64>::zeros(n, n);
    for j in 0..n {
        x[(j, j)] = r[(j, j)].inv();
        for i in (0..j).rev() {
            let mut acc = ZERO;
            for l in i + 1..=j {
                acc += r[(i, l)] * x[(l, j)];
            }
            x[(i, j)] = -acc / r[(i, i)];
        }
    }
    Ok(x)
}

/// General pseudo-inverse via SVD, discarding `σ < rcond·σ_max`.
pub fn pinv(a: &ComplexMatrix, rcond: f64) -> Result<ComplexMatrix> {
    if !(rcond > 0.0 && rcond < 1.0) {
        return Err(Error::Domain(format!("rcond must lie in (0, 1), got {rcond}")));
    }
    Ok(ComplexMatrix::from_mat_unchecked(pinv_mat(a.as_mat(), rcond)?))
}

pub(crate) fn pinv_mat(a: MatRef<'_, Complex64>, rcond: f64) -> Result<Mat<Complex64>> {
    let (u, s, v) = svd_parts(a)?;
    let cutoff = rcond * s.first().copied().unwrap_or(0.0);
    let kept = s.iter().take_while(|&&x| x > cutoff && x > 0.0).count();
    let vs = Mat::from_fn(v.nrows(), kept, |i, j| v[(i, j)] / s[j]);
    Ok(vs.as_ref() * u.get(.., ..kept).adjoint())
}

/// Principal angles (radians, ascending) between the column spans of `a`
/// and `b`.
///
/// Small angles come from the sines, large ones from the cosines, so
/// both ends of the range are resolved to working precision.
pub fn principal_angles(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<Vec<f64>> {
    if a.rows() != b.rows() {
        return dim_err("principal_angles: row counts differ");
    }
    let (wide, narrow) = if a.cols() >= b.cols() { (a, b) } else { (b, a) };
    if narrow.cols() > narrow.rows() {
        return dim_err("principal_angles: more columns than rows");
    }
    let qa = orthonormalize(wide.as_mat());
    let qb = orthonormalize(narrow.as_mat());
    let overlap = adjoint_matmul(qa.as_ref(), qb.as_ref());
    let (_, cosines, _) = svd_parts(overlap.as_ref())?;
    let residual = &qb - matmul(qa.as_ref(), overlap.as_ref());
    let (_, mut sines, _) = svd_parts(residual.as_ref())?;
    sines.reverse();
    Ok(cosines
        .iter()
        .zip(&sines)
        .map(|(&c, &s)| {
            let c = c.clamp(0.0, 1.0);
            if c * c >= 0.5 {
                s.clamp(0.0, 1.0).asin()
            } else {
                c.acos()
            }
        })
        .collect())
}
