//! Dense complex linear algebra.
//!
//! [`ComplexMatrix`] is the currency passed between modules. It wraps a
//! column-major `faer::Mat<Complex64>` and guarantees non-empty, finite
//! contents. Factorizations are backed by faer; everything here is
//! single-threaded and deterministic for fixed inputs.
//!
//! Where formulas call for a transpose of a complex matrix this crate always
//! uses the conjugate transpose. Sketching matrices are real, so for them the
//! two coincide.

pub(crate) mod decomp;
pub mod opcount;

pub use decomp::{
    principal_angles, pinv, qr_thin, svd_full, svd_truncate, tri_pinv, QrResult, SvdResult,
    DEFAULT_RCOND,
};

use faer::{Mat, MatRef};
use num_complex::Complex64;

use crate::error::{dim_err, Error, Result};

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    inner: Mat<Complex64>,
}

impl std::fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "ComplexMatrix({}x{})", self.rows(), self.cols())?;
        if self.rows() * self.cols() <= 36 {
            for i in 0..self.rows() {
                write!(f, "\n  [")?;
                for j in 0..self.cols() {
                    let z = self.inner[(i, j)];
                    write!(f, " {:+.4}{:+.4}i", z.re, z.im)?;
                }
                write!(f, " ]")?;
            }
        }
        Ok(())
    }
}

fn check_shape(rows: usize, cols: usize) -> Result<()> {
    if rows == 0 || cols == 0 {
        return dim_err(format!("matrix must be non-empty, got {rows}x{cols}"));
    }
    Ok(())
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        check_shape(rows, cols)?;
        Ok(Self { inner: Mat::zeros(rows, cols) })
    }

    pub fn identity(n: usize) -> Result<Self> {
        check_shape(n, n)?;
        Ok(Self { inner: Mat::identity(n, n) })
    }

    pub fn from_fn(
        rows: usize,
        cols: usize,
        f: impl FnMut(usize, usize) -> Complex64,
    ) -> Result<Self> {
        check_shape(rows, cols)?;
        Self::from_mat(Mat::from_fn(rows, cols, f))
    }

    /// Builds a matrix from row vectors; all rows must have equal length.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let n = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n) {
            return dim_err("ragged rows");
        }
        Self::from_fn(rows.len(), n, |i, j| rows[i][j])
    }

    /// Real row-major data embedded with zero imaginary parts.
    pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        if data.len() != rows * cols {
            return dim_err(format!(
                "expected {} entries for {rows}x{cols}, got {}",
                rows * cols,
                data.len()
            ));
        }
        Self::from_fn(rows, cols, |i, j| Complex64::new(data[i * cols + j], 0.0))
    }

    pub fn from_diag(diag: &[f64]) -> Result<Self> {
        let n = diag.len();
        Self::from_fn(n, n, |i, j| if i == j { Complex64::new(diag[i], 0.0) } else { ZERO })
    }

    /// Column vector.
    pub fn from_column(v: &[Complex64]) -> Result<Self> {
        Self::from_fn(v.len(), 1, |i, _| v[i])
    }

    /// Wraps a faer matrix after checking shape and finiteness.
    pub fn from_mat(inner: Mat<Complex64>) -> Result<Self> {
        check_shape(inner.nrows(), inner.ncols())?;
        let m = Self { inner };
        if !m.is_finite() {
            return Err(Error::Numerical("matrix contains non-finite entries".into()));
        }
        Ok(m)
    }

    /// Kernel outputs are finite whenever their inputs are; skip the scan.
    pub(crate) fn from_mat_unchecked(inner: Mat<Complex64>) -> Self {
        debug_assert!(inner.nrows() > 0 && inner.ncols() > 0);
        Self { inner }
    }

    pub fn rows(&self) -> usize {
        self.inner.nrows()
    }

    pub fn cols(&self) -> usize {
        self.inner.ncols()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows(), self.cols())
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.inner[(i, j)]
    }

    pub fn as_mat(&self) -> MatRef<'_, Complex64> {
        self.inner.as_ref()
    }

    pub fn into_mat(self) -> Mat<Complex64> {
        self.inner
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        self.inner.col_as_slice(j).to_vec()
    }

    pub(crate) fn col_slice(&self, j: usize) -> &[Complex64] {
        self.inner.col_as_slice(j)
    }

    pub fn is_finite(&self) -> bool {
        (0..self.cols()).all(|j| {
            self.inner.col_as_slice(j).iter().all(|z| z.re.is_finite() && z.im.is_finite())
        })
    }

    pub fn adjoint(&self) -> Self {
        Self::from_mat_unchecked(adjoint(self.inner.as_ref()))
    }

    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        if self.cols() != rhs.rows() {
            return dim_err(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows(),
                self.cols(),
                rhs.rows(),
                rhs.cols()
            ));
        }
        Ok(Self::from_mat_unchecked(matmul(self.as_mat(), rhs.as_mat())))
    }

    pub fn sub(&self, rhs: &Self) -> Result<Self> {
        if self.shape() != rhs.shape() {
            return dim_err("shape mismatch in subtraction");
        }
        Ok(Self::from_mat_unchecked(&self.inner - &rhs.inner))
    }

    pub fn add(&self, rhs: &Self) -> Result<Self> {
        if self.shape() != rhs.shape() {
            return dim_err("shape mismatch in addition");
        }
        Ok(Self::from_mat_unchecked(&self.inner + &rhs.inner))
    }

    pub fn scale(&self, factor: f64) -> Self {
        let inner = Mat::from_fn(self.rows(), self.cols(), |i, j| self.inner[(i, j)] * factor);
        Self::from_mat_unchecked(inner)
    }

    /// Leading `k` columns.
    pub fn leading_columns(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.cols() {
            return dim_err(format!("cannot take {k} of {} columns", self.cols()));
        }
        Ok(Self::from_mat_unchecked(self.inner.get(.., ..k).to_owned()))
    }

    /// Columns `k..`.
    pub fn trailing_columns(&self, k: usize) -> Result<Self> {
        if k >= self.cols() {
            return dim_err(format!("no columns left after {k} of {}", self.cols()));
        }
        Ok(Self::from_mat_unchecked(self.inner.get(.., k..).to_owned()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        frobenius(self.as_mat())
    }

    /// `‖A − Aᴴ‖_F`.
    pub fn hermitian_defect(&self) -> f64 {
        if self.rows() != self.cols() {
            return f64::INFINITY;
        }
        let n = self.rows();
        let mut acc = 0.0;
        for j in 0..n {
            for i in 0..n {
                acc += (self.inner[(i, j)] - self.inner[(j, i)].conj()).norm_sqr();
            }
        }
        acc.sqrt()
    }

    /// `‖AᴴA − I‖_F`.
    pub fn orthonormality_defect(&self) -> f64 {
        orthonormality_defect(self.as_mat())
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows().min(self.cols())).map(|i| self.inner[(i, i)]).sum()
    }
}

pub(crate) fn adjoint(a: MatRef<'_, Complex64>) -> Mat<Complex64> {
    Mat::from_fn(a.ncols(), a.nrows(), |i, j| a[(j, i)].conj())
}

/// Dense product, recorded in [`opcount`].
pub(crate) fn matmul(a: MatRef<'_, Complex64>, b: MatRef<'_, Complex64>) -> Mat<Complex64> {
    opcount::record_macs(a.nrows() * a.ncols() * b.ncols());
    a * b
}

/// `Aᴴ·B` without materializing the adjoint.
pub(crate) fn adjoint_matmul(
    a: MatRef<'_, Complex64>,
    b: MatRef<'_, Complex64>,
) -> Mat<Complex64> {
    opcount::record_macs(a.ncols() * a.nrows() * b.ncols());
    a.adjoint() * b
}

pub(crate) fn frobenius(a: MatRef<'_, Complex64>) -> f64 {
    let mut acc = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            acc += a[(i, j)].norm_sqr();
        }
    }
    acc.sqrt()
}

pub(crate) fn orthonormality_defect(a: MatRef<'_, Complex64>) -> f64 {
    let g = a.adjoint() * a;
    let mut acc = 0.0;
    for j in 0..g.ncols() {
        for i in 0..g.nrows() {
            let target = if i == j { ONE } else { ZERO };
            acc += (g[(i, j)] - target).norm_sqr();
        }
    }
    acc.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty_and_non_finite() {
        assert!(matches!(ComplexMatrix::zeros(0, 3), Err(Error::Dimension(_))));
        assert!(matches!(ComplexMatrix::zeros(3, 0), Err(Error::Dimension(_))));
        let bad = ComplexMatrix::from_fn(2, 2, |i, _| Complex64::new(if i == 1 { f64::NAN } else { 0.0 }, 0.0));
        assert!(matches!(bad, Err(Error::Numerical(_))));
        let inf = ComplexMatrix::from_fn(1, 1, |_, _| Complex64::new(0.0, f64::INFINITY));
        assert!(matches!(inf, Err(Error::Numerical(_))));
    }

    #[test]
    fn matmul_checks_dimensions() {
        let a = ComplexMatrix::zeros(2, 3).unwrap();
        let b = ComplexMatrix::zeros(2, 3).unwrap();
        assert!(matches!(a.matmul(&b), Err(Error::Dimension(_))));
        assert_eq!(a.matmul(&b.adjoint()).unwrap().shape(), (2, 2));
    }

    #[test]
    fn hermitian_defect_and_adjoint() {
        let a = ComplexMatrix::from_rows(&[
            vec![Complex64::new(1.0, 0.0), Complex64::new(2.0, 1.0)],
            vec![Complex64::new(2.0, -1.0), Complex64::new(3.0, 0.0)],
        ])
        .unwrap();
        assert_eq!(a.hermitian_defect(), 0.0);
        assert_eq!(a.adjoint(), a);
        let b = ComplexMatrix::from_real(2, 2, &[1.0, 2.0, 0.0, 1.0]).unwrap();
        assert!((b.hermitian_defect() - 8f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn column_slicing() {
        let a = ComplexMatrix::from_fn(3, 4, |i, j| Complex64::new((i * 4 + j) as f64, 0.0)).unwrap();
        let lead = a.leading_columns(2).unwrap();
        let tail = a.trailing_columns(2).unwrap();
        assert_eq!(lead.shape(), (3, 2));
        assert_eq!(tail.get(2, 1), Complex64::new(11.0, 0.0));
        assert!(a.leading_columns(0).is_err());
        assert!(a.trailing_columns(4).is_err());
    }
}
