//! Pseudo-spectra over an angular grid, peak picking and DoA error metrics.
//!
//! Every spectrum has the form `P(θ) = 1 / max(q(θ), 1e-18·M)` where `q` is a
//! non-negative quadratic form in the steering vector `a(θ)`:
//!
//! | builder | `q(θ)` |
//! |---|---|
//! | [`spectrum_from_noise_basis`] | `‖U_eᴴ·a‖²` |
//! | [`spectrum_from_signal_basis`] | `‖a − U_K·U_Kᴴ·a‖²` |
//! | [`spectrum_from_kernel`] | `aᴴ·W·a` |
//! | [`spectrum_from_propagator`] | `‖P̂ᴴ·a₁ − a₂‖²`, `a = [a₁; a₂]` split after `K` |
//!
//! The clamp keeps spectra finite at exact nulls without moving any peak.

use std::io::{self, Write};

use faer::Mat;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::array_sim::{steering_unchecked, ArrayGeometry};
use crate::error::{dim_err, Error, Result};
use crate::numerics::{adjoint_matmul, ComplexMatrix};
use crate::subspace::quadratic_form;

/// Orthonormality drift above which a signal basis is rejected.
pub const MAX_BASIS_DRIFT: f64 = 1e-4;

/// Grid points evaluated per dense product.
const CHUNK: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AngularGrid {
    pub start_deg: f64,
    pub stop_deg: f64,
    pub step_deg: f64,
}

impl Default for AngularGrid {
    /// `[-90°, 90°]` in steps of `0.1°`.
    fn default() -> Self {
        Self { start_deg: -90.0, stop_deg: 90.0, step_deg: 0.1 }
    }
}

impl AngularGrid {
    pub fn new(start_deg: f64, stop_deg: f64, step_deg: f64) -> Result<Self> {
        let g = Self { start_deg, stop_deg, step_deg };
        g.validate()?;
        Ok(g)
    }

    pub fn with_step(step_deg: f64) -> Result<Self> {
        Self::new(-90.0, 90.0, step_deg)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = self.start_deg.is_finite() && self.stop_deg.is_finite() && self.step_deg.is_finite();
        if !finite || self.start_deg >= self.stop_deg || self.step_deg <= 0.0 {
            return Err(Error::Domain(format!(
                "grid needs start < stop and step > 0, got [{}, {}] step {}",
                self.start_deg, self.stop_deg, self.step_deg
            )));
        }
        if self.start_deg < -90.0 || self.stop_deg > 90.0 {
            return Err(Error::Domain(format!(
                "grid [{}, {}] leaves [-90, 90]",
                self.start_deg, self.stop_deg
            )));
        }
        Ok(())
    }

    /// `⌊(stop − start)/step⌋ + 1`.
    pub fn len(&self) -> usize {
        ((self.stop_deg - self.start_deg) / self.step_deg + 1e-9).floor() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn angle(&self, i: usize) -> f64 {
        self.start_deg + i as f64 * self.step_deg
    }

    pub fn angles(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.angle(i)).collect()
    }

    /// Half the angular extent; the miss penalty used by
    /// [`doa_squared_errors`].
    pub fn half_range(&self) -> f64 {
        0.5 * (self.stop_deg - self.start_deg)
    }

    /// Default minimum peak separation, two grid steps.
    pub fn default_min_separation(&self) -> f64 {
        2.0 * self.step_deg
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PseudoSpectrum {
    pub grid: AngularGrid,
    /// Finite and positive, one per grid point.
    pub values: Vec<f64>,
}

impl PseudoSpectrum {
    pub fn new(grid: AngularGrid, values: Vec<f64>) -> Result<Self> {
        grid.validate()?;
        if values.len() != grid.len() {
            return dim_err(format!("{} values for a grid of {}", values.len(), grid.len()));
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::Numerical(format!("spectrum value {v} is not finite and positive")));
        }
        Ok(Self { grid, values })
    }

    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.values.iter().enumerate() {
            if v > self.values[best] {
                best = i;
            }
        }
        best
    }

    /// Two-column CSV `theta_deg,value`.
    pub fn write_csv(&self, mut w: impl Write) -> io::Result<()> {
        writeln!(w, "theta_deg,value")?;
        for (i, v) in self.values.iter().enumerate() {
            writeln!(w, "{},{:e}", format_angle(self.grid.angle(i)), v)?;
        }
        Ok(())
    }
}

/// Angle rounded to 1e-9° so grid arithmetic noise never reaches output.
pub fn format_angle(theta: f64) -> String {
    let r = (theta * 1e9).round() / 1e9;
    format!("{}", if r == 0.0 { 0.0 } else { r })
}

fn clamp_floor(m: usize) -> f64 {
    1e-18 * m as f64
}

/// Steering vectors for grid points `lo..hi`, one per column.
fn steering_block(geom: &ArrayGeometry, grid: &AngularGrid, lo: usize, hi: usize) -> Mat<Complex64> {
    let m = geom.num_elements;
    let mut block = Mat::<Complex64>::zeros(m, hi - lo);
    for (c, l) in (lo..hi).enumerate() {
        let a = steering_unchecked(geom, grid.angle(l));
        for i in 0..m {
            block[(i, c)] = a[i];
        }
    }
    block
}

fn check_setup(rows: usize, geom: &ArrayGeometry, grid: &AngularGrid) -> Result<()> {
    geom.validate()?;
    grid.validate()?;
    if rows != geom.num_elements {
        return dim_err(format!("basis has {rows} rows but the array has {} elements", geom.num_elements));
    }
    Ok(())
}

/// Evaluates `q` in chunks of grid points, given the steering block.
fn evaluate(
    geom: &ArrayGeometry,
    grid: &AngularGrid,
    mut q: impl FnMut(&Mat<Complex64>) -> Vec<f64>,
) -> Result<PseudoSpectrum> {
    let floor = clamp_floor(geom.num_elements);
    let l = grid.len();
    let mut values = Vec::with_capacity(l);
    let mut lo = 0;
    while lo < l {
        let hi = (lo + CHUNK).min(l);
        let block = steering_block(geom, grid, lo, hi);
        values.extend(q(&block).into_iter().map(|x| 1.0 / x.max(floor)));
        lo = hi;
    }
    PseudoSpectrum::new(*grid, values)
}

fn column_norms_sq(a: &Mat<Complex64>) -> Vec<f64> {
    (0..a.ncols())
        .map(|j| a.col_as_slice(j).iter().map(|z| z.norm_sqr()).sum())
        .collect()
}

/// `P(θ) = 1/‖U_eᴴ·a(θ)‖²`.
pub fn spectrum_from_noise_basis(
    u_e: &ComplexMatrix,
    geom: &ArrayGeometry,
    grid: &AngularGrid,
) -> Result<PseudoSpectrum> {
    check_setup(u_e.rows(), geom, grid)?;
    evaluate(geom, grid, |a| column_norms_sq(&adjoint_matmul(u_e.as_mat(), a.as_ref())))
}

/// `P(θ) = 1/‖(I − U_K·U_Kᴴ)·a(θ)‖²`.
pub fn spectrum_from_signal_basis(
    u_k: &ComplexMatrix,
    geom: &ArrayGeometry,
    grid: &AngularGrid,
) -> Result<PseudoSpectrum> {
    check_setup(u_k.rows(), geom, grid)?;
    let drift = u_k.orthonormality_defect();
    if !(drift <= MAX_BASIS_DRIFT) {
        return Err(Error::Orthonormality(drift));
    }
    let u = u_k.as_mat();
    evaluate(geom, grid, |a| {
        let coef = adjoint_matmul(u, a.as_ref());
        let resid = a - u * &coef;
        column_norms_sq(&resid)
    })
}

/// `P(θ) = 1/(a(θ)ᴴ·W·a(θ))` for Hermitian PSD weights such as
/// `(R + δI)⁻¹`.
pub fn spectrum_from_kernel(
    w: &ComplexMatrix,
    geom: &ArrayGeometry,
    grid: &AngularGrid,
) -> Result<PseudoSpectrum> {
    check_setup(w.rows(), geom, grid)?;
    if w.cols() != w.rows() {
        return dim_err("kernel must be square");
    }
    evaluate(geom, grid, |a| {
        (0..a.ncols()).map(|j| quadratic_form(w, a.col_as_slice(j))).collect()
    })
}

/// Propagator spectrum `P(θ) = 1/‖P̂ᴴ·a₁(θ) − a₂(θ)‖²` with `a₁` the first
/// `K` steering entries and `a₂` the rest, evaluated directly from the
/// propagator without orthonormalizing its noise subspace.
pub fn spectrum_from_propagator(
    p: &ComplexMatrix,
    geom: &ArrayGeometry,
    grid: &AngularGrid,
) -> Result<PseudoSpectrum> {
    let (k, rest) = p.shape();
    check_setup(k + rest, geom, grid)?;
    let pm = p.as_mat();
    evaluate(geom, grid, |a| {
        let a1 = a.get(..k, ..);
        let a2 = a.get(k.., ..);
        let diff = adjoint_matmul(pm, a1) - a2;
        column_norms_sq(&diff)
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DoaEstimate {
    /// Strictly increasing.
    pub angles_deg: Vec<f64>,
    pub peak_values: Vec<f64>,
    /// Grid indices of the peaks, in the same order.
    pub grid_indices: Vec<usize>,
    /// Number of requested peaks that could not be found.
    pub shortfall: usize,
}

/// The `K` largest strict local maxima, at least `min_separation_deg`
/// apart.
///
/// A plateau counts as one maximum located at its midpoint (the lower of
/// the two middle points for even lengths). The grid end points have a
/// single neighbour and are never peaks. Candidates are taken in order of
/// decreasing value; equal values go to the lower angle first.
pub fn find_peaks(spec: &PseudoSpectrum, k: usize, min_separation_deg: f64) -> DoaEstimate {
    let v = &spec.values;
    let n = v.len();
    let mut candidates: Vec<usize> = Vec::new();
    let mut i = 1;
    while i + 1 < n {
        if v[i] > v[i - 1] {
            let mut j = i;
            while j + 1 < n && v[j + 1] == v[i] {
                j += 1;
            }
            if j + 1 < n && v[j + 1] < v[i] {
                candidates.push(i + (j - i) / 2);
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    candidates.sort_by(|&a, &b| v[b].total_cmp(&v[a]).then(a.cmp(&b)));

    let tol = 1e-9 * spec.grid.step_deg;
    let mut chosen: Vec<usize> = Vec::with_capacity(k);
    for c in candidates {
        if chosen.len() == k {
            break;
        }
        let theta = spec.grid.angle(c);
        let clear = chosen
            .iter()
            .all(|&o| (spec.grid.angle(o) - theta).abs() >= min_separation_deg - tol);
        if clear {
            chosen.push(c);
        }
    }
    chosen.sort_unstable();
    DoaEstimate {
        angles_deg: chosen.iter().map(|&c| spec.grid.angle(c)).collect(),
        peak_values: chosen.iter().map(|&c| v[c]).collect(),
        shortfall: k - chosen.len(),
        grid_indices: chosen,
    }
}

/// RMSE after sorted-order matching; both lists must have equal length.
pub fn doa_rmse(est: &DoaEstimate, truth: &[f64]) -> Result<f64> {
    if est.angles_deg.len() != truth.len() || truth.is_empty() {
        return dim_err(format!(
            "{} estimates for {} true angles",
            est.angles_deg.len(),
            truth.len()
        ));
    }
    let mut t = truth.to_vec();
    t.sort_by(f64::total_cmp);
    let mse = est
        .angles_deg
        .iter()
        .zip(&t)
        .map(|(e, t)| (e - t).powi(2))
        .sum::<f64>()
        / t.len() as f64;
    Ok(mse.sqrt())
}

/// Squared errors per true angle, tolerating missed detections.
///
/// Estimates are matched to an order-preserving subset of the sorted truth
/// so that the total squared error is minimal; each unmatched true angle is
/// charged `penalty_deg²`. Returns one entry per true angle.
pub fn doa_squared_errors(estimates: &[f64], truth: &[f64], penalty_deg: f64) -> Result<Vec<f64>> {
    let mut t = truth.to_vec();
    t.sort_by(f64::total_cmp);
    let mut e = estimates.to_vec();
    e.sort_by(f64::total_cmp);
    let (ne, nt) = (e.len(), t.len());
    if ne > nt {
        return dim_err(format!("{ne} estimates for {nt} true angles"));
    }
    let pen = penalty_deg * penalty_deg;
    // cost[i][j]: first i estimates matched within the first j truths.
    let mut cost = vec![vec![f64::INFINITY; nt + 1]; ne + 1];
    let mut took = vec![vec![false; nt + 1]; ne + 1];
    cost[0][0] = 0.0;
    for j in 1..=nt {
        cost[0][j] = cost[0][j - 1] + pen;
    }
    for i in 1..=ne {
        for j in i..=nt {
            let skip = cost[i][j - 1] + pen;
            let take = cost[i - 1][j - 1] + (e[i - 1] - t[j - 1]).powi(2);
            if take <= skip {
                cost[i][j] = take;
                took[i][j] = true;
            } else {
                cost[i][j] = skip;
            }
        }
    }
    let mut out = vec![pen; nt];
    let (mut i, mut j) = (ne, nt);
    while j > 0 {
        if i > 0 && took[i][j] {
            out[j - 1] = (e[i - 1] - t[j - 1]).powi(2);
            i -= 1;
        }
        j -= 1;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array_sim::steering_vector;

    fn grid01() -> AngularGrid {
        AngularGrid::default()
    }

    fn spec_from(values: Vec<f64>) -> PseudoSpectrum {
        let g = AngularGrid::new(-90.0, -90.0 + (values.len() - 1) as f64, 1.0).unwrap();
        PseudoSpectrum::new(g, values).unwrap()
    }

    #[test]
    fn grid_sizes() {
        assert_eq!(grid01().len(), 1801);
        assert_eq!(AngularGrid::new(-90.0, 90.0, 0.7).unwrap().len(), 258);
        assert_eq!(AngularGrid::new(0.0, 1.0, 0.25).unwrap().len(), 5);
        assert!(AngularGrid::new(1.0, 0.0, 0.1).is_err());
        assert!(AngularGrid::new(0.0, 1.0, 0.0).is_err());
        assert!(AngularGrid::new(-91.0, 1.0, 1.0).is_err());
        assert_eq!(format_angle(grid01().angle(900)), "0");
        assert_eq!(format_angle(grid01().angle(1)), "-89.9");
    }

    #[test]
    fn noise_basis_peak_at_source() {
        let geom = ArrayGeometry::half_wavelength(8).unwrap();
        let a = steering_vector(&geom, 0.0).unwrap();
        let r = ComplexMatrix::from_column(&a).unwrap();
        let cov = r.matmul(&r.adjoint()).unwrap();
        let svd = crate::numerics::svd_full(&cov).unwrap();
        let u_e = svd.u.trailing_columns(1).unwrap();
        let spec = spectrum_from_noise_basis(&u_e, &geom, &grid01()).unwrap();
        assert_eq!(spec.argmax(), 900);
        assert!(spec.values[900] >= 1e17 / 8.0 * 0.99);
    }

    #[test]
    fn forced_peak_from_signal_basis() {
        let geom = ArrayGeometry::half_wavelength(10).unwrap();
        let a = steering_vector(&geom, 23.4).unwrap();
        let u = ComplexMatrix::from_column(&a).unwrap().scale(1.0 / 10f64.sqrt());
        let spec = spectrum_from_signal_basis(&u, &geom, &grid01()).unwrap();
        assert!((spec.grid.angle(spec.argmax()) - 23.4).abs() < 1e-9);
        assert_eq!(spec.values[spec.argmax()], 1e18 / 10.0);
    }

    #[test]
    fn rejects_bad_bases() {
        let geom = ArrayGeometry::half_wavelength(6).unwrap();
        let wrong_rows = ComplexMatrix::identity(5).unwrap();
        assert!(matches!(
            spectrum_from_noise_basis(&wrong_rows, &geom, &grid01()),
            Err(Error::Dimension(_))
        ));
        let drifted = ComplexMatrix::identity(6).unwrap().leading_columns(2).unwrap().scale(1.01);
        assert!(matches!(
            spectrum_from_signal_basis(&drifted, &geom, &grid01()),
            Err(Error::Orthonormality(_))
        ));
    }

    #[test]
    fn kernel_and_propagator_forms() {
        let geom = ArrayGeometry::half_wavelength(4).unwrap();
        let grid = AngularGrid::new(-30.0, 30.0, 10.0).unwrap();
        let eye = ComplexMatrix::identity(4).unwrap();
        let flat = spectrum_from_kernel(&eye, &geom, &grid).unwrap();
        assert!(flat.values.iter().all(|v| (v - 0.25).abs() < 1e-14));

        let p = ComplexMatrix::zeros(1, 3).unwrap();
        let s = spectrum_from_propagator(&p, &geom, &grid).unwrap();
        assert!(s.values.iter().all(|v| (v - 1.0 / 3.0).abs() < 1e-14));
    }

    #[test]
    fn csv_layout() {
        let spec = PseudoSpectrum::new(AngularGrid::new(-1.0, 1.0, 1.0).unwrap(), vec![1.0, 2.5, 1e20]).unwrap();
        let mut out = Vec::new();
        spec.write_csv(&mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "theta_deg,value\n-1,1e0\n0,2.5e0\n1,1e20\n");
        assert!(PseudoSpectrum::new(AngularGrid::new(-1.0, 1.0, 1.0).unwrap(), vec![1.0, 0.0, 1.0]).is_err());
    }

    #[test]
    fn triangular_bump() {
        let spec = spec_from(vec![1.0, 2.0, 3.0, 4.0, 3.0, 2.0, 1.0]);
        let est = find_peaks(&spec, 1, 2.0);
        assert_eq!(est.grid_indices, vec![3]);
        assert_eq!(est.shortfall, 0);
    }

    #[test]
    fn tie_goes_to_lower_angle() {
        let spec = spec_from(vec![1.0, 5.0, 1.0, 5.0, 1.0]);
        let est = find_peaks(&spec, 1, 2.0);
        assert_eq!(est.angles_deg, vec![-89.0]);
    }

    #[test]
    fn plateau_midpoint_and_shortfall() {
        let spec = spec_from(vec![1.0, 3.0, 3.0, 3.0, 1.0, 2.0, 2.0, 1.0]);
        let est = find_peaks(&spec, 4, 1.0);
        assert_eq!(est.grid_indices, vec![2, 5]);
        assert_eq!(est.shortfall, 2);
        let edge = spec_from(vec![5.0, 1.0, 2.0]);
        assert_eq!(find_peaks(&edge, 1, 1.0).shortfall, 1);
    }

    #[test]
    fn separation_is_enforced() {
        let spec = spec_from(vec![1.0, 9.0, 1.0, 8.0, 1.0, 7.0, 1.0]);
        let est = find_peaks(&spec, 2, 3.0);
        assert_eq!(est.grid_indices, vec![1, 5]);
        assert_eq!(est.peak_values, vec![9.0, 7.0]);
    }

    #[test]
    fn rmse_cases() {
        let mk = |a: Vec<f64>| DoaEstimate {
            peak_values: vec![1.0; a.len()],
            grid_indices: vec![0; a.len()],
            angles_deg: a,
            shortfall: 0,
        };
        let truth = [-10.0, 0.0, 5.0, 30.0];
        assert_eq!(doa_rmse(&mk(truth.to_vec()), &truth).unwrap(), 0.0);
        let shifted = mk(truth.iter().map(|t| t + 1.0).collect());
        assert!((doa_rmse(&shifted, &truth).unwrap() - 1.0).abs() < 1e-12);
        assert!(matches!(doa_rmse(&mk(vec![1.0]), &truth), Err(Error::Dimension(_))));

        let e = [-9.8, 0.3, 4.1, 30.05];
        let direct = (e.iter().zip(&truth).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / 4.0).sqrt();
        assert!((doa_rmse(&mk(e.to_vec()), &truth).unwrap() - direct).abs() < 1e-12);
    }

    #[test]
    fn penalized_errors() {
        let truth = [-20.0, 0.0, 20.0];
        let errs = doa_squared_errors(&[0.5], &truth, 90.0).unwrap();
        assert_eq!(errs, vec![8100.0, 0.25, 8100.0]);
        let errs = doa_squared_errors(&[-19.0, 21.0], &truth, 90.0).unwrap();
        assert_eq!(errs, vec![1.0, 8100.0, 1.0]);
        assert_eq!(doa_squared_errors(&[], &truth, 90.0).unwrap(), vec![8100.0; 3]);
        assert!(doa_squared_errors(&[1.0, 2.0], &[1.0], 90.0).is_err());
    }
}
