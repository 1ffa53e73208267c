//! Random sketching operators.
//!
//! All sketches are real matrices applied to complex data, so `Sᵀ` and `Sᴴ`
//! coincide. The range sketch `S` is Gaussian with entries `N(0,1)/√s`; the
//! composite sketch `S_X = S_C·S_G` chains an `M×s0` count sketch with an
//! `s0×s1` Gaussian matrix. Each operator draws from its own seed stream
//! (see [`crate::seed`]), so changing one size never perturbs another
//! operator's entries.

use faer::Mat;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{dim_err, Error, Result};
use crate::numerics::{adjoint_matmul, matmul, opcount, ComplexMatrix, ZERO};
use crate::seed::{self, stream};

/// Sizes and seed for one R-MUSIC run.
///
/// Valid when `K ≤ s < s1 < s0 ≤ M` and `0 < eta < 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SketchConfig {
    /// Width of the Gaussian range sketch `C = R·S`.
    pub s: usize,
    /// Count-sketch width.
    pub s0: usize,
    /// Composite sketch width.
    pub s1: usize,
    pub eta: f64,
    pub seed: u64,
    /// Keep all `s` columns of the final basis instead of the leading `K`.
    #[serde(default)]
    pub oversampled_basis: bool,
}

impl SketchConfig {
    /// Default sizes for rank `k`: `s = K`, `s1 = ⌈(1+η)s⌉`, `s0 = 2K`, with
    /// `eta = 0.5`. When `K` is so small that these collide, `s1` and `s0`
    /// are bumped by one to keep the ordering strict.
    pub fn for_rank(k: usize) -> Self {
        Self::with_eta(k, 0.5)
    }

    pub fn with_eta(k: usize, eta: f64) -> Self {
        Self::sized(k, k, eta)
    }

    /// Defaults for a given range-sketch width `s ≥ K`.
    pub fn sized(k: usize, s: usize, eta: f64) -> Self {
        let s1 = (((1.0 + eta) * s as f64).ceil() as usize).max(s + 1);
        let s0 = (2 * k).max(s1 + 1);
        Self { s, s0, s1, eta, seed: 0, oversampled_basis: false }
    }

    /// Sizes at the scale of the relative-error guarantee with `ε ≈ 1/4`:
    /// `s0 = 4K + K²`, `s1 = 4K`, `s = K`.
    pub fn theorem_scale(k: usize) -> Self {
        Self { s: k, s0: 4 * k + k * k, s1: 4 * k, eta: 0.5, seed: 0, oversampled_basis: false }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate_for(&self, m: usize, k: usize) -> Result<()> {
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return Err(Error::InvalidSketch(format!("eta must lie in (0, 1), got {}", self.eta)));
        }
        if k == 0 || k >= m {
            return Err(Error::InvalidSketch(format!("rank {k} outside 1..{m}")));
        }
        let ok = k <= self.s && self.s < self.s1 && self.s1 < self.s0 && self.s0 <= m;
        if !ok {
            return Err(Error::InvalidSketch(format!(
                "need K <= s < s1 < s0 <= M, got K={k} s={} s1={} s0={} M={m}",
                self.s, self.s1, self.s0
            )));
        }
        Ok(())
    }
}

/// A linear sketching operator `S` (`rows × cols`) applied as `Sᵀ·A`.
pub trait Sketch {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;
    /// `Sᵀ·A`; `A` must have `rows()` rows.
    fn apply_left(&self, a: &ComplexMatrix) -> Result<ComplexMatrix>;
    fn to_dense(&self) -> ComplexMatrix;
}

fn conform(s: &impl Sketch, a: &ComplexMatrix) -> Result<()> {
    if a.rows() != s.rows() {
        return dim_err(format!(
            "sketch has {} rows but operand has {}",
            s.rows(),
            a.rows()
        ));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianSketch {
    mat: ComplexMatrix,
}

impl GaussianSketch {
    /// `m×s` with i.i.d. `N(0,1)/√s` entries from the range-sketch stream.
    pub fn new(m: usize, s: usize, seed: u64) -> Result<Self> {
        Self::from_stream(m, s, seed, stream::RANGE_SKETCH)
    }

    pub(crate) fn from_stream(m: usize, s: usize, seed: u64, label: u64) -> Result<Self> {
        if s == 0 || s > m {
            return dim_err(format!("gaussian sketch width {s} outside 1..={m}"));
        }
        let mut rng = seed::rng(seed, label);
        let scale = 1.0 / (s as f64).sqrt();
        let mat = Mat::from_fn(m, s, |_, _| {
            Complex64::new(scale * rng.sample::<f64, _>(StandardNormal), 0.0)
        });
        Ok(Self { mat: ComplexMatrix::from_mat_unchecked(mat) })
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.mat
    }

    /// `A·S`, the right-hand application used for the range sketch.
    pub fn apply_right(&self, a: &ComplexMatrix) -> Result<ComplexMatrix> {
        if a.cols() != self.rows() {
            return dim_err(format!(
                "operand has {} columns but sketch has {} rows",
                a.cols(),
                self.rows()
            ));
        }
        Ok(ComplexMatrix::from_mat_unchecked(matmul(a.as_mat(), self.mat.as_mat())))
    }
}

impl Sketch for GaussianSketch {
    fn rows(&self) -> usize {
        self.mat.rows()
    }

    fn cols(&self) -> usize {
        self.mat.cols()
    }

    fn apply_left(&self, a: &ComplexMatrix) -> Result<ComplexMatrix> {
        conform(self, a)?;
        Ok(ComplexMatrix::from_mat_unchecked(adjoint_matmul(self.mat.as_mat(), a.as_mat())))
    }

    fn to_dense(&self) -> ComplexMatrix {
        self.mat.clone()
    }
}

/// Sparse `m×s0` sign matrix: row `i` holds `signs[i]` in column `buckets[i]`
/// and zeros elsewhere.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountSketch {
    buckets: Vec<usize>,
    signs: Vec<i8>,
    width: usize,
}

impl CountSketch {
    pub fn new(m: usize, s0: usize, seed: u64) -> Result<Self> {
        Self::from_stream(m, s0, seed, stream::COUNT_SKETCH)
    }

    pub(crate) fn from_stream(m: usize, s0: usize, seed: u64, label: u64) -> Result<Self> {
        if s0 == 0 || s0 > m {
            return dim_err(format!("count sketch width {s0} outside 1..={m}"));
        }
        let mut rng = seed::rng(seed, label);
        let mut buckets = Vec::with_capacity(m);
        let mut signs = Vec::with_capacity(m);
        for _ in 0..m {
            buckets.push(rng.random_range(0..s0));
            signs.push(if rng.random::<bool>() { 1 } else { -1 });
        }
        Ok(Self { buckets, signs, width: s0 })
    }

    /// Explicit structure, mainly for tests.
    pub fn from_parts(buckets: Vec<usize>, signs: Vec<i8>, width: usize) -> Result<Self> {
        if buckets.is_empty() || buckets.len() != signs.len() {
            return dim_err("count sketch needs one bucket and one sign per row");
        }
        if width == 0 || buckets.iter().any(|&b| b >= width) {
            return dim_err(format!("bucket index outside 0..{width}"));
        }
        if signs.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::InvalidSketch("count sketch signs must be +1 or -1".into()));
        }
        Ok(Self { buckets, signs, width })
    }

    pub fn buckets(&self) -> &[usize] {
        &self.buckets
    }

    pub fn signs(&self) -> &[i8] {
        &self.signs
    }
}

impl Sketch for CountSketch {
    fn rows(&self) -> usize {
        self.buckets.len()
    }

    fn cols(&self) -> usize {
        self.width
    }

    /// One pass over `A`: row `i` is added, with its sign, into output row
    /// `buckets[i]`.
    fn apply_left(&self, a: &ComplexMatrix) -> Result<ComplexMatrix> {
        conform(self, a)?;
        let n = a.cols();
        let mut out = Mat::<Complex64>::zeros(self.width, n);
        for j in 0..n {
            let col = a.col_slice(j);
            let dst = out.col_as_slice_mut(j);
            for (i, &z) in col.iter().enumerate() {
                if self.signs[i] > 0 {
                    dst[self.buckets[i]] += z;
                } else {
                    dst[self.buckets[i]] -= z;
                }
            }
        }
        opcount::record_sketch_reads(a.rows() * n);
        Ok(ComplexMatrix::from_mat_unchecked(out))
    }

    fn to_dense(&self) -> ComplexMatrix {
        let mut mat = Mat::from_fn(self.rows(), self.width, |_, _| ZERO);
        for (i, (&b, &s)) in self.buckets.iter().zip(&self.signs).enumerate() {
            mat[(i, b)] = Complex64::new(f64::from(s), 0.0);
        }
        ComplexMatrix::from_mat_unchecked(mat)
    }
}

/// `S_X = S_C·S_G`, applied as `S_Gᵀ·(S_Cᵀ·A)` without forming `S_X`.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeSketch {
    pub count: CountSketch,
    pub gaussian: GaussianSketch,
}

impl CompositeSketch {
    pub fn new(cfg: &SketchConfig, m: usize) -> Result<Self> {
        if !(cfg.s1 < cfg.s0 && cfg.s0 <= m) {
            return dim_err(format!(
                "composite sketch needs s1 < s0 <= M, got s1={} s0={} M={m}",
                cfg.s1, cfg.s0
            ));
        }
        Ok(Self {
            count: CountSketch::from_stream(m, cfg.s0, cfg.seed, stream::COUNT_SKETCH)?,
            gaussian: GaussianSketch::from_stream(cfg.s0, cfg.s1, cfg.seed, stream::MIX_SKETCH)?,
        })
    }
}

impl Sketch for CompositeSketch {
    fn rows(&self) -> usize {
        self.count.rows()
    }

    fn cols(&self) -> usize {
        self.gaussian.cols()
    }

    fn apply_left(&self, a: &ComplexMatrix) -> Result<ComplexMatrix> {
        conform(self, a)?;
        self.gaussian.apply_left(&self.count.apply_left(a)?)
    }

    fn to_dense(&self) -> ComplexMatrix {
        let c = self.count.to_dense();
        ComplexMatrix::from_mat_unchecked(c.as_mat() * self.gaussian.matrix().as_mat())
    }
}

/// Both operators of one R-MUSIC run, drawn from `cfg.seed`.
#[derive(Debug, Clone, PartialEq)]
pub struct SketchOperators {
    pub range: GaussianSketch,
    pub composite: CompositeSketch,
}

impl SketchOperators {
    pub fn draw(cfg: &SketchConfig, m: usize) -> Result<Self> {
        Ok(Self {
            range: GaussianSketch::new(m, cfg.s, cfg.seed)?,
            composite: CompositeSketch::new(cfg, m)?,
        })
    }
}

/// Dense `m×s` Gaussian sketch with `N(0,1)/√s` entries.
pub fn gaussian_sketch(m: usize, s: usize, seed: u64) -> Result<ComplexMatrix> {
    Ok(GaussianSketch::new(m, s, seed)?.mat)
}

pub fn count_sketch(m: usize, s0: usize, seed: u64) -> Result<CountSketch> {
    CountSketch::new(m, s0, seed)
}

/// Dense `S_X = S_C·S_G` (`m×s1`).
pub fn composite_sketch(cfg: &SketchConfig, m: usize) -> Result<ComplexMatrix> {
    Ok(CompositeSketch::new(cfg, m)?.to_dense())
}

/// `Sᵀ·A`.
pub fn apply_sketch_left(s: &impl Sketch, a: &ComplexMatrix) -> Result<ComplexMatrix> {
    s.apply_left(a)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random(m: usize, n: usize, seed: u64) -> ComplexMatrix {
        let mut rng = seed::rng(seed, 0x77);
        ComplexMatrix::from_fn(m, n, |_, _| {
            Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        })
        .unwrap()
    }

    fn max_abs_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
        let mut worst = 0.0f64;
        for j in 0..a.cols() {
            for i in 0..a.rows() {
                worst = worst.max((a.get(i, j) - b.get(i, j)).norm());
            }
        }
        worst
    }

    #[test]
    fn default_sizes() {
        let c = SketchConfig::for_rank(9);
        assert_eq!((c.s, c.s1, c.s0), (9, 14, 18));
        c.validate_for(300, 9).unwrap();
        for k in 1..40 {
            SketchConfig::for_rank(k).validate_for(200, k).unwrap();
        }
        let t = SketchConfig::theorem_scale(3);
        assert_eq!((t.s, t.s1, t.s0), (3, 12, 21));
        t.validate_for(200, 3).unwrap();
    }

    #[test]
    fn validation_rejects_bad_orderings() {
        let mut c = SketchConfig::for_rank(4);
        c.s0 = c.s1;
        assert!(matches!(c.validate_for(100, 4), Err(Error::InvalidSketch(_))));
        let c = SketchConfig::for_rank(4);
        assert!(c.validate_for(c.s0 - 1, 4).is_err());
        let mut c = SketchConfig::for_rank(4);
        c.eta = 1.0;
        assert!(c.validate_for(100, 4).is_err());
        assert!(SketchConfig::for_rank(4).validate_for(100, 5).is_err());
    }

    #[test]
    fn gaussian_shape_and_scale() {
        let s = gaussian_sketch(300, 9, 1).unwrap();
        assert_eq!(s.shape(), (300, 9));
        assert!((0..9).all(|j| s.column(j).iter().all(|z| z.im == 0.0)));
        assert!(gaussian_sketch(5, 6, 1).is_err());
        assert!(gaussian_sketch(5, 0, 1).is_err());

        let g = gaussian_sketch(100_000, 1, 3).unwrap();
        let v: Vec<f64> = g.column(0).iter().map(|z| z.re).collect();
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (v.len() - 1) as f64;
        assert!((var - 1.0).abs() < 0.02, "variance {var}");
    }

    #[test]
    fn gaussian_column_norm_expectation() {
        let (m, s) = (200, 4);
        let mut acc = 0.0;
        for seed in 0..200 {
            let g = gaussian_sketch(m, s, seed).unwrap();
            acc += g.column(0).iter().map(|z| z.norm_sqr()).sum::<f64>();
        }
        let mean = acc / 200.0;
        let expected = m as f64 / s as f64;
        assert!((mean / expected - 1.0).abs() < 0.05, "{mean} vs {expected}");
    }

    #[test]
    fn count_sketch_structure() {
        let cs = count_sketch(500, 20, 9).unwrap();
        let dense = cs.to_dense();
        for i in 0..500 {
            let nz: Vec<_> = (0..20).map(|j| dense.get(i, j)).filter(|z| *z != ZERO).collect();
            assert_eq!(nz.len(), 1);
            assert!(nz[0] == Complex64::new(1.0, 0.0) || nz[0] == Complex64::new(-1.0, 0.0));
        }
        let one = count_sketch(1, 1, 4).unwrap();
        assert_eq!(one.to_dense().get(0, 0).norm(), 1.0);
        assert!(count_sketch(3, 4, 0).is_err());
    }

    #[test]
    fn count_sketch_histogram() {
        let (m, s0) = (100_000, 10);
        let cs = count_sketch(m, s0, 21).unwrap();
        let mut hist = vec![0usize; s0];
        for &b in cs.buckets() {
            hist[b] += 1;
        }
        let expected = (m / s0) as f64;
        for h in hist {
            assert!((h as f64 / expected - 1.0).abs() < 0.03);
        }
        let plus = cs.signs().iter().filter(|&&s| s > 0).count() as f64 / m as f64;
        assert!((plus - 0.5).abs() < 0.02 * 0.5);
    }

    #[test]
    fn count_sketch_stub_sums_rows() {
        let cs = CountSketch::from_parts(vec![0; 4], vec![1; 4], 3).unwrap();
        let a = random(4, 5, 2);
        let out = cs.apply_left(&a).unwrap();
        for j in 0..5 {
            let sum: Complex64 = (0..4).map(|i| a.get(i, j)).sum();
            assert!((out.get(0, j) - sum).norm() < 1e-14);
            assert_eq!(out.get(1, j), ZERO);
            assert_eq!(out.get(2, j), ZERO);
        }
        assert!(CountSketch::from_parts(vec![0, 3], vec![1, 1], 3).is_err());
        assert!(CountSketch::from_parts(vec![0, 1], vec![1, 0], 3).is_err());
    }

    #[test]
    fn applications_match_dense_products() {
        let m = 60;
        let a = random(m, 7, 5);
        let g = GaussianSketch::new(m, 8, 1).unwrap();
        let dense = g.to_dense().adjoint().matmul(&a).unwrap();
        assert!(max_abs_diff(&g.apply_left(&a).unwrap(), &dense) < 1e-12);

        let cs = count_sketch(m, 12, 2).unwrap();
        let dense = cs.to_dense().adjoint().matmul(&a).unwrap();
        assert!(max_abs_diff(&apply_sketch_left(&cs, &a).unwrap(), &dense) < 1e-12);

        let zero = ComplexMatrix::zeros(m, 3).unwrap();
        assert_eq!(cs.apply_left(&zero).unwrap(), ComplexMatrix::zeros(12, 3).unwrap());
        assert!(cs.apply_left(&random(m + 1, 2, 0)).is_err());
    }

    #[test]
    fn composite_equals_explicit_product() {
        let cfg = SketchConfig { s: 10, s0: 18, s1: 14, eta: 0.5, seed: 33, oversampled_basis: false };
        let op = CompositeSketch::new(&cfg, 200).unwrap();
        let sx = composite_sketch(&cfg, 200).unwrap();
        assert_eq!(sx.shape(), (200, 14));
        let explicit = op.count.to_dense().matmul(op.gaussian.matrix()).unwrap();
        assert_eq!(sx, explicit);

        let a = random(200, 6, 8);
        let fast = op.apply_left(&a).unwrap();
        let slow = sx.adjoint().matmul(&a).unwrap();
        assert!(max_abs_diff(&fast, &slow) < 1e-10);

        let bad = SketchConfig { s0: 201, ..cfg };
        assert!(matches!(composite_sketch(&bad, 200), Err(Error::Dimension(_))));
    }

    #[test]
    fn count_sketch_reads_each_entry_once() {
        let a = random(300, 40, 3);
        let cs = count_sketch(300, 17, 5).unwrap();
        let (_, ops) = opcount::measure(|| cs.apply_left(&a).unwrap());
        assert_eq!(ops.sketch_reads, 300 * 40);
        assert_eq!(ops.dense_macs, 0);
    }

    #[test]
    fn operators_are_seed_deterministic() {
        let cfg = SketchConfig::for_rank(5).with_seed(12);
        assert_eq!(SketchOperators::draw(&cfg, 100).unwrap(), SketchOperators::draw(&cfg, 100).unwrap());
        let other = SketchOperators::draw(&cfg.with_seed(13), 100).unwrap();
        assert_ne!(other, SketchOperators::draw(&cfg, 100).unwrap());
        assert_eq!(count_sketch(50, 7, 1).unwrap(), count_sketch(50, 7, 1).unwrap());
    }

    #[test]
    fn gaussian_preserves_norm_in_expectation() {
        let x = random(64, 1, 99);
        let x = x.scale(1.0 / x.frobenius_norm());
        let mut acc = 0.0;
        for seed in 0..500 {
            let g = GaussianSketch::new(64, 16, seed).unwrap();
            acc += g.apply_left(&x).unwrap().frobenius_norm().powi(2);
        }
        assert!((acc / 500.0 - 1.0).abs() < 0.05);
    }
}
