use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;
use rmusic_core::array_sim::{generate_snapshots, ArrayGeometry, Scene};
use rmusic_core::numerics::{qr_thin, svd_full, ComplexMatrix};
use rmusic_core::seed;
use rmusic_core::spectrum::{
    doa_rmse, find_peaks, spectrum_from_noise_basis, spectrum_from_signal_basis, AngularGrid,
    PseudoSpectrum,
};
use rmusic_core::subspace::{exact_music_subspace, sample_covariance, CovarianceMatrix};

fn random(m: usize, n: usize, s: u64) -> ComplexMatrix {
    let mut rng = seed::rng(s, 0x3000);
    ComplexMatrix::from_fn(m, n, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
    .unwrap()
}

fn max_rel_diff(a: &PseudoSpectrum, b: &PseudoSpectrum) -> f64 {
    a.values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()))
        .fold(0.0, f64::max)
}

fn noise_free_covariance(doas: &[f64], m: usize) -> CovarianceMatrix {
    let geom = ArrayGeometry::half_wavelength(m).unwrap();
    let scene = Scene::with_default_gains(doas, geom, 300.0, 4 * m, 17).unwrap();
    sample_covariance(&generate_snapshots(&scene, 17).unwrap()).unwrap()
}

fn music_spectrum(r: &CovarianceMatrix, k: usize, grid: &AngularGrid) -> PseudoSpectrum {
    let geom = ArrayGeometry::half_wavelength(r.dim()).unwrap();
    let (_, noise) = exact_music_subspace(r, k).unwrap();
    spectrum_from_noise_basis(&noise, &geom, grid).unwrap()
}

fn distinct_doas(raw: Vec<f64>, min_sep: f64) -> Option<Vec<f64>> {
    let mut d: Vec<f64> = raw.into_iter().map(|x| (x * 100.0).round() / 100.0).collect();
    d.sort_by(f64::total_cmp);
    d.windows(2).all(|w| w[1] - w[0] >= min_sep).then_some(d)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn noise_and_signal_forms_agree(k in 1usize..19, s in any::<u64>()) {
        let g = random(20, 20, s);
        let r = g.matmul(&g.adjoint()).unwrap();
        let svd = svd_full(&r).unwrap();
        let geom = ArrayGeometry::half_wavelength(20).unwrap();
        let grid = AngularGrid::with_step(0.5).unwrap();
        let a = spectrum_from_noise_basis(&svd.u.trailing_columns(k).unwrap(), &geom, &grid).unwrap();
        let b = spectrum_from_signal_basis(&svd.u.leading_columns(k).unwrap(), &geom, &grid).unwrap();
        prop_assert!(max_rel_diff(&a, &b) <= 1e-10);
    }

    #[test]
    fn invariant_under_unitary_rotation(m in 4usize..24, k in 1usize..4, s in any::<u64>()) {
        let basis = qr_thin(&random(m, k, s)).unwrap().q;
        let w = qr_thin(&random(k, k, s ^ 1)).unwrap().q;
        let rotated = basis.matmul(&w).unwrap();
        let geom = ArrayGeometry::half_wavelength(m).unwrap();
        let grid = AngularGrid::with_step(0.5).unwrap();
        let a = spectrum_from_signal_basis(&basis, &geom, &grid).unwrap();
        let b = spectrum_from_signal_basis(&rotated, &geom, &grid).unwrap();
        prop_assert!(max_rel_diff(&a, &b) <= 1e-10);
    }

    #[test]
    fn negating_doas_mirrors_peaks(raw in prop::collection::vec(-70.0f64..70.0, 1..4)) {
        let Some(doas) = distinct_doas(raw, 5.0) else { return Ok(()) };
        let k = doas.len();
        let grid = AngularGrid::with_step(0.1).unwrap();
        let neg: Vec<f64> = doas.iter().map(|d| -d).collect();
        let p = find_peaks(&music_spectrum(&noise_free_covariance(&doas, 16), k, &grid), k, 0.2);
        let q = find_peaks(&music_spectrum(&noise_free_covariance(&neg, 16), k, &grid), k, 0.2);
        let last = grid.len() - 1;
        let mut mirrored: Vec<usize> = q.grid_indices.iter().map(|i| last - i).collect();
        mirrored.sort_unstable();
        prop_assert_eq!(p.grid_indices, mirrored);
    }

    #[test]
    fn refining_the_grid_never_hurts(raw in prop::collection::vec(-70.0f64..70.0, 1..4)) {
        let Some(doas) = distinct_doas(raw, 5.0) else { return Ok(()) };
        let k = doas.len();
        let r = noise_free_covariance(&doas, 16);
        let mut last = f64::INFINITY;
        for step in [0.8, 0.4, 0.2, 0.1] {
            let grid = AngularGrid::with_step(step).unwrap();
            let est = find_peaks(&music_spectrum(&r, k, &grid), k, 2.0 * step);
            let rmse = doa_rmse(&est, &doas).unwrap();
            prop_assert!(rmse <= last + 1e-12, "step {}: {} > {}", step, rmse, last);
            last = rmse;
        }
    }
}

#[test]
fn nine_target_scene_is_resolved_on_grid() {
    let doas = [-52.3, -40.0, -27.6, -11.1, 0.4, 13.9, 26.2, 38.7, 55.5];
    let geom = ArrayGeometry::half_wavelength(64).unwrap();
    let scene = Scene::with_default_gains(&doas, geom, 10.0, 640, 2).unwrap();
    let r = sample_covariance(&generate_snapshots(&scene, 2).unwrap()).unwrap();
    let grid = AngularGrid::default();
    let est = find_peaks(&music_spectrum(&r, 9, &grid), 9, grid.default_min_separation());
    assert_eq!(est.shortfall, 0);
    for (e, t) in est.angles_deg.iter().zip(&doas) {
        assert!((e - t).abs() <= grid.step_deg + 1e-9, "{e} vs {t}");
    }
}
