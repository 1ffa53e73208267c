use num_complex::Complex64;
use rmusic_core::array_sim::{
    generate_snapshot_parts, generate_snapshots, steering_matrix, ArrayGeometry, Scene, Target,
};
use rmusic_core::numerics::ComplexMatrix;
use rmusic_core::subspace::sample_covariance;

#[test]
fn sample_covariance_converges_to_model() {
    let geom = ArrayGeometry::half_wavelength(8).unwrap();
    let doas = [-20.0, 35.0];
    let scene = Scene::with_default_gains(&doas, geom, 20.0, 10_000, 11).unwrap();
    let r = sample_covariance(&generate_snapshots(&scene, 11).unwrap()).unwrap();

    let a = steering_matrix(&geom, &doas).unwrap();
    let powers: Vec<f64> = scene.targets.iter().map(|t| t.gain.norm_sqr()).collect();
    let model = a
        .matmul(&ComplexMatrix::from_diag(&powers).unwrap())
        .unwrap()
        .matmul(&a.adjoint())
        .unwrap()
        .add(&ComplexMatrix::identity(8).unwrap().scale(scene.noise_variance()))
        .unwrap();
    let rel = r.matrix().sub(&model).unwrap().frobenius_norm() / model.frobenius_norm();
    assert!(rel < 0.05, "relative deviation {rel}");
}

#[test]
fn empirical_noise_power_matches_variance() {
    let geom = ArrayGeometry::half_wavelength(4).unwrap();
    let scene = Scene {
        targets: vec![Target { doa_deg: 10.0, gain: Complex64::new(0.5, 0.5), toa_s: None }],
        array: geom,
        snr_db: 3.0,
        num_snapshots: 100_000,
    };
    let parts = generate_snapshot_parts(&scene, 5).unwrap();
    let n = parts.noise.rows() * parts.noise.cols();
    let power = parts.noise.frobenius_norm().powi(2) / n as f64;
    assert!((power / parts.noise_variance - 1.0).abs() < 0.02, "{power} vs {}", parts.noise_variance);
    assert!((parts.noise_variance - 0.5 / 10f64.powf(0.3)).abs() < 1e-15);
}
