mod common;

use common::*;
use stomo::simulation::{add_noise, make_angles, NoiseSpec};
use stomo::*;

#[test]
fn noiseless_scan_is_the_forward_projection() {
    let spec = PhantomSpec::shepp_logan_2d(32);
    let phantom = make_phantom(&spec).unwrap();
    let geom = ScanGeometry::parallel_covering(phantom.spec(), make_angles(12)).unwrap();
    let sino = simulate_scan(&phantom, &geom, &NoiseSpec::none()).unwrap();
    let direct = forward_project(&phantom, &geom, &AngleSubset::full(12)).unwrap();
    assert_eq!(sino.values(), direct.as_slice());
}

#[test]
fn noise_variance_matches_level() {
    let mut r = rng(31);
    let clean = uniform_vec(&mut r, 200_000, 0.0, 10.0);
    let peak = clean.iter().cloned().fold(0.0, f64::max);
    let mut noisy = clean.clone();
    add_noise(&mut noisy, &NoiseSpec::gaussian(0.02, 5)).unwrap();
    let z: Vec<f64> = noisy.iter().zip(&clean).map(|(a, b)| (a - b) / peak).collect();
    let mean = z.iter().sum::<f64>() / z.len() as f64;
    let var = z.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (z.len() - 1) as f64;
    let target = 0.02 * 0.02;
    assert!((var - target).abs() <= 0.05 * target, "{var} vs {target}");
}

#[test]
fn seeds_change_noise_not_signal() {
    let spec = PhantomSpec::shepp_logan_2d(32);
    let phantom = make_phantom(&spec).unwrap();
    let geom = ScanGeometry::parallel_covering(phantom.spec(), make_angles(8)).unwrap();
    let clean = simulate_scan(&phantom, &geom, &NoiseSpec::none()).unwrap();
    let a = simulate_scan(&phantom, &geom, &NoiseSpec::gaussian(0.02, 1)).unwrap();
    let b = simulate_scan(&phantom, &geom, &NoiseSpec::gaussian(0.02, 2)).unwrap();
    let again = simulate_scan(&phantom, &geom, &NoiseSpec::gaussian(0.02, 1)).unwrap();
    assert_ne!(a.values(), b.values());
    assert_eq!(a.values(), again.values());
    // the mean difference between two realizations is pure noise, centered on zero
    let diff: f64 = a.values().iter().zip(b.values()).map(|(u, v)| u - v).sum::<f64>() / a.values().len() as f64;
    let peak = clean.values().iter().cloned().fold(0.0, f64::max);
    assert!(diff.abs() < 0.02 * peak * 5.0 * (2.0 / a.values().len() as f64).sqrt());
}

#[test]
fn uniform_angle_spacing() {
    let a36 = make_angles(36);
    let a72 = make_angles(72);
    for w in a36.windows(2) {
        assert!((w[1] - w[0] - 10f64.to_radians()).abs() < 1e-12);
    }
    for w in a72.windows(2) {
        assert!((w[1] - w[0] - 5f64.to_radians()).abs() < 1e-12);
    }
}

#[test]
fn clean_full_angle_data_is_recoverable() {
    // mu = 0, full-angle scan: the reconstruction must fit the data closely
    let (problem, _) = parallel_problem(16, 24, 32);
    let cfg = SolverConfig {
        n0: 24,
        alpha0: 1.0,
        epochs: 3000,
        ..SolverConfig::default()
    };
    let res = fblisa_run(&problem, &vec![0.0; 256], &Regularizer::NonNeg, &cfg).unwrap();
    let all = AngleSubset::full(24);
    let ax = problem.projector().forward(&res.x_final, &all).unwrap();
    let b = problem.data().values();
    let resid: Vec<f64> = ax.iter().zip(b).map(|(u, v)| u - v).collect();
    assert!(norm(&resid) / norm(b) < 1e-3, "{}", norm(&resid) / norm(b));
}

#[test]
fn oversampling_converges_toward_the_continuous_phantom() {
    let spec = PhantomSpec::shepp_logan_2d(32);
    let grid = spec.grid().unwrap();
    let geom = ScanGeometry::parallel_covering(&grid, make_angles(6)).unwrap();
    let sim = |k| simulate_phantom_scan(&spec, &geom, &NoiseSpec::none(), k).unwrap();
    let (s1, s2, s8) = (sim(1), sim(2), sim(8));
    assert_eq!(s1.values().len(), s8.values().len());
    let dist = |a: &Sinogram| {
        let d: Vec<f64> = a.values().iter().zip(s8.values()).map(|(u, v)| u - v).collect();
        norm(&d)
    };
    assert!(dist(&s2) < dist(&s1), "{} vs {}", dist(&s2), dist(&s1));
}
