use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use swe_lab::riesz::{increment_variance, make_params, LightCone, PlanePoint, Region, TimeBand};
use swe_lab::sampler::{
    assemble_covariance, empirical_covariance, factorize, hurst_from_covariance, hurst_from_paths, regions_covariance,
    sample, sample_fbm_crosssection, sample_vectors, v1_covariance_matrix, GridSampler, GridSpec,
};

#[test]
fn increment_variance_by_monte_carlo() {
    let p = make_params(0.5).unwrap();
    let grid = GridSpec::new(vec![1.0], vec![1.0, 1.25], None).unwrap();
    let m = factorize(&assemble_covariance(&p, &grid).unwrap(), 1e-8).unwrap();
    let c = m.entries();
    let exact = c[(0, 0)] + c[(1, 1)] - 2.0 * c[(0, 1)];
    assert!((exact - 0.208_111_2).abs() < 5e-8, "{exact}");
    assert!((exact - increment_variance(&p, 1.0, 1.0, 0.25).unwrap()).abs() < 1e-12);

    let n = 10_000;
    let samples = sample(&m, 20, n).unwrap();
    let var = samples.iter().map(|s| (s.values[1] - s.values[0]).powi(2)).sum::<f64>() / n as f64;
    let se = exact * (2.0 / n as f64).sqrt();
    assert!((var - exact).abs() <= 3.0 * se, "{var} vs {exact} (se {se})");
}

#[test]
fn fbm_crosssection_variance_by_monte_carlo() {
    let p = make_params(0.5).unwrap();
    let tau0 = std::f64::consts::SQRT_2;
    let exact = v1_covariance_matrix(&p, tau0, &[1.0]).unwrap().entries()[(0, 0)];
    assert!((exact - 1.121_195_2).abs() < 5e-8, "{exact}");
    let n = 10_000;
    let samples = sample_fbm_crosssection(&p, tau0, &[1.0], 21, n).unwrap();
    let var = samples.iter().map(|s| s.values[0].powi(2)).sum::<f64>() / n as f64;
    let se = exact * (2.0 / n as f64).sqrt();
    assert!((var - exact).abs() <= 3.0 * se, "{var} vs {exact} (se {se})");
}

#[test]
fn hurst_exponent_on_dyadic_grid() {
    let lags = [1, 2, 4, 8, 16];
    let grid: Vec<f64> = (1..=256).map(|k| k as f64 / 256.0).collect();
    for beta in [0.2, 0.5, 0.8] {
        let p = make_params(beta).unwrap();
        let target = (2.0 - beta) / 2.0;
        let exact = hurst_from_covariance(v1_covariance_matrix(&p, 1.0, &grid).unwrap().entries(), &lags).unwrap();
        assert!((exact - target).abs() < 1e-12, "beta={beta}: {exact}");
        let samples = sample_fbm_crosssection(&p, 1.0, &grid, 22, 2000).unwrap();
        let paths: Vec<&[f64]> = samples.iter().map(|s| s.values.as_slice()).collect();
        let h = hurst_from_paths(&paths, &lags).unwrap();
        assert!((h - target).abs() <= 0.05, "beta={beta}: {h} vs {target}");
    }
}

#[test]
fn assembled_covariances_are_psd() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for beta in [0.2, 0.5, 0.8] {
        let p = make_params(beta).unwrap();
        for _ in 0..5 {
            let mut axis = |n: usize| {
                let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..3.0)).collect();
                v.sort_by(f64::total_cmp);
                v.dedup();
                v
            };
            let grid = GridSpec::new(axis(4), axis(5), None).unwrap();
            let m = assemble_covariance(&p, &grid).unwrap();
            assert!(m.min_eigenvalue() >= -1e-9, "beta={beta}: {}", m.min_eigenvalue());
        }
    }
}

#[test]
fn banded_components_are_uncorrelated() {
    let p = make_params(0.5).unwrap();
    let tau0 = 1.0;
    let points = [(1.0, 1.0), (1.5, 1.0), (2.0, 1.25)];
    let mut regions = Vec::new();
    for band in [TimeBand::before(tau0).unwrap(), TimeBand::after(tau0).unwrap()] {
        for &(tau, lambda) in &points {
            regions.push(Region::cone(&LightCone::banded(PlanePoint::from_rotated(tau, lambda), Some(band))));
        }
    }
    let m = factorize(&regions_covariance(&p, &regions).unwrap(), 1e-8).unwrap();
    let n = 10_000;
    let v = sample_vectors(&m, 24, n).unwrap();
    let emp = empirical_covariance(v.iter().map(|x| x.as_slice()));
    let c = m.entries();
    for i in 0..3 {
        for j in 3..6 {
            assert_eq!(c[(i, j)], 0.0);
            let se = (c[(i, i)] * c[(j, j)] / n as f64).sqrt();
            assert!(emp[(i, j)].abs() <= 3.0 * se, "({i},{j}): {} vs se {se}", emp[(i, j)]);
        }
    }
}

#[test]
fn empirical_covariance_converges() {
    let p = make_params(0.5).unwrap();
    let grid = GridSpec::new(vec![0.5, 1.0, 2.0], vec![0.5, 1.0, 1.25, 2.0], None).unwrap();
    let sampler = GridSampler::new(&p, grid.clone(), 1e-8).unwrap();
    let exact = assemble_covariance(&p, &grid).unwrap();
    for n in [1000, 10_000] {
        let samples = sampler.sample(25, n).unwrap();
        let emp = empirical_covariance(samples.iter().map(|s| s.values.as_slice()));
        let err = (&emp - exact.entries()).abs().max();
        let bound = 5.0 * exact.max_diag() * (2.0 / n as f64).sqrt();
        assert!(err <= bound, "n={n}: {err} > {bound}");
    }
}
