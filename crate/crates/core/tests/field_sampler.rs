use nclt_core::field_sampler::*;
use nclt_core::lrd_model::{CovarianceTable, LatticeDims, PowerLawCovariance};
use proptest::prelude::*;

fn white(nu: usize, d: usize, max_lag: usize) -> CovarianceTable {
    CovarianceTable::from_fn(LatticeDims::new(nu, d).unwrap(), max_lag, |lag, j, jp| {
        if j == jp && lag.iter().all(|&l| l == 0) {
            1.0
        } else {
            0.0
        }
    })
}

fn power_law(alpha: f64, max_lag: usize) -> CovarianceTable {
    let a = PowerLawCovariance::balanced_amplitude(alpha, 2).unwrap();
    PowerLawCovariance::new(LatticeDims::new(1, 2).unwrap(), alpha, vec![a, 0.8 * a]).unwrap().table(max_lag)
}

fn cfg(method: SamplerMethod) -> SamplerConfig {
    SamplerConfig { method, seed: 99, ..SamplerConfig::default() }
}

fn collect(sampler: &FieldSampler, reps: u64) -> Vec<FieldSample> {
    (0..reps).map(|r| sampler.sample(99, r)).collect()
}

#[test]
fn white_noise_is_recovered_by_both_exact_methods() {
    let cov = white(1, 2, 16);
    for method in [SamplerMethod::DirectFactorization, SamplerMethod::CirculantEmbedding] {
        let s = FieldSampler::new(&cov, 8, &cfg(method)).unwrap();
        let emp = empirical_covariance(&collect(&s, 100_000), 3).unwrap();
        for j in 0..2 {
            for jp in 0..2 {
                let target = if j == jp { 1.0 } else { 0.0 };
                let (e, se) = (emp.estimate.at(j, jp, &[0]), emp.std_error.at(j, jp, &[0]));
                assert!((e - target).abs() <= 3.0 * se, "{method:?} ({j},{jp}): {e} ± {se}");
            }
        }
        assert!(coverage(&emp, &cov, 3.0).unwrap() >= 0.95);
    }
}

#[test]
fn samples_are_deterministic_per_replicate() {
    let cov = power_law(0.4, 64);
    for method in [SamplerMethod::DirectFactorization, SamplerMethod::CirculantEmbedding, SamplerMethod::SpectralGrid] {
        let c = cfg(method);
        let a = sample_field(&cov, 32, &c, 5).unwrap();
        let b = sample_field(&cov, 32, &c, 5).unwrap();
        let other = sample_field(&cov, 32, &c, 6).unwrap();
        let bits = |s: &FieldSample| s.values.iter().flatten().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
        assert_ne!(bits(&a), bits(&other));
    }
}

#[test]
fn direct_factor_reproduces_block_covariance() {
    let cov = power_law(0.3, 40);
    let n = 32;
    let s = DirectSampler::new(&cov, n).unwrap();
    let f = s.factor();
    let back = f * f.transpose();
    for (a, pa) in (0..2 * n).map(|i| (i, (i / n, (i % n) as i64))) {
        for (b, pb) in (0..2 * n).map(|i| (i, (i / n, (i % n) as i64))) {
            let target = cov.at(pa.0, pb.0, &[pb.1 - pa.1]);
            assert!((back[(a, b)] - target).abs() < 1e-10);
        }
    }
}

#[test]
fn circulant_embedding_is_exact_without_clipping() {
    let cov = power_law(0.4, 256);
    let s = CirculantSampler::new(&cov, 128, 2, 1e-6).unwrap();
    assert_eq!(s.report().clipped, 0, "{:?}", s.report());
    let induced = s.induced_covariance(127).unwrap();
    for lag in induced.lags() {
        for (j, jp) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            assert!((induced.at(j, jp, &lag) - cov.at(j, jp, &lag)).abs() < 1e-8);
        }
    }
}

#[test]
fn embedding_failure_is_reported() {
    // A covariance that is not positive definite at all.
    let cov = CovarianceTable::from_fn(LatticeDims::new(1, 1).unwrap(), 8, |lag, _, _| match lag[0].abs() {
        0 => 1.0,
        1 => 0.9,
        _ => 0.0,
    });
    assert!(CirculantSampler::new(&cov, 4, 2, 1e-6).is_err());
    assert!(DirectSampler::new(&cov, 8).is_err());
}

#[test]
fn direct_and_circulant_agree_with_table_at_large_block() {
    let cov = power_law(0.4, 2048);
    let n = 1024;
    for method in [SamplerMethod::DirectFactorization, SamplerMethod::CirculantEmbedding] {
        let s = FieldSampler::new(&cov, n, &cfg(method)).unwrap();
        let samples: Vec<FieldSample> = {
            use rayon::prelude::*;
            (0..2000u64).into_par_iter().map(|r| s.sample(99, r)).collect()
        };
        let emp = empirical_covariance(&samples, 6).unwrap();
        let cover = coverage(&emp, &cov, 3.0).unwrap();
        assert!(cover >= 0.95, "{method:?} coverage {cover}");
    }
}

#[test]
fn spectral_grid_bias_shrinks_with_resolution() {
    let cov = power_law(0.4, 2048);
    let worst = |factor: usize| {
        let s = SpectralGridSampler::new(&cov, 64, factor).unwrap();
        let induced = s.induced_covariance(16);
        induced.lags().map(|lag| (induced.at(0, 0, &lag) - cov.at(0, 0, &lag)).abs()).fold(0.0, f64::max)
    };
    let (coarse, fine) = (worst(2), worst(16));
    assert!(fine < coarse, "{coarse} vs {fine}");
    assert!(fine < 0.05);
}

#[test]
fn empirical_covariance_edge_cases() {
    let dims = LatticeDims::new(1, 1).unwrap();
    let zero = FieldSample { dims, n: 4, seed: 0, replicate: 0, values: vec![vec![0.0; 4]] };
    assert!(empirical_covariance(std::slice::from_ref(&zero), 2).is_err());
    let emp = empirical_covariance(&[zero.clone(), zero.clone()], 2).unwrap();
    assert!(emp.estimate.lags().all(|l| emp.estimate.at(0, 0, &l) == 0.0));
    assert!(empirical_covariance(&[zero.clone(), zero], 4).is_err());
}

#[test]
fn binary_and_csv_export() {
    let cov = white(2, 2, 4);
    let s = sample_field(&cov, 3, &cfg(SamplerMethod::DirectFactorization), 1).unwrap();
    let mut buf = Vec::new();
    s.write_binary(&mut buf).unwrap();
    assert_eq!(buf.len(), 8 + 5 * 8 + 2 * 9 * 8);
    assert_eq!(FieldSample::read_binary(buf.as_slice()).unwrap(), s);
    let mut csv = Vec::new();
    s.write_csv(&mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert_eq!(text.lines().next().unwrap(), "p1,p2,x1,x2");
    assert_eq!(text.lines().count(), 10);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn embedded_spectra_are_psd_and_exact(alpha in 0.05f64..0.45, n in 4usize..40) {
        let cov = power_law(alpha, 2 * n);
        let s = CirculantSampler::new(&cov, n, 2, 1e-6).unwrap();
        prop_assert!(s.report().min_eigenvalue >= -1e-6 * s.report().max_eigenvalue);
        if s.report().clipped == 0 {
            let induced = s.induced_covariance(n - 1).unwrap();
            for lag in induced.lags() {
                prop_assert!((induced.at(1, 1, &lag) - cov.at(1, 1, &lag)).abs() < 1e-8);
            }
        }
    }
}
