use nclt_core::field_sampler::block_covariance;
use nclt_core::lrd_model::*;
use nclt_core::linalg::RMatrix;
use proptest::prelude::*;

/// `2∫_0^π u^{α−1} cos(pu) du` after `u = v^{1/α}`, by composite Simpson.
fn direct_covariance(alpha: f64, p: f64) -> f64 {
    let top = std::f64::consts::PI.powf(alpha);
    let m = 200_000;
    let h = top / m as f64;
    let f = |v: f64| (p * v.powf(1.0 / alpha)).cos();
    let mut s = f(0.0) + f(top);
    for i in 1..m {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
    }
    2.0 / alpha * s * h / 3.0
}

fn scalar_density(alpha: f64) -> SpectralDensityModel {
    let params = LongRangeParams::new(alpha, 1, 1).unwrap();
    SpectralDensityModel::isotropic(LatticeDims::new(1, 1).unwrap(), params, SmoothFactor::Constant(1.0)).unwrap()
}

fn min_eigenvalue(m: &RMatrix) -> f64 {
    m.clone().symmetric_eigen().eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
}

#[test]
fn density_covariance_matches_direct_quadrature() {
    let alpha = 0.4;
    let table = covariance_table(&scalar_density(alpha), 32, 4096).unwrap();
    for p in 0..=32i64 {
        let oracle = direct_covariance(alpha, p as f64);
        let v = table.at(0, 0, &[p]);
        assert!((v - oracle).abs() < 1e-6 * oracle.abs().max(1.0), "p = {p}: {v} vs {oracle}");
    }
}

#[test]
fn normalized_density_model_has_unit_variances() {
    let spec = ModelSpec::from_toml("nu = 1\nd = 2\nalpha = 0.4\nk = 2\nkind = \"density\"").unwrap();
    let cov = spec.build().unwrap().covariance(64).unwrap();
    assert!((cov.at(0, 0, &[0]) - 1.0).abs() < 1e-9);
    assert!((cov.at(1, 1, &[0]) - 1.0).abs() < 1e-9);
    assert!(cov.at(0, 1, &[0]).abs() < 1e-9);
    assert!(min_eigenvalue(&block_covariance(&cov, 32).unwrap()) > -1e-10);
}

#[test]
fn slowly_varying_factors() {
    for l in [SlowVarying::One, SlowVarying::Log] {
        for lambda in [0.5, 2.0, 10.0] {
            let t = 1e200;
            assert!((l.eval(lambda * t) / l.eval(t) - 1.0).abs() < 0.01);
        }
        assert!((1..1000).all(|t| l.eval(t as f64).is_finite() && l.eval(t as f64) >= 1.0));
    }
}

#[test]
fn invalid_models_are_rejected() {
    assert!(LatticeDims::new(0, 1).is_err());
    assert!(LatticeDims::new(1, 0).is_err());
    assert!(ModelSpec::from_toml("nu = 1\nd = 1\nalpha = 0.6\nk = 2\n").unwrap().build().is_err());
    assert!(ModelSpec::from_toml("nu = 1\nd = 1\nalpha = 0.4\nk = 2\nextra = 1\n").is_err());
}

#[test]
fn reduction_whitens_a_degenerate_covariance() {
    let c0 = RMatrix::from_row_slice(3, 3, &[2.0, 1.0, 3.0, 1.0, 1.0, 2.0, 3.0, 2.0, 5.0]);
    let red = orthonormal_reduction(&c0);
    assert_eq!(red.rank, 2);
    let white = &red.forward * &c0 * red.forward.transpose();
    assert!((white - RMatrix::identity(2, 2)).abs().max() < 1e-10);
    let back = &red.reconstruction * red.reconstruction.transpose();
    assert!((back - c0).abs().max() < 1e-10);
}

proptest! {
    #[test]
    fn long_range_range_is_strict(alpha in -0.5f64..2.5, k in 1usize..4, nu in 1usize..3) {
        let ok = LongRangeParams::new(alpha, k, nu).is_ok();
        prop_assert_eq!(ok, alpha > 0.0 && alpha < nu as f64 / k as f64);
    }

    #[test]
    fn power_law_tables_are_symmetric_and_psd(alpha in 0.05f64..0.45, ratio in 0.2f64..1.0, n in 4usize..24) {
        let a = PowerLawCovariance::balanced_amplitude(alpha, 2).unwrap();
        let dims = LatticeDims::new(1, 2).unwrap();
        let cov = PowerLawCovariance::new(dims, alpha, vec![a, ratio * a]).unwrap().table(2 * n);
        prop_assert!(cov.symmetry_defect() < 1e-14);
        for lag in cov.lags() {
            let neg: Vec<i64> = lag.iter().map(|v| -v).collect();
            for j in 0..2 {
                for jp in 0..2 {
                    prop_assert_eq!(cov.at(jp, j, &neg), cov.at(j, jp, &lag));
                }
            }
        }
        prop_assert!(min_eigenvalue(&block_covariance(&cov, n).unwrap()) > -1e-10);
    }

    #[test]
    fn density_tables_are_psd(alpha in 0.1f64..0.9, n in 4usize..24) {
        let cov = covariance_table(&scalar_density(alpha), 2 * n, 1024).unwrap();
        prop_assert!(min_eigenvalue(&block_covariance(&cov, n).unwrap()) > -1e-10);
        prop_assert!(cov.at(0, 0, &[0]) > 0.0);
    }
}
