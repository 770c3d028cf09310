use nclt_core::field_sampler::{FieldSample, FieldSampler, SamplerConfig};
use nclt_core::hermite::{HermiteExpansion, ProductHermite, TailExpansion};
use nclt_core::lrd_model::{CovarianceTable, LatticeDims, LongRangeParams, PowerLawCovariance, SlowVarying};
use nclt_core::sums::*;
use proptest::prelude::*;

fn spec(nu: usize, d: usize, k: usize, alpha: f64, terms: Vec<(Vec<usize>, f64)>) -> NormalizedSumSpec {
    let params = LongRangeParams::new(alpha, k, nu).unwrap();
    NormalizedSumSpec::new(nu, params, SlowVarying::One, HermiteExpansion::new(d, k, terms).unwrap()).unwrap()
}

fn white(nu: usize, d: usize, max_lag: usize) -> CovarianceTable {
    CovarianceTable::from_fn(LatticeDims::new(nu, d).unwrap(), max_lag, |lag, j, jp| {
        if j == jp && lag.iter().all(|&l| l == 0) {
            1.0
        } else {
            0.0
        }
    })
}

fn reference_cov(max_lag: usize) -> CovarianceTable {
    let a = PowerLawCovariance::balanced_amplitude(0.4, 2).unwrap();
    PowerLawCovariance::new(LatticeDims::new(1, 2).unwrap(), 0.4, vec![a, a]).unwrap().table(max_lag)
}

fn sample(nu: usize, d: usize, n: usize, f: impl Fn(usize, usize) -> f64) -> FieldSample {
    let points = n.pow(nu as u32);
    let values = (0..d).map(|j| (0..points).map(|p| f(j, p)).collect()).collect();
    FieldSample { dims: LatticeDims::new(nu, d).unwrap(), n, seed: 0, replicate: 0, values }
}

#[test]
fn functional_field_examples() {
    let s = sample(1, 2, 16, |j, p| (j * 16 + p) as f64 * 0.1 - 1.0);
    let h1 = ProductHermite::from_terms(2, vec![(vec![1, 0], 1.0)]).unwrap();
    assert_eq!(functional_field(&h1, &s).unwrap(), s.values[0]);
    let zero = sample(1, 2, 4, |_, _| 0.0);
    let h2 = ProductHermite::from_terms(2, vec![(vec![2, 0], 1.0)]).unwrap();
    assert!(functional_field(&h2, &zero).unwrap().iter().all(|&y| y == -1.0));
    let h3 = ProductHermite::from_terms(3, vec![(vec![1, 1, 0], 1.0)]).unwrap();
    assert!(functional_field(&h3, &s).is_err());
    let mixed = ProductHermite::from_terms(2, vec![(vec![2, 1], 0.5), (vec![0, 3], -1.5)]).unwrap();
    let y = functional_field(&mixed, &s).unwrap();
    for p in 0..16 {
        assert_eq!(y[p], mixed.eval(&[s.values[0][p], s.values[1][p]]).unwrap());
    }
}

#[test]
fn normalized_sum_examples() {
    let sp = spec(1, 1, 2, 0.4, vec![(vec![2], 1.0)]);
    // A_N = 32^{1 − 0.4} so the sum of 32 ones is 32^{0.4} = 4.
    assert!((normalized_sum(&[1.0; 32], 32, &sp) - 4.0).abs() < 1e-12);
    assert_eq!(normalized_sum(&[0.0; 32], 32, &sp), 0.0);
    let y: Vec<f64> = (0..32).map(|i| (i as f64).sin()).collect();
    assert_eq!(normalized_sum_rect(&y, 32, &[0.0], &sp).unwrap(), 0.0);
    assert_eq!(normalized_sum_rect(&y, 32, &[1.0], &sp).unwrap(), normalized_sum(&y, 32, &sp));
    let sp2 = spec(2, 1, 1, 0.4, vec![(vec![1], 1.0)]);
    let v = normalized_sum_rect(&[1.0; 100], 10, &[0.5, 0.5], &sp2).unwrap();
    assert!((v - 25.0 / sp2.normalization(10)).abs() < 1e-12);
    assert!(normalized_sum_rect(&y, 32, &[1.5], &sp).is_err());
}

#[test]
fn exact_variance_white_noise() {
    let sp = spec(1, 1, 1, 0.4, vec![(vec![1], 1.0)]);
    let v = exact_variance_sn(&sp, &white(1, 1, 100), 100).unwrap();
    assert!((v - 100f64.powf(-0.6)).abs() < 1e-14);
    let sp = spec(1, 1, 2, 0.4, vec![(vec![2], 1.0)]);
    let v = exact_variance_sn(&sp, &white(1, 1, 50), 50).unwrap();
    assert!((v - 2.0 * 50f64.powf(-0.2)).abs() < 1e-12);
    let tail = TailExpansion::new(1, 2, vec![(vec![3], 1.0)]).unwrap();
    let sp = sp.with_tail(tail).unwrap();
    let v = tail_second_moment(&sp, &white(1, 1, 50), 50).unwrap();
    assert!((v - 6.0 * 50f64.powf(-0.2)).abs() < 1e-12);
}

#[test]
fn non_diagonal_model_rejected() {
    let cov = CovarianceTable::from_fn(LatticeDims::new(1, 2).unwrap(), 8, |lag, j, jp| {
        if lag[0] == 0 {
            if j == jp { 1.0 } else { 0.3 }
        } else {
            0.0
        }
    });
    let sp = spec(1, 2, 2, 0.4, vec![(vec![1, 1], 1.0)]);
    assert!(exact_variance_sn(&sp, &cov, 8).is_err());
}

#[test]
fn exact_variance_matches_monte_carlo() {
    let n = 1 << 10;
    let cov = reference_cov(n);
    let sp = spec(1, 2, 2, 0.4, vec![(vec![2, 0], 1.0), (vec![1, 1], 1.0)]);
    let exact = exact_variance_sn(&sp, &cov, n).unwrap();
    let sampler = FieldSampler::new(&cov, n, &SamplerConfig::default()).unwrap();
    let rows = sample_normalized_sums(&sampler, &sp, n, &[vec![1.0]], 12, 10_000).unwrap();
    let xs: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    let m = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / m;
    let sq: Vec<f64> = xs.iter().map(|x| x * x).collect();
    let msq = sq.iter().sum::<f64>() / m;
    let se_sq = (sq.iter().map(|v| (v - msq).powi(2)).sum::<f64>() / (m - 1.0) / m).sqrt();
    let se_mean = (msq / m).sqrt();
    assert!(mean.abs() <= 3.0 * se_mean, "mean {mean}");
    assert!((msq - exact).abs() <= 3.0 * se_sq, "{msq} ± {se_sq} vs {exact}");
}

#[test]
fn tail_moment_decays() {
    let cov = reference_cov(1 << 14);
    let tail = TailExpansion::new(2, 2, vec![(vec![3, 0], 1.0), (vec![2, 2], 0.5)]).unwrap();
    let sp = spec(1, 2, 2, 0.4, vec![(vec![2, 0], 1.0), (vec![1, 1], 1.0)]).with_tail(tail).unwrap();
    let vals: Vec<f64> =
        [1usize << 8, 1 << 10, 1 << 12, 1 << 14].iter().map(|&n| tail_second_moment(&sp, &cov, n).unwrap()).collect();
    assert!(vals.windows(2).all(|w| w[1] <= w[0]), "{vals:?}");
    // Orders 3 and 4 are short-range at α = 0.4, so the tail sum grows like N
    // while A_N² grows like N^{2 − kα}: each factor 4 in N scales by 4^{-0.2}.
    let rate = 4f64.powf(-0.2);
    assert!((vals[3] / vals[2] / rate - 1.0).abs() < 0.03, "{vals:?}");
}

#[test]
fn rectangle_covariance_is_symmetric_and_reduces_to_variance() {
    let cov = reference_cov(256);
    let sp = spec(1, 2, 2, 0.4, vec![(vec![2, 0], 1.0), (vec![1, 1], 1.0)]);
    let ab = exact_covariance_rect(&sp, &cov, 256, &[0.5], &[1.0]).unwrap();
    let ba = exact_covariance_rect(&sp, &cov, 256, &[1.0], &[0.5]).unwrap();
    assert!((ab - ba).abs() < 1e-12 * ab.abs());
    let full = exact_covariance_rect(&sp, &cov, 256, &[1.0], &[1.0]).unwrap();
    assert_eq!(full, exact_variance_sn(&sp, &cov, 256).unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]
    #[test]
    fn normalized_sum_is_linear(a in -3.0f64..3.0, b in -3.0f64..3.0, ys in prop::collection::vec(-5.0f64..5.0, 64)) {
        let sp = spec(1, 1, 2, 0.3, vec![(vec![2], 1.0)]);
        let zs: Vec<f64> = ys.iter().map(|v| v.cos()).collect();
        let mix: Vec<f64> = ys.iter().zip(&zs).map(|(y, z)| a * y + b * z).collect();
        let lhs = normalized_sum(&mix, 64, &sp);
        let rhs = a * normalized_sum(&ys, 64, &sp) + b * normalized_sum(&zs, 64, &sp);
        prop_assert!((lhs - rhs).abs() < 1e-12 * (1.0 + lhs.abs()));
    }

    #[test]
    fn exact_variance_is_nonnegative_and_additive(c1 in -2.0f64..2.0, c2 in -2.0f64..2.0, alpha in 0.05f64..0.45, n in 4usize..64) {
        let a = PowerLawCovariance::balanced_amplitude(alpha, 2).unwrap();
        let cov = PowerLawCovariance::new(LatticeDims::new(1, 2).unwrap(), alpha, vec![a, a]).unwrap().table(n);
        let both = spec(1, 2, 2, alpha, vec![(vec![2, 0], c1), (vec![1, 1], c2)]);
        let first = spec(1, 2, 2, alpha, vec![(vec![2, 0], c1)]);
        let second = spec(1, 2, 2, alpha, vec![(vec![1, 1], c2)]);
        let v = exact_variance_sn(&both, &cov, n).unwrap();
        prop_assert!(v >= 0.0);
        let parts = exact_variance_sn(&first, &cov, n).unwrap() + exact_variance_sn(&second, &cov, n).unwrap();
        prop_assert!((v - parts).abs() <= 1e-10 * v.abs().max(1.0));
    }
}
