use nclt_core::hermite::HermiteExpansion;
use nclt_core::lrd_model::{AngularFactor, LatticeDims, PowerLawCovariance};
use nclt_core::spectral_measure::LimitSpectralModel;
use nclt_core::wiener_ito::*;
use num_complex::Complex64;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn coupled_model() -> LimitSpectralModel {
    let cross = c(0.3, 0.2);
    let b = vec![
        AngularFactor::Constant(c(1.0, 0.0)),
        AngularFactor::Signed { plus: cross, minus: cross.conj() },
        AngularFactor::Signed { plus: cross.conj(), minus: cross },
        AngularFactor::Constant(c(0.7, 0.0)),
    ];
    LimitSpectralModel::new(LatticeDims::new(1, 2).unwrap(), 0.4, 1.0, b).unwrap()
}

fn scalar_model(alpha: f64) -> LimitSpectralModel {
    let b = vec![AngularFactor::Constant(c(1.0, 0.0))];
    LimitSpectralModel::new(LatticeDims::new(1, 1).unwrap(), alpha, 1.0, b).unwrap()
}

fn reference() -> (LimitSpectralModel, HermiteExpansion<f64>, PowerLawCovariance) {
    let alpha = 0.4;
    let a = PowerLawCovariance::balanced_amplitude(alpha, 2).unwrap();
    let pl = PowerLawCovariance::new(LatticeDims::new(1, 2).unwrap(), alpha, vec![a, a]).unwrap();
    let h = HermiteExpansion::new(2, 2, vec![(vec![2, 0], 1.0), (vec![1, 1], 1.0)]).unwrap();
    (LimitSpectralModel::from_power_law(&pl).unwrap(), h, pl)
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    (m, xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0))
}

/// `|estimate − target| ≤ 3 · sd/√n` for the sample mean of `xs`.
fn within_three_se(xs: &[f64], target: f64) -> bool {
    let (m, v) = mean_var(xs);
    (m - target).abs() <= 3.0 * (v / xs.len() as f64).sqrt()
}

#[test]
fn increments_reproduce_cell_masses() {
    let part = SymmetricPartition::new(1, 4.0, 8).unwrap();
    let measure = part.measure(&coupled_model()).unwrap();
    let sampler = IncrementSampler::new(&measure).unwrap();
    let reps = 100_000u64;
    let cell = 2;
    let other = 1;
    let (mut p00, mut p11, mut x_re, mut x_im, mut dist) = (vec![], vec![], vec![], vec![], vec![]);
    for r in 0..reps {
        let z = sampler.sample(7, r);
        for j in 0..2 {
            for f in 0..8 {
                assert_eq!(z.get(j, 7 - f), z.get(j, f).conj());
            }
        }
        p00.push(z.get(0, cell).norm_sqr());
        p11.push(z.get(1, cell).norm_sqr());
        let x = z.get(0, cell) * z.get(1, cell).conj();
        x_re.push(x.re);
        x_im.push(x.im);
        dist.push((z.get(0, cell) * z.get(0, other).conj()).re);
    }
    let g = &measure.masses[cell];
    assert!(within_three_se(&p00, g[(0, 0)].re));
    assert!(within_three_se(&p11, g[(1, 1)].re));
    assert!(within_three_se(&x_re, g[(0, 1)].re));
    assert!(within_three_se(&x_im, g[(0, 1)].im));
    assert!(within_three_se(&dist, 0.0));
}

#[test]
fn common_cells_share_noise_across_extended_partitions() {
    let model = scalar_model(0.3);
    let small = SymmetricPartition::new(1, 4.0, 16).unwrap();
    let large = small.extended();
    let a = IncrementSampler::new(&small.measure(&model).unwrap()).unwrap().sample(3, 11);
    let b = IncrementSampler::new(&large.measure(&model).unwrap()).unwrap().sample(3, 11);
    // Same width: cell i of the small grid is cell i + 8 of the large one.
    for i in 0..16 {
        let (ga, gb) = (a.get(0, i), b.get(0, i + 8));
        assert!((ga - gb).norm() < 1e-12 * ga.norm().max(1e-300), "cell {i}");
    }
}

#[test]
fn first_order_integral_is_gaussian_with_isometric_variance() {
    let model = scalar_model(0.4);
    let part = SymmetricPartition::new(1, 6.0, 12).unwrap();
    let measure = part.measure(&model).unwrap();
    let grid = part.grid();
    let kernel = KernelSpec::limit(1.0, 1, 1);
    let oracle: f64 = (0..grid.count())
        .map(|f| {
            let x = grid.center(f)[0];
            let v = if x == 0.0 { c(1.0, 0.0) } else { (c(0.0, x).exp() - 1.0) / c(0.0, x) };
            v.norm_sqr() * measure.masses[f][(0, 0)].re
        })
        .sum();
    let sampler = IncrementSampler::new(&measure).unwrap();
    let xs: Vec<f64> =
        (0..100_000).map(|r| multiple_integral(&kernel, &sampler.sample(5, r), &[0]).unwrap()).collect();
    let n = xs.len() as f64;
    let (m, v) = mean_var(&xs);
    let sq: Vec<f64> = xs.iter().map(|x| (x - m).powi(2)).collect();
    assert!(within_three_se(&sq, oracle), "variance {v} vs {oracle}");
    let sd = v.sqrt();
    let skew = xs.iter().map(|x| ((x - m) / sd).powi(3)).sum::<f64>() / n;
    let kurt = xs.iter().map(|x| ((x - m) / sd).powi(4)).sum::<f64>() / n - 3.0;
    assert!(skew.abs() < 3.0 * (6.0 / n).sqrt(), "skewness {skew}");
    assert!(kurt.abs() < 3.0 * (24.0 / n).sqrt(), "excess kurtosis {kurt}");
}

#[test]
fn second_order_integrals_have_mean_zero_and_symmetric_slots() {
    let part = SymmetricPartition::new(1, 8.0, 32).unwrap();
    let measure = part.measure(&coupled_model()).unwrap();
    let sampler = IncrementSampler::new(&measure).unwrap();
    let kernel = KernelSpec::limit_at(1.0, vec![0.8], 2);
    let mut xs = Vec::new();
    for r in 0..20_000 {
        let z = sampler.sample(9, r);
        let a = multiple_integral(&kernel, &z, &[0, 1]).unwrap();
        let b = multiple_integral(&kernel, &z, &[1, 0]).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
        xs.push(multiple_integral(&kernel, &z, &[0, 0]).unwrap() + a);
    }
    assert!(within_three_se(&xs, 0.0));
}

#[test]
fn uncompensated_sampler_matches_discrete_isometry() {
    let (model, h, _) = reference();
    let part = SymmetricPartition::new(1, 8.0, 32).unwrap();
    let ts = vec![vec![0.5], vec![1.0]];
    let exact = discrete_covariance(&h, &part.measure(&model).unwrap(), &ts).unwrap();
    let s = LimitSampler::new(&h, &model, part, ts, false).unwrap();
    let xs = s.sample_many(21, 40_000).unwrap();
    for (a, b) in [(0, 0), (0, 1), (1, 1)] {
        let prods: Vec<f64> = xs.iter().map(|x| x[a] * x[b]).collect();
        assert!(within_three_se(&prods, exact[(a, b)]), "entry ({a},{b})");
    }
}

#[test]
fn continuum_isometry_matches_lattice_variance() {
    // Exact lattice variance of the normalized sum at a large N, from lag sums.
    let (model, h, pl) = reference();
    let n: i64 = 1 << 16;
    let alpha = pl.alpha;
    let mut v = 0.0;
    for y in -(n - 1)..n {
        let r = pl.value(0, 0, &[y]);
        v += (n - y.abs()) as f64 * 3.0 * r * r;
    }
    v *= (n as f64).powf(-(2.0 - 2.0 * alpha));
    let full = limit_covariance(&h, &model, &[1.0]).unwrap();
    assert!((full[(0, 0)] - v).abs() < 1e-4 * v, "{} vs {v}", full[(0, 0)]);
}

#[test]
fn degenerate_limit_samples() {
    let (model, h, _) = reference();
    let part = SymmetricPartition::default();
    let zero = HermiteExpansion::zero(2, 2).unwrap();
    assert_eq!(sample_limit(&zero, &model, part, 1, 0).unwrap(), 0.0);
    let v = sample_limit_joint(&h, &model, part, vec![vec![0.0], vec![1.0]], 1, 0).unwrap();
    assert_eq!(v[0], 0.0);
    let joint = sample_limit_joint(&h, &model, part, vec![vec![1.0]], 4, 17).unwrap();
    assert_eq!(joint[0], sample_limit(&h, &model, part, 4, 17).unwrap());
}

#[test]
fn limit_mean_is_zero_and_variance_stable_under_extension() {
    let (model, h, _) = reference();
    let base = SymmetricPartition::default();
    let reps = 10_000;
    let a = LimitSampler::new(&h, &model, base, vec![vec![1.0]], true).unwrap().sample_many(2, reps).unwrap();
    let b = LimitSampler::new(&h, &model, base.extended(), vec![vec![1.0]], true)
        .unwrap()
        .sample_many(2, reps)
        .unwrap();
    let a: Vec<f64> = a.into_iter().map(|x| x[0]).collect();
    let b: Vec<f64> = b.into_iter().map(|x| x[0]).collect();
    assert!(within_three_se(&a, 0.0));
    let (va, vb) = (mean_var(&a).1, mean_var(&b).1);
    assert!((va - vb).abs() < 0.05 * va, "{va} vs {vb}");
}

#[test]
fn self_similarity_identity_and_variance_scaling() {
    let (model, h, _) = reference();
    let part = SymmetricPartition::default();
    let one = self_similarity_check(&h, &model, part, 1.0, vec![1.0], 3, 200, 8).unwrap();
    assert_eq!(one.variance_z, 0.0);
    assert!(one.moment_z.iter().all(|&z| z == 0.0));
    let two = self_similarity_check(&h, &model, part, 2.0, vec![0.5], 2, 10_000, 8).unwrap();
    assert!(two.variance_z.abs() <= 3.0, "{two:?}");
}

proptest! {
    #[test]
    fn scaled_time_kernel_identity(u in 0.1f64..4.0, t in 0.0f64..2.0, x1 in -30.0f64..30.0, x2 in -30.0f64..30.0) {
        let lhs = KernelSpec::limit_at(1.0, vec![u * t], 2).eval(&[x1, x2]).unwrap();
        let rhs = KernelSpec::limit_at(1.0, vec![t], 2).eval(&[u * x1, u * x2]).unwrap() * u;
        prop_assert!((lhs - rhs).norm() <= 1e-12 * lhs.norm().max(1.0));
    }

    #[test]
    fn increments_are_hermitian(seed in any::<u64>(), rep in 0u64..1000) {
        let part = SymmetricPartition::new(1, 3.0, 6).unwrap();
        let z = sample_increments(&part.measure(&coupled_model()).unwrap(), seed, rep).unwrap();
        for j in 0..2 {
            for f in 0..6 {
                prop_assert_eq!(z.get(j, 5 - f), z.get(j, f).conj());
            }
        }
    }
}
