//! A fast battery of structural invariants, run by the `check` command.

use super::config::ExperimentConfig;
use super::experiment::{Check, ExperimentSetup};
use super::stats::ks_distance;
use crate::error::Result;
use crate::hermite::{hermite_poly, tail_moment_check, TailExpansion};
use crate::numerics::GaussHermite;
use crate::rng::{fill_standard_normal, stream, StreamTag};
use crate::wiener_ito::KernelSpec;
use rand::Rng;

const HERMITE_TOLERANCE: f64 = 1e-6;

fn check(name: &str, pass: bool, detail: String) -> Check {
    Check { name: name.into(), pass, detail }
}

fn hermite_orthogonality() -> Check {
    let gh = GaussHermite::new(24);
    let mut worst: f64 = 0.0;
    for &r in &[-0.9, -0.3, 0.0, 0.3, 0.9] {
        for m in 0..=5 {
            for n in 0..=5 {
                let v = gh.expect_pair(r, |x, y| hermite_poly::<f64>(m, x) * hermite_poly::<f64>(n, y));
                let target = if m == n { (1..=n).product::<usize>() as f64 * f64::powi(r, n as i32) } else { 0.0 };
                worst = worst.max((v - target).abs());
            }
        }
    }
    check("hermite_orthogonality", worst < HERMITE_TOLERANCE, format!("max error {worst:.2e}"))
}

fn tail_moment_bound() -> Result<Check> {
    let h1 = TailExpansion::new(2, 2, vec![(vec![3, 0], 1.0), (vec![1, 2], -0.5), (vec![2, 2], 0.25)])?;
    let mut worst = f64::INFINITY;
    for a in -10..=10 {
        for b in -10..=10 {
            let r = vec![vec![a as f64 / 10.0, 0.0], vec![0.0, b as f64 / 10.0]];
            let rep = tail_moment_check(&h1, &r)?;
            worst = worst.min(rep.bound - rep.lhs);
        }
    }
    Ok(check("tail_moment_bound", worst >= -1e-10, format!("min slack {worst:.3e}")))
}

fn ks_invariances(seed: u64) -> Result<Check> {
    let mut rng = stream(seed, StreamTag::Auxiliary(1), 0);
    let mut a = vec![0.0; 300];
    fill_standard_normal(&mut rng, &mut a);
    let b: Vec<f64> = (0..200).map(|_| rng.random::<f64>() * 2.0 - 0.8).collect();
    let d = ks_distance(&a, &b)?;
    let sym = ks_distance(&b, &a)?;
    let (ea, eb): (Vec<f64>, Vec<f64>) = (a.iter().map(|x| x.exp()).collect(), b.iter().map(|x| x.exp()).collect());
    let mono = ks_distance(&ea, &eb)?;
    Ok(check(
        "ks_symmetric_and_monotone_invariant",
        d == sym && d == mono && (0.0..=1.0).contains(&d),
        format!("{d} / {sym} / {mono}"),
    ))
}

fn kernel_scaling(seed: u64) -> Result<Check> {
    let mut rng = stream(seed, StreamTag::Auxiliary(2), 0);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let u = rng.random_range(0.25..4.0);
        let t = rng.random_range(0.1..1.0);
        let x = [rng.random_range(-20.0..20.0), rng.random_range(-20.0..20.0)];
        let lhs = KernelSpec::limit_at(1.0, vec![u * t], 2).eval(&x)?;
        let rhs = KernelSpec::limit_at(1.0, vec![t], 2).eval(&[u * x[0], u * x[1]])? * u;
        worst = worst.max((lhs - rhs).norm());
    }
    Ok(check("kernel_scaling", worst < 1e-12, format!("max defect {worst:.2e}")))
}

fn model_checks(cfg: &ExperimentConfig, seed: u64) -> Result<Vec<Check>> {
    let setup = ExperimentSetup::new(cfg)?;
    let n = cfg.run.ns[0];
    let cov = setup.covariance(n)?;
    let defect = cov.symmetry_defect();
    let sampler = setup.field_sampler(&cov, n)?;
    let same = sampler.sample(seed, 3) == sampler.sample(seed, 3);
    let differs = sampler.sample(seed, 3) != sampler.sample(seed, 4);
    let limit = setup.limit_sampler()?;
    let lim_same = limit.sample(seed, 5)? == limit.sample(seed, 5)?;
    Ok(vec![
        check("covariance_symmetry", defect < 1e-12, format!("defect {defect:.2e}")),
        check("field_reproducible", same && differs, format!("same replicate equal: {same}, distinct replicates differ: {differs}")),
        check("limit_reproducible", lim_same, format!("same replicate equal: {lim_same}")),
    ])
}

/// Every check of the battery, in a fixed order.
pub fn run_checks(cfg: &ExperimentConfig, seed: u64) -> Result<Vec<Check>> {
    let mut out = vec![hermite_orthogonality(), tail_moment_bound()?, ks_invariances(seed)?, kernel_scaling(seed)?];
    out.extend(model_checks(cfg, seed)?);
    Ok(out)
}
