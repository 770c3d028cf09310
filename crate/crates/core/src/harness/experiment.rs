//! Lattice sums against samples of the limit, for a range of block sizes.

use super::config::ExperimentConfig;
use super::stats::{char_fn_distance, ks_distance, moment_table, sample_covariance, variance_with_se, MomentRow};
use crate::error::{Error, Result};
use crate::field_sampler::FieldSampler;
use crate::hermite::TailExpansion;
use crate::lrd_model::{CovarianceTable, FieldModel};
use crate::spectral_measure::LimitSpectralModel;
use crate::sums::{exact_covariance_rect, exact_variance_sn, functional_field, normalized_sum_nested, NormalizedSumSpec};
use crate::wiener_ito::{CompensatorReport, LimitSampler};
use rayon::prelude::*;
use serde::Serialize;
use std::time::Instant;

/// Everything built once from a configuration.
pub struct ExperimentSetup {
    pub cfg: ExperimentConfig,
    pub hash: String,
    pub model: FieldModel,
    pub limit: LimitSpectralModel,
    pub spec: NormalizedSumSpec,
    pub corners: Vec<Vec<f64>>,
}

/// `values[i][r][c]`: block size `ns[i]`, replicate `r`, corner `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct SumSamples {
    pub ns: Vec<usize>,
    pub values: Vec<Vec<Vec<f64>>>,
    /// The same sums with the tail functional added.
    pub with_tail: Option<Vec<Vec<Vec<f64>>>>,
}

impl ExperimentSetup {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let model = cfg.model.build()?;
        let limit = LimitSpectralModel::from_field_model(&model)?;
        let spec = NormalizedSumSpec::new(cfg.model.nu, model.params(), model.slow(), cfg.expansion()?)?;
        Ok(Self { cfg: cfg.clone(), hash: cfg.hash(), model, limit, spec, corners: cfg.corners() })
    }

    pub fn n_max(&self) -> usize {
        *self.cfg.run.ns.last().expect("validated non-empty")
    }

    /// Covariances reaching every lag a sampler or exact moment at `n` needs.
    pub fn covariance(&self, n: usize) -> Result<CovarianceTable> {
        self.model.covariance(n * self.cfg.sampler.embedding_factor.max(2))
    }

    pub fn field_sampler(&self, cov: &CovarianceTable, n: usize) -> Result<FieldSampler> {
        FieldSampler::new(cov, n, &self.cfg.sampler.config(0))
    }

    pub fn limit_sampler(&self) -> Result<LimitSampler> {
        LimitSampler::new(
            &self.cfg.expansion()?,
            &self.limit,
            self.cfg.partition()?,
            self.corners.clone(),
            self.cfg.limit.compensate,
        )
    }

    fn tail(&self) -> Result<Option<TailExpansion<f64>>> {
        self.cfg.tail()
    }

    fn sums_of(&self, sampler: &FieldSampler, tail: Option<&TailExpansion<f64>>, seed: u64, r: u64) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
        let outer = self.n_max();
        let sample = sampler.sample(seed, r);
        let y = functional_field(self.spec.h.as_product(), &sample)?;
        let yt = tail.map(|t| functional_field(t.as_product(), &sample)).transpose()?;
        self.cfg
            .run
            .ns
            .iter()
            .map(|&n| {
                let mut main = Vec::with_capacity(self.corners.len());
                let mut extra = Vec::new();
                for t in &self.corners {
                    let s = normalized_sum_nested(&y, outer, n, t, &self.spec)?;
                    main.push(s);
                    if let Some(yt) = &yt {
                        extra.push(s + normalized_sum_nested(yt, outer, n, t, &self.spec)?);
                    }
                }
                Ok((main, extra))
            })
            .collect()
    }

    /// Every block size is read off the corner sub-block of one field of the
    /// largest size per replicate.
    pub fn sample_sums(&self, sampler: &FieldSampler, seed: u64, replicates: u64) -> Result<SumSamples> {
        let tail = self.tail()?;
        let per_rep: Vec<Vec<(Vec<f64>, Vec<f64>)>> = (0..replicates)
            .into_par_iter()
            .map(|r| self.sums_of(sampler, tail.as_ref(), seed, r))
            .collect::<Result<_>>()?;
        let ns = self.cfg.run.ns.clone();
        let values = (0..ns.len()).map(|i| per_rep.iter().map(|rep| rep[i].0.clone()).collect()).collect();
        let with_tail = tail.map(|_| (0..ns.len()).map(|i| per_rep.iter().map(|rep| rep[i].1.clone()).collect()).collect());
        Ok(SumSamples { ns, values, with_tail })
    }

    /// Time one replicate of each stage and extrapolate to the full run.
    pub fn projected_seconds(&self, sampler: &FieldSampler, limit: &LimitSampler, setup_seconds: f64) -> Result<f64> {
        let tail = self.tail()?;
        let start = Instant::now();
        self.sums_of(sampler, tail.as_ref(), u64::MAX, 0)?;
        limit.sample(u64::MAX, 0)?;
        let per = start.elapsed().as_secs_f64();
        let total = (self.cfg.run.replicates * self.cfg.run.seeds.len() as u64) as f64;
        Ok(setup_seconds + per * total / rayon::current_num_threads() as f64)
    }
}

fn column(rows: &[Vec<f64>], c: usize) -> Vec<f64> {
    rows.iter().map(|r| r[c]).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub config_hash: String,
    pub seed: u64,
    pub replicates: u64,
    pub n: usize,
    pub ks: f64,
    pub ks_with_tail: Option<f64>,
    pub char_fn_distance: f64,
    pub max_abs_moment_z: f64,
    pub variance: f64,
    pub variance_se: f64,
    pub exact_variance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentRecord {
    pub config_hash: String,
    pub seed: u64,
    pub replicates: u64,
    pub n: usize,
    pub order: u32,
    pub lattice: f64,
    pub lattice_se: f64,
    pub limit: f64,
    pub limit_se: f64,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub config_hash: String,
    pub seeds: usize,
    pub replicates: u64,
    pub n: usize,
    pub mean_ks: f64,
    pub mean_ks_with_tail: Option<f64>,
    pub mean_char_fn_distance: f64,
    pub exact_variance: Option<f64>,
}

/// Exact lattice covariances of `(S_N(t_a))` at the largest block against
/// the Monte Carlo covariance of the limit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JointComparison {
    pub n: usize,
    pub corners: Vec<Vec<f64>>,
    pub exact: Vec<Vec<f64>>,
    pub limit: Vec<Vec<f64>>,
    pub max_relative_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub config_hash: String,
    pub seeds: Vec<u64>,
    pub replicates: u64,
    pub rows: Vec<ConvergenceRow>,
    pub moments: Vec<MomentRecord>,
    pub summary: Vec<SummaryRow>,
    /// Pooled Monte Carlo variance of `S₀` with its standard error.
    pub limit_variance: (f64, f64),
    pub joint: Option<JointComparison>,
    pub compensator: Option<CompensatorReport>,
    pub checks: Vec<Check>,
    pub projected_seconds: f64,
}

impl ComparisonReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn mean_ks(&self) -> Vec<f64> {
        self.summary.iter().map(|s| s.mean_ks).collect()
    }
}

/// Raw replicates kept alongside a report.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSamples {
    pub sums: Vec<(u64, SumSamples)>,
    pub limit: Vec<(u64, Vec<Vec<f64>>)>,
}

pub fn run_convergence_experiment(cfg: &ExperimentConfig) -> Result<ComparisonReport> {
    run_convergence_experiment_with_samples(cfg).map(|(r, _)| r)
}

pub fn run_convergence_experiment_with_samples(cfg: &ExperimentConfig) -> Result<(ComparisonReport, ExperimentSamples)> {
    let start = Instant::now();
    let setup = ExperimentSetup::new(cfg)?;
    let n_max = setup.n_max();
    let cov = setup.covariance(n_max)?;
    let sampler = setup.field_sampler(&cov, n_max)?;
    let limit = setup.limit_sampler()?;
    let projected = setup.projected_seconds(&sampler, &limit, start.elapsed().as_secs_f64())?;
    let budget = cfg.run.budget_seconds;
    if projected > budget {
        return Err(Error::Budget { projected, budget });
    }

    let exact: Option<Vec<f64>> = if cfg.comparison.exact_variance {
        Some(cfg.run.ns.iter().map(|&n| exact_variance_sn(&setup.spec, &cov, n)).collect::<Result<_>>()?)
    } else {
        None
    };

    let (reps, hash) = (cfg.run.replicates, setup.hash.clone());
    let mut rows = Vec::new();
    let mut moments = Vec::new();
    let mut samples = ExperimentSamples { sums: Vec::new(), limit: Vec::new() };
    for &seed in &cfg.run.seeds {
        let sums = setup.sample_sums(&sampler, seed, reps)?;
        let lim = limit.sample_many(seed, reps)?;
        let s0 = column(&lim, 0);
        for (i, &n) in cfg.run.ns.iter().enumerate() {
            let sn = column(&sums.values[i], 0);
            let table = moment_table(&sn, &s0)?;
            let (variance, variance_se) = variance_with_se(&sn)?;
            let ks_with_tail = match &sums.with_tail {
                Some(t) => Some(ks_distance(&column(&t[i], 0), &s0)?),
                None => None,
            };
            rows.push(ConvergenceRow {
                config_hash: hash.clone(),
                seed,
                replicates: reps,
                n,
                ks: ks_distance(&sn, &s0)?,
                ks_with_tail,
                char_fn_distance: char_fn_distance(&sn, &s0, &cfg.comparison.char_fn_grid)?,
                max_abs_moment_z: table.iter().map(|m| m.z.abs()).fold(0.0, f64::max),
                variance,
                variance_se,
                exact_variance: exact.as_ref().map(|e| e[i]),
            });
            moments.extend(table.into_iter().map(|m: MomentRow| MomentRecord {
                config_hash: hash.clone(),
                seed,
                replicates: reps,
                n,
                order: m.order,
                lattice: m.a,
                lattice_se: m.a_se,
                limit: m.b,
                limit_se: m.b_se,
                z: m.z,
            }));
        }
        samples.sums.push((seed, sums));
        samples.limit.push((seed, lim));
    }

    let summary: Vec<SummaryRow> = cfg
        .run
        .ns
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let at: Vec<&ConvergenceRow> = rows.iter().filter(|r| r.n == n).collect();
            let avg = |f: &dyn Fn(&ConvergenceRow) -> f64| at.iter().map(|r| f(r)).sum::<f64>() / at.len() as f64;
            SummaryRow {
                config_hash: hash.clone(),
                seeds: at.len(),
                replicates: reps,
                n,
                mean_ks: avg(&|r| r.ks),
                mean_ks_with_tail: at[0].ks_with_tail.map(|_| avg(&|r| r.ks_with_tail.unwrap_or(0.0))),
                mean_char_fn_distance: avg(&|r| r.char_fn_distance),
                exact_variance: exact.as_ref().map(|e| e[i]),
            }
        })
        .collect();

    let pooled: Vec<Vec<f64>> = samples.limit.iter().flat_map(|(_, l)| l.iter().cloned()).collect();
    let limit_variance = variance_with_se(&column(&pooled, 0))?;

    let joint = if cfg.comparison.exact_variance && setup.corners.len() > 1 {
        let k = setup.corners.len();
        let mut exact_m = vec![vec![0.0; k]; k];
        for a in 0..k {
            for b in a..k {
                let v = exact_covariance_rect(&setup.spec, &cov, n_max, &setup.corners[a], &setup.corners[b])?;
                exact_m[a][b] = v;
                exact_m[b][a] = v;
            }
        }
        let mc = sample_covariance(&pooled)?;
        let max_relative_error = (0..k)
            .flat_map(|a| (0..k).map(move |b| (a, b)))
            .map(|(a, b)| (mc[a][b] - exact_m[a][b]).abs() / exact_m[a][b].abs())
            .fold(0.0, f64::max);
        Some(JointComparison { n: n_max, corners: setup.corners.clone(), exact: exact_m, limit: mc, max_relative_error })
    } else {
        None
    };

    let checks = build_checks(cfg, &summary, limit_variance, joint.as_ref());
    let report = ComparisonReport {
        config_hash: hash,
        seeds: cfg.run.seeds.clone(),
        replicates: reps,
        rows,
        moments,
        summary,
        limit_variance,
        joint,
        compensator: limit.compensator_report().cloned(),
        checks,
        projected_seconds: projected,
    };
    Ok((report, samples))
}

fn build_checks(
    cfg: &ExperimentConfig,
    summary: &[SummaryRow],
    limit_variance: (f64, f64),
    joint: Option<&JointComparison>,
) -> Vec<Check> {
    let c = &cfg.comparison;
    let ks: Vec<f64> = summary.iter().map(|s| s.mean_ks).collect();
    let last = summary.last().expect("validated non-empty");
    let mut out = Vec::new();
    if c.require_decreasing {
        out.push(Check {
            name: "ks_decreasing".into(),
            pass: ks.windows(2).all(|w| w[1] < w[0]),
            detail: format!("mean KS {ks:?}"),
        });
    }
    out.push(Check {
        name: "ks_final".into(),
        pass: last.mean_ks < c.ks_max,
        detail: format!("{:.4} < {}", last.mean_ks, c.ks_max),
    });
    if let Some(t) = last.mean_ks_with_tail {
        let change = (t - last.mean_ks).abs();
        out.push(Check {
            name: "tail_ks_change".into(),
            pass: change < c.tail_ks_change_max,
            detail: format!("|{t:.4} - {:.4}| = {change:.4} < {}", last.mean_ks, c.tail_ks_change_max),
        });
    }
    if let Some(e) = last.exact_variance {
        let rel = (limit_variance.0 - e).abs() / e;
        out.push(Check {
            name: "limit_variance".into(),
            pass: rel < c.variance_tolerance,
            detail: format!("Var S0 = {:.5} ± {:.5} vs exact {e:.5} (rel {rel:.4})", limit_variance.0, limit_variance.1),
        });
    }
    if let Some(j) = joint {
        out.push(Check {
            name: "joint_covariance".into(),
            pass: j.max_relative_error < c.variance_tolerance,
            detail: format!("max entrywise relative error {:.4}", j.max_relative_error),
        });
    }
    out
}
