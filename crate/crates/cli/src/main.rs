use clap::{Args, Parser, Subcommand};
use nclt_core::harness::{
    prepare_dir, run_checks, run_convergence_experiment_with_samples, run_diagnostics, write_csv, write_table, Check,
    ExperimentConfig, ExperimentSetup, Manifest,
};
use nclt_core::sums::exact_variance_sn;
use nclt_core::{Error, Result};
use serde_json::json;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

/// Non-central limits of Hermite functionals of long-range-dependent vector fields.
#[derive(Parser)]
#[command(name = "nclt", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample fields of the configured model to CSV.
    Simulate(Common),
    /// Sample batches of normalized sums S_N for every block size.
    Sums(Common),
    /// Sample batches of the limit S_0.
    Limit(Common),
    /// Compare S_N with S_0 across block sizes.
    Converge(Common),
    /// Spectral-measure diagnostics.
    Spectral(Common),
    /// Run the invariant battery.
    Check(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Replaces `run.seeds` with this single seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; defaults to `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long = "budget-seconds")]
    budget_seconds: Option<f64>,
}

impl Common {
    fn load(&self) -> Result<(ExperimentConfig, PathBuf)> {
        let cfg = ExperimentConfig::load(&self.config)?.with_overrides(self.seed, self.out.as_deref(), self.budget_seconds)?;
        let dir = PathBuf::from(&cfg.output.dir);
        prepare_dir(&dir)?;
        Ok((cfg, dir))
    }
}

fn fmt(v: f64) -> String {
    format!("{v}")
}

fn corner_names(prefix: &str, corners: &[Vec<f64>]) -> Vec<String> {
    corners
        .iter()
        .map(|t| format!("{prefix}({})", t.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")))
        .collect()
}

fn guard(cfg: &ExperimentConfig, projected: f64) -> Result<()> {
    if projected > cfg.run.budget_seconds {
        return Err(Error::Budget { projected, budget: cfg.run.budget_seconds });
    }
    Ok(())
}

fn simulate(cfg: &ExperimentConfig, dir: &Path) -> Result<Manifest> {
    let setup = ExperimentSetup::new(cfg)?;
    let n = setup.n_max();
    let cov = setup.covariance(n)?;
    let sampler = setup.field_sampler(&cov, n)?;
    let mut manifest = Manifest::new("simulate", cfg);
    let table = dir.join("covariance.csv");
    cov.truncated(n.min(cov.max_lag))?.write_csv(std::fs::File::create(&table)?)?;
    manifest.files.push("covariance.csv".into());
    for &seed in &cfg.run.seeds {
        let name = format!("field_seed{seed}.csv");
        sampler.sample(seed, 0).write_csv(std::fs::File::create(dir.join(&name))?)?;
        manifest.files.push(name);
    }
    manifest.result = json!({ "n": n, "replicate": 0 });
    Ok(manifest)
}

fn sums(cfg: &ExperimentConfig, dir: &Path) -> Result<Manifest> {
    let start = Instant::now();
    let setup = ExperimentSetup::new(cfg)?;
    let n_max = setup.n_max();
    let cov = setup.covariance(n_max)?;
    let sampler = setup.field_sampler(&cov, n_max)?;
    let limit = setup.limit_sampler()?;
    guard(cfg, setup.projected_seconds(&sampler, &limit, start.elapsed().as_secs_f64())?)?;
    let mut manifest = Manifest::new("sums", cfg);
    let mut header = vec!["config_hash".to_string(), "seed".into(), "replicate".into(), "n".into()];
    header.extend(corner_names("S_N", &setup.corners));
    for &seed in &cfg.run.seeds {
        let batch = setup.sample_sums(&sampler, seed, cfg.run.replicates)?;
        let name = format!("sums_seed{seed}.csv");
        let rows = batch.ns.iter().enumerate().flat_map(|(i, &n)| {
            let hash = setup.hash.clone();
            batch.values[i].iter().enumerate().map(move |(r, vals)| {
                let mut row = vec![hash.clone(), seed.to_string(), r.to_string(), n.to_string()];
                row.extend(vals.iter().map(|v| fmt(*v)));
                row
            })
        });
        write_table(&dir.join(&name), &header, rows)?;
        manifest.files.push(name);
    }
    let exact: Option<Vec<f64>> = if cov.is_diagonal(1e-12) {
        Some(cfg.run.ns.iter().map(|&n| exact_variance_sn(&setup.spec, &cov, n)).collect::<Result<_>>()?)
    } else {
        None
    };
    manifest.result = json!({ "ns": cfg.run.ns, "exact_variance": exact });
    Ok(manifest)
}

fn limit(cfg: &ExperimentConfig, dir: &Path) -> Result<Manifest> {
    let setup = ExperimentSetup::new(cfg)?;
    let sampler = setup.limit_sampler()?;
    let mut manifest = Manifest::new("limit", cfg);
    let mut header = vec!["config_hash".to_string(), "seed".into(), "replicate".into()];
    header.extend(corner_names("S_0", &setup.corners));
    let start = Instant::now();
    sampler.sample(u64::MAX, 0)?;
    let per = start.elapsed().as_secs_f64();
    guard(cfg, per * (cfg.run.replicates * cfg.run.seeds.len() as u64) as f64 / rayon_threads())?;
    for &seed in &cfg.run.seeds {
        let rows = sampler.sample_many(seed, cfg.run.replicates)?;
        let name = format!("limit_seed{seed}.csv");
        let hash = setup.hash.clone();
        write_table(
            &dir.join(&name),
            &header,
            rows.iter().enumerate().map(|(r, vals)| {
                let mut row = vec![hash.clone(), seed.to_string(), r.to_string()];
                row.extend(vals.iter().map(|v| fmt(*v)));
                row
            }),
        )?;
        manifest.files.push(name);
    }
    manifest.result = json!({ "compensator": sampler.compensator_report() });
    Ok(manifest)
}

fn rayon_threads() -> f64 {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1) as f64
}

fn converge(cfg: &ExperimentConfig, dir: &Path) -> Result<(Manifest, Vec<Check>)> {
    let (report, samples) = run_convergence_experiment_with_samples(cfg)?;
    let mut manifest = Manifest::new("converge", cfg);
    write_csv(&dir.join("convergence.csv"), &report.rows)?;
    write_csv(&dir.join("summary.csv"), &report.summary)?;
    write_csv(&dir.join("moments.csv"), &report.moments)?;
    manifest.files.extend(["convergence.csv", "summary.csv", "moments.csv"].map(String::from));
    if cfg.output.samples {
        for ((seed, s), (_, l)) in samples.sums.iter().zip(&samples.limit) {
            let name = format!("samples_seed{seed}.csv");
            let header: Vec<String> =
                ["config_hash", "seed", "replicate", "n", "value"].iter().map(|s| s.to_string()).collect();
            let rows = s.ns.iter().enumerate().flat_map(|(i, &n)| {
                s.values[i].iter().enumerate().map(move |(r, v)| (r, n.to_string(), v[0]))
            });
            let rows = rows
                .chain(l.iter().enumerate().map(|(r, v)| (r, "limit".to_string(), v[0])))
                .map(|(r, n, v)| vec![report.config_hash.clone(), seed.to_string(), r.to_string(), n, fmt(v)]);
            write_table(&dir.join(&name), &header, rows)?;
            manifest.files.push(name);
        }
    }
    manifest.result = json!({
        "summary": report.summary,
        "limit_variance": report.limit_variance,
        "joint": report.joint,
        "compensator": report.compensator,
        "checks": report.checks,
        "projected_seconds": report.projected_seconds,
    });
    Ok((manifest, report.checks))
}

fn spectral(cfg: &ExperimentConfig, dir: &Path) -> Result<(Manifest, Vec<Check>)> {
    let report = run_diagnostics(cfg)?;
    let mut manifest = Manifest::new("spectral", cfg);
    write_csv(&dir.join("bumps.csv"), &report.bumps)?;
    let header: Vec<String> =
        ["config_hash", "n", "threshold", "tail_mass", "total_mass"].iter().map(|s| s.to_string()).collect();
    let hash = &report.config_hash;
    let rows = report.tails.iter().flat_map(|p| {
        p.thresholds.iter().zip(&p.tails).map(move |(t, m)| {
            vec![hash.clone(), p.n.to_string(), fmt(*t), fmt(*m), fmt(p.total)]
        })
    });
    write_table(&dir.join("tails.csv"), &header, rows)?;
    let header: Vec<String> =
        ["config_hash", "n", "lags", "lattice", "quadrature", "relative_error"].iter().map(|s| s.to_string()).collect();
    let rows = report.phi.iter().map(|r| {
        let lags = r.lags.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(" ");
        vec![r.config_hash.clone(), r.n.to_string(), lags, fmt(r.lattice), fmt(r.quadrature), fmt(r.relative_error)]
    });
    write_table(&dir.join("phi.csv"), &header, rows)?;
    manifest.files.extend(["bumps.csv", "tails.csv", "phi.csv"].map(String::from));
    let checks = vec![
        Check {
            name: "homogeneity".into(),
            pass: report.homogeneity_residual <= 1e-8,
            detail: format!("max residual {:.2e}", report.homogeneity_residual),
        },
        Check {
            name: "bump_errors_decreasing".into(),
            pass: report.bumps_decreasing.iter().all(|&b| b),
            detail: format!("{:?}", report.bumps_decreasing),
        },
        Check {
            name: "quadratic_forms_nonnegative".into(),
            pass: report.min_quadratic_form.is_none_or(|m| m >= 0.0),
            detail: format!("{:?}", report.min_quadratic_form),
        },
        Check {
            name: "tail_threshold".into(),
            pass: report.tail_threshold.is_some(),
            detail: format!("{:?}", report.tail_threshold),
        },
        Check {
            name: "phi_lattice_vs_quadrature".into(),
            pass: report.max_phi_relative_error < 1e-4,
            detail: format!("{:.2e}", report.max_phi_relative_error),
        },
    ];
    manifest.result = json!({
        "homogeneity_residual": report.homogeneity_residual,
        "bumps_decreasing": report.bumps_decreasing,
        "min_quadratic_form": report.min_quadratic_form,
        "tail_threshold": report.tail_threshold,
        "max_phi_relative_error": report.max_phi_relative_error,
        "checks": checks,
    });
    Ok((manifest, checks))
}

fn check(cfg: &ExperimentConfig, dir: &Path) -> Result<(Manifest, Vec<Check>)> {
    let seed = cfg.run.seeds[0];
    let checks = run_checks(cfg, seed)?;
    let mut manifest = Manifest::new("check", cfg);
    write_csv(&dir.join("checks.csv"), &checks)?;
    manifest.files.push("checks.csv".into());
    manifest.result = json!({ "checks": checks });
    Ok((manifest, checks))
}

fn report(checks: &[Check]) -> bool {
    for c in checks {
        println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    checks.iter().all(|c| c.pass)
}

fn run(cli: Cli) -> Result<bool> {
    let (common, name) = match &cli.command {
        Command::Simulate(c) => (c, "simulate"),
        Command::Sums(c) => (c, "sums"),
        Command::Limit(c) => (c, "limit"),
        Command::Converge(c) => (c, "converge"),
        Command::Spectral(c) => (c, "spectral"),
        Command::Check(c) => (c, "check"),
    };
    let (cfg, dir) = common.load()?;
    let (manifest, checks) = match name {
        "simulate" => (simulate(&cfg, &dir)?, Vec::new()),
        "sums" => (sums(&cfg, &dir)?, Vec::new()),
        "limit" => (limit(&cfg, &dir)?, Vec::new()),
        "converge" => converge(&cfg, &dir)?,
        "spectral" => spectral(&cfg, &dir)?,
        _ => check(&cfg, &dir)?,
    };
    let path = manifest.write(&dir)?;
    for f in &manifest.files {
        println!("wrote {}", dir.join(f).display());
    }
    println!("wrote {}", path.display());
    Ok(report(&checks))
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
