//! Experiment configuration read from TOML.

use crate::error::{Error, Result};
use crate::field_sampler::{SamplerConfig, SamplerMethod};
use crate::hermite::{HermiteExpansion, TailExpansion, TermRecord};
use crate::lrd_model::{ModelKind, ModelSpec, SlowSpec};
use crate::wiener_ito::SymmetricPartition;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;

pub const DEFAULT_BUDGET_SECONDS: f64 = 600.0;
pub const MIN_DISTRIBUTIONAL_REPLICATES: u64 = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplerBlock {
    pub method: SamplerMethod,
    pub embedding_factor: usize,
    pub clip_tolerance: f64,
}

impl Default for SamplerBlock {
    fn default() -> Self {
        let c = SamplerConfig::default();
        Self { method: c.method, embedding_factor: c.embedding_factor, clip_tolerance: c.clip_tolerance }
    }
}

impl SamplerBlock {
    pub fn config(&self, seed: u64) -> SamplerConfig {
        SamplerConfig {
            method: self.method,
            seed,
            embedding_factor: self.embedding_factor,
            clip_tolerance: self.clip_tolerance,
        }
    }
}

/// Hermite coefficients of the summed functional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SumBlock {
    /// Order-`k` part.
    pub terms: Vec<TermRecord>,
    /// Higher-order remainder; empty means none.
    #[serde(default)]
    pub tail: Vec<TermRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LimitBlock {
    pub truncation: f64,
    pub cells: usize,
    pub compensate: bool,
}

impl Default for LimitBlock {
    fn default() -> Self {
        let p = SymmetricPartition::default();
        Self { truncation: p.truncation, cells: p.cells, compensate: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunBlock {
    /// Block sizes, strictly increasing.
    pub ns: Vec<usize>,
    pub replicates: u64,
    pub seeds: Vec<u64>,
    /// Rectangle corners `t ∈ [0, 1]^ν` sampled jointly with the full block.
    #[serde(default)]
    pub ts: Vec<Vec<f64>>,
    #[serde(default = "default_budget")]
    pub budget_seconds: f64,
}

fn default_budget() -> f64 {
    DEFAULT_BUDGET_SECONDS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ComparisonBlock {
    /// Upper bound on the seed-averaged KS distance at the largest `N`.
    pub ks_max: f64,
    pub require_decreasing: bool,
    /// Largest allowed KS change from adding the tail functional.
    pub tail_ks_change_max: f64,
    /// Compare Monte Carlo second moments with exact lattice values.
    pub exact_variance: bool,
    /// Relative tolerance for those comparisons.
    pub variance_tolerance: f64,
    /// Frequencies for the characteristic-function distance.
    pub char_fn_grid: Vec<f64>,
}

impl Default for ComparisonBlock {
    fn default() -> Self {
        Self {
            ks_max: 0.05,
            require_decreasing: true,
            tail_ks_change_max: 0.02,
            exact_variance: true,
            variance_tolerance: 0.05,
            char_fn_grid: (1..=8).map(|i| 0.25 * i as f64).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiagnosticsBlock {
    /// Block sizes for the test-function integrals.
    pub bump_ns: Vec<u64>,
    /// Scale factors for the homogeneity residuals.
    pub homogeneity_scales: Vec<f64>,
    /// Cells per axis of the torus grid used for measure quadrature.
    pub cells: usize,
    pub tail_ns: Vec<u64>,
    pub tail_thresholds: Vec<f64>,
    /// Fraction of the total mass the tail must stay below.
    pub tail_fraction: f64,
    pub phi_n: u64,
    /// Lattice points `(p_1, …, p_k)` at which `φ^N` is compared.
    pub phi_points: Vec<Vec<i64>>,
}

impl Default for DiagnosticsBlock {
    fn default() -> Self {
        Self {
            bump_ns: (4..=10).map(|e| 1u64 << e).collect(),
            homogeneity_scales: vec![0.5, 2.0, 10.0],
            cells: 4096,
            tail_ns: vec![32, 64, 128],
            tail_thresholds: vec![1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0],
            tail_fraction: 0.1,
            phi_n: 64,
            phi_points: default_phi_points(),
        }
    }
}

fn default_phi_points() -> Vec<Vec<i64>> {
    let mut out = Vec::new();
    for a in -2i64..=2 {
        for b in [-3i64, 0, 1, 5] {
            out.push(vec![a, b]);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputBlock {
    pub dir: String,
    /// Also write every replicate of `S_N` and `S₀`.
    pub samples: bool,
}

impl Default for OutputBlock {
    fn default() -> Self {
        Self { dir: "out".into(), samples: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    #[serde(default)]
    pub sampler: SamplerBlock,
    pub sum: SumBlock,
    #[serde(default)]
    pub limit: LimitBlock,
    pub run: RunBlock,
    #[serde(default)]
    pub comparison: ComparisonBlock,
    #[serde(default)]
    pub diagnostics: DiagnosticsBlock,
    #[serde(default)]
    pub output: OutputBlock,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// The reference setting: `ν = 1`, `d = 2`, `k = 2`, `α = 0.4`, a diagonal
    /// power-law model and `H = H_2(X_1) + H_1(X_1) H_1(X_2)`.
    pub fn reference() -> Self {
        Self {
            model: ModelSpec {
                nu: 1,
                d: 2,
                alpha: 0.4,
                k: 2,
                kind: ModelKind::PowerLaw,
                slow: SlowSpec::default(),
                b: Default::default(),
                h: Default::default(),
                amplitude: None,
                normalize: true,
                resolution: None,
            },
            sampler: SamplerBlock::default(),
            sum: SumBlock {
                terms: vec![TermRecord { index: vec![2, 0], c: 1.0 }, TermRecord { index: vec![1, 1], c: 1.0 }],
                tail: vec![TermRecord { index: vec![3, 0], c: 0.5 }, TermRecord { index: vec![2, 2], c: 0.25 }],
            },
            limit: LimitBlock::default(),
            run: RunBlock {
                ns: vec![1 << 10, 1 << 12, 1 << 14],
                replicates: 5000,
                seeds: vec![1, 2, 3],
                ts: vec![vec![0.5]],
                budget_seconds: DEFAULT_BUDGET_SECONDS,
            },
            comparison: ComparisonBlock::default(),
            diagnostics: DiagnosticsBlock::default(),
            output: OutputBlock::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let run = &self.run;
        if run.ns.is_empty() || run.ns[0] == 0 {
            return Err(Error::Config("run.ns must list positive block sizes".into()));
        }
        if run.ns.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config(format!("run.ns must be strictly increasing, got {:?}", run.ns)));
        }
        if run.replicates < MIN_DISTRIBUTIONAL_REPLICATES {
            return Err(Error::Config(format!(
                "run.replicates = {} is below the minimum of {MIN_DISTRIBUTIONAL_REPLICATES}",
                run.replicates
            )));
        }
        if run.seeds.is_empty() {
            return Err(Error::Config("run.seeds is empty".into()));
        }
        if !(run.budget_seconds > 0.0) {
            return Err(Error::Config("run.budget_seconds must be positive".into()));
        }
        for t in &run.ts {
            if t.len() != self.model.nu || t.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::Config(format!("run.ts entry {t:?} is not a point of [0, 1]^{}", self.model.nu)));
            }
        }
        if self.sum.terms.is_empty() {
            return Err(Error::Config("sum.terms is empty".into()));
        }
        if self.limit.cells == 0 || !(self.limit.truncation > 0.0) {
            return Err(Error::Config("limit.truncation and limit.cells must be positive".into()));
        }
        self.sampler.config(0).validate()?;
        self.expansion()?;
        self.tail()?;
        Ok(())
    }

    pub fn expansion(&self) -> Result<HermiteExpansion<f64>> {
        HermiteExpansion::new(
            self.model.d,
            self.model.k,
            self.sum.terms.iter().map(|t| (t.index.clone(), t.c)),
        )
    }

    pub fn tail(&self) -> Result<Option<TailExpansion<f64>>> {
        if self.sum.tail.is_empty() {
            return Ok(None);
        }
        TailExpansion::new(self.model.d, self.model.k, self.sum.tail.iter().map(|t| (t.index.clone(), t.c))).map(Some)
    }

    pub fn partition(&self) -> Result<SymmetricPartition> {
        SymmetricPartition::new(self.model.nu, self.limit.truncation, self.limit.cells)
    }

    /// Corners sampled jointly: the full block first, then `run.ts`.
    pub fn corners(&self) -> Vec<Vec<f64>> {
        let full = vec![1.0; self.model.nu];
        let mut out = vec![full.clone()];
        out.extend(self.run.ts.iter().filter(|t| **t != full).cloned());
        out
    }

    /// Hex SHA-256 of the canonical JSON form, leaving out where results go.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output = OutputBlock::default();
        let json = serde_json::to_vec(&canonical).expect("configuration serializes");
        Sha256::digest(&json).iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Apply command-line overrides.
    pub fn with_overrides(mut self, seed: Option<u64>, out: Option<&Path>, budget: Option<f64>) -> Result<Self> {
        if let Some(s) = seed {
            self.run.seeds = vec![s];
        }
        if let Some(o) = out {
            self.output.dir = o.to_string_lossy().into_owned();
        }
        if let Some(b) = budget {
            self.run.budget_seconds = b;
        }
        self.validate()?;
        Ok(self)
    }
}
