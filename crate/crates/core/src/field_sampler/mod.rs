//! Gaussian samples of a stationary vector field over the block `[0, N)^ν`.

mod circulant;
mod direct;
mod empirical;
mod spectral;

pub use circulant::{CirculantSampler, EmbeddingReport};
pub use direct::{block_covariance, DirectSampler};
pub use empirical::{coverage, empirical_covariance, CovarianceAccumulator, EmpiricalCovariance};
pub use spectral::SpectralGridSampler;

use crate::error::{Error, Result};
use crate::lrd_model::{CovarianceTable, LatticeDims};
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SamplerMethod {
    DirectFactorization,
    #[default]
    CirculantEmbedding,
    SpectralGrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplerConfig {
    pub method: SamplerMethod,
    pub seed: u64,
    pub embedding_factor: usize,
    pub clip_tolerance: f64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self { method: SamplerMethod::default(), seed: 0, embedding_factor: 2, clip_tolerance: 1e-6 }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.embedding_factor < 2 {
            return Err(Error::InvalidParameter(format!("embedding factor {} is below 2", self.embedding_factor)));
        }
        if !(self.clip_tolerance >= 0.0) {
            return Err(Error::InvalidParameter(format!("clip tolerance {} is negative", self.clip_tolerance)));
        }
        Ok(())
    }
}

/// `values[j][flat(p)]`, `p ∈ [0, N)^ν` in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSample {
    pub dims: LatticeDims,
    pub n: usize,
    pub seed: u64,
    pub replicate: u64,
    pub values: Vec<Vec<f64>>,
}

const MAGIC: &[u8; 8] = b"NCLTFLD1";

impl FieldSample {
    pub fn points(&self) -> usize {
        self.n.pow(self.dims.nu as u32)
    }

    pub fn point(&self, mut flat: usize) -> Vec<usize> {
        let mut p = vec![0; self.dims.nu];
        for slot in p.iter_mut().rev() {
            *slot = flat % self.n;
            flat /= self.n;
        }
        p
    }

    /// Header `ν, d, N, seed, replicate` as little-endian `u64`, then the
    /// values row-major (`j` outer) as little-endian `f64`.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        for v in [self.dims.nu as u64, self.dims.d as u64, self.n as u64, self.seed, self.replicate] {
            w.write_all(&v.to_le_bytes())?;
        }
        for x in self.values.iter().flatten() {
            w.write_all(&x.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Config("not a field sample file".into()));
        }
        let mut word = [0u8; 8];
        let mut header = [0u64; 5];
        for h in header.iter_mut() {
            r.read_exact(&mut word)?;
            *h = u64::from_le_bytes(word);
        }
        let [nu, d, n, seed, replicate] = header;
        let dims = LatticeDims::new(nu as usize, d as usize)?;
        let points = (n as usize).pow(nu as u32);
        let mut values = vec![vec![0.0; points]; d as usize];
        for x in values.iter_mut().flatten() {
            r.read_exact(&mut word)?;
            *x = f64::from_le_bytes(word);
        }
        Ok(Self { dims, n: n as usize, seed, replicate, values })
    }

    /// Columns `p1..pν, x1..xd`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let mut head: Vec<String> = (1..=self.dims.nu).map(|l| format!("p{l}")).collect();
        head.extend((1..=self.dims.d).map(|j| format!("x{j}")));
        writeln!(w, "{}", head.join(","))?;
        for f in 0..self.points() {
            let mut row: Vec<String> = self.point(f).iter().map(|v| v.to_string()).collect();
            row.extend(self.values.iter().map(|col| format!("{:e}", col[f])));
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

pub(crate) fn require_lag(cov: &CovarianceTable, lag: usize) -> Result<()> {
    if cov.max_lag < lag {
        return Err(Error::TableRange { lag: vec![lag as i64], max_lag: cov.max_lag });
    }
    Ok(())
}

/// A sampler fixed to one table, block size and method.
pub enum FieldSampler {
    Direct(DirectSampler),
    Circulant(CirculantSampler),
    SpectralGrid(SpectralGridSampler),
}

impl FieldSampler {
    pub fn new(cov: &CovarianceTable, n: usize, cfg: &SamplerConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(match cfg.method {
            SamplerMethod::DirectFactorization => Self::Direct(DirectSampler::new(cov, n)?),
            SamplerMethod::CirculantEmbedding => {
                Self::Circulant(CirculantSampler::new(cov, n, cfg.embedding_factor, cfg.clip_tolerance)?)
            }
            SamplerMethod::SpectralGrid => {
                Self::SpectralGrid(SpectralGridSampler::new(cov, n, cfg.embedding_factor)?)
            }
        })
    }

    pub fn sample(&self, seed: u64, replicate: u64) -> FieldSample {
        match self {
            Self::Direct(s) => s.sample(seed, replicate),
            Self::Circulant(s) => s.sample(seed, replicate),
            Self::SpectralGrid(s) => s.sample(seed, replicate),
        }
    }
}

pub fn sample_field(cov: &CovarianceTable, n: usize, cfg: &SamplerConfig, replicate: u64) -> Result<FieldSample> {
    Ok(FieldSampler::new(cov, n, cfg)?.sample(cfg.seed, replicate))
}
