//! Monte-Carlo check of `S₀(ut) =ᵈ u^{ν−kα/2} S₀(t)`.

use super::increments::SymmetricPartition;
use super::limit::LimitSampler;
use crate::error::{Error, Result};
use crate::hermite::HermiteExpansion;
use crate::spectral_measure::LimitSpectralModel;
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct SelfSimilarityReport {
    pub u: f64,
    pub t: Vec<f64>,
    pub exponent: f64,
    pub replicates: u64,
    pub variance_ratio: f64,
    pub variance_ratio_se: f64,
    pub expected_ratio: f64,
    /// `(ratio − expected) / se`; zero when both samples coincide.
    pub variance_z: f64,
    /// Paired z-scores of `E[S₀(ut)^r] − u^{r·exponent} E[S₀(t)^r]`, `r = 1..`.
    pub moment_z: Vec<f64>,
}

fn z_score(mean: f64, se: f64) -> f64 {
    if se > 0.0 {
        mean / se
    } else if mean == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

#[allow(clippy::too_many_arguments)]
pub fn self_similarity_check(
    h: &HermiteExpansion<f64>,
    limit: &LimitSpectralModel,
    partition: SymmetricPartition,
    u: f64,
    t: Vec<f64>,
    max_moment: usize,
    replicates: u64,
    seed: u64,
) -> Result<SelfSimilarityReport> {
    if !(u > 0.0) {
        return Err(Error::InvalidParameter(format!("scale u = {u} must be positive")));
    }
    if replicates < 2 {
        return Err(Error::InsufficientReplicates { needed: 2, got: replicates as usize });
    }
    let ut: Vec<f64> = t.iter().map(|v| u * v).collect();
    let sampler = LimitSampler::new(h, limit, partition, vec![t.clone(), ut], true)?;
    let xs = sampler.sample_many(seed, replicates)?;
    let base: Vec<f64> = xs.iter().map(|x| x[0]).collect();
    let scaled: Vec<f64> = xs.iter().map(|x| x[1]).collect();
    let exponent = limit.dims.nu as f64 - h.k() as f64 * limit.alpha / 2.0;

    let (m0, _) = mean_se(&base);
    let (m1, _) = mean_se(&scaled);
    let n = replicates as f64;
    let v0 = base.iter().map(|x| (x - m0).powi(2)).sum::<f64>() / n;
    let v1 = scaled.iter().map(|x| (x - m1).powi(2)).sum::<f64>() / n;
    let ratio = v1 / v0;
    let influence: Vec<f64> = base
        .iter()
        .zip(&scaled)
        .map(|(x0, x1)| ((x1 - m1).powi(2) - v1) / v0 - ratio * ((x0 - m0).powi(2) - v0) / v0)
        .collect();
    let (_, ratio_se) = mean_se(&influence);
    let expected = u.powf(2.0 * exponent);

    let moment_z = (1..=max_moment)
        .map(|r| {
            let scale = u.powf(r as f64 * exponent);
            let diffs: Vec<f64> =
                base.iter().zip(&scaled).map(|(x0, x1)| x1.powi(r as i32) - scale * x0.powi(r as i32)).collect();
            let (m, se) = mean_se(&diffs);
            z_score(m, se)
        })
        .collect();

    Ok(SelfSimilarityReport {
        u,
        t,
        exponent,
        replicates,
        variance_ratio: ratio,
        variance_ratio_se: ratio_se,
        expected_ratio: expected,
        variance_z: z_score(ratio - expected, ratio_se),
        moment_z,
    })
}
