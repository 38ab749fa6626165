//! PMI evaluation, PMI profile sampling and Monte Carlo mutual information.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{JointDistribution, JointDistributionExt, SHARD};
use crate::error::{Error, Result};
use crate::rng::Seed;

/// Pointwise mutual information `log p(x, y) - log p(x) - log p(y)`.
pub fn pmi(dist: &dyn JointDistribution, x: &[f64], y: &[f64]) -> Result<f64> {
    dist.check_x(x)?;
    dist.check_y(y)?;
    Ok(dist.pmi_unchecked(x, y))
}

/// Draws from the PMI profile of one distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PmiSampleBatch {
    values: Vec<f64>,
    source: String,
    seed: Seed,
}

impl PmiSampleBatch {
    pub fn new(values: Vec<f64>, source: impl Into<String>, seed: Seed) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("pmi values"));
        }
        Ok(Self {
            values,
            source: source.into(),
            seed,
        })
    }

    pub fn with_source(mut self, source: impl Into<String>) -> Self {
        self.source = source.into();
        self
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn seed(&self) -> Seed {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        mean(&self.values)
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        variance(&self.values)
    }
}

/// Mean shifted by the first value, exact for constant input.
pub(crate) fn mean(v: &[f64]) -> f64 {
    let Some(&first) = v.first() else {
        return f64::NAN;
    };
    first + v.iter().map(|x| x - first).sum::<f64>() / v.len() as f64
}

pub(crate) fn variance(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64
}

/// `n` PMI values at i.i.d. joint draws. Row `i` is PMI at row `i` of `dist.sample(seed, n)`.
pub fn sample_profile(
    dist: &dyn JointDistribution,
    seed: Seed,
    n: usize,
) -> Result<PmiSampleBatch> {
    if n == 0 {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    let (dx, dy) = (dist.dim_x(), dist.dim_y());
    let mut values = vec![0.0; n];
    values
        .par_chunks_mut(SHARD)
        .enumerate()
        .for_each(|(shard, chunk)| {
            let mut rng = seed.child("shard", shard as u64).stream();
            let mut x = vec![0.0; dx];
            let mut y = vec![0.0; dy];
            for v in chunk.iter_mut() {
                dist.sample_into(&mut rng, &mut x, &mut y);
                *v = dist.pmi_unchecked(&x, &y);
            }
        });
    PmiSampleBatch::new(values, "", seed)
}

/// Point estimate with Monte Carlo standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MiEstimate {
    pub value: f64,
    pub stderr: f64,
    pub n: usize,
}

impl MiEstimate {
    /// Exact value, zero standard error.
    pub fn exact(value: f64) -> Self {
        Self {
            value,
            stderr: 0.0,
            n: 0,
        }
    }

    pub fn from_values(values: &[f64]) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::TooFewSamples {
                needed: 2,
                got: values.len(),
            });
        }
        let n = values.len();
        Ok(Self {
            value: mean(values),
            stderr: (variance(values) / n as f64).sqrt(),
            n,
        })
    }

    /// Whether `target` lies within `k` standard errors.
    pub fn agrees_with(&self, target: f64, k: f64) -> bool {
        (self.value - target).abs() <= k * self.stderr
    }
}

/// Mean and standard error of a PMI batch.
pub fn mi_mc(batch: &PmiSampleBatch) -> Result<MiEstimate> {
    MiEstimate::from_values(batch.values())
}

/// `mi_mc(sample_profile(dist, seed, n))`.
pub fn estimate_mi(dist: &dyn JointDistribution, seed: Seed, n: usize) -> Result<MiEstimate> {
    mi_mc(&sample_profile(dist, seed, n)?)
}

/// Median of `blocks` block means; robust to heavy-tailed profiles.
///
/// The standard error is the asymptotic one for a median of normal block
/// means, `1.2533 * sd(block means) / sqrt(blocks)`.
pub fn median_of_means(values: &[f64], blocks: usize) -> Result<MiEstimate> {
    if blocks == 0 || values.len() < 2 * blocks {
        return Err(Error::TooFewSamples {
            needed: 2 * blocks.max(1),
            got: values.len(),
        });
    }
    let size = values.len() / blocks;
    let mut means: Vec<f64> = values.chunks(size).take(blocks).map(mean).collect();
    let sd = variance(&means).sqrt();
    means.sort_by(f64::total_cmp);
    let mid = means.len() / 2;
    let med = if means.len() % 2 == 1 {
        means[mid]
    } else {
        0.5 * (means[mid - 1] + means[mid])
    };
    Ok(MiEstimate {
        value: med,
        stderr: 1.2533 * sd / (blocks as f64).sqrt(),
        n: size * blocks,
    })
}

/// Binned profile with per-bin binomial standard errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileHistogram {
    pub bin_edges: Vec<f64>,
    pub bin_probs: Vec<f64>,
    pub per_bin_stderr: Vec<f64>,
    /// Fraction of values outside `[first edge, last edge]`.
    pub outside: f64,
    pub n: usize,
}

impl ProfileHistogram {
    /// Upper bound on every per-bin standard error, `1 / sqrt(4n)`.
    pub fn popoviciu_bound(&self) -> f64 {
        1.0 / (4.0 * self.n as f64).sqrt()
    }
}

pub const DEFAULT_BINS: usize = 64;

/// 64 equal bins over `mean +- 5 sd` of the batch, plus two unbounded overflow bins.
pub fn default_bin_edges(values: &[f64]) -> Vec<f64> {
    let m = if values.is_empty() { 0.0 } else { mean(values) };
    let sd = variance(values).sqrt();
    let half = if sd > 0.0 { 5.0 * sd } else { 0.5 };
    let lo = m - half;
    let width = 2.0 * half / DEFAULT_BINS as f64;
    let mut edges = Vec::with_capacity(DEFAULT_BINS + 3);
    edges.push(f64::NEG_INFINITY);
    for i in 0..=DEFAULT_BINS {
        edges.push(lo + width * i as f64);
    }
    edges.push(f64::INFINITY);
    edges
}

fn check_sorted(edges: &[f64]) -> Result<()> {
    if edges.iter().any(|e| e.is_nan()) || edges.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Unsorted);
    }
    Ok(())
}

/// Empirical bin probabilities over `[e_i, e_{i+1})`; the last bin is closed.
pub fn histogram(values: &[f64], bin_edges: &[f64]) -> Result<ProfileHistogram> {
    if bin_edges.len() < 2 {
        return Err(Error::InvalidParameter(
            "need at least two bin edges".into(),
        ));
    }
    check_sorted(bin_edges)?;
    if values.is_empty() {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    let bins = bin_edges.len() - 1;
    let mut counts = vec![0usize; bins];
    let mut outside = 0usize;
    let last = bin_edges[bins];
    for &v in values {
        if v < bin_edges[0] || v > last {
            outside += 1;
            continue;
        }
        let idx = if v == last {
            bins - 1
        } else {
            bin_edges.partition_point(|e| *e <= v) - 1
        };
        counts[idx] += 1;
    }
    let n = values.len() as f64;
    let bin_probs: Vec<f64> = counts.iter().map(|c| *c as f64 / n).collect();
    let per_bin_stderr = bin_probs
        .iter()
        .map(|p| (p * (1.0 - p) / n).sqrt())
        .collect();
    Ok(ProfileHistogram {
        bin_edges: bin_edges.to_vec(),
        bin_probs,
        per_bin_stderr,
        outside: outside as f64 / n,
        n: values.len(),
    })
}

/// Empirical CDF of the profile at sorted thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileCdf {
    pub thresholds: Vec<f64>,
    pub cdf_values: Vec<f64>,
}

pub fn cdf(values: &[f64], thresholds: &[f64]) -> Result<ProfileCdf> {
    if thresholds.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::Unsorted);
    }
    if values.is_empty() {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let cdf_values = thresholds
        .iter()
        .map(|a| sorted.partition_point(|v| v <= a) as f64 / n)
        .collect();
    Ok(ProfileCdf {
        thresholds: thresholds.to_vec(),
        cdf_values,
    })
}

/// `u(exp(t))` for each profile draw `t`: a sample from the pushforward of `P`
/// by `u` applied to the likelihood ratio `dP_XY / d(P_X (x) P_Y)`.
pub fn generalized_profile(values: &[f64], u: impl Fn(f64) -> f64) -> Vec<f64> {
    values.iter().map(|t| u(t.exp())).collect()
}

/// Two-sample Kolmogorov-Smirnov statistic.
pub fn ks_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}
