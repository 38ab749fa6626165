//! Sample-based MI estimators and variational bounds evaluated with supplied critics.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::digamma;

use crate::analytic::{canonical_correlations, gaussian_mi};
use crate::data::PairedSample;
use crate::distributions::{sample, JointDistribution, MultivariateNormal};
use crate::error::{Error, Result};
use crate::linalg::log_mean_exp;
use crate::profile::{self, MiEstimate};
use crate::rng::Seed;

/// Standardizes every column to zero mean and unit sample standard deviation.
///
/// Constant columns are left untouched and logged.
pub fn preprocess(sample: &PairedSample) -> Result<PairedSample> {
    let n = sample.len();
    if n < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: n });
    }
    let d = sample.dim_x() + sample.dim_y();
    let mut shift = vec![0.0; d];
    let mut scale = vec![1.0; d];
    for j in 0..d {
        let col = sample.column(j);
        let mean = profile::mean(&col);
        let sd = profile::variance(&col).sqrt();
        if sd > 0.0 && sd.is_finite() {
            shift[j] = mean;
            scale[j] = sd;
        } else {
            log::warn!("column {j} is constant; left unscaled");
        }
    }
    let mut out = sample.clone();
    out.map_columns(|j, v| *v = (*v - shift[j]) / scale[j]);
    Ok(out)
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (u, v)| m.max((u - v).abs()))
}

/// Kraskov-Stoegbauer-Grassberger estimator, variant 1, with max-norm balls.
///
/// Marginal counts use strict inequality `d < eps`, where `eps` is the
/// distance to the k-th joint neighbour.
pub fn ksg(sample: &PairedSample, k: usize) -> Result<f64> {
    let n = sample.len();
    if k == 0 {
        return Err(Error::InvalidParameter("k must be >= 1".into()));
    }
    if n <= k {
        return Err(Error::TooFewSamples {
            needed: k + 1,
            got: n,
        });
    }
    let total: f64 = (0..n)
        .into_par_iter()
        .map_init(
            || (vec![0.0; n], vec![0.0; n], vec![0.0; n]),
            |(dx, dy, joint), i| {
                let (xi, yi) = (sample.x(i), sample.y(i));
                for j in 0..n {
                    dx[j] = max_abs_diff(xi, sample.x(j));
                    dy[j] = max_abs_diff(yi, sample.y(j));
                    joint[j] = dx[j].max(dy[j]);
                }
                joint[i] = f64::INFINITY;
                let (_, eps, _) = joint.select_nth_unstable_by(k - 1, f64::total_cmp);
                let eps = *eps;
                let nx = dx.iter().filter(|&&d| d < eps).count() - 1;
                let ny = dy.iter().filter(|&&d| d < eps).count() - 1;
                digamma(nx as f64 + 1.0) + digamma(ny as f64 + 1.0)
            },
        )
        .collect::<Vec<_>>()
        .iter()
        .sum();
    Ok(digamma(k as f64) + digamma(n as f64) - total / n as f64)
}

struct Binner {
    lo: Vec<f64>,
    width: Vec<f64>,
    bins: usize,
}

impl Binner {
    fn new(sample: &PairedSample, bins: usize) -> Self {
        let d = sample.dim_x() + sample.dim_y();
        let mut lo = Vec::with_capacity(d);
        let mut width = Vec::with_capacity(d);
        for j in 0..d {
            let col = sample.column(j);
            let min = col.iter().copied().fold(f64::INFINITY, f64::min);
            let max = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            lo.push(min);
            width.push((max - min) / bins as f64);
        }
        Self { lo, width, bins }
    }

    fn cell(&self, offset: usize, v: &[f64]) -> Vec<u32> {
        v.iter()
            .enumerate()
            .map(|(j, &x)| {
                let w = self.width[offset + j];
                if w > 0.0 {
                    (((x - self.lo[offset + j]) / w) as usize).min(self.bins - 1) as u32
                } else {
                    0
                }
            })
            .collect()
    }
}

fn intern(table: &mut HashMap<Vec<u32>, usize>, key: Vec<u32>) -> usize {
    let next = table.len();
    *table.entry(key).or_insert(next)
}

/// Plug-in MI of the equal-width binning over each column's sample range.
pub fn histogram_mi(sample: &PairedSample, bins_per_dim: usize) -> Result<f64> {
    if bins_per_dim < 2 {
        return Err(Error::InvalidParameter("need at least 2 bins".into()));
    }
    let n = sample.len();
    if n == 0 {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    let binner = Binner::new(sample, bins_per_dim);
    let (mut xcells, mut ycells) = (HashMap::new(), HashMap::new());
    let mut joint: HashMap<(usize, usize), usize> = HashMap::new();
    let mut cx: Vec<usize> = Vec::new();
    let mut cy: Vec<usize> = Vec::new();
    for i in 0..n {
        let a = intern(&mut xcells, binner.cell(0, sample.x(i)));
        let b = intern(&mut ycells, binner.cell(sample.dim_x(), sample.y(i)));
        if a == cx.len() {
            cx.push(0);
        }
        if b == cy.len() {
            cy.push(0);
        }
        cx[a] += 1;
        cy[b] += 1;
        *joint.entry((a, b)).or_insert(0) += 1;
    }
    let nf = n as f64;
    let mut cells: Vec<_> = joint.into_iter().collect();
    cells.sort_unstable();
    Ok(cells
        .iter()
        .map(|&((a, b), c)| {
            let c = c as f64;
            c / nf * (c * nf / (cx[a] as f64 * cy[b] as f64)).ln()
        })
        .sum())
}

fn sample_covariance(sample: &PairedSample) -> DMatrix<f64> {
    let (n, dx, dy) = (sample.len(), sample.dim_x(), sample.dim_y());
    let mut data = DMatrix::zeros(n, dx + dy);
    for i in 0..n {
        for (j, v) in sample.x(i).iter().chain(sample.y(i)).enumerate() {
            data[(i, j)] = *v;
        }
    }
    for mut col in data.column_iter_mut() {
        let m = col.mean();
        col.add_scalar_mut(-m);
    }
    data.transpose() * &data / (n as f64 - 1.0)
}

/// Gaussian plug-in: MI of the normal with the sample covariance.
///
/// A singular covariance gets a tiny ridge, which drives the affected
/// canonical correlations to the clamp.
pub fn cca_mi(sample: &PairedSample) -> Result<f64> {
    let (n, dx, dy) = (sample.len(), sample.dim_x(), sample.dim_y());
    if n <= dx + dy {
        return Err(Error::TooFewSamples {
            needed: dx + dy + 1,
            got: n,
        });
    }
    let cov = sample_covariance(sample);
    let cc = match canonical_correlations(&cov, dx, dy) {
        Err(Error::NotPositiveDefinite) => {
            log::warn!("sample covariance is singular; adding a ridge");
            let ridge = 1e-10 * cov.trace().max(f64::MIN_POSITIVE) / (dx + dy) as f64;
            let cov = cov + DMatrix::identity(dx + dy, dx + dy) * ridge;
            canonical_correlations(&cov, dx, dy)?
        }
        other => other?,
    };
    Ok(cc.mutual_information())
}

/// Classical estimator choice for benchmark runs; inputs are standardized first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum SampleEstimator {
    Ksg { k: usize },
    Histogram { bins: usize },
    Cca,
}

impl SampleEstimator {
    /// KSG with 10 neighbours, 10 bins per dimension, CCA.
    pub const DEFAULTS: [SampleEstimator; 3] = [
        SampleEstimator::Ksg { k: 10 },
        SampleEstimator::Histogram { bins: 10 },
        SampleEstimator::Cca,
    ];

    /// Parses `ksg`, `ksg:5`, `hist`, `hist:8` or `cca`.
    pub fn parse(text: &str) -> Result<Self> {
        let (name, arg) = match text.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (text, None),
        };
        let number = |default: usize| -> Result<usize> {
            arg.map_or(Ok(default), |a| {
                a.parse().map_err(|_| {
                    Error::InvalidParameter(format!("bad estimator argument in {text:?}"))
                })
            })
        };
        match name.trim().to_ascii_lowercase().as_str() {
            "ksg" => Ok(Self::Ksg { k: number(10)? }),
            "hist" | "histogram" => Ok(Self::Histogram { bins: number(10)? }),
            "cca" if arg.is_none() => Ok(Self::Cca),
            _ => Err(Error::InvalidParameter(format!(
                "unknown estimator {text:?}"
            ))),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Self::Ksg { k } => format!("ksg:{k}"),
            Self::Histogram { bins } => format!("hist:{bins}"),
            Self::Cca => "cca".into(),
        }
    }

    pub fn estimate(&self, sample: &PairedSample) -> Result<f64> {
        let s = preprocess(sample)?;
        match *self {
            Self::Ksg { k } => ksg(&s, k),
            Self::Histogram { bins } => histogram_mi(&s, bins),
            Self::Cca => cca_mi(&s),
        }
    }
}

/// A scalar function on `X x Y` plugged into a variational bound.
pub trait Critic: Send + Sync {
    fn evaluate(&self, x: &[f64], y: &[f64]) -> f64;
}

impl<F> Critic for F
where
    F: Fn(&[f64], &[f64]) -> f64 + Send + Sync,
{
    fn evaluate(&self, x: &[f64], y: &[f64]) -> f64 {
        self(x, y)
    }
}

/// The true PMI of a distribution, evaluated from its densities.
#[derive(Debug, Clone)]
pub struct ExactPmiCritic {
    dist: Arc<dyn JointDistribution>,
}

impl ExactPmiCritic {
    pub fn new(dist: Arc<dyn JointDistribution>) -> Self {
        Self { dist }
    }
}

impl Critic for ExactPmiCritic {
    fn evaluate(&self, x: &[f64], y: &[f64]) -> f64 {
        self.dist.pmi_unchecked(x, y)
    }
}

/// Closed-form PMI of [`MultivariateNormal::paired`]; much cheaper than the
/// density route in high dimension.
#[derive(Debug, Clone)]
pub struct PairedGaussianCritic {
    rhos: Vec<f64>,
}

impl PairedGaussianCritic {
    pub fn new(rhos: Vec<f64>) -> Result<Self> {
        gaussian_mi(&rhos)?;
        Ok(Self { rhos })
    }
}

impl Critic for PairedGaussianCritic {
    fn evaluate(&self, x: &[f64], y: &[f64]) -> f64 {
        self.rhos
            .iter()
            .zip(x.iter().zip(y))
            .map(|(r, (a, b))| {
                let s = 1.0 - r * r;
                -0.5 * s.ln() - (r * r * (a * a + b * b) - 2.0 * r * a * b) / (2.0 * s)
            })
            .sum()
    }
}

/// `inner(x, y) + shift + x_term(x)`.
pub struct PerturbedCritic<C> {
    inner: C,
    shift: f64,
    x_term: Option<fn(&[f64]) -> f64>,
}

impl<C: Critic> PerturbedCritic<C> {
    pub fn shifted(inner: C, shift: f64) -> Self {
        Self {
            inner,
            shift,
            x_term: None,
        }
    }

    pub fn with_x_term(inner: C, x_term: fn(&[f64]) -> f64) -> Self {
        Self {
            inner,
            shift: 0.0,
            x_term: Some(x_term),
        }
    }
}

impl<C> fmt::Debug for PerturbedCritic<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PerturbedCritic")
            .field("shift", &self.shift)
            .field("x_term", &self.x_term.is_some())
            .finish()
    }
}

impl<C: Critic> Critic for PerturbedCritic<C> {
    fn evaluate(&self, x: &[f64], y: &[f64]) -> f64 {
        let extra = self.x_term.map_or(0.0, |g| g(x));
        self.inner.evaluate(x, y) + self.shift + extra
    }
}

/// `sin(|x|^2)`, the x-only perturbation used to probe InfoNCE.
pub fn sin_squared_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sin()
}

fn paired_values(sample: &PairedSample, critic: &dyn Critic, order: Option<&[usize]>) -> Vec<f64> {
    (0..sample.len())
        .into_par_iter()
        .map(|i| {
            let j = order.map_or(i, |o| o[i]);
            critic.evaluate(sample.x(i), sample.y(j))
        })
        .collect()
}

fn finite(v: f64, what: &'static str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite(what))
    }
}

fn at_least(sample: &PairedSample, needed: usize) -> Result<()> {
    if sample.len() < needed {
        return Err(Error::TooFewSamples {
            needed,
            got: sample.len(),
        });
    }
    Ok(())
}

/// Donsker-Varadhan bound. The product sample pairs `x_i` with
/// `y_{pi(i)}`, `pi` a permutation drawn from `seed`.
pub fn dv_bound(sample: &PairedSample, critic: &dyn Critic, seed: Seed) -> Result<f64> {
    at_least(sample, 2)?;
    let order = seed.stream().permutation(sample.len());
    let joint = paired_values(sample, critic, None);
    let product = paired_values(sample, critic, Some(&order));
    finite(profile::mean(&joint) - log_mean_exp(&product), "dv bound")
}

/// Nguyen-Wainwright-Jordan bound, `E_P f - E_{PxP} exp(f - 1)`.
pub fn nwj_bound(sample: &PairedSample, critic: &dyn Critic, seed: Seed) -> Result<f64> {
    at_least(sample, 2)?;
    let order = seed.stream().permutation(sample.len());
    let joint = paired_values(sample, critic, None);
    let product: Vec<f64> = paired_values(sample, critic, Some(&order))
        .into_iter()
        .map(|f| (f - 1.0).exp())
        .collect();
    finite(profile::mean(&joint) - profile::mean(&product), "nwj bound")
}

/// InfoNCE with in-batch negatives. Consecutive blocks of `batch` rows form
/// the batches; a trailing partial block is dropped. `None` uses the whole
/// sample as one batch.
pub fn infonce_bound(
    sample: &PairedSample,
    critic: &dyn Critic,
    batch: Option<usize>,
) -> Result<f64> {
    at_least(sample, 2)?;
    let b = batch.unwrap_or(sample.len());
    if b < 2 {
        return Err(Error::InvalidParameter("batch size must be >= 2".into()));
    }
    at_least(sample, b)?;
    let used = sample.len() / b * b;
    let terms: Vec<f64> = (0..used)
        .into_par_iter()
        .map_init(
            || vec![0.0; b],
            |row, i| {
                let start = i / b * b;
                let x = sample.x(i);
                for (j, r) in row.iter_mut().enumerate() {
                    *r = critic.evaluate(x, sample.y(start + j));
                }
                row[i - start] - log_mean_exp(row)
            },
        )
        .collect();
    finite(profile::mean(&terms), "infonce bound")
}

/// Mean of the critic over the pairs, reading the critic as PMI.
pub fn mc_oracle(sample: &PairedSample, critic: &dyn Critic) -> Result<MiEstimate> {
    at_least(sample, 1)?;
    MiEstimate::from_values(&paired_values(sample, critic, None))
}

/// One row of [`saturation_study`]: each estimator averaged over batches of `batch` rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaturationRow {
    pub batch: usize,
    pub batches: usize,
    pub log_batch: f64,
    pub mc: f64,
    pub mc_stderr: f64,
    pub dv: f64,
    pub nwj: f64,
    pub infonce: f64,
}

/// Evaluates MC, DV, NWJ and InfoNCE with the exact PMI critic on
/// `dim_pairs` independent pairs correlated at `rho`.
///
/// MC uses all `n` points; the bounds are averaged over at most
/// `max_batches` disjoint batches of each size.
pub fn saturation_study(
    dim_pairs: usize,
    rho: f64,
    batch_sizes: &[usize],
    n: usize,
    max_batches: usize,
    seed: Seed,
) -> Result<Vec<SaturationRow>> {
    let rhos = vec![rho; dim_pairs];
    let dist = MultivariateNormal::paired(&rhos)?;
    let critic = PairedGaussianCritic::new(rhos)?;
    let data = sample(&dist, seed.child("saturation_data", 0), n);
    let mc = mc_oracle(&data, &critic)?;
    batch_sizes
        .iter()
        .map(|&b| {
            if b < 2 || b > n {
                return Err(Error::InvalidParameter(format!(
                    "batch size {b} outside [2, {n}]"
                )));
            }
            let count = (n / b).min(max_batches.max(1));
            let (mut dv, mut nwj, mut nce) = (0.0, 0.0, 0.0);
            for t in 0..count {
                let part = data.slice(t * b..(t + 1) * b);
                let s = seed.child("saturation_permutation", (b * max_batches + t) as u64);
                dv += dv_bound(&part, &critic, s)?;
                nwj += nwj_bound(&part, &PerturbedCritic::shifted(critic.clone(), 1.0), s)?;
                nce += infonce_bound(&part, &critic, None)?;
            }
            let c = count as f64;
            Ok(SaturationRow {
                batch: b,
                batches: count,
                log_batch: (b as f64).ln(),
                mc: mc.value,
                mc_stderr: mc.stderr,
                dv: dv / c,
                nwj: nwj / c,
                infonce: nce / c,
            })
        })
        .collect()
}
