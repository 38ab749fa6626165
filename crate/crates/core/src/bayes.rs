//! Bayesian MI and profile estimation with a sparse Gaussian mixture.
//!
//! The posterior over mixture parameters is explored by blocked Gibbs
//! sampling under a conjugate Normal-Inverse-Wishart prior: labels, then
//! component means and covariances, then weights. Every posterior draw is a
//! [`MixtureDistribution`], so MI and profiles reuse [`crate::profile`].

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand_distr::{ChiSquared, Distribution, Gamma};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::PairedSample;
use crate::distributions::{JointDistribution, JointDistributionExt, MultivariateNormal};
use crate::error::{check_finite, Error, Result};
use crate::linalg::{log_sum_exp, CholeskyFactor};
use crate::mix::MixtureDistribution;
use crate::profile::{histogram, ks_distance, mi_mc, sample_profile, ProfileHistogram};
use crate::rng::{Seed, Stream};

/// Components whose posterior weight falls below this are dropped when a
/// draw is turned into a distribution.
pub const MIN_WEIGHT: f64 = 1e-12;

/// Per-coordinate two-sample KS distance above which the predictive check fires.
pub const PPC_KS_THRESHOLD: f64 = 0.15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmmPrior {
    pub components: usize,
    /// Dirichlet concentration for each weight; `1 / components` by default.
    pub dirichlet_concentration: f64,
    /// Prior standard deviation of each mean coordinate when `Sigma = I`.
    pub mean_prior_scale: f64,
    /// Inverse-Wishart degrees of freedom minus the data dimension.
    pub covariance_dof_offset: f64,
    /// Prior mean of every covariance is `covariance_scale * I`.
    pub covariance_scale: f64,
}

impl GmmPrior {
    pub fn new(components: usize) -> Self {
        Self {
            components,
            dirichlet_concentration: 1.0 / components.max(1) as f64,
            mean_prior_scale: 3.0,
            covariance_dof_offset: 2.0,
            covariance_scale: 1.0,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.components == 0 {
            return Err(Error::InvalidParameter(
                "need at least one component".into(),
            ));
        }
        let positive = [
            self.dirichlet_concentration,
            self.mean_prior_scale,
            self.covariance_scale,
        ];
        if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidParameter(
                "prior scales must be positive".into(),
            ));
        }
        if !(self.covariance_dof_offset > 1.0) {
            return Err(Error::InvalidParameter(
                "covariance dof offset must exceed 1".into(),
            ));
        }
        Ok(())
    }
}

impl Default for GmmPrior {
    fn default() -> Self {
        Self::new(10)
    }
}

struct Niw {
    kappa: f64,
    nu: f64,
    psi: DMatrix<f64>,
}

impl Niw {
    fn from_prior(prior: &GmmPrior, d: usize) -> Self {
        let nu = d as f64 + prior.covariance_dof_offset;
        let psi = DMatrix::identity(d, d) * prior.covariance_scale * (nu - d as f64 - 1.0);
        Self {
            kappa: 1.0 / (prior.mean_prior_scale * prior.mean_prior_scale),
            nu,
            psi,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub warmup: usize,
    pub draws: usize,
    pub seed: Seed,
}

impl ChainConfig {
    pub fn new(seed: Seed) -> Self {
        Self {
            warmup: 1000,
            draws: 1000,
            seed,
        }
    }
}

/// One posterior sample of mixture parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorDraw {
    pub dim_x: usize,
    pub dim_y: usize,
    pub weights: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    pub covariances: Vec<Vec<Vec<f64>>>,
}

impl PosteriorDraw {
    /// Mixture of normals with negligible components dropped and weights renormalized.
    pub fn to_mixture(&self) -> Result<MixtureDistribution> {
        let d = self.dim_x + self.dim_y;
        let kept: Vec<usize> = (0..self.weights.len())
            .filter(|&k| self.weights[k] >= MIN_WEIGHT)
            .collect();
        let total: f64 = kept.iter().map(|&k| self.weights[k]).sum();
        let mut weights = Vec::with_capacity(kept.len());
        let mut comps: Vec<Arc<dyn JointDistribution>> = Vec::with_capacity(kept.len());
        for &k in &kept {
            let cov = DMatrix::from_fn(d, d, |i, j| self.covariances[k][i][j]);
            let normal =
                MultivariateNormal::new(self.means[k].clone(), cov, self.dim_x, self.dim_y)?;
            weights.push(self.weights[k] / total);
            comps.push(Arc::new(normal));
        }
        MixtureDistribution::new(weights, comps)
    }

    /// Weighted mean of the mixture; invariant to component relabelling.
    pub fn overall_mean(&self) -> Vec<f64> {
        let d = self.dim_x + self.dim_y;
        let mut out = vec![0.0; d];
        for (w, m) in self.weights.iter().zip(&self.means) {
            for (o, v) in out.iter_mut().zip(m) {
                *o += w * v;
            }
        }
        out
    }
}

fn sample_log_gamma(rng: &mut Stream, shape: f64) -> f64 {
    // Boost small shapes so tiny Dirichlet weights do not underflow.
    if shape >= 1.0 {
        Gamma::new(shape, 1.0)
            .expect("positive shape")
            .sample(rng)
            .ln()
    } else {
        let g = Gamma::new(shape + 1.0, 1.0)
            .expect("positive shape")
            .sample(rng);
        g.ln() + rng.uniform_open().ln() / shape
    }
}

fn sample_dirichlet(rng: &mut Stream, alphas: &[f64]) -> Vec<f64> {
    let logs: Vec<f64> = alphas.iter().map(|&a| sample_log_gamma(rng, a)).collect();
    let norm = log_sum_exp(&logs);
    logs.iter().map(|l| (l - norm).exp()).collect()
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// Bartlett decomposition of the Wishart with scale `psi^-1`, inverted.
fn sample_inverse_wishart(rng: &mut Stream, psi: &DMatrix<f64>, nu: f64) -> Result<DMatrix<f64>> {
    let d = psi.nrows();
    let psi_inv = psi
        .clone()
        .cholesky()
        .ok_or(Error::NotPositiveDefinite)?
        .inverse();
    let l = symmetrize(psi_inv)
        .cholesky()
        .ok_or(Error::NotPositiveDefinite)?
        .l();
    let mut a = DMatrix::zeros(d, d);
    for i in 0..d {
        let chi =
            ChiSquared::new(nu - i as f64).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        a[(i, i)] = chi.sample(rng).sqrt();
        for j in 0..i {
            a[(i, j)] = rng.normal();
        }
    }
    let la = l * a;
    let precision = &la * la.transpose();
    let cov = precision
        .cholesky()
        .ok_or(Error::NotPositiveDefinite)?
        .inverse();
    Ok(symmetrize(cov))
}

struct Params {
    weights: Vec<f64>,
    means: Vec<DVector<f64>>,
    covs: Vec<DMatrix<f64>>,
}

fn rows(sample: &PairedSample) -> Vec<DVector<f64>> {
    (0..sample.len())
        .map(|i| {
            DVector::from_iterator(
                sample.dim_x() + sample.dim_y(),
                sample.x(i).iter().chain(sample.y(i)).copied(),
            )
        })
        .collect()
}

fn initial_params(data: &[DVector<f64>], k: usize, rng: &mut Stream) -> Params {
    let d = data[0].len();
    let n = data.len() as f64;
    let mean = data.iter().fold(DVector::zeros(d), |acc, v| acc + v) / n;
    let cov = data.iter().fold(DMatrix::zeros(d, d), |acc, v| {
        acc + (v - &mean) * (v - &mean).transpose()
    }) / (n - 1.0).max(1.0);
    let cov = if CholeskyFactor::new(&cov).is_ok() {
        cov
    } else {
        DMatrix::identity(d, d)
    };
    let order = rng.permutation(data.len());
    Params {
        weights: vec![1.0 / k as f64; k],
        means: order.iter().take(k).map(|&i| data[i].clone()).collect(),
        covs: vec![cov; k],
    }
}

fn sample_labels(data: &[DVector<f64>], params: &Params, rng: &mut Stream) -> Result<Vec<usize>> {
    let factors = params
        .covs
        .iter()
        .map(CholeskyFactor::new)
        .collect::<Result<Vec<_>>>()?;
    let log_w: Vec<f64> = params.weights.iter().map(|w| w.ln()).collect();
    let k = params.weights.len();
    let mut logp = vec![0.0; k];
    let mut cdf = vec![0.0; k];
    let mut diff = vec![0.0; data[0].len()];
    Ok(data
        .iter()
        .map(|v| {
            for c in 0..k {
                for (o, (a, b)) in diff.iter_mut().zip(v.iter().zip(params.means[c].iter())) {
                    *o = a - b;
                }
                logp[c] =
                    log_w[c] - 0.5 * (factors[c].mahalanobis_sq(&diff) + factors[c].log_det());
            }
            let norm = log_sum_exp(&logp);
            let mut acc = 0.0;
            for c in 0..k {
                acc += (logp[c] - norm).exp();
                cdf[c] = acc;
            }
            rng.categorical_cdf(&cdf)
        })
        .collect())
}

fn sample_components(
    data: &[DVector<f64>],
    labels: &[usize],
    niw: &Niw,
    params: &mut Params,
    rng: &mut Stream,
) -> Result<Vec<usize>> {
    let k = params.weights.len();
    let d = data[0].len();
    let mut counts = vec![0usize; k];
    let mut sums = vec![DVector::zeros(d); k];
    for (v, &z) in data.iter().zip(labels) {
        counts[z] += 1;
        sums[z] += v;
    }
    let mut scatter = vec![DMatrix::zeros(d, d); k];
    for (v, &z) in data.iter().zip(labels) {
        let centered = v - &sums[z] / counts[z] as f64;
        scatter[z] += &centered * centered.transpose();
    }
    for c in 0..k {
        let nk = counts[c] as f64;
        let kappa = niw.kappa + nk;
        let nu = niw.nu + nk;
        let (mean_post, psi) = if counts[c] == 0 {
            (DVector::zeros(d), niw.psi.clone())
        } else {
            let xbar = &sums[c] / nk;
            let psi = &niw.psi + &scatter[c] + &xbar * xbar.transpose() * (niw.kappa * nk / kappa);
            (xbar * (nk / kappa), psi)
        };
        let cov = sample_inverse_wishart(rng, &symmetrize(psi), nu)?;
        let chol = CholeskyFactor::new(&(&cov / kappa))?;
        let mut z = vec![0.0; d];
        rng.fill_normal(&mut z);
        let mut shift = vec![0.0; d];
        chol.mul_lower(&z, &mut shift);
        params.means[c] = mean_post + DVector::from_vec(shift);
        params.covs[c] = cov;
    }
    Ok(counts)
}

fn snapshot(params: &Params, dim_x: usize, dim_y: usize) -> PosteriorDraw {
    PosteriorDraw {
        dim_x,
        dim_y,
        weights: params.weights.clone(),
        means: params
            .means
            .iter()
            .map(|m| m.iter().copied().collect())
            .collect(),
        covariances: params
            .covs
            .iter()
            .map(|c| c.row_iter().map(|r| r.iter().copied().collect()).collect())
            .collect(),
    }
}

/// Runs one Gibbs chain and returns the post-warmup draws.
///
/// The prior is placed on the data as given; standardize first (see
/// [`crate::estimators::preprocess`]) for the default scales to be sensible.
pub fn fit_posterior(
    sample: &PairedSample,
    prior: &GmmPrior,
    config: &ChainConfig,
) -> Result<Vec<PosteriorDraw>> {
    prior.validate()?;
    let k = prior.components;
    if sample.len() < k.max(2) {
        return Err(Error::TooFewSamples {
            needed: k.max(2),
            got: sample.len(),
        });
    }
    check_finite(sample.xs(), "xs")?;
    check_finite(sample.ys(), "ys")?;
    let data = rows(sample);
    let niw = Niw::from_prior(prior, data[0].len());
    let mut rng = config.seed.child("gibbs", 0).stream();
    let mut params = initial_params(&data, k, &mut rng);
    let mut draws = Vec::with_capacity(config.draws);
    for it in 0..config.warmup + config.draws {
        let labels = sample_labels(&data, &params, &mut rng)?;
        let counts = sample_components(&data, &labels, &niw, &mut params, &mut rng)?;
        let alphas: Vec<f64> = counts
            .iter()
            .map(|&c| prior.dirichlet_concentration + c as f64)
            .collect();
        params.weights = sample_dirichlet(&mut rng, &alphas);
        if it >= config.warmup {
            draws.push(snapshot(&params, sample.dim_x(), sample.dim_y()));
        }
    }
    Ok(draws)
}

/// Independent chains on derived seeds, run in parallel.
pub fn fit_chains(
    sample: &PairedSample,
    prior: &GmmPrior,
    config: &ChainConfig,
    chains: usize,
) -> Result<Vec<Vec<PosteriorDraw>>> {
    (0..chains)
        .into_par_iter()
        .map(|c| {
            let cfg = ChainConfig {
                seed: config.seed.child("chain", c as u64),
                ..*config
            };
            fit_posterior(sample, prior, &cfg)
        })
        .collect()
}

/// Split R-hat of a scalar across chains of equal length.
pub fn split_rhat(chains: &[Vec<f64>]) -> Result<f64> {
    let len = chains.iter().map(Vec::len).min().unwrap_or(0);
    if chains.is_empty() || len < 4 {
        return Err(Error::TooFewSamples {
            needed: 4,
            got: len,
        });
    }
    let half = len / 2;
    let halves: Vec<&[f64]> = chains
        .iter()
        .flat_map(|c| [&c[..half], &c[half..2 * half]])
        .collect();
    let m = halves.len() as f64;
    let n = half as f64;
    let means: Vec<f64> = halves.iter().map(|h| crate::profile::mean(h)).collect();
    let within = halves
        .iter()
        .map(|h| crate::profile::variance(h))
        .sum::<f64>()
        / m;
    let between = n * crate::profile::variance(&means);
    let pooled = (n - 1.0) / n * within + between / n;
    Ok((pooled / within).sqrt())
}

/// Draws from the prior itself, for prior predictive sanity checks.
pub fn sample_prior(
    prior: &GmmPrior,
    dim_x: usize,
    dim_y: usize,
    seed: Seed,
) -> Result<PosteriorDraw> {
    prior.validate()?;
    let d = dim_x + dim_y;
    let niw = Niw::from_prior(prior, d);
    let mut rng = seed.child("prior", 0).stream();
    let mut params = Params {
        weights: sample_dirichlet(
            &mut rng,
            &vec![prior.dirichlet_concentration; prior.components],
        ),
        means: Vec::new(),
        covs: Vec::new(),
    };
    for _ in 0..prior.components {
        let cov = sample_inverse_wishart(&mut rng, &niw.psi, niw.nu)?;
        let chol = CholeskyFactor::new(&(&cov / niw.kappa))?;
        let mut z = vec![0.0; d];
        rng.fill_normal(&mut z);
        let mut mean = vec![0.0; d];
        chol.mul_lower(&z, &mut mean);
        params.means.push(DVector::from_vec(mean));
        params.covs.push(cov);
    }
    Ok(snapshot(&params, dim_x, dim_y))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MiSummary {
    pub mean: f64,
    pub p10: f64,
    pub p90: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiPosterior {
    /// MI of each posterior draw, in draw order.
    pub draws: Vec<f64>,
    /// Monte Carlo standard error of each draw's MI.
    pub stderrs: Vec<f64>,
    pub summary: MiSummary,
}

/// Linear-interpolation percentile, `q` in `[0, 1]`.
pub fn percentile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    if v.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

pub fn summarize(draws: &[f64]) -> MiSummary {
    MiSummary {
        mean: crate::profile::mean(draws),
        p10: percentile(draws, 0.1),
        p90: percentile(draws, 0.9),
    }
}

/// Monte Carlo MI of every draw with `mc_samples_per_draw` points each.
pub fn mi_posterior(
    draws: &[PosteriorDraw],
    mc_samples_per_draw: usize,
    seed: Seed,
) -> Result<MiPosterior> {
    if draws.is_empty() {
        return Err(Error::InvalidParameter("no posterior draws".into()));
    }
    let estimates = draws
        .par_iter()
        .enumerate()
        .map(|(m, draw)| {
            let mix = draw.to_mixture()?;
            let s = seed.child("mi_draw", m as u64);
            mi_mc(&sample_profile(&mix, s, mc_samples_per_draw)?)
        })
        .collect::<Result<Vec<_>>>()?;
    let values: Vec<f64> = estimates.iter().map(|e| e.value).collect();
    Ok(MiPosterior {
        summary: summarize(&values),
        stderrs: estimates.iter().map(|e| e.stderr).collect(),
        draws: values,
    })
}

/// One profile histogram per draw over shared `bin_edges`.
pub fn profile_posterior(
    draws: &[PosteriorDraw],
    mc_samples_per_draw: usize,
    bin_edges: &[f64],
    seed: Seed,
) -> Result<Vec<ProfileHistogram>> {
    if draws.is_empty() {
        return Err(Error::InvalidParameter("no posterior draws".into()));
    }
    draws
        .par_iter()
        .enumerate()
        .map(|(m, draw)| {
            let mix = draw.to_mixture()?;
            let s = seed.child("profile_draw", m as u64);
            histogram(
                sample_profile(&mix, s, mc_samples_per_draw)?.values(),
                bin_edges,
            )
        })
        .collect()
}

/// Fraction of bins whose reference probability lies inside the pointwise
/// min-max envelope of the posterior histograms.
pub fn envelope_coverage(posterior: &[ProfileHistogram], reference: &ProfileHistogram) -> f64 {
    let bins = reference.bin_probs.len();
    let covered = (0..bins)
        .filter(|&b| {
            let lo = posterior
                .iter()
                .map(|h| h.bin_probs[b])
                .fold(f64::INFINITY, f64::min);
            let hi = posterior
                .iter()
                .map(|h| h.bin_probs[b])
                .fold(f64::NEG_INFINITY, f64::max);
            (lo..=hi).contains(&reference.bin_probs[b])
        })
        .count();
    covered as f64 / bins.max(1) as f64
}

/// `n` samples from the draw's mixture.
pub fn posterior_predictive(draw: &PosteriorDraw, n: usize, seed: Seed) -> Result<PairedSample> {
    if n == 0 {
        return PairedSample::new(draw.dim_x, draw.dim_y, Vec::new(), Vec::new());
    }
    Ok(draw.to_mixture()?.sample(seed.child("predictive", 0), n))
}

/// Two-sample KS distance of each coordinate, X columns first.
pub fn coordinate_ks(observed: &PairedSample, predicted: &PairedSample) -> Result<Vec<f64>> {
    let d = observed.dim_x() + observed.dim_y();
    if predicted.dim_x() + predicted.dim_y() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: predicted.dim_x() + predicted.dim_y(),
        });
    }
    (0..d)
        .map(|j| ks_distance(&observed.column(j), &predicted.column(j)))
        .collect()
}
