use std::f64::consts::LN_2;
use std::sync::Arc;

use statrs::function::gamma::ln_gamma;

use super::{JointDistribution, Marginal, Support};
use crate::error::{Error, Result};
use crate::linalg::log_sum_exp;
use crate::rng::Stream;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Distribution over labels `0..k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Categorical {
    probs: Vec<f64>,
    log_probs: Vec<f64>,
    cumulative: Vec<f64>,
}

impl Categorical {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidWeights("empty probability table".into()));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidWeights(
                "probabilities must be finite and >= 0".into(),
            ));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidWeights(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        let log_probs = probs.iter().map(|p| p.ln()).collect();
        let cumulative = probs
            .iter()
            .scan(0.0, |acc, p| {
                *acc += p;
                Some(*acc)
            })
            .collect();
        Ok(Self {
            probs,
            log_probs,
            cumulative,
        })
    }

    pub fn uniform(k: usize) -> Result<Self> {
        Self::new(vec![1.0 / k as f64; k])
    }

    pub fn bernoulli(p_one: f64) -> Result<Self> {
        Self::new(vec![1.0 - p_one, p_one])
    }

    pub fn states(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub(crate) fn draw(&self, rng: &mut Stream) -> usize {
        rng.categorical_cdf(&self.cumulative)
    }

    pub(crate) fn log_prob(&self, label: f64) -> f64 {
        if label < 0.0 || label.fract() != 0.0 {
            return f64::NEG_INFINITY;
        }
        self.log_probs
            .get(label as usize)
            .copied()
            .unwrap_or(f64::NEG_INFINITY)
    }
}

impl Marginal for Categorical {
    fn dim(&self) -> usize {
        1
    }

    fn support(&self) -> Support {
        Support::Discrete {
            states: Some(self.probs.len()),
        }
    }

    fn sample_into(&self, rng: &mut Stream, out: &mut [f64]) {
        out[0] = self.draw(rng) as f64;
    }

    fn log_pdf(&self, v: &[f64]) -> f64 {
        self.log_prob(v[0])
    }
}

/// Discrete `X` uniform on `0..m`, `Y | X = x ~ U(x, x + 2)`, replicated
/// independently `replicas` times.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GaoStaircase {
    m: usize,
    replicas: usize,
}

impl GaoStaircase {
    pub fn new(m: usize, replicas: usize) -> Result<Self> {
        if m == 0 || replicas == 0 {
            return Err(Error::InvalidParameter(
                "staircase needs m >= 1 and replicas >= 1".into(),
            ));
        }
        Ok(Self { m, replicas })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn replicas(&self) -> usize {
        self.replicas
    }

    pub fn mutual_information(&self) -> f64 {
        self.replicas as f64 * gao_mi(self.m)
    }

    fn log_pdf_y1(&self, y: f64) -> f64 {
        // Number of labels x with x < y < x + 2.
        let lo = ((y - 2.0).floor() + 1.0).max(0.0);
        let hi = (y.ceil() - 1.0).min(self.m as f64 - 1.0);
        let count = hi - lo + 1.0;
        if count <= 0.0 {
            f64::NEG_INFINITY
        } else {
            (count / (2.0 * self.m as f64)).ln()
        }
    }
}

impl JointDistribution for GaoStaircase {
    fn dim_x(&self) -> usize {
        self.replicas
    }

    fn dim_y(&self) -> usize {
        self.replicas
    }

    fn support_x(&self) -> Support {
        Support::Discrete {
            states: Some(self.m),
        }
    }

    fn sample_into(&self, rng: &mut Stream, x: &mut [f64], y: &mut [f64]) {
        for (xi, yi) in x.iter_mut().zip(y.iter_mut()) {
            *xi = rng.below(self.m) as f64;
            *yi = *xi + 2.0 * rng.uniform_open();
        }
    }

    fn log_pdf_joint(&self, x: &[f64], y: &[f64]) -> f64 {
        let per = -(2.0 * self.m as f64).ln();
        let mut total = 0.0;
        for (xi, yi) in x.iter().zip(y) {
            if !(*yi > *xi && *yi < *xi + 2.0) {
                return f64::NEG_INFINITY;
            }
            total += per;
        }
        total
    }

    fn log_pdf_x(&self, x: &[f64]) -> f64 {
        if x.iter()
            .all(|v| *v >= 0.0 && *v < self.m as f64 && v.fract() == 0.0)
        {
            -(self.replicas as f64) * (self.m as f64).ln()
        } else {
            f64::NEG_INFINITY
        }
    }

    fn log_pdf_y(&self, y: &[f64]) -> f64 {
        y.iter().map(|v| self.log_pdf_y1(*v)).sum()
    }

    fn marginal_x(&self) -> Option<Arc<dyn Marginal>> {
        (self.replicas == 1)
            .then(|| Arc::new(Categorical::uniform(self.m).expect("m >= 1")) as Arc<dyn Marginal>)
    }
}

/// MI of one staircase pair: `log m - ((m - 1) / m) log 2`.
pub fn gao_mi(m: usize) -> f64 {
    assert!(m >= 1, "m must be at least 1");
    let m = m as f64;
    m.ln() - (m - 1.0) / m * LN_2
}

/// `X ~ Exp(1)`, `Y | X = x ~ p * delta_0 + (1 - p) * Poisson(x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroInflatedPoissonization {
    p: f64,
}

impl ZeroInflatedPoissonization {
    pub fn new(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParameter(format!(
                "p must be in [0, 1], got {p}"
            )));
        }
        Ok(Self { p })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    fn log_conditional(&self, y: f64, x: f64) -> f64 {
        let log_pois = if x == 0.0 {
            if y == 0.0 {
                0.0
            } else {
                f64::NEG_INFINITY
            }
        } else {
            -x + y * x.ln() - ln_gamma(y + 1.0)
        };
        if y == 0.0 {
            (self.p + (1.0 - self.p) * (-x).exp()).ln()
        } else {
            (1.0 - self.p).ln() + log_pois
        }
    }
}

impl JointDistribution for ZeroInflatedPoissonization {
    fn dim_x(&self) -> usize {
        1
    }

    fn dim_y(&self) -> usize {
        1
    }

    fn support_y(&self) -> Support {
        Support::Discrete { states: None }
    }

    fn sample_into(&self, rng: &mut Stream, x: &mut [f64], y: &mut [f64]) {
        x[0] = -rng.uniform_open().ln();
        let inflated = rng.uniform() < self.p;
        let pois = poisson(rng, x[0]);
        y[0] = if inflated { 0.0 } else { pois as f64 };
    }

    fn log_pdf_joint(&self, x: &[f64], y: &[f64]) -> f64 {
        if x[0] < 0.0 {
            return f64::NEG_INFINITY;
        }
        -x[0] + self.log_conditional(y[0], x[0])
    }

    fn log_pdf_x(&self, x: &[f64]) -> f64 {
        if x[0] < 0.0 {
            f64::NEG_INFINITY
        } else {
            -x[0]
        }
    }

    fn log_pdf_y(&self, y: &[f64]) -> f64 {
        if y[0] == 0.0 {
            (self.p + 0.5 * (1.0 - self.p)).ln()
        } else {
            (1.0 - self.p).ln() - (1.0 + y[0]) * LN_2
        }
    }
}

/// Poisson draw: inversion below mean 10, PTRS transformed rejection above.
pub(crate) fn poisson(rng: &mut Stream, lambda: f64) -> u64 {
    if lambda <= 0.0 {
        return 0;
    }
    if lambda < 10.0 {
        let u = rng.uniform();
        let mut k = 0u64;
        let mut p = (-lambda).exp();
        let mut cdf = p;
        while u > cdf && p > 0.0 {
            k += 1;
            p *= lambda / k as f64;
            cdf += p;
        }
        return k;
    }
    let slam = lambda.sqrt();
    let loglam = lambda.ln();
    let b = 0.931 + 2.53 * slam;
    let a = -0.059 + 0.02483 * b;
    let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    let vr = 0.9277 - 3.6224 / (b - 2.0);
    loop {
        let u = rng.uniform() - 0.5;
        let v = rng.uniform();
        let us = 0.5 - u.abs();
        let k = ((2.0 * a / us + b) * u + lambda + 0.43).floor();
        if us >= 0.07 && v <= vr {
            return k as u64;
        }
        if k < 0.0 || (us < 0.013 && v > us) {
            continue;
        }
        let lhs = v.ln() + inv_alpha.ln() - (a / (us * us) + b).ln();
        if lhs <= -lambda + k * loglam - ln_gamma(k + 1.0) {
            return k as u64;
        }
    }
}

/// Closed-form MI of the zero-inflated Poissonization as published:
/// `(1 - p) * (2 log 2 - gamma - sum_k log k * 2^-k)`.
///
/// Exact at `p = 0` and `p = 1`; for `0 < p < 1` it overstates the MI,
/// see [`zip_mi_quadrature`].
pub fn zip_mi(p: f64) -> f64 {
    let mut series = 0.0;
    let mut k = 2u32;
    loop {
        let term = (k as f64).ln() * 0.5f64.powi(k as i32);
        series += term;
        if term < 1e-12 {
            break;
        }
        k += 1;
    }
    (1.0 - p) * (2.0 * LN_2 - EULER_GAMMA - series)
}

/// MI of the zero-inflated Poissonization by direct quadrature over `x`
/// and summation over `y`.
pub fn zip_mi_quadrature(p: f64) -> f64 {
    let d = ZeroInflatedPoissonization { p };
    let log_py: Vec<f64> = (0..400).map(|y| d.log_pdf_y(&[y as f64])).collect();
    let integrand = |x: f64| -> f64 {
        let mut acc = 0.0;
        let y_max = (x + 12.0 * x.sqrt() + 30.0) as usize;
        for (y, lpy) in log_py.iter().enumerate().take(y_max.min(log_py.len())) {
            let lc = d.log_conditional(y as f64, x);
            if lc.is_finite() {
                acc += lc.exp() * (lc - lpy);
            }
        }
        (-x).exp() * acc
    };
    // Composite Simpson on [0, 60]; the exponential weight makes the tail negligible.
    let n = 60_000;
    let h = 60.0 / n as f64;
    let mut s = integrand(0.0) + integrand(60.0);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * integrand(i as f64 * h);
    }
    s * h / 3.0
}

/// Mixture of products `P_{X_k} (x) P_{Y_k}` with continuous `X` and
/// categorical `Y`: the graphical model `X <- Z -> Y`.
#[derive(Debug, Clone)]
pub struct DiscreteContinuousMixture {
    log_weights: Vec<f64>,
    cumulative: Vec<f64>,
    x_parts: Vec<Arc<dyn Marginal>>,
    y_tables: Vec<Categorical>,
    y_marginal: Arc<Categorical>,
}

impl DiscreteContinuousMixture {
    pub fn new(
        weights: Vec<f64>,
        x_parts: Vec<Arc<dyn Marginal>>,
        y_tables: Vec<Categorical>,
    ) -> Result<Self> {
        let k = weights.len();
        if k == 0 || x_parts.len() != k || y_tables.len() != k {
            return Err(Error::InvalidParameter(
                "weights, x parts and y tables must be non-empty and equally long".into(),
            ));
        }
        if weights.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::InvalidWeights("weights must be positive".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidWeights(format!(
                "weights sum to {total}, not 1"
            )));
        }
        let dim = x_parts[0].dim();
        if let Some(bad) = x_parts.iter().find(|p| p.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: bad.dim(),
            });
        }
        let states = y_tables[0].states();
        if let Some(bad) = y_tables.iter().find(|t| t.states() != states) {
            return Err(Error::DimensionMismatch {
                expected: states,
                got: bad.states(),
            });
        }
        let mut y_probs = vec![0.0; states];
        for (w, t) in weights.iter().zip(&y_tables) {
            for (acc, p) in y_probs.iter_mut().zip(t.probs()) {
                *acc += w * p;
            }
        }
        let norm: f64 = y_probs.iter().sum();
        y_probs.iter_mut().for_each(|p| *p /= norm);
        let cumulative = weights
            .iter()
            .scan(0.0, |acc, w| {
                *acc += w;
                Some(*acc)
            })
            .collect();
        Ok(Self {
            log_weights: weights.iter().map(|w| w.ln()).collect(),
            cumulative,
            x_parts,
            y_tables,
            y_marginal: Arc::new(Categorical::new(y_probs)?),
        })
    }
}

impl JointDistribution for DiscreteContinuousMixture {
    fn dim_x(&self) -> usize {
        self.x_parts[0].dim()
    }

    fn dim_y(&self) -> usize {
        1
    }

    fn support_y(&self) -> Support {
        self.y_marginal.support()
    }

    fn sample_into(&self, rng: &mut Stream, x: &mut [f64], y: &mut [f64]) {
        let k = rng.categorical_cdf(&self.cumulative);
        self.x_parts[k].sample_into(rng, x);
        y[0] = self.y_tables[k].draw(rng) as f64;
    }

    fn log_pdf_joint(&self, x: &[f64], y: &[f64]) -> f64 {
        let terms: Vec<f64> = (0..self.log_weights.len())
            .map(|k| {
                self.log_weights[k] + self.x_parts[k].log_pdf(x) + self.y_tables[k].log_prob(y[0])
            })
            .collect();
        log_sum_exp(&terms)
    }

    fn log_pdf_x(&self, x: &[f64]) -> f64 {
        let terms: Vec<f64> = (0..self.log_weights.len())
            .map(|k| self.log_weights[k] + self.x_parts[k].log_pdf(x))
            .collect();
        log_sum_exp(&terms)
    }

    fn log_pdf_y(&self, y: &[f64]) -> f64 {
        self.y_marginal.log_prob(y[0])
    }

    fn marginal_y(&self) -> Option<Arc<dyn Marginal>> {
        Some(self.y_marginal.clone())
    }
}
