//! Finite mixtures, products of independent marginals, and channel contamination.

use std::sync::Arc;

use crate::distributions::{JointDistribution, Marginal, Support, UniformBox};
use crate::error::{Error, Result};
use crate::linalg::log_sum_exp;
use crate::rng::Stream;

fn validate_weights(weights: &[f64]) -> Result<()> {
    if weights.is_empty() {
        return Err(Error::InvalidWeights("no components".into()));
    }
    if weights.iter().any(|w| !w.is_finite() || *w <= 0.0) {
        return Err(Error::InvalidWeights(
            "weights must be finite and positive".into(),
        ));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidWeights(format!(
            "weights sum to {total}, not 1"
        )));
    }
    Ok(())
}

fn cumulative(weights: &[f64]) -> Vec<f64> {
    weights
        .iter()
        .scan(0.0, |acc, w| {
            *acc += w;
            Some(*acc)
        })
        .collect()
}

/// `sum_k w_k P_k`, with nested mixtures flattened at construction.
#[derive(Debug, Clone)]
pub struct MixtureDistribution {
    weights: Vec<f64>,
    log_weights: Vec<f64>,
    cumulative: Vec<f64>,
    components: Vec<Arc<dyn JointDistribution>>,
}

/// Builds a mixture; see [`MixtureDistribution`].
pub fn mixture(
    weights: Vec<f64>,
    components: Vec<Arc<dyn JointDistribution>>,
) -> Result<MixtureDistribution> {
    MixtureDistribution::new(weights, components)
}

impl MixtureDistribution {
    pub fn new(weights: Vec<f64>, components: Vec<Arc<dyn JointDistribution>>) -> Result<Self> {
        validate_weights(&weights)?;
        if weights.len() != components.len() {
            return Err(Error::InvalidWeights(format!(
                "{} weights for {} components",
                weights.len(),
                components.len()
            )));
        }
        let (dx, dy) = (components[0].dim_x(), components[0].dim_y());
        let (sx, sy) = (components[0].support_x(), components[0].support_y());
        for c in &components {
            if c.dim_x() != dx {
                return Err(Error::DimensionMismatch {
                    expected: dx,
                    got: c.dim_x(),
                });
            }
            if c.dim_y() != dy {
                return Err(Error::DimensionMismatch {
                    expected: dy,
                    got: c.dim_y(),
                });
            }
            if c.support_x() != sx || c.support_y() != sy {
                return Err(Error::InvalidParameter(
                    "mixture components must share supports".into(),
                ));
            }
        }
        let total: f64 = weights.iter().sum();
        let mut flat_w = Vec::new();
        let mut flat_c = Vec::new();
        for (w, c) in weights.into_iter().zip(components) {
            match c.as_mixture() {
                Some(inner) => {
                    for (iw, ic) in inner.weights.iter().zip(&inner.components) {
                        flat_w.push(w / total * iw);
                        flat_c.push(ic.clone());
                    }
                }
                None => {
                    flat_w.push(w / total);
                    flat_c.push(c);
                }
            }
        }
        Ok(Self {
            log_weights: flat_w.iter().map(|w| w.ln()).collect(),
            cumulative: cumulative(&flat_w),
            weights: flat_w,
            components: flat_c,
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn components(&self) -> &[Arc<dyn JointDistribution>] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    fn mix_log(&self, f: impl Fn(&dyn JointDistribution) -> f64) -> f64 {
        if self.components.len() == 1 {
            return f(self.components[0].as_ref());
        }
        let mut buf = [0.0f64; 32];
        let mut heap;
        let terms: &mut [f64] = if self.components.len() <= 32 {
            &mut buf[..self.components.len()]
        } else {
            heap = vec![0.0; self.components.len()];
            &mut heap
        };
        for ((t, lw), c) in terms
            .iter_mut()
            .zip(&self.log_weights)
            .zip(&self.components)
        {
            *t = lw + f(c.as_ref());
        }
        log_sum_exp(terms)
    }
}

impl JointDistribution for MixtureDistribution {
    fn dim_x(&self) -> usize {
        self.components[0].dim_x()
    }

    fn dim_y(&self) -> usize {
        self.components[0].dim_y()
    }

    fn support_x(&self) -> Support {
        self.components[0].support_x()
    }

    fn support_y(&self) -> Support {
        self.components[0].support_y()
    }

    fn sample_into(&self, rng: &mut Stream, x: &mut [f64], y: &mut [f64]) {
        let k = rng.categorical_cdf(&self.cumulative);
        self.components[k].sample_into(rng, x, y);
    }

    fn log_pdf_joint(&self, x: &[f64], y: &[f64]) -> f64 {
        self.mix_log(|c| c.log_pdf_joint(x, y))
    }

    fn log_pdf_x(&self, x: &[f64]) -> f64 {
        self.mix_log(|c| c.log_pdf_x(x))
    }

    fn log_pdf_y(&self, y: &[f64]) -> f64 {
        self.mix_log(|c| c.log_pdf_y(y))
    }

    fn pmi_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        if self.components.len() == 1 {
            return self.components[0].pmi_unchecked(x, y);
        }
        self.log_pdf_joint(x, y) - self.log_pdf_x(x) - self.log_pdf_y(y)
    }

    fn marginal_x(&self) -> Option<Arc<dyn Marginal>> {
        let parts: Option<Vec<_>> = self.components.iter().map(|c| c.marginal_x()).collect();
        Some(Arc::new(
            MixtureMarginal::new(self.weights.clone(), parts?).ok()?,
        ))
    }

    fn marginal_y(&self) -> Option<Arc<dyn Marginal>> {
        let parts: Option<Vec<_>> = self.components.iter().map(|c| c.marginal_y()).collect();
        Some(Arc::new(
            MixtureMarginal::new(self.weights.clone(), parts?).ok()?,
        ))
    }

    fn as_mixture(&self) -> Option<&MixtureDistribution> {
        Some(self)
    }
}

/// Mixture of single-variable distributions.
#[derive(Debug, Clone)]
pub struct MixtureMarginal {
    log_weights: Vec<f64>,
    cumulative: Vec<f64>,
    parts: Vec<Arc<dyn Marginal>>,
}

impl MixtureMarginal {
    pub fn new(weights: Vec<f64>, parts: Vec<Arc<dyn Marginal>>) -> Result<Self> {
        validate_weights(&weights)?;
        if weights.len() != parts.len() {
            return Err(Error::InvalidWeights(
                "weights and parts differ in length".into(),
            ));
        }
        let d = parts[0].dim();
        if let Some(p) = parts.iter().find(|p| p.dim() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: p.dim(),
            });
        }
        Ok(Self {
            log_weights: weights.iter().map(|w| w.ln()).collect(),
            cumulative: cumulative(&weights),
            parts,
        })
    }
}

impl Marginal for MixtureMarginal {
    fn dim(&self) -> usize {
        self.parts[0].dim()
    }

    fn support(&self) -> Support {
        self.parts[0].support()
    }

    fn sample_into(&self, rng: &mut Stream, out: &mut [f64]) {
        let k = rng.categorical_cdf(&self.cumulative);
        self.parts[k].sample_into(rng, out);
    }

    fn log_pdf(&self, v: &[f64]) -> f64 {
        let terms: Vec<f64> = self
            .log_weights
            .iter()
            .zip(&self.parts)
            .map(|(lw, p)| lw + p.log_pdf(v))
            .collect();
        log_sum_exp(&terms)
    }
}

/// `P_X (x) P_Y`: independent variables, PMI identically zero.
#[derive(Debug, Clone)]
pub struct ProductDistribution {
    x: Arc<dyn Marginal>,
    y: Arc<dyn Marginal>,
}

impl ProductDistribution {
    pub fn new(x: Arc<dyn Marginal>, y: Arc<dyn Marginal>) -> Self {
        Self { x, y }
    }
}

impl JointDistribution for ProductDistribution {
    fn dim_x(&self) -> usize {
        self.x.dim()
    }

    fn dim_y(&self) -> usize {
        self.y.dim()
    }

    fn support_x(&self) -> Support {
        self.x.support()
    }

    fn support_y(&self) -> Support {
        self.y.support()
    }

    fn sample_into(&self, rng: &mut Stream, x: &mut [f64], y: &mut [f64]) {
        self.x.sample_into(rng, x);
        self.y.sample_into(rng, y);
    }

    fn log_pdf_joint(&self, x: &[f64], y: &[f64]) -> f64 {
        self.x.log_pdf(x) + self.y.log_pdf(y)
    }

    fn log_pdf_x(&self, x: &[f64]) -> f64 {
        self.x.log_pdf(x)
    }

    fn log_pdf_y(&self, y: &[f64]) -> f64 {
        self.y.log_pdf(y)
    }

    fn pmi_unchecked(&self, _x: &[f64], _y: &[f64]) -> f64 {
        0.0
    }

    fn marginal_x(&self) -> Option<Arc<dyn Marginal>> {
        Some(self.x.clone())
    }

    fn marginal_y(&self) -> Option<Arc<dyn Marginal>> {
        Some(self.y.clone())
    }
}

/// Channel that outputs `noise_y` independently of `X` with probability `alpha`:
/// `(1 - alpha) P_XY + alpha P_X (x) N`.
pub fn contaminate(
    base: Arc<dyn JointDistribution>,
    alpha: f64,
    noise_y: Arc<dyn Marginal>,
) -> Result<MixtureDistribution> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidParameter(format!(
            "alpha must lie in [0, 1], got {alpha}"
        )));
    }
    if noise_y.dim() != base.dim_y() {
        return Err(Error::DimensionMismatch {
            expected: base.dim_y(),
            got: noise_y.dim(),
        });
    }
    let px = base.marginal_x().ok_or(Error::MissingMarginal)?;
    let product: Arc<dyn JointDistribution> = Arc::new(ProductDistribution::new(px, noise_y));
    if alpha == 0.0 {
        MixtureDistribution::new(vec![1.0], vec![base])
    } else if alpha == 1.0 {
        MixtureDistribution::new(vec![1.0], vec![product])
    } else {
        MixtureDistribution::new(vec![1.0 - alpha, alpha], vec![base, product])
    }
}

/// Which blocks of `{A, B}^2` carry mass, with `A = (0, 1)` and `B = (1, 2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DisjointMode {
    /// `A x A` and `B x B`.
    Diagonal,
    /// `A x B` and `B x A`.
    Antidiagonal,
}

/// Equal mixture of two uniform squares: MI `log 2` on the diagonal, and
/// likewise on the antidiagonal, though each square alone has MI 0.
pub fn disjoint_uniform_pair(mode: DisjointMode) -> MixtureDistribution {
    let a = (0.0, 1.0);
    let b = (1.0, 2.0);
    let (first, second) = match mode {
        DisjointMode::Diagonal => ((a, a), (b, b)),
        DisjointMode::Antidiagonal => ((a, b), (b, a)),
    };
    let sq = |(x, y): ((f64, f64), (f64, f64))| -> Arc<dyn JointDistribution> {
        Arc::new(UniformBox::rectangle(x, y).expect("fixed unit squares"))
    };
    MixtureDistribution::new(vec![0.5, 0.5], vec![sq(first), sq(second)]).expect("fixed weights")
}
