//! Primitive joint distributions with exact sampling and tractable
//! joint and marginal log-densities.
//!
//! A [`JointDistribution`] over `X x Y` is the unit everything else composes:
//! [`crate::bend`] pushes one through diffeomorphisms, [`crate::mix`] forms
//! finite mixtures, and [`crate::profile`] evaluates pointwise mutual
//! information from the three log-densities. Discrete coordinates are stored
//! as `f64` holding integer labels `0..states`.

use std::fmt::Debug;
use std::sync::Arc;

use rayon::prelude::*;

use crate::data::PairedSample;
use crate::error::{Error, Result};
use crate::mix::MixtureDistribution;
use crate::rng::{Seed, Stream};

mod discrete;
mod gaussian;
mod student;
mod uniform;

pub use discrete::{
    gao_mi, zip_mi, zip_mi_quadrature, Categorical, DiscreteContinuousMixture, GaoStaircase,
    ZeroInflatedPoissonization,
};
pub use gaussian::{Gaussian, MultivariateNormal};
pub use student::{student_identity_mi, MultivariateStudent, StudentT};
pub use uniform::{AdditiveUniform, Uniform, UniformBox};

/// Whether a variable takes continuous values or integer labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Support {
    Continuous,
    /// Labels `0..states`; `None` means unbounded non-negative integers.
    Discrete {
        states: Option<usize>,
    },
}

impl Support {
    fn check(&self, values: &[f64], what: &'static str) -> Result<()> {
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::NonFinite(what));
        }
        match *self {
            Support::Continuous => Ok(()),
            Support::Discrete { states } => {
                for &v in values {
                    let valid = v >= 0.0
                        && v.fract() == 0.0
                        && v.is_finite()
                        && states.is_none_or(|s| (v as usize) < s);
                    if !valid {
                        return Err(Error::InvalidParameter(format!(
                            "{v} is not a valid discrete label for {what}"
                        )));
                    }
                }
                Ok(())
            }
        }
    }
}

/// Distribution of a single variable (one side of a joint distribution).
pub trait Marginal: Send + Sync + Debug {
    fn dim(&self) -> usize;

    fn support(&self) -> Support {
        Support::Continuous
    }

    fn sample_into(&self, rng: &mut Stream, out: &mut [f64]);

    fn log_pdf(&self, v: &[f64]) -> f64;
}

/// Joint law of `(X, Y)` with sampling and three tractable log-densities.
///
/// The raw density methods assume correctly sized inputs; use the checked
/// wrappers on [`JointDistributionExt`] at API boundaries.
pub trait JointDistribution: Send + Sync + Debug {
    fn dim_x(&self) -> usize;

    fn dim_y(&self) -> usize;

    fn support_x(&self) -> Support {
        Support::Continuous
    }

    fn support_y(&self) -> Support {
        Support::Continuous
    }

    fn sample_into(&self, rng: &mut Stream, x: &mut [f64], y: &mut [f64]);

    fn log_pdf_joint(&self, x: &[f64], y: &[f64]) -> f64;

    fn log_pdf_x(&self, x: &[f64]) -> f64;

    fn log_pdf_y(&self, y: &[f64]) -> f64;

    /// Pointwise mutual information at `(x, y)`.
    fn pmi_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        self.log_pdf_joint(x, y) - self.log_pdf_x(x) - self.log_pdf_y(y)
    }

    /// Standalone X marginal, when it can be represented exactly.
    fn marginal_x(&self) -> Option<Arc<dyn Marginal>> {
        None
    }

    fn marginal_y(&self) -> Option<Arc<dyn Marginal>> {
        None
    }

    /// Lets nested mixtures flatten themselves.
    fn as_mixture(&self) -> Option<&MixtureDistribution> {
        None
    }
}

/// Checked evaluation and batch sampling for every [`JointDistribution`].
pub trait JointDistributionExt: JointDistribution {
    fn check_x(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim_x() {
            return Err(Error::DimensionMismatch {
                expected: self.dim_x(),
                got: x.len(),
            });
        }
        self.support_x().check(x, "x")
    }

    fn check_y(&self, y: &[f64]) -> Result<()> {
        if y.len() != self.dim_y() {
            return Err(Error::DimensionMismatch {
                expected: self.dim_y(),
                got: y.len(),
            });
        }
        self.support_y().check(y, "y")
    }

    fn try_log_pdf_joint(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.check_x(x)?;
        self.check_y(y)?;
        Ok(self.log_pdf_joint(x, y))
    }

    fn try_log_pdf_x(&self, x: &[f64]) -> Result<f64> {
        self.check_x(x)?;
        Ok(self.log_pdf_x(x))
    }

    fn try_log_pdf_y(&self, y: &[f64]) -> Result<f64> {
        self.check_y(y)?;
        Ok(self.log_pdf_y(y))
    }

    /// `n` i.i.d. draws. Reproducible from `seed` regardless of thread count.
    fn sample(&self, seed: Seed, n: usize) -> PairedSample {
        let mut out = PairedSample::zeros(self.dim_x(), self.dim_y(), n);
        let (dx, dy) = (self.dim_x(), self.dim_y());
        let xs_chunks = SHARD * dx;
        let ys_chunks = SHARD * dy;
        let (xs, ys) = out.buffers_mut();
        xs.par_chunks_mut(xs_chunks)
            .zip(ys.par_chunks_mut(ys_chunks))
            .enumerate()
            .for_each(|(shard, (xc, yc))| {
                let mut rng = seed.child("shard", shard as u64).stream();
                for (x, y) in xc.chunks_mut(dx).zip(yc.chunks_mut(dy)) {
                    self.sample_into(&mut rng, x, y);
                }
            });
        out
    }
}

impl<T: JointDistribution + ?Sized> JointDistributionExt for T {}

/// Rows per independently seeded shard in batch sampling.
pub(crate) const SHARD: usize = 4096;

/// Free-function form of [`JointDistributionExt::sample`].
pub fn sample(dist: &dyn JointDistribution, seed: Seed, n: usize) -> PairedSample {
    dist.sample(seed, n)
}
