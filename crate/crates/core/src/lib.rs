//! Pointwise mutual information profiles for bend-and-mix models.
//!
//! Build a joint distribution from [`distributions`], transform it with
//! [`bend`], combine with [`mix`], then sample PMI values with
//! [`profile::sample_profile`] and average them into an MI estimate.

// NaN-rejecting checks are written as `!(x > 0.0)` on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod bayes;
pub mod benchmark;
pub mod bend;
pub mod data;
pub mod distributions;
pub mod error;
pub mod estimators;
pub mod linalg;
pub mod mix;
pub mod profile;
pub mod rng;
pub mod spec;

pub use data::PairedSample;
pub use distributions::{JointDistribution, JointDistributionExt, Marginal, Support};
pub use error::{Error, Result};
pub use profile::{MiEstimate, PmiSampleBatch};
pub use rng::{Seed, StreamKey};
