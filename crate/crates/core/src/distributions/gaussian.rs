use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;

use super::{JointDistribution, Marginal};
use crate::analytic::{canonical_correlations, CanonicalCorrelations};
use crate::error::{check_finite, Error, Result};
use crate::linalg::CholeskyFactor;
use crate::rng::Stream;

/// Multivariate normal on a single variable.
#[derive(Debug, Clone)]
pub struct Gaussian {
    mean: Vec<f64>,
    chol: CholeskyFactor,
    log_norm: f64,
}

impl Gaussian {
    pub fn new(mean: Vec<f64>, cov: &DMatrix<f64>) -> Result<Self> {
        check_finite(&mean, "mean")?;
        if cov.nrows() != mean.len() {
            return Err(Error::DimensionMismatch {
                expected: mean.len(),
                got: cov.nrows(),
            });
        }
        let chol = CholeskyFactor::new(cov)?;
        let log_norm = -0.5 * (mean.len() as f64 * (2.0 * PI).ln() + chol.log_det());
        Ok(Self {
            mean,
            chol,
            log_norm,
        })
    }

    pub fn isotropic(mean: Vec<f64>, variance: f64) -> Result<Self> {
        let d = mean.len();
        Self::new(mean, &(DMatrix::identity(d, d) * variance))
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn covariance(&self) -> DMatrix<f64> {
        self.chol.matrix()
    }
}

impl Marginal for Gaussian {
    fn dim(&self) -> usize {
        self.mean.len()
    }

    fn sample_into(&self, rng: &mut Stream, out: &mut [f64]) {
        let d = self.mean.len();
        let mut z = vec![0.0; d];
        rng.fill_normal(&mut z);
        self.chol.mul_lower(&z, out);
        for (o, m) in out.iter_mut().zip(&self.mean) {
            *o += m;
        }
    }

    fn log_pdf(&self, v: &[f64]) -> f64 {
        let centered: Vec<f64> = v.iter().zip(&self.mean).map(|(a, m)| a - m).collect();
        self.log_norm - 0.5 * self.chol.mahalanobis_sq(&centered)
    }
}

/// Joint multivariate normal over `(X, Y)`, with `X` the first `dim_x` coordinates.
#[derive(Debug, Clone)]
pub struct MultivariateNormal {
    joint: Gaussian,
    x: Arc<Gaussian>,
    y: Arc<Gaussian>,
    dim_x: usize,
}

impl MultivariateNormal {
    pub fn new(mean: Vec<f64>, cov: DMatrix<f64>, dim_x: usize, dim_y: usize) -> Result<Self> {
        if dim_x == 0 || dim_y == 0 {
            return Err(Error::InvalidParameter(
                "split dimensions must be >= 1".into(),
            ));
        }
        if mean.len() != dim_x + dim_y {
            return Err(Error::DimensionMismatch {
                expected: dim_x + dim_y,
                got: mean.len(),
            });
        }
        let joint = Gaussian::new(mean.clone(), &cov)?;
        let cov_x = cov.view((0, 0), (dim_x, dim_x)).into_owned();
        let cov_y = cov.view((dim_x, dim_x), (dim_y, dim_y)).into_owned();
        let x = Gaussian::new(mean[..dim_x].to_vec(), &cov_x)?;
        let y = Gaussian::new(mean[dim_x..].to_vec(), &cov_y)?;
        Ok(Self {
            joint,
            x: Arc::new(x),
            y: Arc::new(y),
            dim_x,
        })
    }

    /// Centered, zero-mean normal with the given covariance.
    pub fn centered(cov: DMatrix<f64>, dim_x: usize, dim_y: usize) -> Result<Self> {
        Self::new(vec![0.0; dim_x + dim_y], cov, dim_x, dim_y)
    }

    /// Standard bivariate normal with correlation `rho`.
    pub fn bivariate(rho: f64) -> Result<Self> {
        Self::paired(&[rho])
    }

    /// Unit-variance normal with `X_i, Y_i` correlated by `rhos[i]` and all other pairs independent.
    pub fn paired(rhos: &[f64]) -> Result<Self> {
        let k = rhos.len();
        let mut cov = DMatrix::identity(2 * k, 2 * k);
        for (i, &r) in rhos.iter().enumerate() {
            cov[(i, k + i)] = r;
            cov[(k + i, i)] = r;
        }
        Self::centered(cov, k, k)
    }

    pub fn mean(&self) -> &[f64] {
        self.joint.mean()
    }

    pub fn covariance(&self) -> DMatrix<f64> {
        self.joint.covariance()
    }

    pub fn canonical_correlations(&self) -> Result<CanonicalCorrelations> {
        canonical_correlations(&self.covariance(), self.dim_x, self.dim_y())
    }

    pub fn x_marginal(&self) -> &Gaussian {
        &self.x
    }

    pub fn y_marginal(&self) -> &Gaussian {
        &self.y
    }
}

impl JointDistribution for MultivariateNormal {
    fn dim_x(&self) -> usize {
        self.dim_x
    }

    fn dim_y(&self) -> usize {
        self.joint.dim() - self.dim_x
    }

    fn sample_into(&self, rng: &mut Stream, x: &mut [f64], y: &mut [f64]) {
        let mut buf = vec![0.0; self.joint.dim()];
        self.joint.sample_into(rng, &mut buf);
        x.copy_from_slice(&buf[..self.dim_x]);
        y.copy_from_slice(&buf[self.dim_x..]);
    }

    fn log_pdf_joint(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut buf = Vec::with_capacity(x.len() + y.len());
        buf.extend_from_slice(x);
        buf.extend_from_slice(y);
        self.joint.log_pdf(&buf)
    }

    fn log_pdf_x(&self, x: &[f64]) -> f64 {
        self.x.log_pdf(x)
    }

    fn log_pdf_y(&self, y: &[f64]) -> f64 {
        self.y.log_pdf(y)
    }

    fn marginal_x(&self) -> Option<Arc<dyn Marginal>> {
        Some(self.x.clone())
    }

    fn marginal_y(&self) -> Option<Arc<dyn Marginal>> {
        Some(self.y.clone())
    }
}
