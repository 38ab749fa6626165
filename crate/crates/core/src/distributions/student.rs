use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand_distr::{ChiSquared, Distribution};
use statrs::function::gamma::{digamma, ln_gamma};

use super::{JointDistribution, Marginal};
use crate::error::{check_finite, Error, Result};
use crate::linalg::CholeskyFactor;
use crate::rng::Stream;

/// Multivariate Student t on a single variable.
#[derive(Debug, Clone)]
pub struct StudentT {
    location: Vec<f64>,
    chol: CholeskyFactor,
    dof: f64,
    chi2: ChiSquared<f64>,
    log_norm: f64,
}

impl StudentT {
    pub fn new(location: Vec<f64>, dispersion: &DMatrix<f64>, dof: f64) -> Result<Self> {
        check_finite(&location, "location")?;
        if !(dof > 0.0) || !dof.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "dof must be positive, got {dof}"
            )));
        }
        if dispersion.nrows() != location.len() {
            return Err(Error::DimensionMismatch {
                expected: location.len(),
                got: dispersion.nrows(),
            });
        }
        let chol = CholeskyFactor::new(dispersion)?;
        let d = location.len() as f64;
        let log_norm = ln_gamma(0.5 * (dof + d))
            - ln_gamma(0.5 * dof)
            - 0.5 * d * (dof * PI).ln()
            - 0.5 * chol.log_det();
        let chi2 = ChiSquared::new(dof).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        Ok(Self {
            location,
            chol,
            dof,
            chi2,
            log_norm,
        })
    }

    pub fn dof(&self) -> f64 {
        self.dof
    }

    pub fn location(&self) -> &[f64] {
        &self.location
    }

    pub fn dispersion(&self) -> DMatrix<f64> {
        self.chol.matrix()
    }
}

impl Marginal for StudentT {
    fn dim(&self) -> usize {
        self.location.len()
    }

    fn sample_into(&self, rng: &mut Stream, out: &mut [f64]) {
        let d = self.location.len();
        let mut z = vec![0.0; d];
        rng.fill_normal(&mut z);
        self.chol.mul_lower(&z, out);
        let w: f64 = self.chi2.sample(rng);
        let scale = (self.dof / w).sqrt();
        for (o, m) in out.iter_mut().zip(&self.location) {
            *o = m + scale * *o;
        }
    }

    fn log_pdf(&self, v: &[f64]) -> f64 {
        let centered: Vec<f64> = v.iter().zip(&self.location).map(|(a, m)| a - m).collect();
        let q = self.chol.mahalanobis_sq(&centered);
        let d = self.location.len() as f64;
        self.log_norm - 0.5 * (self.dof + d) * (q / self.dof).ln_1p()
    }
}

/// Joint multivariate Student t over `(X, Y)`; both marginals are Student with the same dof.
#[derive(Debug, Clone)]
pub struct MultivariateStudent {
    joint: StudentT,
    x: Arc<StudentT>,
    y: Arc<StudentT>,
    dim_x: usize,
}

impl MultivariateStudent {
    pub fn new(
        location: Vec<f64>,
        dispersion: DMatrix<f64>,
        dof: f64,
        dim_x: usize,
        dim_y: usize,
    ) -> Result<Self> {
        if dim_x == 0 || dim_y == 0 {
            return Err(Error::InvalidParameter(
                "split dimensions must be >= 1".into(),
            ));
        }
        if location.len() != dim_x + dim_y {
            return Err(Error::DimensionMismatch {
                expected: dim_x + dim_y,
                got: location.len(),
            });
        }
        let joint = StudentT::new(location.clone(), &dispersion, dof)?;
        let sx = dispersion.view((0, 0), (dim_x, dim_x)).into_owned();
        let sy = dispersion.view((dim_x, dim_x), (dim_y, dim_y)).into_owned();
        let x = StudentT::new(location[..dim_x].to_vec(), &sx, dof)?;
        let y = StudentT::new(location[dim_x..].to_vec(), &sy, dof)?;
        Ok(Self {
            joint,
            x: Arc::new(x),
            y: Arc::new(y),
            dim_x,
        })
    }

    /// Centered Student with identity dispersion.
    pub fn identity(dim_x: usize, dim_y: usize, dof: f64) -> Result<Self> {
        let d = dim_x + dim_y;
        Self::new(vec![0.0; d], DMatrix::identity(d, d), dof, dim_x, dim_y)
    }

    pub fn dof(&self) -> f64 {
        self.joint.dof()
    }
}

impl JointDistribution for MultivariateStudent {
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

/// Exact MI of a Student t with identity dispersion split into `m + n` coordinates.
pub fn student_identity_mi(dof: f64, m: usize, n: usize) -> f64 {
    // Differential entropy of a standard d-dim Student, minus the Gaussian-like log-det term.
    let h = |k: usize| {
        let k = k as f64;
        let a = 0.5 * (dof + k);
        let b = 0.5 * dof;
        -ln_gamma(a) + ln_gamma(b) + 0.5 * k * (dof * PI).ln() + a * (digamma(a) - digamma(b))
    };
    h(m) + h(n) - h(m + n)
}
