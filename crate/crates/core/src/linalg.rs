//! Small dense helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Lower Cholesky factor of an SPD matrix, computed once and reused.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    lower: DMatrix<f64>,
    log_det: f64,
}

const MIN_EIGENVALUE: f64 = 1e-12;

impl CholeskyFactor {
    pub fn new(matrix: &DMatrix<f64>) -> Result<Self> {
        let n = matrix.nrows();
        if n == 0 || matrix.ncols() != n {
            return Err(Error::InvalidParameter(format!(
                "covariance must be square and non-empty, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("covariance"));
        }
        let asym = (matrix - matrix.transpose()).abs().max();
        let scale = matrix.abs().max().max(1.0);
        if asym > 1e-9 * scale {
            return Err(Error::InvalidParameter(
                "covariance is not symmetric".into(),
            ));
        }
        let sym = (matrix + matrix.transpose()) * 0.5;
        let chol = sym.clone().cholesky().ok_or(Error::NotPositiveDefinite)?;
        let lower = chol.l();
        // Cholesky succeeding is not enough: reject numerically singular input.
        let min_eig = sym.symmetric_eigenvalues().min();
        if min_eig <= MIN_EIGENVALUE {
            return Err(Error::NotPositiveDefinite);
        }
        let log_det = 2.0 * lower.diagonal().iter().map(|d| d.ln()).sum::<f64>();
        Ok(Self { lower, log_det })
    }

    pub fn dim(&self) -> usize {
        self.lower.nrows()
    }

    pub fn lower(&self) -> &DMatrix<f64> {
        &self.lower
    }

    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    /// Squared Mahalanobis norm `v^T S^{-1} v` via forward substitution.
    pub fn mahalanobis_sq(&self, v: &[f64]) -> f64 {
        let n = self.dim();
        let l = &self.lower;
        let mut w = [0.0f64; 64];
        let mut heap;
        let buf: &mut [f64] = if n <= 64 {
            &mut w[..n]
        } else {
            heap = vec![0.0; n];
            &mut heap
        };
        let mut acc = 0.0;
        for i in 0..n {
            let mut s = v[i];
            for j in 0..i {
                s -= l[(i, j)] * buf[j];
            }
            let z = s / l[(i, i)];
            buf[i] = z;
            acc += z * z;
        }
        acc
    }

    /// `out = L z`.
    pub fn mul_lower(&self, z: &[f64], out: &mut [f64]) {
        let n = self.dim();
        for (i, o) in out.iter_mut().enumerate().take(n) {
            *o = (0..=i).map(|j| self.lower[(i, j)] * z[j]).sum();
        }
    }

    /// Full covariance `L L^T`.
    pub fn matrix(&self) -> DMatrix<f64> {
        &self.lower * self.lower.transpose()
    }
}

pub fn to_dmatrix(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidParameter("matrix must be square".into()));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

pub fn from_dmatrix(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

/// Inverse square root of an SPD matrix by eigendecomposition.
pub fn inv_sqrt_spd(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = m.clone().symmetric_eigen();
    if eig.eigenvalues.iter().any(|&e| e <= MIN_EIGENVALUE) {
        return Err(Error::NotPositiveDefinite);
    }
    let d = DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|e| 1.0 / e.sqrt()),
    );
    Ok(&eig.eigenvectors * DMatrix::from_diagonal(&d) * eig.eigenvectors.transpose())
}

/// Numerically stable `log(sum(exp(values)))`; `-inf` for an empty or all `-inf` input.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// `log(mean(exp(values)))`.
pub fn log_mean_exp(values: &[f64]) -> f64 {
    log_sum_exp(values) - (values.len() as f64).ln()
}
