use std::sync::Arc;

use super::{JointDistribution, Marginal};
use crate::error::{check_finite, Error, Result};
use crate::rng::Stream;

/// Uniform distribution on an axis-aligned box `[lower, upper]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Uniform {
    lower: Vec<f64>,
    upper: Vec<f64>,
    log_density: f64,
}

impl Uniform {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        check_finite(&lower, "lower")?;
        check_finite(&upper, "upper")?;
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(u > l)) {
            return Err(Error::InvalidParameter(
                "upper must exceed lower on every axis".into(),
            ));
        }
        let log_density = -lower
            .iter()
            .zip(&upper)
            .map(|(l, u)| (u - l).ln())
            .sum::<f64>();
        Ok(Self {
            lower,
            upper,
            log_density,
        })
    }

    pub fn interval(lower: f64, upper: f64) -> Result<Self> {
        Self::new(vec![lower], vec![upper])
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    fn contains(&self, v: &[f64]) -> bool {
        v.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(x, (l, u))| *x >= *l && *x <= *u)
    }
}

impl Marginal for Uniform {
    fn dim(&self) -> usize {
        self.lower.len()
    }

    fn sample_into(&self, rng: &mut Stream, out: &mut [f64]) {
        for ((o, l), u) in out.iter_mut().zip(&self.lower).zip(&self.upper) {
            *o = l + (u - l) * rng.uniform_open();
        }
    }

    fn log_pdf(&self, v: &[f64]) -> f64 {
        if self.contains(v) {
            self.log_density
        } else {
            f64::NEG_INFINITY
        }
    }
}

/// Uniform on a box in `X x Y`; `X` and `Y` are independent.
#[derive(Debug, Clone)]
pub struct UniformBox {
    x: Arc<Uniform>,
    y: Arc<Uniform>,
}

impl UniformBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, dim_x: usize, dim_y: usize) -> Result<Self> {
        if dim_x == 0 || dim_y == 0 || lower.len() != dim_x + dim_y {
            return Err(Error::DimensionMismatch {
                expected: dim_x + dim_y,
                got: lower.len(),
            });
        }
        let x = Uniform::new(lower[..dim_x].to_vec(), upper[..dim_x].to_vec())?;
        let y = Uniform::new(lower[dim_x..].to_vec(), upper[dim_x..].to_vec())?;
        Ok(Self {
            x: Arc::new(x),
            y: Arc::new(y),
        })
    }

    /// `(a_lo, a_hi) x (b_lo, b_hi)` in one dimension each.
    pub fn rectangle(a: (f64, f64), b: (f64, f64)) -> Result<Self> {
        Self::new(vec![a.0, b.0], vec![a.1, b.1], 1, 1)
    }
}

impl JointDistribution for UniformBox {
    fn dim_x(&self) -> usize {
        self.x.dim()
    }

    fn dim_y(&self) -> usize {
        self.y.dim()
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

/// `X ~ U(0, 1)` and `Y = X + N` with `N ~ U(-eps, eps)`.
#[derive(Debug, Clone)]
pub struct AdditiveUniform {
    eps: f64,
}

impl AdditiveUniform {
    pub fn new(eps: f64) -> Result<Self> {
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "eps must be positive, got {eps}"
            )));
        }
        Ok(Self { eps })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Closed-form MI in nats.
    pub fn mutual_information(&self) -> f64 {
        let e = self.eps;
        if e <= 0.5 {
            e - (2.0 * e).ln()
        } else {
            0.25 / e
        }
    }
}

impl JointDistribution for AdditiveUniform {
    fn dim_x(&self) -> usize {
        1
    }

    fn dim_y(&self) -> usize {
        1
    }

    fn sample_into(&self, rng: &mut Stream, x: &mut [f64], y: &mut [f64]) {
        x[0] = rng.uniform_open();
        y[0] = x[0] + self.eps * (2.0 * rng.uniform_open() - 1.0);
    }

    fn log_pdf_joint(&self, x: &[f64], y: &[f64]) -> f64 {
        if (0.0..=1.0).contains(&x[0]) && (y[0] - x[0]).abs() <= self.eps {
            -(2.0 * self.eps).ln()
        } else {
            f64::NEG_INFINITY
        }
    }

    fn log_pdf_x(&self, x: &[f64]) -> f64 {
        if (0.0..=1.0).contains(&x[0]) {
            0.0
        } else {
            f64::NEG_INFINITY
        }
    }

    fn log_pdf_y(&self, y: &[f64]) -> f64 {
        // Convolution of U(0,1) and U(-eps, eps): a trapezoid.
        let lo = (y[0] - self.eps).max(0.0);
        let hi = (y[0] + self.eps).min(1.0);
        if hi <= lo {
            return f64::NEG_INFINITY;
        }
        ((hi - lo) / (2.0 * self.eps)).ln()
    }

    fn marginal_x(&self) -> Option<Arc<dyn Marginal>> {
        Some(Arc::new(
            Uniform::interval(0.0, 1.0).expect("unit interval"),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::testing::trapezoid;
    use crate::distributions::JointDistributionExt;
    use crate::rng::Seed;

    #[test]
    fn unit_square_density_is_one() {
        let b = UniformBox::rectangle((0.0, 1.0), (0.0, 1.0)).unwrap();
        assert_eq!(b.try_log_pdf_joint(&[0.3], &[0.9]).unwrap(), 0.0);
        assert_eq!(b.log_pdf_joint(&[1.3], &[0.9]), f64::NEG_INFINITY);
    }

    #[test]
    fn samples_stay_inside() {
        let b = UniformBox::rectangle((0.0, 1.0), (1.0, 2.0)).unwrap();
        let s = b.sample(Seed(1), 10_000);
        assert!(s.xs().iter().all(|v| (0.0..=1.0).contains(v)));
        assert!(s.ys().iter().all(|v| (1.0..=2.0).contains(v)));
    }

    #[test]
    fn rejects_empty_interval() {
        assert!(Uniform::interval(1.0, 1.0).is_err());
    }

    #[test]
    fn box_joint_marginal_consistency() {
        let b = UniformBox::rectangle((-1.0, 2.0), (0.0, 0.5)).unwrap();
        for &x in &[-0.5, 0.0, 1.5] {
            let inner = trapezoid(|y| b.log_pdf_joint(&[x], &[y]).exp(), -1.0, 1.5, 50_000);
            assert!((inner - b.log_pdf_x(&[x]).exp()).abs() < 1e-3);
        }
    }

    #[test]
    fn additive_marginal_integrates_to_one() {
        for eps in [0.1, 0.75] {
            let d = AdditiveUniform::new(eps).unwrap();
            let total = trapezoid(|y| d.log_pdf_y(&[y]).exp(), -2.0, 3.0, 50_000);
            assert!((total - 1.0).abs() < 1e-3);
        }
    }

    #[test]
    fn additive_mi_matches_quadrature() {
        // MI = -E log p_Y(Y) - log(2 eps); the entropy integral is done by quadrature.
        for eps in [0.2, 0.5, 0.75, 2.0] {
            let d = AdditiveUniform::new(eps).unwrap();
            let h = trapezoid(
                |y| {
                    let lp = d.log_pdf_y(&[y]);
                    if lp.is_finite() {
                        -lp.exp() * lp
                    } else {
                        0.0
                    }
                },
                -eps,
                1.0 + eps,
                200_000,
            );
            let mi = h - (2.0 * eps).ln();
            assert!(
                (mi - d.mutual_information()).abs() < 1e-4,
                "eps {eps}: {mi}"
            );
        }
    }
}
