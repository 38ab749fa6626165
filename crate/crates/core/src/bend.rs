//! Invertible maps with tractable Jacobians and the distributions they push forward.
//!
//! A bent distribution evaluates densities by pulling points back through the
//! maps and adding `log |det D f^-1|`. Embeddings into a higher-dimensional
//! space ([`SwissRoll`]) use the volume factor `sqrt(det(J^T J))` instead, so
//! their densities are with respect to surface measure on the image.

use std::f64::consts::{PI, SQRT_2};
use std::fmt::Debug;
use std::sync::Arc;

use nalgebra::DMatrix;
use statrs::function::erf::{erfc, erfc_inv};

use crate::distributions::{JointDistribution, JointDistributionExt, Marginal, Support};
use crate::error::{Error, Result};
use crate::rng::{Seed, Stream};

pub trait Diffeomorphism: Send + Sync + Debug {
    fn name(&self) -> String;

    fn dim_in(&self) -> usize;

    fn dim_out(&self) -> usize {
        self.dim_in()
    }

    fn forward(&self, v: &[f64], out: &mut [f64]);

    fn inverse(&self, v: &[f64], out: &mut [f64]);

    /// `log |det D f^-1|` at a point of the image.
    fn log_det_jacobian_inverse(&self, v: &[f64]) -> f64;

    /// `log |det D f|` at a point of the domain.
    fn log_det_jacobian_forward(&self, v: &[f64]) -> f64 {
        let mut out = vec![0.0; self.dim_out()];
        self.forward(v, &mut out);
        -self.log_det_jacobian_inverse(&out)
    }
}

fn forward_vec(map: &dyn Diffeomorphism, v: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; map.dim_out()];
    map.forward(v, &mut out);
    out
}

/// Central-difference estimate of `log |det D f|` (or of the volume factor for embeddings).
pub fn numeric_log_det(map: &dyn Diffeomorphism, v: &[f64]) -> f64 {
    let (n, m) = (map.dim_in(), map.dim_out());
    let mut jac = DMatrix::zeros(m, n);
    let mut p = v.to_vec();
    for j in 0..n {
        let h = 1e-5 * v[j].abs().max(1.0);
        p[j] = v[j] + h;
        let up = forward_vec(map, &p);
        p[j] = v[j] - h;
        let down = forward_vec(map, &p);
        p[j] = v[j];
        for i in 0..m {
            jac[(i, j)] = (up[i] - down[i]) / (2.0 * h);
        }
    }
    if n == m {
        jac.determinant().abs().ln()
    } else {
        0.5 * (jac.transpose() * &jac).determinant().ln()
    }
}

/// Tolerance on `|analytic - numeric|` log-determinants at construction.
pub const JACOBIAN_TOLERANCE: f64 = 1e-4;

/// Checks round trips and log-determinants of `map` at `points`.
pub fn validate(map: &dyn Diffeomorphism, points: &[Vec<f64>]) -> Result<()> {
    for p in points {
        let image = forward_vec(map, p);
        let mut back = vec![0.0; map.dim_in()];
        map.inverse(&image, &mut back);
        let scale = p.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        if back
            .iter()
            .zip(p)
            .any(|(a, b)| (a - b).abs() > 1e-6 * scale)
        {
            return Err(Error::InvalidParameter(format!(
                "{} does not invert at {p:?}",
                map.name()
            )));
        }
        let analytic = -map.log_det_jacobian_inverse(&image);
        let numeric = numeric_log_det(map, p);
        if !((analytic - numeric).abs() <= JACOBIAN_TOLERANCE) {
            return Err(Error::JacobianMismatch {
                map: map.name(),
                analytic,
                numeric,
            });
        }
    }
    Ok(())
}

/// Elementwise `x -> scale * x + shift`.
#[derive(Debug, Clone, PartialEq)]
pub struct Affine {
    scale: Vec<f64>,
    shift: Vec<f64>,
    log_det: f64,
}

impl Affine {
    pub fn new(scale: Vec<f64>, shift: Vec<f64>) -> Result<Self> {
        if scale.len() != shift.len() || scale.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: scale.len(),
                got: shift.len(),
            });
        }
        if scale.iter().chain(&shift).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("affine parameters"));
        }
        if scale.contains(&0.0) {
            return Err(Error::InvalidParameter(
                "affine scale must be nonzero".into(),
            ));
        }
        let log_det = scale.iter().map(|s| s.abs().ln()).sum();
        Ok(Self {
            scale,
            shift,
            log_det,
        })
    }

    pub fn uniform(dim: usize, scale: f64, shift: f64) -> Result<Self> {
        Self::new(vec![scale; dim], vec![shift; dim])
    }
}

impl Diffeomorphism for Affine {
    fn name(&self) -> String {
        "affine".into()
    }

    fn dim_in(&self) -> usize {
        self.scale.len()
    }

    fn forward(&self, v: &[f64], out: &mut [f64]) {
        for i in 0..v.len() {
            out[i] = self.scale[i] * v[i] + self.shift[i];
        }
    }

    fn inverse(&self, v: &[f64], out: &mut [f64]) {
        for i in 0..v.len() {
            out[i] = (v[i] - self.shift[i]) / self.scale[i];
        }
    }

    fn log_det_jacobian_inverse(&self, _v: &[f64]) -> f64 {
        -self.log_det
    }
}

/// Elementwise `asinh`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Asinh {
    dim: usize,
}

impl Asinh {
    pub fn new(dim: usize) -> Self {
        Self { dim }
    }
}

fn ln_cosh(y: f64) -> f64 {
    let a = y.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

impl Diffeomorphism for Asinh {
    fn name(&self) -> String {
        "asinh".into()
    }

    fn dim_in(&self) -> usize {
        self.dim
    }

    fn forward(&self, v: &[f64], out: &mut [f64]) {
        for (o, x) in out.iter_mut().zip(v) {
            *o = x.asinh();
        }
    }

    fn inverse(&self, v: &[f64], out: &mut [f64]) {
        for (o, y) in out.iter_mut().zip(v) {
            *o = y.sinh();
        }
    }

    fn log_det_jacobian_inverse(&self, v: &[f64]) -> f64 {
        v.iter().map(|y| ln_cosh(*y)).sum()
    }

    fn log_det_jacobian_forward(&self, v: &[f64]) -> f64 {
        -0.5 * v.iter().map(|x| (x * x).ln_1p()).sum::<f64>()
    }
}

/// Rotation of coordinates `(i, j)` by angle `speed * |x|^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spiral {
    dim: usize,
    speed: f64,
    plane: (usize, usize),
}

impl Spiral {
    pub fn new(dim: usize, speed: f64) -> Result<Self> {
        Self::in_plane(dim, speed, (0, 1))
    }

    pub fn in_plane(dim: usize, speed: f64, plane: (usize, usize)) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidParameter("spiral needs dim >= 2".into()));
        }
        let (i, j) = plane;
        if i >= j || j >= dim {
            return Err(Error::InvalidParameter(format!(
                "invalid rotation plane ({i}, {j}) for dim {dim}"
            )));
        }
        if !speed.is_finite() {
            return Err(Error::NonFinite("spiral speed"));
        }
        Ok(Self { dim, speed, plane })
    }

    fn rotate(&self, v: &[f64], out: &mut [f64], sign: f64) {
        let r2: f64 = v.iter().map(|x| x * x).sum();
        let (s, c) = (sign * self.speed * r2).sin_cos();
        out.copy_from_slice(v);
        let (i, j) = self.plane;
        out[i] = c * v[i] - s * v[j];
        out[j] = s * v[i] + c * v[j];
    }
}

impl Diffeomorphism for Spiral {
    fn name(&self) -> String {
        format!("spiral(v={})", self.speed)
    }

    fn dim_in(&self) -> usize {
        self.dim
    }

    fn forward(&self, v: &[f64], out: &mut [f64]) {
        self.rotate(v, out, 1.0);
    }

    fn inverse(&self, v: &[f64], out: &mut [f64]) {
        // The norm is preserved, so the angle is recoverable from the image.
        self.rotate(v, out, -1.0);
    }

    fn log_det_jacobian_inverse(&self, _v: &[f64]) -> f64 {
        0.0
    }
}

/// Shear `(x1, x2) -> (x1 + amplitude * sin(frequency * x2), x2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WavesInjection {
    amplitude: f64,
    frequency: f64,
}

impl Default for WavesInjection {
    fn default() -> Self {
        Self {
            amplitude: 5.0,
            frequency: 3.0,
        }
    }
}

impl WavesInjection {
    pub fn new(amplitude: f64, frequency: f64) -> Self {
        Self {
            amplitude,
            frequency,
        }
    }
}

impl Diffeomorphism for WavesInjection {
    fn name(&self) -> String {
        "waves".into()
    }

    fn dim_in(&self) -> usize {
        2
    }

    fn forward(&self, v: &[f64], out: &mut [f64]) {
        out[0] = v[0] + self.amplitude * (self.frequency * v[1]).sin();
        out[1] = v[1];
    }

    fn inverse(&self, v: &[f64], out: &mut [f64]) {
        out[0] = v[0] - self.amplitude * (self.frequency * v[1]).sin();
        out[1] = v[1];
    }

    fn log_det_jacobian_inverse(&self, _v: &[f64]) -> f64 {
        0.0
    }
}

/// Elementwise standard normal CDF, mapping into `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NormalCdf {
    dim: usize,
}

impl NormalCdf {
    pub fn new(dim: usize) -> Self {
        Self { dim }
    }
}

pub(crate) fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

pub(crate) fn normal_quantile(u: f64) -> f64 {
    -SQRT_2 * erfc_inv(2.0 * u)
}

impl Diffeomorphism for NormalCdf {
    fn name(&self) -> String {
        "normal_cdf".into()
    }

    fn dim_in(&self) -> usize {
        self.dim
    }

    fn forward(&self, v: &[f64], out: &mut [f64]) {
        for (o, x) in out.iter_mut().zip(v) {
            *o = normal_cdf(*x);
        }
    }

    fn inverse(&self, v: &[f64], out: &mut [f64]) {
        for (o, u) in out.iter_mut().zip(v) {
            *o = normal_quantile(*u);
        }
    }

    fn log_det_jacobian_inverse(&self, v: &[f64]) -> f64 {
        v.iter()
            .map(|u| {
                if *u <= 0.0 || *u >= 1.0 {
                    return f64::NAN;
                }
                let z = normal_quantile(*u);
                0.5 * z * z + 0.5 * (2.0 * PI).ln()
            })
            .sum()
    }
}

/// Embedding of `(0, 1)` as a planar spiral:
/// `u -> (t cos t, t sin t) / 21` with `t = 1.5 pi (1 + 2u)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SwissRoll;

impl SwissRoll {
    const SCALE: f64 = 21.0;

    fn t_of(u: f64) -> f64 {
        1.5 * PI * (1.0 + 2.0 * u)
    }
}

impl Diffeomorphism for SwissRoll {
    fn name(&self) -> String {
        "swiss_roll".into()
    }

    fn dim_in(&self) -> usize {
        1
    }

    fn dim_out(&self) -> usize {
        2
    }

    fn forward(&self, v: &[f64], out: &mut [f64]) {
        let t = Self::t_of(v[0]);
        out[0] = t * t.cos() / Self::SCALE;
        out[1] = t * t.sin() / Self::SCALE;
    }

    fn inverse(&self, v: &[f64], out: &mut [f64]) {
        let t = Self::SCALE * v[0].hypot(v[1]);
        out[0] = (t / (1.5 * PI) - 1.0) / 2.0;
    }

    fn log_det_jacobian_inverse(&self, v: &[f64]) -> f64 {
        let t = Self::SCALE * v[0].hypot(v[1]);
        -(3.0 * PI * (1.0 + t * t).sqrt() / Self::SCALE).ln()
    }
}

/// `maps[last] o ... o maps[0]`.
#[derive(Debug, Clone)]
pub struct Compose {
    maps: Vec<Arc<dyn Diffeomorphism>>,
}

impl Compose {
    pub fn new(maps: Vec<Arc<dyn Diffeomorphism>>) -> Result<Self> {
        if maps.is_empty() {
            return Err(Error::InvalidParameter("empty composition".into()));
        }
        for w in maps.windows(2) {
            if w[0].dim_out() != w[1].dim_in() {
                return Err(Error::DimensionMismatch {
                    expected: w[0].dim_out(),
                    got: w[1].dim_in(),
                });
            }
        }
        Ok(Self { maps })
    }
}

impl Diffeomorphism for Compose {
    fn name(&self) -> String {
        let names: Vec<String> = self.maps.iter().map(|m| m.name()).collect();
        format!("compose[{}]", names.join(", "))
    }

    fn dim_in(&self) -> usize {
        self.maps[0].dim_in()
    }

    fn dim_out(&self) -> usize {
        self.maps[self.maps.len() - 1].dim_out()
    }

    fn forward(&self, v: &[f64], out: &mut [f64]) {
        let mut cur = v.to_vec();
        for m in &self.maps {
            cur = forward_vec(m.as_ref(), &cur);
        }
        out.copy_from_slice(&cur);
    }

    fn inverse(&self, v: &[f64], out: &mut [f64]) {
        let mut cur = v.to_vec();
        for m in self.maps.iter().rev() {
            let mut next = vec![0.0; m.dim_in()];
            m.inverse(&cur, &mut next);
            cur = next;
        }
        out.copy_from_slice(&cur);
    }

    fn log_det_jacobian_inverse(&self, v: &[f64]) -> f64 {
        let mut cur = v.to_vec();
        let mut total = 0.0;
        for m in self.maps.iter().rev() {
            total += m.log_det_jacobian_inverse(&cur);
            let mut next = vec![0.0; m.dim_in()];
            m.inverse(&cur, &mut next);
            cur = next;
        }
        total
    }
}

/// Pushforward of a single-variable distribution through a map.
#[derive(Debug, Clone)]
pub struct BentMarginal {
    base: Arc<dyn Marginal>,
    map: Arc<dyn Diffeomorphism>,
}

impl BentMarginal {
    pub fn new(base: Arc<dyn Marginal>, map: Arc<dyn Diffeomorphism>) -> Result<Self> {
        if base.dim() != map.dim_in() {
            return Err(Error::DimensionMismatch {
                expected: base.dim(),
                got: map.dim_in(),
            });
        }
        if base.support() != Support::Continuous {
            return Err(Error::InvalidParameter(
                "cannot bend a discrete variable".into(),
            ));
        }
        Ok(Self { base, map })
    }
}

impl Marginal for BentMarginal {
    fn dim(&self) -> usize {
        self.map.dim_out()
    }

    fn sample_into(&self, rng: &mut Stream, out: &mut [f64]) {
        let mut v = vec![0.0; self.base.dim()];
        self.base.sample_into(rng, &mut v);
        self.map.forward(&v, out);
    }

    fn log_pdf(&self, v: &[f64]) -> f64 {
        let mut pre = vec![0.0; self.base.dim()];
        self.map.inverse(v, &mut pre);
        self.base.log_pdf(&pre) + self.map.log_det_jacobian_inverse(v)
    }
}

/// `(f(X), g(Y))` for `(X, Y) ~ base`; a missing map is the identity.
#[derive(Debug, Clone)]
pub struct BentDistribution {
    base: Arc<dyn JointDistribution>,
    f: Option<Arc<dyn Diffeomorphism>>,
    g: Option<Arc<dyn Diffeomorphism>>,
}

/// Number of base samples used to validate maps at construction.
const VALIDATION_POINTS: usize = 10;

/// Builds `(f(X), g(Y))` after checking dimensions and validating the maps on base samples.
pub fn bend(
    base: Arc<dyn JointDistribution>,
    f: Option<Arc<dyn Diffeomorphism>>,
    g: Option<Arc<dyn Diffeomorphism>>,
) -> Result<BentDistribution> {
    if let Some(f) = &f {
        if f.dim_in() != base.dim_x() {
            return Err(Error::DimensionMismatch {
                expected: base.dim_x(),
                got: f.dim_in(),
            });
        }
        if base.support_x() != Support::Continuous {
            return Err(Error::InvalidParameter("cannot bend a discrete X".into()));
        }
    }
    if let Some(g) = &g {
        if g.dim_in() != base.dim_y() {
            return Err(Error::DimensionMismatch {
                expected: base.dim_y(),
                got: g.dim_in(),
            });
        }
        if base.support_y() != Support::Continuous {
            return Err(Error::InvalidParameter("cannot bend a discrete Y".into()));
        }
    }
    let probe = base.sample(Seed(0x6265_6e64), VALIDATION_POINTS);
    if let Some(f) = &f {
        let pts: Vec<Vec<f64>> = (0..probe.len()).map(|i| probe.x(i).to_vec()).collect();
        validate(f.as_ref(), &pts)?;
    }
    if let Some(g) = &g {
        let pts: Vec<Vec<f64>> = (0..probe.len()).map(|i| probe.y(i).to_vec()).collect();
        validate(g.as_ref(), &pts)?;
    }
    Ok(BentDistribution { base, f, g })
}

impl BentDistribution {
    pub fn base(&self) -> &Arc<dyn JointDistribution> {
        &self.base
    }

    fn pull_x(&self, x: &[f64]) -> (Vec<f64>, f64) {
        match &self.f {
            None => (x.to_vec(), 0.0),
            Some(f) => {
                let mut pre = vec![0.0; f.dim_in()];
                f.inverse(x, &mut pre);
                (pre, f.log_det_jacobian_inverse(x))
            }
        }
    }

    fn pull_y(&self, y: &[f64]) -> (Vec<f64>, f64) {
        match &self.g {
            None => (y.to_vec(), 0.0),
            Some(g) => {
                let mut pre = vec![0.0; g.dim_in()];
                g.inverse(y, &mut pre);
                (pre, g.log_det_jacobian_inverse(y))
            }
        }
    }
}

impl JointDistribution for BentDistribution {
    fn dim_x(&self) -> usize {
        self.f.as_ref().map_or(self.base.dim_x(), |f| f.dim_out())
    }

    fn dim_y(&self) -> usize {
        self.g.as_ref().map_or(self.base.dim_y(), |g| g.dim_out())
    }

    fn support_x(&self) -> Support {
        self.base.support_x()
    }

    fn support_y(&self) -> Support {
        self.base.support_y()
    }

    fn sample_into(&self, rng: &mut Stream, x: &mut [f64], y: &mut [f64]) {
        let mut bx = vec![0.0; self.base.dim_x()];
        let mut by = vec![0.0; self.base.dim_y()];
        self.base.sample_into(rng, &mut bx, &mut by);
        match &self.f {
            Some(f) => f.forward(&bx, x),
            None => x.copy_from_slice(&bx),
        }
        match &self.g {
            Some(g) => g.forward(&by, y),
            None => y.copy_from_slice(&by),
        }
    }

    fn log_pdf_joint(&self, x: &[f64], y: &[f64]) -> f64 {
        let (px, lx) = self.pull_x(x);
        let (py, ly) = self.pull_y(y);
        self.base.log_pdf_joint(&px, &py) + lx + ly
    }

    fn log_pdf_x(&self, x: &[f64]) -> f64 {
        let (px, lx) = self.pull_x(x);
        self.base.log_pdf_x(&px) + lx
    }

    fn log_pdf_y(&self, y: &[f64]) -> f64 {
        let (py, ly) = self.pull_y(y);
        self.base.log_pdf_y(&py) + ly
    }

    fn marginal_x(&self) -> Option<Arc<dyn Marginal>> {
        let inner = self.base.marginal_x()?;
        match &self.f {
            None => Some(inner),
            Some(f) => Some(Arc::new(BentMarginal::new(inner, f.clone()).ok()?)),
        }
    }

    fn marginal_y(&self) -> Option<Arc<dyn Marginal>> {
        let inner = self.base.marginal_y()?;
        match &self.g {
            None => Some(inner),
            Some(g) => Some(Arc::new(BentMarginal::new(inner, g.clone()).ok()?)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::testing::trapezoid;
    use crate::distributions::MultivariateNormal;
    use proptest::prelude::*;

    fn gaussian(rho: f64) -> Arc<dyn JointDistribution> {
        Arc::new(MultivariateNormal::bivariate(rho).unwrap())
    }

    fn roundtrip_err(map: &dyn Diffeomorphism, p: &[f64]) -> f64 {
        let img = forward_vec(map, p);
        let mut back = vec![0.0; map.dim_in()];
        map.inverse(&img, &mut back);
        back.iter()
            .zip(p)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn affine_waves_example() {
        let a = Affine::new(vec![0.1], vec![-0.8]).unwrap();
        assert_eq!(forward_vec(&a, &[0.0]), vec![-0.8]);
        assert!((a.log_det_jacobian_forward(&[3.0]) - 0.1f64.ln()).abs() < 1e-15);
        assert!(Affine::new(vec![0.0], vec![1.0]).is_err());
        let id = Affine::uniform(2, 1.0, 0.0).unwrap();
        assert_eq!(id.log_det_jacobian_inverse(&[1.0, 2.0]), 0.0);
    }

    #[test]
    fn asinh_jacobian_matches_finite_differences() {
        let a = Asinh::new(2);
        let p = [1.0, -2.0];
        assert!((a.log_det_jacobian_forward(&p) - numeric_log_det(&a, &p)).abs() < 1e-5);
        assert_eq!(forward_vec(&a, &[0.0, 0.0]), vec![0.0, 0.0]);
        // The default forward log-det via the inverse agrees with the closed form.
        let img = forward_vec(&a, &p);
        assert!((a.log_det_jacobian_inverse(&img) + a.log_det_jacobian_forward(&p)).abs() < 1e-12);
    }

    #[test]
    fn waves_example_point() {
        let w = WavesInjection::default();
        assert_eq!(forward_vec(&w, &[0.0, 0.0]), vec![0.0, 0.0]);
        let v = forward_vec(&w, &[1.0, PI / 6.0]);
        assert!((v[0] - 6.0).abs() < 1e-12 && (v[1] - PI / 6.0).abs() < 1e-15);
    }

    #[test]
    fn spiral_unit_determinant() {
        let s = Spiral::new(3, 0.5).unwrap();
        let mut rng = Seed(4).stream();
        for _ in 0..50 {
            let mut p = vec![0.0; 3];
            rng.fill_normal(&mut p);
            assert!(numeric_log_det(&s, &p).abs() < 1e-5);
        }
        let zero = Spiral::new(2, 0.0).unwrap();
        assert_eq!(forward_vec(&zero, &[0.3, -0.2]), vec![0.3, -0.2]);
        assert!(Spiral::new(1, 1.0).is_err());
    }

    #[test]
    fn swiss_roll_volume_factor() {
        let s = SwissRoll;
        for &u in &[0.1, 0.5, 0.93] {
            let img = forward_vec(&s, &[u]);
            assert!((-s.log_det_jacobian_inverse(&img) - numeric_log_det(&s, &[u])).abs() < 1e-6);
            assert!(roundtrip_err(&s, &[u]) < 1e-12);
        }
    }

    #[test]
    fn normal_cdf_roundtrip_and_jacobian() {
        let n = NormalCdf::new(2);
        let p = [0.7, -1.9];
        assert!(roundtrip_err(&n, &p) < 1e-9);
        let img = forward_vec(&n, &p);
        assert!((-n.log_det_jacobian_inverse(&img) - numeric_log_det(&n, &p)).abs() < 1e-6);
    }

    #[test]
    fn validation_rejects_wrong_jacobian() {
        #[derive(Debug)]
        struct Liar;
        impl Diffeomorphism for Liar {
            fn name(&self) -> String {
                "liar".into()
            }
            fn dim_in(&self) -> usize {
                1
            }
            fn forward(&self, v: &[f64], out: &mut [f64]) {
                out[0] = 2.0 * v[0];
            }
            fn inverse(&self, v: &[f64], out: &mut [f64]) {
                out[0] = 0.5 * v[0];
            }
            fn log_det_jacobian_inverse(&self, _v: &[f64]) -> f64 {
                0.0
            }
        }
        let err = bend(gaussian(0.5), Some(Arc::new(Liar)), None).unwrap_err();
        assert!(matches!(err, Error::JacobianMismatch { .. }));
    }

    #[test]
    fn bend_rejects_dimension_mismatch() {
        assert!(bend(gaussian(0.5), Some(Arc::new(Asinh::new(2))), None).is_err());
    }

    #[test]
    fn identity_bend_matches_base() {
        let base = gaussian(0.6);
        let b = bend(base.clone(), None, None).unwrap();
        for &(x, y) in &[(0.0, 0.0), (1.2, -0.4), (-2.0, 3.0)] {
            assert_eq!(b.log_pdf_joint(&[x], &[y]), base.log_pdf_joint(&[x], &[y]));
        }
    }

    #[test]
    fn asinh_bent_marginal_integrates() {
        let b = bend(
            gaussian(0.8),
            Some(Arc::new(Asinh::new(1))),
            Some(Arc::new(Asinh::new(1))),
        )
        .unwrap();
        let total = trapezoid(|x| b.log_pdf_x(&[x]).exp(), -10.0, 10.0, 20_000);
        assert!((total - 1.0).abs() < 1e-3);
    }

    #[test]
    fn pmi_invariant_under_bending() {
        let base = gaussian(0.8);
        let b = bend(
            base.clone(),
            Some(Arc::new(Affine::new(vec![3.0], vec![-1.0]).unwrap())),
            Some(Arc::new(Asinh::new(1))),
        )
        .unwrap();
        let s = base.sample(Seed(2), 1000);
        for i in 0..s.len() {
            let (x, y) = (s.x(i), s.y(i));
            let fx = [3.0 * x[0] - 1.0];
            let gy = [y[0].asinh()];
            assert!((base.pmi_unchecked(x, y) - b.pmi_unchecked(&fx, &gy)).abs() < 1e-9);
        }
    }

    #[test]
    fn composition_matches_nested_bend() {
        let base = gaussian(0.7);
        let f1: Arc<dyn Diffeomorphism> = Arc::new(Affine::new(vec![2.0], vec![0.5]).unwrap());
        let f2: Arc<dyn Diffeomorphism> = Arc::new(Asinh::new(1));
        let nested = bend(
            Arc::new(bend(base.clone(), Some(f1.clone()), None).unwrap()),
            Some(f2.clone()),
            None,
        )
        .unwrap();
        let composed = bend(
            base,
            Some(Arc::new(Compose::new(vec![f1, f2]).unwrap())),
            None,
        )
        .unwrap();
        for &(x, y) in &[(0.1, 0.2), (1.5, -1.0), (-0.7, 2.2)] {
            let a = nested.log_pdf_joint(&[x], &[y]);
            let b = composed.log_pdf_joint(&[x], &[y]);
            assert!((a - b).abs() < 1e-9);
            assert!((nested.log_pdf_x(&[x]) - composed.log_pdf_x(&[x])).abs() < 1e-9);
        }
    }

    #[test]
    fn bent_marginal_matches_bent_density() {
        let b = bend(gaussian(0.4), Some(Arc::new(Asinh::new(1))), None).unwrap();
        let m = b.marginal_x().unwrap();
        for &x in &[-1.0, 0.0, 0.3] {
            assert!((m.log_pdf(&[x]) - b.log_pdf_x(&[x])).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn affine_roundtrip(x in -1e3f64..1e3, s in 0.01f64..10.0, b in -5.0f64..5.0) {
            let a = Affine::new(vec![s, -s], vec![b, b]).unwrap();
            prop_assert!(roundtrip_err(&a, &[x, -x]) <= 1e-12 * x.abs().max(1.0) * 10.0);
        }

        #[test]
        fn spiral_preserves_norm(p in proptest::collection::vec(-4.0f64..4.0, 3), v in -2.0f64..2.0) {
            let s = Spiral::new(3, v).unwrap();
            let img = forward_vec(&s, &p);
            let n0: f64 = p.iter().map(|a| a * a).sum::<f64>().sqrt();
            let n1: f64 = img.iter().map(|a| a * a).sum::<f64>().sqrt();
            prop_assert!((n0 - n1).abs() < 1e-12);
            prop_assert!(roundtrip_err(&s, &p) < 1e-9);
        }

        #[test]
        fn forward_and_inverse_log_dets_cancel(p in proptest::collection::vec(-3.0f64..3.0, 2)) {
            let maps: Vec<Box<dyn Diffeomorphism>> = vec![
                Box::new(Asinh::new(2)),
                Box::new(NormalCdf::new(2)),
                Box::new(WavesInjection::default()),
                Box::new(Spiral::new(2, 0.5).unwrap()),
            ];
            for m in &maps {
                let img = forward_vec(m.as_ref(), &p);
                let total = m.log_det_jacobian_forward(&p) + m.log_det_jacobian_inverse(&img);
                prop_assert!(total.abs() < 1e-7);
                prop_assert!(roundtrip_err(m.as_ref(), &p) < 1e-9);
            }
        }
    }
}
