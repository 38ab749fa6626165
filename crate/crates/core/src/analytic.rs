//! Closed forms: canonical correlations, Gaussian MI and profiles, profile
//! variance extremes and profiles of discrete distributions.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::SHARD;
use crate::error::{Error, Result};
use crate::linalg::CholeskyFactor;
use crate::profile::PmiSampleBatch;
use crate::rng::Seed;

/// Largest canonical correlation kept; larger values are clamped here.
pub const MAX_RHO: f64 = 1.0 - 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CanonicalCorrelations {
    /// Descending, each in `[0, MAX_RHO]`.
    pub rhos: Vec<f64>,
    /// Set when at least one value was clamped at [`MAX_RHO`].
    pub clamped: bool,
}

impl CanonicalCorrelations {
    pub fn mutual_information(&self) -> f64 {
        gaussian_mi(&self.rhos).expect("rhos are clamped below one")
    }
}

/// Singular values of `L_x^-1 S_xy L_y^-T`, equal to those of `S_x^-1/2 S_xy S_y^-1/2`.
pub fn canonical_correlations(
    cov: &DMatrix<f64>,
    dim_x: usize,
    dim_y: usize,
) -> Result<CanonicalCorrelations> {
    if cov.nrows() != dim_x + dim_y {
        return Err(Error::DimensionMismatch {
            expected: dim_x + dim_y,
            got: cov.nrows(),
        });
    }
    CholeskyFactor::new(cov)?;
    let sx = cov.view((0, 0), (dim_x, dim_x)).into_owned();
    let sy = cov.view((dim_x, dim_x), (dim_y, dim_y)).into_owned();
    let sxy = cov.view((0, dim_x), (dim_x, dim_y)).into_owned();
    let lx = CholeskyFactor::new(&sx)?.lower().clone();
    let ly = CholeskyFactor::new(&sy)?.lower().clone();
    let a = lx
        .solve_lower_triangular(&sxy)
        .ok_or(Error::NotPositiveDefinite)?;
    let whitened = ly
        .solve_lower_triangular(&a.transpose())
        .ok_or(Error::NotPositiveDefinite)?
        .transpose();
    let mut rhos: Vec<f64> = whitened.singular_values().iter().copied().collect();
    rhos.sort_by(|a, b| b.total_cmp(a));
    rhos.truncate(dim_x.min(dim_y));
    let mut clamped = false;
    for r in rhos.iter_mut() {
        if *r > MAX_RHO {
            *r = MAX_RHO;
            clamped = true;
        }
        *r = r.max(0.0);
    }
    if clamped {
        log::warn!("canonical correlation clamped at 1 - 1e-12; MI is finite but unreliable");
    }
    Ok(CanonicalCorrelations { rhos, clamped })
}

/// `-1/2 sum log(1 - rho_i^2)`.
pub fn gaussian_mi(rhos: &[f64]) -> Result<f64> {
    if let Some(r) = rhos.iter().find(|r| !(r.abs() < 1.0)) {
        return Err(Error::InvalidParameter(format!(
            "canonical correlations must lie in [0, 1), got {r}"
        )));
    }
    Ok(-0.5 * rhos.iter().map(|r| (-r * r).ln_1p()).sum::<f64>())
}

/// Draws `MI + sum_i (rho_i / 2) (Q_i - Q'_i)` with `Q, Q'` independent chi-square(1).
pub fn sample_gaussian_profile(rhos: &[f64], seed: Seed, n: usize) -> Result<PmiSampleBatch> {
    let mi = gaussian_mi(rhos)?;
    let mut values = vec![0.0; n];
    values
        .par_chunks_mut(SHARD)
        .enumerate()
        .for_each(|(shard, chunk)| {
            let mut rng = seed.child("gaussian_profile", shard as u64).stream();
            for v in chunk.iter_mut() {
                let mut t = mi;
                for r in rhos {
                    let z = rng.normal();
                    let w = rng.normal();
                    t += 0.5 * r * (z * z - w * w);
                }
                *v = t;
            }
        });
    PmiSampleBatch::new(values, "generalized chi-square", seed)
}

/// `(v_min, v_max)`: extremes of the profile variance `sum rho_i^2` over
/// Gaussians with `m` canonical correlations and the given MI.
pub fn profile_variance_bounds(mi: f64, m: usize) -> Result<(f64, f64)> {
    if !(mi >= 0.0) || !mi.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "mi must be finite and >= 0, got {mi}"
        )));
    }
    if m == 0 {
        return Err(Error::InvalidParameter("m must be >= 1".into()));
    }
    let v_min = -(-2.0 * mi).exp_m1();
    let v_max = -(m as f64) * (-2.0 * mi / m as f64).exp_m1();
    Ok((v_min, v_max))
}

/// Atoms of a discrete PMI profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteProfile {
    /// `(pmi, probability)`, sorted by location.
    pub atoms: Vec<(f64, f64)>,
}

impl DiscreteProfile {
    pub fn mean(&self) -> f64 {
        self.atoms.iter().map(|(t, w)| t * w).sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.atoms.iter().map(|(t, w)| w * (t - m).powi(2)).sum()
    }
}

fn validate_pmf(pmf: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<f64>)> {
    let cols = pmf.first().map_or(0, Vec::len);
    if pmf.is_empty() || cols == 0 || pmf.iter().any(|r| r.len() != cols) {
        return Err(Error::InvalidParameter(
            "joint pmf must be a non-empty matrix".into(),
        ));
    }
    if pmf.iter().flatten().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(Error::InvalidWeights(
            "pmf entries must be finite and >= 0".into(),
        ));
    }
    let total: f64 = pmf.iter().flatten().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidWeights(format!("pmf sums to {total}, not 1")));
    }
    let px = pmf.iter().map(|r| r.iter().sum()).collect();
    let py = (0..cols).map(|j| pmf.iter().map(|r| r[j]).sum()).collect();
    Ok((px, py))
}

/// Profile of a discrete joint distribution given as a probability table.
pub fn discrete_profile(pmf: &[Vec<f64>]) -> Result<DiscreteProfile> {
    let (px, py) = validate_pmf(pmf)?;
    let mut atoms: Vec<(f64, f64)> = Vec::new();
    for (i, row) in pmf.iter().enumerate() {
        for (j, &p) in row.iter().enumerate() {
            if p > 0.0 {
                atoms.push((p.ln() - px[i].ln() - py[j].ln(), p));
            }
        }
    }
    atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
    for (t, w) in atoms {
        match merged.last_mut() {
            Some(last) if (last.0 - t).abs() <= 1e-12 * t.abs().max(1.0) => last.1 += w,
            _ => merged.push((t, w)),
        }
    }
    Ok(DiscreteProfile { atoms: merged })
}

/// Exact MI of a discrete joint distribution.
pub fn discrete_mi(pmf: &[Vec<f64>]) -> Result<f64> {
    Ok(discrete_profile(pmf)?.mean())
}
