//! JSON descriptions of distributions, used by the CLI and the benchmark registry.
//!
//! ```
//! use pmiprof::spec::DistSpec;
//! let spec: DistSpec = serde_json::from_str(
//!     r#"{"type": "mvn", "mean": [0, 0], "cov": [[1, 0.8], [0.8, 1]], "split": [1, 1]}"#,
//! ).unwrap();
//! let dist = spec.build().unwrap();
//! assert_eq!(dist.dim_x(), 1);
//! ```

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::bend::{
    bend, Affine, Asinh, Compose, Diffeomorphism, NormalCdf, Spiral, SwissRoll, WavesInjection,
};
use crate::distributions::{
    AdditiveUniform, Categorical, DiscreteContinuousMixture, GaoStaircase, Gaussian,
    JointDistribution, Marginal, MultivariateNormal, MultivariateStudent, StudentT, Uniform,
    UniformBox, ZeroInflatedPoissonization,
};
use crate::error::{Error, Result};
use crate::linalg::to_dmatrix;
use crate::mix::{contaminate, MixtureDistribution, ProductDistribution};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistSpec {
    Mvn {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mean: Option<Vec<f64>>,
        cov: Vec<Vec<f64>>,
        split: [usize; 2],
    },
    Student {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        location: Option<Vec<f64>>,
        dispersion: Vec<Vec<f64>>,
        dof: f64,
        split: [usize; 2],
    },
    UniformBox {
        lower: Vec<f64>,
        upper: Vec<f64>,
        split: [usize; 2],
    },
    AdditiveUniform {
        eps: f64,
    },
    Gao {
        m: usize,
        #[serde(default = "one")]
        replicas: usize,
    },
    Zip {
        p: f64,
    },
    /// `X <- Z -> Y` with continuous `X | Z` and categorical `Y | Z`.
    LabeledClusters {
        weights: Vec<f64>,
        x_parts: Vec<MarginalSpec>,
        y_tables: Vec<Vec<f64>>,
    },
    Product {
        x: MarginalSpec,
        y: MarginalSpec,
    },
    Mixture {
        weights: Vec<f64>,
        components: Vec<DistSpec>,
    },
    Bend {
        base: Box<DistSpec>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        f: Option<MapSpec>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        g: Option<MapSpec>,
    },
    /// `(1 - alpha) base + alpha P_X (x) noise_y`; `noise_y` defaults to the base's Y marginal.
    Contaminate {
        base: Box<DistSpec>,
        alpha: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        noise_y: Option<MarginalSpec>,
    },
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum MarginalSpec {
    Gaussian {
        mean: Vec<f64>,
        cov: Vec<Vec<f64>>,
    },
    Student {
        location: Vec<f64>,
        dispersion: Vec<Vec<f64>>,
        dof: f64,
    },
    Uniform {
        lower: Vec<f64>,
        upper: Vec<f64>,
    },
    Categorical {
        probs: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum MapSpec {
    Affine {
        scale: Vec<f64>,
        shift: Vec<f64>,
    },
    Asinh {
        dim: usize,
    },
    Spiral {
        dim: usize,
        #[serde(alias = "v")]
        speed: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        plane: Option<(usize, usize)>,
    },
    Waves {
        #[serde(default = "waves_amplitude")]
        amplitude: f64,
        #[serde(default = "waves_frequency")]
        frequency: f64,
    },
    NormalCdf {
        dim: usize,
    },
    SwissRoll,
    Compose {
        maps: Vec<MapSpec>,
    },
}

fn waves_amplitude() -> f64 {
    5.0
}

fn waves_frequency() -> f64 {
    3.0
}

fn spec_err(e: Error) -> Error {
    match e {
        Error::Spec(_) => e,
        other => Error::Spec(other.to_string()),
    }
}

impl MarginalSpec {
    pub fn build(&self) -> Result<Arc<dyn Marginal>> {
        let built: Result<Arc<dyn Marginal>> = match self {
            Self::Gaussian { mean, cov } => {
                Ok(Arc::new(Gaussian::new(mean.clone(), &to_dmatrix(cov)?)?))
            }
            Self::Student {
                location,
                dispersion,
                dof,
            } => Ok(Arc::new(StudentT::new(
                location.clone(),
                &to_dmatrix(dispersion)?,
                *dof,
            )?)),
            Self::Uniform { lower, upper } => {
                Ok(Arc::new(Uniform::new(lower.clone(), upper.clone())?))
            }
            Self::Categorical { probs } => Ok(Arc::new(Categorical::new(probs.clone())?)),
        };
        built.map_err(spec_err)
    }
}

impl MapSpec {
    pub fn build(&self) -> Result<Arc<dyn Diffeomorphism>> {
        let built: Result<Arc<dyn Diffeomorphism>> = match self {
            Self::Affine { scale, shift } => {
                Ok(Arc::new(Affine::new(scale.clone(), shift.clone())?))
            }
            Self::Asinh { dim } => Ok(Arc::new(Asinh::new(*dim))),
            Self::Spiral { dim, speed, plane } => Ok(Arc::new(Spiral::in_plane(
                *dim,
                *speed,
                plane.unwrap_or((0, 1)),
            )?)),
            Self::Waves {
                amplitude,
                frequency,
            } => Ok(Arc::new(WavesInjection::new(*amplitude, *frequency))),
            Self::NormalCdf { dim } => Ok(Arc::new(NormalCdf::new(*dim))),
            Self::SwissRoll => Ok(Arc::new(SwissRoll)),
            Self::Compose { maps } => {
                let maps = maps
                    .iter()
                    .map(MapSpec::build)
                    .collect::<Result<Vec<_>>>()?;
                Ok(Arc::new(Compose::new(maps)?))
            }
        };
        built.map_err(spec_err)
    }
}

impl DistSpec {
    /// Constructs the distribution; every failure is reported as [`Error::Spec`].
    pub fn build(&self) -> Result<Arc<dyn JointDistribution>> {
        self.build_inner().map_err(spec_err)
    }

    fn build_inner(&self) -> Result<Arc<dyn JointDistribution>> {
        Ok(match self {
            Self::Mvn { mean, cov, split } => {
                let d = split[0] + split[1];
                let mean = mean.clone().unwrap_or_else(|| vec![0.0; d]);
                Arc::new(MultivariateNormal::new(
                    mean,
                    to_dmatrix(cov)?,
                    split[0],
                    split[1],
                )?)
            }
            Self::Student {
                location,
                dispersion,
                dof,
                split,
            } => {
                let d = split[0] + split[1];
                let loc = location.clone().unwrap_or_else(|| vec![0.0; d]);
                Arc::new(MultivariateStudent::new(
                    loc,
                    to_dmatrix(dispersion)?,
                    *dof,
                    split[0],
                    split[1],
                )?)
            }
            Self::UniformBox {
                lower,
                upper,
                split,
            } => Arc::new(UniformBox::new(
                lower.clone(),
                upper.clone(),
                split[0],
                split[1],
            )?),
            Self::AdditiveUniform { eps } => Arc::new(AdditiveUniform::new(*eps)?),
            Self::Gao { m, replicas } => Arc::new(GaoStaircase::new(*m, *replicas)?),
            Self::Zip { p } => Arc::new(ZeroInflatedPoissonization::new(*p)?),
            Self::LabeledClusters {
                weights,
                x_parts,
                y_tables,
            } => {
                let xs = x_parts
                    .iter()
                    .map(MarginalSpec::build)
                    .collect::<Result<Vec<_>>>()?;
                let ys = y_tables
                    .iter()
                    .map(|p| Categorical::new(p.clone()))
                    .collect::<Result<Vec<_>>>()?;
                Arc::new(DiscreteContinuousMixture::new(weights.clone(), xs, ys)?)
            }
            Self::Product { x, y } => Arc::new(ProductDistribution::new(x.build()?, y.build()?)),
            Self::Mixture {
                weights,
                components,
            } => {
                let comps = components
                    .iter()
                    .map(DistSpec::build_inner)
                    .collect::<Result<Vec<_>>>()?;
                Arc::new(MixtureDistribution::new(weights.clone(), comps)?)
            }
            Self::Bend { base, f, g } => {
                let f = f.as_ref().map(MapSpec::build).transpose()?;
                let g = g.as_ref().map(MapSpec::build).transpose()?;
                Arc::new(bend(base.build_inner()?, f, g)?)
            }
            Self::Contaminate {
                base,
                alpha,
                noise_y,
            } => {
                let base = base.build_inner()?;
                let noise = match noise_y {
                    Some(m) => m.build()?,
                    None => base.marginal_y().ok_or(Error::MissingMarginal)?,
                };
                Arc::new(contaminate(base, *alpha, noise)?)
            }
        })
    }

    /// The finite mixture underlying this spec, looking through bends
    /// (which preserve every component's MI). Labeled clusters are viewed
    /// as a mixture of independent products.
    pub fn mixture_view(&self) -> Result<Option<MixtureDistribution>> {
        match self {
            Self::Bend { base, .. } => base.mixture_view(),
            Self::Mixture { .. } | Self::Contaminate { .. } => {
                Ok(self.build()?.as_mixture().cloned())
            }
            Self::LabeledClusters {
                weights,
                x_parts,
                y_tables,
            } => {
                let mut comps: Vec<Arc<dyn JointDistribution>> = Vec::new();
                for (x, y) in x_parts.iter().zip(y_tables) {
                    let y: Arc<dyn Marginal> =
                        Arc::new(Categorical::new(y.clone()).map_err(spec_err)?);
                    comps.push(Arc::new(ProductDistribution::new(x.build()?, y)));
                }
                MixtureDistribution::new(weights.clone(), comps)
                    .map(Some)
                    .map_err(spec_err)
            }
            _ => Ok(None),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Spec(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("specs serialize")
    }
}
