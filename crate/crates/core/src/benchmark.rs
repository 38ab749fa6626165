//! Task registry, ground truths, seeded estimator runs and channel
//! contamination sweeps.
//!
//! Every task is stored as a [`DistSpec`], so the registry can be exported,
//! edited and reloaded as JSON.

use std::collections::HashMap;
use std::time::Instant;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{canonical_correlations, gaussian_mi};
use crate::distributions::{
    gao_mi, student_identity_mi, zip_mi, zip_mi_quadrature, Gaussian, JointDistribution,
    JointDistributionExt, MultivariateNormal,
};
use crate::error::{Error, Result};
use crate::estimators::SampleEstimator;
use crate::linalg::from_dmatrix;
use crate::mix::{contaminate, MixtureDistribution};
use crate::profile::{estimate_mi, median_of_means, sample_profile, MiEstimate};
use crate::rng::{Seed, StreamKey};
use crate::spec::{DistSpec, MapSpec, MarginalSpec};

pub const GROUND_TRUTH_SAMPLES: usize = 200_000;
pub const DEFAULT_SAMPLES: usize = 5000;
pub const DEFAULT_SEEDS: usize = 10;
/// Blocks for the median-of-means ground truth of heavy-tailed tasks.
pub const ROBUST_BLOCKS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruthMethod {
    /// Use the closed form in `reference`.
    Exact,
    MonteCarlo,
    MedianOfMeans,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkTask {
    pub name: String,
    pub spec: DistSpec,
    pub dim_x: usize,
    pub dim_y: usize,
    /// Closed-form MI, when one is known.
    #[serde(default)]
    pub reference: Option<f64>,
    pub truth: TruthMethod,
    /// One of the 26 tasks of the core suite.
    #[serde(default)]
    pub core: bool,
    /// Profile moments may not exist; the ground truth uses median of means.
    #[serde(default)]
    pub mi_first_moment_caveat: bool,
    /// Reconstructed from a one-line description of an external benchmark.
    #[serde(default)]
    pub external_definition: bool,
}

impl BenchmarkTask {
    fn new(name: &str, spec: DistSpec, reference: Option<f64>, truth: TruthMethod) -> Self {
        let dist = spec.build().expect("builtin specs are valid");
        Self {
            name: name.into(),
            dim_x: dist.dim_x(),
            dim_y: dist.dim_y(),
            spec,
            reference,
            truth,
            core: true,
            mi_first_moment_caveat: false,
            external_definition: false,
        }
    }

    fn extra(mut self) -> Self {
        self.core = false;
        self
    }

    /// Builds the distribution and checks the declared dimensions.
    pub fn build(&self) -> Result<std::sync::Arc<dyn JointDistribution>> {
        let dist = self.spec.build()?;
        if (dist.dim_x(), dist.dim_y()) != (self.dim_x, self.dim_y) {
            return Err(Error::Spec(format!(
                "task {} declares {}x{} but its spec is {}x{}",
                self.name,
                self.dim_x,
                self.dim_y,
                dist.dim_x(),
                dist.dim_y()
            )));
        }
        if self.truth == TruthMethod::Exact && self.reference.is_none() {
            return Err(Error::Spec(format!(
                "task {} is exact but has no reference",
                self.name
            )));
        }
        Ok(dist)
    }
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    from_dmatrix(m)
}

fn mvn(mean: Vec<f64>, cov: &DMatrix<f64>, dim_x: usize, dim_y: usize) -> DistSpec {
    DistSpec::Mvn {
        mean: Some(mean),
        cov: rows(cov),
        split: [dim_x, dim_y],
    }
}

fn diag(values: &[f64]) -> DMatrix<f64> {
    DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(values))
}

/// Unit-variance `2m`-dimensional covariance with `X_i, Y_i` correlated at `rho` for `i < pairs`.
pub fn sparse_covariance(m: usize, pairs: usize, rho: f64) -> DMatrix<f64> {
    let mut cov = DMatrix::identity(2 * m, 2 * m);
    for i in 0..pairs.min(m) {
        cov[(i, m + i)] = rho;
        cov[(m + i, i)] = rho;
    }
    cov
}

/// Every coordinate loads `loading` on one shared unit factor; unit variances.
pub fn dense_covariance(m: usize, loading: f64) -> DMatrix<f64> {
    let l2 = loading * loading;
    DMatrix::from_fn(2 * m, 2 * m, |i, j| if i == j { 1.0 } else { l2 })
}

/// Loading that gives the 5 x 5 dense normal exactly one nat.
///
/// The single canonical correlation is `m l^2 / (1 + (m - 1) l^2)`.
pub fn dense_loading() -> f64 {
    let rho = (-(-2.0f64).exp_m1()).sqrt();
    let m = 5.0;
    (rho / (m - (m - 1.0) * rho)).sqrt()
}

fn gaussian_reference(cov: &DMatrix<f64>, m: usize, n: usize) -> f64 {
    canonical_correlations(cov, m, n)
        .expect("builtin covariances are positive definite")
        .mutual_information()
}

fn x_distribution() -> DistSpec {
    let comp = |r: f64| {
        mvn(
            vec![0.0, 0.0],
            &(DMatrix::from_row_slice(2, 2, &[1.0, r, r, 1.0]) * 0.3),
            1,
            1,
        )
    };
    DistSpec::Mixture {
        weights: vec![0.5, 0.5],
        components: vec![comp(0.9), comp(-0.9)],
    }
}

fn ai_distribution() -> DistSpec {
    let c = (0.04f64 * 0.2).sqrt() * 0.95;
    let parts = [
        ([1.0, 0.0], diag(&[0.01, 0.2])),
        ([1.0, 1.0], diag(&[0.05, 0.001])),
        ([1.0, -1.0], diag(&[0.05, 0.001])),
        ([-0.8, -0.2], diag(&[0.03, 0.001])),
        (
            [-1.2, 0.0],
            DMatrix::from_row_slice(2, 2, &[0.04, c, c, 0.2]),
        ),
        (
            [-0.4, 0.0],
            DMatrix::from_row_slice(2, 2, &[0.04, -c, -c, 0.2]),
        ),
    ];
    DistSpec::Mixture {
        weights: vec![1.0 / 6.0; 6],
        components: parts
            .iter()
            .map(|(m, s)| mvn(m.to_vec(), s, 1, 1))
            .collect(),
    }
}

fn galaxy_distribution() -> DistSpec {
    let comp = |s: f64| mvn(vec![1.5 * s; 3], &DMatrix::identity(3, 3), 2, 1);
    DistSpec::Bend {
        base: Box::new(DistSpec::Mixture {
            weights: vec![0.5, 0.5],
            components: vec![comp(-1.0), comp(1.0)],
        }),
        f: Some(MapSpec::Spiral {
            dim: 2,
            speed: 0.5,
            plane: None,
        }),
        g: None,
    }
}

fn waves_distribution() -> DistSpec {
    let cov = diag(&[0.1, 1.0, 0.1]);
    let components = (0..12)
        .map(|i| mvn(vec![1.5 * i as f64, 0.0, 1.5 * (i % 4) as f64], &cov, 2, 1))
        .collect();
    DistSpec::Bend {
        base: Box::new(DistSpec::Mixture {
            weights: vec![1.0 / 12.0; 12],
            components,
        }),
        f: Some(MapSpec::Compose {
            maps: vec![
                MapSpec::Waves {
                    amplitude: 5.0,
                    frequency: 3.0,
                },
                MapSpec::Affine {
                    scale: vec![0.1, 0.5],
                    shift: vec![-0.8, 0.0],
                },
            ],
        }),
        g: None,
    }
}

fn concentric(m: usize, k: usize) -> DistSpec {
    let components = (1..=k)
        .map(|c| {
            let c = c as f64;
            DistSpec::Product {
                x: MarginalSpec::Gaussian {
                    mean: vec![0.0; m],
                    cov: rows(&(DMatrix::identity(m, m) * (c * c))),
                },
                y: MarginalSpec::Gaussian {
                    mean: vec![c],
                    cov: vec![vec![1e-4]],
                },
            }
        })
        .collect();
    DistSpec::Mixture {
        weights: vec![1.0 / k as f64; k],
        components,
    }
}

fn student_asinh(m: usize, dof: f64) -> DistSpec {
    DistSpec::Bend {
        base: Box::new(DistSpec::Student {
            location: None,
            dispersion: rows(&DMatrix::identity(2 * m, 2 * m)),
            dof,
            split: [m, m],
        }),
        f: Some(MapSpec::Asinh { dim: m }),
        g: Some(MapSpec::Asinh { dim: m }),
    }
}

fn sparse_normal(m: usize) -> DistSpec {
    mvn(vec![0.0; 2 * m], &sparse_covariance(m, 2, 0.8), m, m)
}

fn spiral_sparse(m: usize) -> DistSpec {
    DistSpec::Bend {
        base: Box::new(sparse_normal(m)),
        f: Some(MapSpec::Spiral {
            dim: m,
            speed: 1.0 / m as f64,
            plane: Some((0, 1)),
        }),
        g: Some(MapSpec::Spiral {
            dim: m,
            speed: 1.0 / m as f64,
            plane: Some((1, 2)),
        }),
    }
}

fn swiss_roll() -> DistSpec {
    DistSpec::Bend {
        base: Box::new(mvn(
            vec![0.0, 0.0],
            &DMatrix::from_row_slice(2, 2, &[1.0, 0.75, 0.75, 1.0]),
            1,
            1,
        )),
        f: Some(MapSpec::Compose {
            maps: vec![MapSpec::NormalCdf { dim: 1 }, MapSpec::SwissRoll],
        }),
        g: Some(MapSpec::NormalCdf { dim: 1 }),
    }
}

fn labeled_clusters() -> DistSpec {
    let student = |c: f64| MarginalSpec::Student {
        location: vec![c, c],
        dispersion: rows(&(DMatrix::identity(2, 2) * 0.2)),
        dof: 8.0,
    };
    DistSpec::LabeledClusters {
        weights: vec![0.25, 0.25, 0.5],
        x_parts: vec![
            student(1.0),
            student(-1.0),
            MarginalSpec::Gaussian {
                mean: vec![0.0, 0.0],
                cov: rows(&(DMatrix::from_row_slice(2, 2, &[1.0, 0.95, 0.95, 1.0]) * 0.1)),
            },
        ],
        y_tables: vec![vec![0.05, 0.95], vec![0.95, 0.05], vec![0.5, 0.5]],
    }
}

/// The 26 core tasks followed by the extras (1-D normal, Gao staircase,
/// zero-inflated Poissonization, labeled clusters).
pub fn register_builtin_tasks() -> Vec<BenchmarkTask> {
    use TruthMethod::*;
    let mut tasks = Vec::new();
    let mut additive = BenchmarkTask::new(
        "1v1-additive-0.75",
        DistSpec::AdditiveUniform { eps: 0.75 },
        Some(0.25 / 0.75),
        MonteCarlo,
    );
    additive.external_definition = true;
    tasks.push(additive);
    let mut cauchy = BenchmarkTask::new(
        "1v1-student-asinh-dof1",
        student_asinh(1, 1.0),
        Some(student_identity_mi(1.0, 1, 1)),
        MedianOfMeans,
    );
    cauchy.mi_first_moment_caveat = true;
    tasks.push(cauchy);
    tasks.push(BenchmarkTask::new("X", x_distribution(), None, MonteCarlo));
    tasks.push(BenchmarkTask::new(
        "AI",
        ai_distribution(),
        None,
        MonteCarlo,
    ));
    let mut roll = BenchmarkTask::new(
        "swissroll",
        swiss_roll(),
        Some(gaussian_mi(&[0.75]).unwrap()),
        MonteCarlo,
    );
    roll.external_definition = true;
    tasks.push(roll);
    tasks.push(BenchmarkTask::new(
        "Waves",
        waves_distribution(),
        None,
        MonteCarlo,
    ));
    tasks.push(BenchmarkTask::new(
        "Galaxy",
        galaxy_distribution(),
        None,
        MonteCarlo,
    ));
    for (m, k) in [(3, 5), (3, 10), (5, 5), (5, 10), (25, 5)] {
        tasks.push(BenchmarkTask::new(
            &format!("{m}v1-concentric-{k}"),
            concentric(m, k),
            None,
            MonteCarlo,
        ));
    }
    let loading = dense_loading();
    for m in [5, 25, 50] {
        let cov = dense_covariance(m, loading);
        let reference = gaussian_reference(&cov, m, m);
        tasks.push(BenchmarkTask::new(
            &format!("{m}v{m}-normal-dense"),
            mvn(vec![0.0; 2 * m], &cov, m, m),
            Some(reference),
            Exact,
        ));
    }
    let sparse_mi = 2.0 * gaussian_mi(&[0.8]).unwrap();
    for m in [5, 25] {
        tasks.push(BenchmarkTask::new(
            &format!("{m}v{m}-normal-sparse"),
            sparse_normal(m),
            Some(sparse_mi),
            Exact,
        ));
    }
    for (m, dof) in [(2, 1.0), (3, 2.0), (5, 2.0)] {
        let mut t = BenchmarkTask::new(
            &format!("{m}v{m}-student-asinh-dof{dof}"),
            student_asinh(m, dof),
            Some(student_identity_mi(dof, m, m)),
            if dof == 1.0 {
                MedianOfMeans
            } else {
                MonteCarlo
            },
        );
        t.mi_first_moment_caveat = dof == 1.0;
        tasks.push(t);
    }
    for m in [3, 5] {
        tasks.push(BenchmarkTask::new(
            &format!("{m}v{m}-spiral-sparse"),
            spiral_sparse(m),
            Some(sparse_mi),
            MonteCarlo,
        ));
    }
    for m in [5, 25] {
        for alpha in [0.2, 0.5] {
            let spec = DistSpec::Contaminate {
                base: Box::new(sparse_normal(m)),
                alpha,
                noise_y: None,
            };
            tasks.push(BenchmarkTask::new(
                &format!("{m}v{m}-inliers-{alpha}"),
                spec,
                None,
                MonteCarlo,
            ));
        }
    }
    let rho = DMatrix::from_row_slice(2, 2, &[1.0, 0.8, 0.8, 1.0]);
    tasks.push(
        BenchmarkTask::new(
            "1v1-normal-0.8",
            mvn(vec![0.0, 0.0], &rho, 1, 1),
            Some(gaussian_mi(&[0.8]).unwrap()),
            Exact,
        )
        .extra(),
    );
    tasks.push(
        BenchmarkTask::new(
            "gao-5",
            DistSpec::Gao { m: 5, replicas: 1 },
            Some(gao_mi(5)),
            MonteCarlo,
        )
        .extra(),
    );
    tasks.push(
        BenchmarkTask::new(
            "zip-0",
            DistSpec::Zip { p: 0.0 },
            Some(zip_mi(0.0)),
            MonteCarlo,
        )
        .extra(),
    );
    tasks.push(
        BenchmarkTask::new(
            "zip-0.3",
            DistSpec::Zip { p: 0.3 },
            Some(zip_mi_quadrature(0.3)),
            MonteCarlo,
        )
        .extra(),
    );
    tasks
        .push(BenchmarkTask::new("labeled-clusters", labeled_clusters(), None, MonteCarlo).extra());
    tasks
}

/// Case-insensitive lookup by name.
pub fn find_task<'a>(tasks: &'a [BenchmarkTask], name: &str) -> Result<&'a BenchmarkTask> {
    tasks
        .iter()
        .find(|t| t.name.eq_ignore_ascii_case(name))
        .ok_or_else(|| Error::UnknownTask(name.into()))
}

/// Parses a JSON list of tasks, validating each one.
pub fn load_manifest(text: &str) -> Result<Vec<BenchmarkTask>> {
    let tasks: Vec<BenchmarkTask> =
        serde_json::from_str(text).map_err(|e| Error::Spec(e.to_string()))?;
    for t in &tasks {
        t.build()?;
    }
    Ok(tasks)
}

pub fn truth_seed(root: Seed, task: &str) -> Seed {
    root.derive(&StreamKey::new().push("ground_truth", 0).push(task, 0))
}

pub fn data_seed(root: Seed, task: &str, seed_index: usize) -> Seed {
    root.derive(
        &StreamKey::new()
            .push("benchmark", 0)
            .push(task, 0)
            .push("seed", seed_index as u64),
    )
}

/// Closed form for exact tasks, otherwise Monte Carlo over `n` profile samples.
pub fn ground_truth(task: &BenchmarkTask, n: usize, seed: Seed) -> Result<MiEstimate> {
    let dist = task.build()?;
    match task.truth {
        TruthMethod::Exact => Ok(MiEstimate::exact(task.reference.expect("checked by build"))),
        TruthMethod::MonteCarlo => estimate_mi(dist.as_ref(), seed, n),
        TruthMethod::MedianOfMeans => median_of_means(
            sample_profile(dist.as_ref(), seed, n)?.values(),
            ROBUST_BLOCKS,
        ),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub task: String,
    pub estimator: String,
    pub seed_index: usize,
    /// NaN when the estimator failed.
    pub estimate: f64,
    /// Seconds; the only field that is not reproducible.
    pub wall_time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub n: usize,
    pub seeds: usize,
    pub root_seed: Seed,
}

impl RunConfig {
    pub fn new(root_seed: Seed) -> Self {
        Self {
            n: DEFAULT_SAMPLES,
            seeds: DEFAULT_SEEDS,
            root_seed,
        }
    }
}

/// One estimate per (task, estimator, seed) cell. Cells run in parallel and
/// come back ordered by task, estimator, then seed.
pub fn run(
    tasks: &[BenchmarkTask],
    estimators: &[SampleEstimator],
    config: &RunConfig,
) -> Result<Vec<RunResult>> {
    let dists = tasks
        .iter()
        .map(BenchmarkTask::build)
        .collect::<Result<Vec<_>>>()?;
    let cells: Vec<(usize, usize, usize)> = (0..tasks.len())
        .flat_map(|t| {
            (0..estimators.len()).flat_map(move |e| (0..config.seeds).map(move |s| (t, e, s)))
        })
        .collect();
    Ok(cells
        .par_iter()
        .map(|&(t, e, s)| {
            let start = Instant::now();
            let data = dists[t].sample(data_seed(config.root_seed, &tasks[t].name, s), config.n);
            let estimate = estimators[e].estimate(&data).unwrap_or_else(|err| {
                log::warn!(
                    "{} on {} (seed {s}) failed: {err}",
                    estimators[e].label(),
                    tasks[t].name
                );
                f64::NAN
            });
            RunResult {
                task: tasks[t].name.clone(),
                estimator: estimators[e].label(),
                seed_index: s,
                estimate,
                wall_time: start.elapsed().as_secs_f64(),
            }
        })
        .collect())
}

/// Rounds up to two decimals, ignoring representation error below 1e-9.
pub fn round_up_2(x: f64) -> f64 {
    ((x * 100.0) - 1e-9).ceil() / 100.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub task: String,
    pub estimator: String,
    /// Mean over the successful seeds.
    pub mean: f64,
    /// Sample standard deviation, rounded up to two decimals.
    pub std: f64,
    pub failures: usize,
    pub ground_truth: Option<MiEstimate>,
}

/// Per-cell mean and rounded-up standard deviation, in first-seen order.
pub fn summarize(results: &[RunResult], truths: &HashMap<String, MiEstimate>) -> Vec<SummaryRow> {
    let mut order: Vec<(String, String)> = Vec::new();
    let mut groups: HashMap<(String, String), Vec<f64>> = HashMap::new();
    for r in results {
        let key = (r.task.clone(), r.estimator.clone());
        if !groups.contains_key(&key) {
            order.push(key.clone());
        }
        groups.entry(key).or_default().push(r.estimate);
    }
    order
        .into_iter()
        .map(|key| {
            let values = &groups[&key];
            let ok: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
            let mean = if ok.is_empty() {
                f64::NAN
            } else {
                crate::profile::mean(&ok)
            };
            let std = if ok.len() < 2 {
                f64::NAN
            } else {
                round_up_2(crate::profile::variance(&ok).sqrt())
            };
            SummaryRow {
                ground_truth: truths.get(&key.0).copied(),
                failures: values.len() - ok.len(),
                task: key.0,
                estimator: key.1,
                mean,
                std,
            }
        })
        .collect()
}

/// Correlation of each of the two signal pairs in the channel experiment.
pub const CHANNEL_RHO: f64 = 0.8;
pub const INLIER_VARIANCE: f64 = 1.0;
pub const OUTLIER_VARIANCE: f64 = 25.0;

/// Two independent `CHANNEL_RHO` pairs whose `Y` is replaced, with
/// probability `alpha`, by `N(0, sigma2 I)` noise independent of `X`.
pub fn channel(alpha: f64, sigma2: f64) -> Result<MixtureDistribution> {
    let base = MultivariateNormal::paired(&[CHANNEL_RHO, CHANNEL_RHO])?;
    let noise = Gaussian::isotropic(vec![0.0, 0.0], sigma2)?;
    contaminate(std::sync::Arc::new(base), alpha, std::sync::Arc::new(noise))
}

/// `(1 - alpha) I(X; Y)` for the uncontaminated channel.
pub fn channel_bound(alpha: f64) -> f64 {
    (1.0 - alpha) * 2.0 * gaussian_mi(&[CHANNEL_RHO]).expect("valid correlation")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepKind {
    /// Vary `alpha` with noise variance [`INLIER_VARIANCE`].
    AlphaInlier,
    /// Vary `alpha` with noise variance [`OUTLIER_VARIANCE`].
    AlphaOutlier,
    /// Vary the noise variance at a fixed `alpha`.
    Sigma,
}

impl SweepKind {
    pub fn parse(text: &str) -> Result<Self> {
        match text {
            "alpha-inlier" => Ok(Self::AlphaInlier),
            "alpha-outlier" => Ok(Self::AlphaOutlier),
            "sigma" => Ok(Self::Sigma),
            _ => Err(Error::InvalidParameter(format!(
                "unknown sweep kind {text:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub truth_samples: usize,
    pub data_samples: usize,
    /// `alpha` used by [`SweepKind::Sigma`].
    pub fixed_alpha: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            truth_samples: GROUND_TRUTH_SAMPLES,
            data_samples: DEFAULT_SAMPLES,
            fixed_alpha: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub alpha: f64,
    pub sigma2: f64,
    pub truth: MiEstimate,
    pub bound: f64,
    /// `(estimator label, estimate)`; NaN on failure.
    pub estimates: Vec<(String, f64)>,
}

pub fn noise_sweep(
    kind: SweepKind,
    grid: &[f64],
    estimators: &[SampleEstimator],
    config: &SweepConfig,
    seed: Seed,
) -> Result<Vec<SweepPoint>> {
    grid.par_iter()
        .enumerate()
        .map(|(i, &g)| {
            let (alpha, sigma2) = match kind {
                SweepKind::AlphaInlier => (g, INLIER_VARIANCE),
                SweepKind::AlphaOutlier => (g, OUTLIER_VARIANCE),
                SweepKind::Sigma => (config.fixed_alpha, g),
            };
            let dist = channel(alpha, sigma2)?;
            let truth = estimate_mi(
                &dist,
                seed.child("sweep_truth", i as u64),
                config.truth_samples,
            )?;
            let data = dist.sample(seed.child("sweep_data", i as u64), config.data_samples);
            let estimates = estimators
                .iter()
                .map(|e| (e.label(), e.estimate(&data).unwrap_or(f64::NAN)))
                .collect();
            Ok(SweepPoint {
                alpha,
                sigma2,
                truth,
                bound: channel_bound(alpha),
                estimates,
            })
        })
        .collect()
}
