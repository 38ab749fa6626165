//! `pmiprof`: sample distributions, compute PMI profiles and MI estimates,
//! and run the benchmark suite. Every output is reproducible from `--seed`.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use output::{Format, UsageError};

#[derive(Debug, Parser)]
#[command(
    name = "pmiprof",
    version,
    about = "Pointwise mutual information profiles and mutual information estimation"
)]
pub struct Cli {
    /// Root seed for every random stream.
    #[arg(long, global = true, env = "PMIPROF_SEED", default_value_t = 42)]
    pub seed: u64,

    /// Worker threads; defaults to the available cores.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,

    /// Output file. Sidecars and the run manifest are written next to it;
    /// without it the main output goes to stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a paired sample from a distribution spec.
    Sample {
        #[arg(long)]
        dist: PathBuf,
        #[arg(long, default_value_t = 1000)]
        n: usize,
    },
    /// Evaluate the PMI of a spec at every row of a sample CSV.
    Pmi {
        #[arg(long)]
        dist: PathBuf,
        #[arg(long)]
        data: PathBuf,
    },
    /// Sample the PMI profile; writes a `value` column and a summary sidecar.
    Profile {
        #[arg(long)]
        dist: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        n: usize,
        /// Also write `<stem>.histogram.csv` over the default bins.
        #[arg(long)]
        histogram: bool,
    },
    /// Closed-form results.
    Analytic {
        #[command(subcommand)]
        command: AnalyticCommand,
    },
    /// Estimate MI from a sample CSV.
    Estimate(EstimateArgs),
    /// Benchmark registry, ground truths and estimator runs.
    Benchmark {
        #[command(subcommand)]
        command: BenchmarkCommand,
    },
    /// Gaussian mixture posterior over a sample; writes JSON.
    Bayes(BayesArgs),
    /// MI of the contaminated two-pair channel over a grid.
    NoiseSweep(SweepArgs),
}

#[derive(Debug, Subcommand)]
pub enum AnalyticCommand {
    /// MI of a Gaussian from canonical correlations or an mvn spec.
    GaussianMi {
        #[arg(long, value_delimiter = ',', required_unless_present = "dist")]
        rhos: Vec<f64>,
        #[arg(long, conflicts_with = "rhos")]
        dist: Option<PathBuf>,
    },
    /// Exact Gaussian profile sampler.
    GaussianProfile {
        #[arg(long, value_delimiter = ',', required = true)]
        rhos: Vec<f64>,
        #[arg(long, default_value_t = 100_000)]
        n: usize,
    },
    /// Smallest and largest profile variance of Gaussians with `m` correlations and the given MI.
    VarianceBounds {
        #[arg(long)]
        mi: f64,
        #[arg(long)]
        m: usize,
    },
    /// Atoms of the profile of a joint PMF given as a JSON matrix.
    DiscreteProfile {
        #[arg(long)]
        pmf: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// ksg, hist, cca, dv, nwj, infonce or mc.
    #[arg(long)]
    pub method: String,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    #[arg(long, default_value_t = 10)]
    pub bins: usize,
    /// `exact-pmi:<spec.json>`; required by dv, nwj, infonce and mc.
    #[arg(long)]
    pub critic: Option<String>,
    /// InfoNCE batch size; defaults to the whole sample.
    #[arg(long)]
    pub batch: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum BenchmarkCommand {
    /// List tasks; `--format json` emits a manifest that `--manifest` accepts.
    List {
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Include the extra tasks outside the core suite.
        #[arg(long)]
        all: bool,
    },
    /// Ground-truth MI of one task.
    GroundTruth {
        #[arg(long)]
        task: String,
        #[arg(long, default_value_t = pmiprof::benchmark::GROUND_TRUTH_SAMPLES)]
        n: usize,
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
    /// Estimator runs over tasks and seeds, with one summary row per cell.
    Run(RunArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Comma-separated task names, `all` (core suite) or `everything`.
    #[arg(long, default_value = "all")]
    pub tasks: String,
    #[arg(long, default_value = "ksg,hist,cca")]
    pub estimators: String,
    #[arg(long, default_value_t = pmiprof::benchmark::DEFAULT_SAMPLES)]
    pub n: usize,
    #[arg(long, default_value_t = pmiprof::benchmark::DEFAULT_SEEDS)]
    pub seeds: usize,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Profile samples for the ground-truth column; 0 skips it.
    #[arg(long, default_value_t = pmiprof::benchmark::GROUND_TRUTH_SAMPLES)]
    pub truth_samples: usize,
    /// Add a wall-time column (makes the output non-reproducible).
    #[arg(long)]
    pub timings: bool,
}

#[derive(Debug, Args)]
pub struct BayesArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    #[arg(long, default_value_t = 1000)]
    pub warmup: usize,
    #[arg(long, default_value_t = 1000)]
    pub draws: usize,
    #[arg(long, default_value_t = 1000)]
    pub mc_per_draw: usize,
    /// Independent chains; more than one adds split R-hat of the MI draws.
    #[arg(long, default_value_t = 1)]
    pub chains: usize,
    /// Fit the data as given instead of standardizing each column.
    #[arg(long)]
    pub raw: bool,
    /// Fraction of trailing rows held out of the fit and compared with the
    /// posterior predictive.
    #[arg(long, default_value_t = 0.0)]
    pub holdout: f64,
    /// Write `<stem>.ppc.csv` sampled from the last draw.
    #[arg(long)]
    pub ppc: bool,
    /// Rows of the predictive sample; defaults to the fitted sample size.
    #[arg(long)]
    pub ppc_n: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// alpha-inlier, alpha-outlier or sigma.
    #[arg(long)]
    pub kind: String,
    /// Grid values; defaults to alpha in 0..0.5 by 0.05, or sigma^2 in 2^-7..2^8.
    #[arg(long, value_delimiter = ',')]
    pub grid: Vec<f64>,
    #[arg(long, default_value = "ksg,hist,cca")]
    pub estimators: String,
    #[arg(long, default_value_t = pmiprof::benchmark::DEFAULT_SAMPLES)]
    pub n: usize,
    #[arg(long, default_value_t = pmiprof::benchmark::GROUND_TRUTH_SAMPLES)]
    pub truth_samples: usize,
    /// Contamination level of the sigma sweep.
    #[arg(long, default_value_t = 0.2)]
    pub alpha: f64,
}

fn exit_code(err: &anyhow::Error) -> (u8, &'static str) {
    if err.downcast_ref::<UsageError>().is_some() {
        return (2, "usage");
    }
    match err.downcast_ref::<pmiprof::Error>() {
        Some(pmiprof::Error::Spec(_) | pmiprof::Error::UnknownTask(_)) => (3, "spec"),
        Some(_) => (4, "numeric"),
        None if err.downcast_ref::<serde_json::Error>().is_some() => (3, "spec"),
        None => (1, "io"),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global()
        {
            log::warn!("could not size the thread pool: {e}");
        }
    }
    match commands::dispatch(cli, &argv[1..]) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let (code, kind) = exit_code(&err);
            let report = serde_json::json!({
                "error": kind,
                "message": format!("{err:#}"),
                "exit_code": code,
            });
            eprintln!("{report}");
            ExitCode::from(code)
        }
    }
}
