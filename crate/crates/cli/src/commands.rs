use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use serde::Serialize;

use pmiprof::analytic::{
    discrete_profile, gaussian_mi, profile_variance_bounds, sample_gaussian_profile,
};
use pmiprof::bayes::{
    coordinate_ks, fit_chains, mi_posterior, posterior_predictive, split_rhat, ChainConfig,
    GmmPrior, MiPosterior, PosteriorDraw,
};
use pmiprof::benchmark::{
    find_task, ground_truth, load_manifest, noise_sweep, register_builtin_tasks, run, summarize,
    truth_seed, BenchmarkTask, RunConfig, SweepConfig, SweepKind,
};
use pmiprof::distributions::MultivariateNormal;
use pmiprof::estimators::{
    dv_bound, infonce_bound, mc_oracle, nwj_bound, preprocess, Critic, ExactPmiCritic,
    PerturbedCritic, SampleEstimator,
};
use pmiprof::profile::{default_bin_edges, histogram, mi_mc, sample_profile};
use pmiprof::spec::DistSpec;
use pmiprof::{JointDistribution, JointDistributionExt, MiEstimate, PairedSample, Seed};

use crate::output::{json_bytes, read_sample, sample_table, Cell, Output, Table, UsageError};
use crate::{
    AnalyticCommand, BayesArgs, BenchmarkCommand, Cli, Command, EstimateArgs, RunArgs, SweepArgs,
};

fn load_spec(path: &Path) -> Result<Arc<dyn JointDistribution>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let spec = DistSpec::from_json(&text).with_context(|| format!("in {}", path.display()))?;
    spec.build()
        .with_context(|| format!("building {}", path.display()))
}

fn load_tasks(manifest: Option<&Path>) -> Result<Vec<BenchmarkTask>> {
    match manifest {
        None => Ok(register_builtin_tasks()),
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            Ok(load_manifest(&text).with_context(|| format!("in {}", p.display()))?)
        }
    }
}

fn parse_estimators(list: &str) -> Result<Vec<SampleEstimator>> {
    list.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| SampleEstimator::parse(s.trim()).map_err(|e| UsageError(e.to_string()).into()))
        .collect()
}

fn estimate_row(est: &MiEstimate) -> Vec<Cell> {
    vec![est.value.into(), est.stderr.into(), est.n.into()]
}

pub fn dispatch(cli: Cli, argv: &[String]) -> Result<()> {
    let seed = Seed(cli.seed);
    let format = cli.format;
    let mut out = Output::new(cli.out.clone());
    match cli.command {
        Command::Sample { dist, n } => {
            let dist = load_spec(&dist)?;
            out.write(sample_table(&dist.sample(seed, n)).render(format)?)?;
        }
        Command::Pmi { dist, data } => {
            let dist = load_spec(&dist)?;
            let sample = read_sample(&data)?;
            let mut table = Table::new(["pmi"]);
            for i in 0..sample.len() {
                table.push(vec![pmiprof::profile::pmi(
                    dist.as_ref(),
                    sample.x(i),
                    sample.y(i),
                )?
                .into()]);
            }
            out.write(table.render(format)?)?;
        }
        Command::Profile {
            dist,
            n,
            histogram: with_hist,
        } => {
            let dist = load_spec(&dist)?;
            let batch = sample_profile(dist.as_ref(), seed, n)?;
            let mut table = Table::new(["value"]);
            for &v in batch.values() {
                table.push(vec![v.into()]);
            }
            out.write(table.render(format)?)?;
            if out.is_file() {
                let est = mi_mc(&batch)?;
                #[derive(Serialize)]
                struct Summary {
                    n: usize,
                    mean: f64,
                    stderr: f64,
                    variance: f64,
                }
                let summary = Summary {
                    n,
                    mean: est.value,
                    stderr: est.stderr,
                    variance: batch.variance(),
                };
                out.sidecar("summary.json", json_bytes(&summary)?)?;
            }
            if with_hist {
                let hist = histogram(batch.values(), &default_bin_edges(batch.values()))?;
                let mut table = Table::new(["left_edge", "right_edge", "prob", "stderr"]);
                for (b, p) in hist.bin_probs.iter().enumerate() {
                    table.push(vec![
                        hist.bin_edges[b].into(),
                        hist.bin_edges[b + 1].into(),
                        (*p).into(),
                        hist.per_bin_stderr[b].into(),
                    ]);
                }
                out.sidecar("histogram.csv", table.render(crate::output::Format::Csv)?)?;
            }
        }
        Command::Analytic { command } => analytic(command, seed, format, &mut out)?,
        Command::Estimate(args) => estimate(args, seed, format, &mut out)?,
        Command::Benchmark { command } => benchmark(command, seed, format, &mut out)?,
        Command::Bayes(args) => bayes(args, seed, &mut out)?,
        Command::NoiseSweep(args) => sweep(args, seed, format, &mut out)?,
    }
    out.finish(argv, cli.seed)
}

fn analytic(
    command: AnalyticCommand,
    seed: Seed,
    format: crate::output::Format,
    out: &mut Output,
) -> Result<()> {
    use crate::output::Format;
    match command {
        AnalyticCommand::GaussianMi { rhos, dist } => {
            let mi = match dist {
                Some(path) => {
                    let text = fs::read_to_string(&path)
                        .with_context(|| format!("reading {}", path.display()))?;
                    let DistSpec::Mvn { mean, cov, split } = DistSpec::from_json(&text)? else {
                        bail!(pmiprof::Error::Spec(format!(
                            "{} is not an mvn spec",
                            path.display()
                        )));
                    };
                    let cov = pmiprof::linalg::to_dmatrix(&cov)?;
                    let mean = mean.unwrap_or_else(|| vec![0.0; cov.nrows()]);
                    let mvn = MultivariateNormal::new(mean, cov, split[0], split[1])
                        .map_err(|e| pmiprof::Error::Spec(e.to_string()))?;
                    mvn.canonical_correlations()?.mutual_information()
                }
                None => gaussian_mi(&rhos)?,
            };
            match format {
                Format::Csv => out.write(format!("{mi:.4}\n").into_bytes())?,
                Format::Json => out.write(json_bytes(&serde_json::json!({ "mi": mi }))?)?,
            }
        }
        AnalyticCommand::GaussianProfile { rhos, n } => {
            let batch = sample_gaussian_profile(&rhos, seed, n)?;
            let mut table = Table::new(["value"]);
            for &v in batch.values() {
                table.push(vec![v.into()]);
            }
            out.write(table.render(format)?)?;
        }
        AnalyticCommand::VarianceBounds { mi, m } => {
            let (lo, hi) = profile_variance_bounds(mi, m)?;
            let mut table = Table::new(["v_min", "v_max"]);
            table.push(vec![lo.into(), hi.into()]);
            out.write(table.render(format)?)?;
        }
        AnalyticCommand::DiscreteProfile { pmf } => {
            let text =
                fs::read_to_string(&pmf).with_context(|| format!("reading {}", pmf.display()))?;
            let matrix: Vec<Vec<f64>> = serde_json::from_str(&text)
                .map_err(|e| pmiprof::Error::Spec(format!("{}: {e}", pmf.display())))?;
            let profile = discrete_profile(&matrix)?;
            let mut table = Table::new(["pmi", "prob"]);
            for &(v, p) in &profile.atoms {
                table.push(vec![v.into(), p.into()]);
            }
            out.write(table.render(format)?)?;
        }
    }
    Ok(())
}

fn exact_critic(spec: Option<&str>, sample: &PairedSample) -> Result<ExactPmiCritic> {
    let Some(spec) = spec else {
        bail!(UsageError(
            "this method needs --critic exact-pmi:<spec.json>".into()
        ));
    };
    let Some(path) = spec.strip_prefix("exact-pmi:") else {
        bail!(UsageError(format!(
            "unknown critic {spec:?}; expected exact-pmi:<spec.json>"
        )));
    };
    let dist = load_spec(Path::new(path))?;
    if (dist.dim_x(), dist.dim_y()) != (sample.dim_x(), sample.dim_y()) {
        bail!(pmiprof::Error::Spec(format!(
            "critic spec is {}x{} but the data is {}x{}",
            dist.dim_x(),
            dist.dim_y(),
            sample.dim_x(),
            sample.dim_y()
        )));
    }
    Ok(ExactPmiCritic::new(dist))
}

fn estimate(
    args: EstimateArgs,
    seed: Seed,
    format: crate::output::Format,
    out: &mut Output,
) -> Result<()> {
    let sample = read_sample(&args.data)?;
    let method = args.method.to_ascii_lowercase();
    let mut table = Table::new(["method", "estimate", "stderr"]);
    let classical = match method.as_str() {
        "ksg" => Some(SampleEstimator::Ksg { k: args.k }),
        "hist" | "histogram" => Some(SampleEstimator::Histogram { bins: args.bins }),
        "cca" => Some(SampleEstimator::Cca),
        _ => None,
    };
    if let Some(est) = classical {
        table.push(vec![
            est.label().into(),
            est.estimate(&sample)?.into(),
            Cell::Empty,
        ]);
    } else {
        let critic = || exact_critic(args.critic.as_deref(), &sample);
        let (value, stderr) = match method.as_str() {
            "dv" => (dv_bound(&sample, &critic()?, seed)?, None),
            // The NWJ optimum is PMI + 1.
            "nwj" => (
                nwj_bound(&sample, &PerturbedCritic::shifted(critic()?, 1.0), seed)?,
                None,
            ),
            "infonce" => (
                infonce_bound(&sample, &critic()? as &dyn Critic, args.batch)?,
                None,
            ),
            "mc" => {
                let est = mc_oracle(&sample, &critic()?)?;
                (est.value, Some(est.stderr))
            }
            other => bail!(UsageError(format!(
                "unknown method {other:?}; expected ksg, hist, cca, dv, nwj, infonce or mc"
            ))),
        };
        table.push(vec![method.as_str().into(), value.into(), stderr.into()]);
    }
    out.write(table.render(format)?)
}

fn benchmark(
    command: BenchmarkCommand,
    seed: Seed,
    format: crate::output::Format,
    out: &mut Output,
) -> Result<()> {
    use crate::output::Format;
    match command {
        BenchmarkCommand::List { manifest, all } => {
            let tasks: Vec<BenchmarkTask> = load_tasks(manifest.as_deref())?
                .into_iter()
                .filter(|t| all || manifest.is_some() || t.core)
                .collect();
            match format {
                Format::Json => out.write(json_bytes(&tasks)?)?,
                Format::Csv => {
                    let mut table = Table::new([
                        "task",
                        "dim_x",
                        "dim_y",
                        "reference",
                        "truth",
                        "core",
                        "flags",
                    ]);
                    for t in &tasks {
                        let mut flags = Vec::new();
                        if t.mi_first_moment_caveat {
                            flags.push("mi_first_moment_caveat");
                        }
                        if t.external_definition {
                            flags.push("external_definition");
                        }
                        let truth = serde_json::to_value(t.truth)?
                            .as_str()
                            .unwrap_or_default()
                            .to_string();
                        table.push(vec![
                            t.name.clone().into(),
                            t.dim_x.into(),
                            t.dim_y.into(),
                            t.reference.into(),
                            truth.into(),
                            (if t.core { "true" } else { "false" }).into(),
                            flags.join(";").into(),
                        ]);
                    }
                    out.write(table.render(Format::Csv)?)?;
                }
            }
        }
        BenchmarkCommand::GroundTruth { task, n, manifest } => {
            let tasks = load_tasks(manifest.as_deref())?;
            let task = find_task(&tasks, &task)?;
            let est = ground_truth(task, n, truth_seed(seed, &task.name))?;
            let mut table = Table::new(["task", "mi", "stderr", "n"]);
            let mut row = vec![task.name.clone().into()];
            row.extend(estimate_row(&est));
            table.push(row);
            out.write(table.render(format)?)?;
        }
        BenchmarkCommand::Run(args) => benchmark_run(args, seed, format, out)?,
    }
    Ok(())
}

fn select_tasks(
    all: Vec<BenchmarkTask>,
    names: &str,
    from_manifest: bool,
) -> Result<Vec<BenchmarkTask>> {
    match names.trim() {
        "everything" => Ok(all),
        "all" if from_manifest => Ok(all),
        "all" => Ok(all.into_iter().filter(|t| t.core).collect()),
        list => list
            .split(',')
            .map(|name| Ok(find_task(&all, name.trim())?.clone()))
            .collect(),
    }
}

fn benchmark_run(
    args: RunArgs,
    seed: Seed,
    format: crate::output::Format,
    out: &mut Output,
) -> Result<()> {
    use crate::output::Format;
    let tasks = select_tasks(
        load_tasks(args.manifest.as_deref())?,
        &args.tasks,
        args.manifest.is_some(),
    )?;
    let estimators = parse_estimators(&args.estimators)?;
    let config = RunConfig {
        n: args.n,
        seeds: args.seeds,
        root_seed: seed,
    };
    let results = run(&tasks, &estimators, &config)?;
    let mut truths = HashMap::new();
    if args.truth_samples > 0 {
        for t in &tasks {
            truths.insert(
                t.name.clone(),
                ground_truth(t, args.truth_samples, truth_seed(seed, &t.name))?,
            );
        }
    }
    let summary = summarize(&results, &truths);
    if format == Format::Json {
        #[derive(Serialize)]
        struct Report<'a> {
            config: RunConfig,
            results: &'a [pmiprof::benchmark::RunResult],
            summary: &'a [pmiprof::benchmark::SummaryRow],
        }
        let mut results = results.clone();
        if !args.timings {
            results.iter_mut().for_each(|r| r.wall_time = 0.0);
        }
        return out.write(json_bytes(&Report {
            config,
            results: &results,
            summary: &summary,
        })?);
    }
    let mut header = vec![
        "task",
        "estimator",
        "row",
        "estimate",
        "std",
        "ground_truth",
        "ground_truth_stderr",
        "failures",
    ];
    if args.timings {
        header.push("wall_time");
    }
    let mut table = Table::new(header);
    for s in &summary {
        for r in results
            .iter()
            .filter(|r| r.task == s.task && r.estimator == s.estimator)
        {
            let mut row = vec![
                r.task.clone().into(),
                r.estimator.clone().into(),
                format!("seed{}", r.seed_index).into(),
                r.estimate.into(),
                Cell::Empty,
                Cell::Empty,
                Cell::Empty,
                Cell::Empty,
            ];
            if args.timings {
                row.push(r.wall_time.into());
            }
            table.push(row);
        }
        let mut row = vec![
            s.task.clone().into(),
            s.estimator.clone().into(),
            "summary".into(),
            s.mean.into(),
            s.std.into(),
            s.ground_truth.map(|g| g.value).into(),
            s.ground_truth.map(|g| g.stderr).into(),
            s.failures.into(),
        ];
        if args.timings {
            row.push(Cell::Empty);
        }
        table.push(row);
    }
    out.write(table.render(Format::Csv)?)
}

#[derive(Serialize)]
struct BayesReport {
    prior: GmmPrior,
    warmup: usize,
    standardized: bool,
    fitted_rows: usize,
    held_out_rows: usize,
    mc_per_draw: usize,
    mi: MiPosterior,
    rhat: Option<f64>,
    held_out_ks: Option<Vec<f64>>,
    draws: Vec<PosteriorDraw>,
}

fn bayes(args: BayesArgs, seed: Seed, out: &mut Output) -> Result<()> {
    if !(0.0..1.0).contains(&args.holdout) {
        bail!(UsageError(format!(
            "--holdout must be in [0, 1), got {}",
            args.holdout
        )));
    }
    let data = read_sample(&args.data)?;
    let data = if args.raw { data } else { preprocess(&data)? };
    let fit_rows = ((1.0 - args.holdout) * data.len() as f64).floor() as usize;
    let (fit, held_out) = (data.slice(0..fit_rows), data.slice(fit_rows..data.len()));
    let prior = GmmPrior::new(args.k);
    let config = ChainConfig {
        warmup: args.warmup,
        draws: args.draws,
        seed,
    };
    let chains = fit_chains(&fit, &prior, &config, args.chains.max(1))?;
    let mut mi_chains = Vec::with_capacity(chains.len());
    for (c, draws) in chains.iter().enumerate() {
        mi_chains.push(mi_posterior(
            draws,
            args.mc_per_draw,
            seed.child("mi_chain", c as u64),
        )?);
    }
    let rhat = if chains.len() > 1 {
        let values: Vec<Vec<f64>> = mi_chains.iter().map(|m| m.draws.clone()).collect();
        Some(split_rhat(&values)?)
    } else {
        None
    };
    let draws: Vec<PosteriorDraw> = chains.into_iter().flatten().collect();
    let mi = if mi_chains.len() == 1 {
        mi_chains.pop().expect("one chain")
    } else {
        let all: Vec<f64> = mi_chains
            .iter()
            .flat_map(|m| m.draws.iter().copied())
            .collect();
        MiPosterior {
            summary: pmiprof::bayes::summarize(&all),
            stderrs: mi_chains
                .iter()
                .flat_map(|m| m.stderrs.iter().copied())
                .collect(),
            draws: all,
        }
    };
    let last = draws
        .last()
        .context("no posterior draws; use --draws >= 1")?;
    let predictive =
        posterior_predictive(last, args.ppc_n.unwrap_or(fit.len()), seed.child("ppc", 0))?;
    let held_out_ks = if held_out.is_empty() || predictive.is_empty() {
        None
    } else {
        Some(coordinate_ks(&held_out, &predictive)?)
    };
    let report = BayesReport {
        prior,
        warmup: args.warmup,
        standardized: !args.raw,
        fitted_rows: fit.len(),
        held_out_rows: held_out.len(),
        mc_per_draw: args.mc_per_draw,
        mi,
        rhat,
        held_out_ks,
        draws,
    };
    out.write(json_bytes(&report)?)?;
    if args.ppc {
        out.sidecar(
            "ppc.csv",
            sample_table(&predictive).render(crate::output::Format::Csv)?,
        )?;
    }
    Ok(())
}

fn sweep(
    args: SweepArgs,
    seed: Seed,
    format: crate::output::Format,
    out: &mut Output,
) -> Result<()> {
    let kind = SweepKind::parse(&args.kind).map_err(|e| UsageError(e.to_string()))?;
    let grid = if !args.grid.is_empty() {
        args.grid.clone()
    } else if kind == SweepKind::Sigma {
        (-7..=8).map(|e| 2f64.powi(e)).collect()
    } else {
        (0..=10).map(|i| i as f64 * 0.05).collect()
    };
    let estimators = parse_estimators(&args.estimators)?;
    let config = SweepConfig {
        truth_samples: args.truth_samples,
        data_samples: args.n,
        fixed_alpha: args.alpha,
    };
    let points = noise_sweep(kind, &grid, &estimators, &config, seed)?;
    let mut header = vec![
        "alpha".to_string(),
        "sigma2".into(),
        "truth".into(),
        "truth_stderr".into(),
        "bound".into(),
    ];
    header.extend(estimators.iter().map(SampleEstimator::label));
    let mut table = Table::new(header);
    for p in &points {
        let mut row: Vec<Cell> = vec![
            p.alpha.into(),
            p.sigma2.into(),
            p.truth.value.into(),
            p.truth.stderr.into(),
            p.bound.into(),
        ];
        row.extend(p.estimates.iter().map(|(_, v)| Cell::Num(*v)));
        table.push(row);
    }
    out.write(table.render(format)?)
}
