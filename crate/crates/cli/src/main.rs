//! `safepath` command-line tool.

mod manifest;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use safepath::estimation::{
    em_fit_default, forward_backward, likelihood_ratio_test, mse_fit, test_log_likelihood, EmConfig, FitReport,
    MixtureWeightUpdate, ModelKind, DEFAULT_EXTRA_PARAMS,
};
use safepath::io::{self, EvalRow};
use safepath::planner::{self, ArousalModel, PlannerConfig, PlanningScenario};
use safepath::synth::{self, ScenarioConfig};

use manifest::{beside, Recorder};

#[derive(Parser, Debug)]
#[command(name = "safepath", version, about = "Arousal-aware path planning toolkit")]
struct Cli {
    /// Worker threads for data-parallel steps.
    #[arg(long, global = true, default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..))]
    threads: u16,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate synthetic fly-by sessions and observations.
    GenData(GenData),
    /// Fit the attention model by EM.
    Fit(Fit),
    /// Fit the least-squares baseline.
    FitMse(FitMse),
    /// Test-set log-likelihood of a fitted model.
    Eval(Eval),
    /// Likelihood-ratio comparison of a fitted model against the baseline.
    Compare(Compare),
    /// Plan one path.
    Plan(Plan),
    /// Plan over a list of arousal thresholds.
    SweepBa(SweepBa),
    /// Export posterior and prediction series for plotting.
    PlotData(PlotData),
}

#[derive(Args, Debug, Serialize)]
struct GenData {
    /// Fly-by events per subject.
    #[arg(long, default_value_t = 30)]
    events: usize,
    #[arg(long, default_value_t = 56)]
    subjects: usize,
    /// Fixed number of samples per subject instead of whole events.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long, default_value_t = 38.0 / 56.0)]
    train_fraction: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
enum WeightUpdate {
    Exact,
    Factorized,
}

#[derive(Args, Debug, Serialize)]
struct Fit {
    #[arg(long)]
    train: PathBuf,
    /// Mixture components of the distracted state.
    #[arg(long, default_value_t = 2)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 500)]
    max_iters: usize,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, value_enum, default_value_t = WeightUpdate::Exact)]
    weight_update: WeightUpdate,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct FitMse {
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct Eval {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    test: PathBuf,
    #[arg(long, default_value = "eval.csv")]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct Compare {
    #[arg(long)]
    proposed: PathBuf,
    #[arg(long)]
    baseline: PathBuf,
    #[arg(long)]
    test: PathBuf,
    /// Parameter-count difference between the models.
    #[arg(long, default_value_t = DEFAULT_EXTRA_PARAMS)]
    extra_params: usize,
    #[arg(long, default_value_t = 0.01)]
    alpha: f64,
    #[arg(long, default_value = "compare.json")]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct PlanOverrides {
    #[arg(long)]
    degree: Option<usize>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Optimizer starts.
    #[arg(long, default_value_t = 8)]
    starts: usize,
}

#[derive(Args, Debug, Serialize)]
struct Plan {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    model: PathBuf,
    #[arg(long = "b-a")]
    b_a: Option<f64>,
    #[command(flatten)]
    opts: PlanOverrides,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct SweepBa {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    model: PathBuf,
    /// Comma-separated thresholds.
    #[arg(long = "b-a", value_delimiter = ',', default_values_t = [0.4, 0.3, 0.2, 0.1])]
    b_a: Vec<f64>,
    #[command(flatten)]
    opts: PlanOverrides,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct PlotData {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads as usize).build_global() {
        eprintln!("error: thread pool: {e}");
        return ExitCode::from(1);
    }
    let (name, result) = match &cli.command {
        Command::GenData(a) => ("gen-data", gen_data(a)),
        Command::Fit(a) => ("fit", fit(a)),
        Command::FitMse(a) => ("fit-mse", fit_mse(a)),
        Command::Eval(a) => ("eval", eval(a)),
        Command::Compare(a) => ("compare", compare(a)),
        Command::Plan(a) => ("plan", plan(a)),
        Command::SweepBa(a) => ("sweep-ba", sweep_ba(a)),
        Command::PlotData(a) => ("plot-data", plot_data(a)),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {name}: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn create_parent(file: &Path) -> Result<()> {
    match file.parent() {
        Some(p) if !p.as_os_str().is_empty() => create_dir(p),
        _ => Ok(()),
    }
}

fn gen_data(a: &GenData) -> Result<()> {
    let mut rec = Recorder::new("gen-data", a, Some(a.seed));
    let config = ScenarioConfig { events: a.events, seed: a.seed, ..Default::default() };
    let (data, truth) = synth::generate(&config, a.subjects, a.samples, &synth::default_theta())
        .context("generating observations")?;
    let (train, test) = synth::split_dataset(&data, a.train_fraction, a.seed).context("splitting subjects")?;
    create_dir(&a.out)?;
    rec.outputs(io::write_dataset(&a.out.join("train"), &train)?);
    rec.outputs(io::write_dataset(&a.out.join("test"), &test)?);
    rec.outputs(io::write_ground_truth(&a.out.join("truth"), &truth)?);
    println!(
        "{} train and {} test sequences, {} samples",
        train.sequences.len(),
        test.sequences.len(),
        data.total_len()
    );
    rec.finish(&a.out.join("manifest.json"))?;
    Ok(())
}

fn fit(a: &Fit) -> Result<()> {
    let mut rec = Recorder::new("fit", a, Some(a.seed));
    rec.input(&a.train);
    let data = io::read_dataset(&a.train).context("reading training data")?;
    let config = EmConfig {
        max_iters: a.max_iters,
        rel_tol: a.tol,
        k: a.k,
        seed: a.seed,
        weight_update: match a.weight_update {
            WeightUpdate::Exact => MixtureWeightUpdate::ExactMarginal,
            WeightUpdate::Factorized => MixtureWeightUpdate::Factorized,
        },
    };
    let report = em_fit_default(&data, &config).context("running EM")?;
    create_parent(&a.out)?;
    io::write_json(&a.out, &report)?;
    rec.output(&a.out);
    println!(
        "log-likelihood {:.6} after {} iterations (converged: {})",
        report.final_log_likelihood(),
        report.iterations,
        report.converged
    );
    rec.finish(&beside(&a.out))?;
    Ok(())
}

fn fit_mse(a: &FitMse) -> Result<()> {
    let mut rec = Recorder::new("fit-mse", a, None);
    rec.input(&a.train);
    let data = io::read_dataset(&a.train).context("reading training data")?;
    let report = mse_fit(&data).and_then(|f| f.into_report(&data)).context("least squares")?;
    create_parent(&a.out)?;
    io::write_json(&a.out, &report)?;
    rec.output(&a.out);
    println!("log-likelihood {:.6}, sigma^2 {:.6}", report.final_log_likelihood(), report.theta_star.sigma_sq);
    rec.finish(&beside(&a.out))?;
    Ok(())
}

fn read_model(path: &Path) -> Result<FitReport> {
    io::read_json(path).with_context(|| format!("reading model {}", path.display()))
}

fn model_label(report: &FitReport) -> (String, usize) {
    match report.kind {
        ModelKind::Hmm => ("hmm".into(), report.theta_star.k()),
        ModelKind::Mse => ("mse".into(), 0),
    }
}

fn eval(a: &Eval) -> Result<()> {
    let mut rec = Recorder::new("eval", a, None);
    rec.input(&a.model);
    rec.input(&a.test);
    let report = read_model(&a.model)?;
    let test = io::read_dataset(&a.test).context("reading test data")?;
    let ll = test_log_likelihood(&report.theta_star, &test, &report.standardization).context("scoring test data")?;
    let (model, k) = model_label(&report);
    println!("test_log_likelihood {ll:.6}");
    create_parent(&a.out)?;
    io::write_csv(&a.out, [EvalRow { model, k, test_log_likelihood: ll }])?;
    rec.output(&a.out);
    rec.finish(&beside(&a.out))?;
    Ok(())
}

#[derive(Serialize)]
struct CompareReport {
    proposed_test_log_likelihood: f64,
    baseline_test_log_likelihood: f64,
    #[serde(flatten)]
    test: safepath::estimation::LikelihoodRatio,
}

fn compare(a: &Compare) -> Result<()> {
    let mut rec = Recorder::new("compare", a, None);
    for p in [&a.proposed, &a.baseline, &a.test] {
        rec.input(p);
    }
    let proposed = read_model(&a.proposed)?;
    let baseline = read_model(&a.baseline)?;
    if proposed.standardization != baseline.standardization {
        bail!("the two models were fitted with different feature standardizations");
    }
    let test = io::read_dataset(&a.test).context("reading test data")?;
    let ll_p = test_log_likelihood(&proposed.theta_star, &test, &proposed.standardization)?;
    let ll_b = test_log_likelihood(&baseline.theta_star, &test, &baseline.standardization)?;
    let lrt = likelihood_ratio_test(ll_p, ll_b, a.extra_params, a.alpha).context("likelihood-ratio test")?;
    println!(
        "lambda {:.3}, critical value {:.3} (r = {}, alpha = {}): {}",
        lrt.lambda,
        lrt.critical_value,
        lrt.extra_params,
        lrt.alpha,
        if lrt.reject_null { "baseline rejected" } else { "baseline not rejected" }
    );
    let out = CompareReport { proposed_test_log_likelihood: ll_p, baseline_test_log_likelihood: ll_b, test: lrt };
    create_parent(&a.out)?;
    io::write_json(&a.out, &out)?;
    rec.output(&a.out);
    rec.finish(&beside(&a.out))?;
    Ok(())
}

fn load_planning(
    scenario: &Path,
    model: &Path,
    opts: &PlanOverrides,
) -> Result<(PlanningScenario, ArousalModel, PlannerConfig)> {
    let mut sc: PlanningScenario =
        io::read_json(scenario).with_context(|| format!("reading scenario {}", scenario.display()))?;
    if let Some(d) = opts.degree {
        sc.degree = d;
    }
    if let Some(g) = opts.gamma {
        sc.gamma = g;
    }
    let model = ArousalModel::from_report(&read_model(model)?)?;
    let config = PlannerConfig { starts: opts.starts, seed: opts.seed, ..Default::default() };
    Ok((sc, model, config))
}

fn plan(a: &Plan) -> Result<()> {
    let mut rec = Recorder::new("plan", a, Some(a.opts.seed));
    rec.input(&a.scenario);
    rec.input(&a.model);
    let (mut sc, model, config) = load_planning(&a.scenario, &a.model, &a.opts)?;
    if let Some(b) = a.b_a {
        sc.b_a = b;
    }
    let result = planner::plan(&sc, &model, &config).context("planning")?;
    create_dir(&a.out)?;
    let plan_path = a.out.join("plan.json");
    io::write_json(&plan_path, &result)?;
    let path_csv = a.out.join("path.csv");
    io::write_csv(&path_csv, io::sample_path(&result.curve, sc.flight_altitude, planner::DISTANCE_SAMPLES))?;
    rec.output(&plan_path);
    rec.output(&path_csv);
    println!(
        "t_f {:.4} s, cost {:.4}, closest approach {:.4} m",
        result.curve.t_f(),
        result.cost,
        result.min_human_distance
    );
    rec.finish(&a.out.join("manifest.json"))?;
    Ok(())
}

fn sweep_ba(a: &SweepBa) -> Result<()> {
    let mut rec = Recorder::new("sweep-ba", a, Some(a.opts.seed));
    rec.input(&a.scenario);
    rec.input(&a.model);
    let (sc, model, config) = load_planning(&a.scenario, &a.model, &a.opts)?;
    let rows = planner::sweep_threshold(&sc, &model, &config, &a.b_a).context("planning sweep")?;
    create_dir(&a.out)?;
    for (row, result) in &rows {
        let p = a.out.join(format!("path_b{}.csv", row.b_a));
        io::write_csv(&p, io::sample_path(&result.curve, sc.flight_altitude, planner::DISTANCE_SAMPLES))?;
        rec.output(&p);
        println!("b_a {:<6} closest approach {:.4} m, t_f {:.4} s", row.b_a, row.min_human_distance, row.t_f);
    }
    let table = a.out.join("sweep.csv");
    io::write_csv(&table, rows.iter().map(|(r, _)| r))?;
    rec.output(&table);
    rec.finish(&a.out.join("manifest.json"))?;
    Ok(())
}

#[derive(Serialize)]
struct SeriesRow {
    t: f64,
    d: f64,
    arousal: f64,
    prediction: f64,
    p_attentive: f64,
}

#[derive(Serialize)]
struct TraceRow {
    iteration: usize,
    log_likelihood: f64,
}

fn plot_data(a: &PlotData) -> Result<()> {
    let mut rec = Recorder::new("plot-data", a, None);
    rec.input(&a.model);
    rec.input(&a.data);
    let report = read_model(&a.model)?;
    let data = io::read_dataset(&a.data).context("reading data")?;
    let theta = &report.theta_star;
    create_dir(&a.out)?;
    for seq in &data.sequences {
        let post = forward_backward(theta, seq, &report.standardization)
            .with_context(|| format!("posteriors of {}", seq.subject_id))?;
        let design = seq.design(&report.standardization)?;
        let rows = (0..seq.len()).map(|n| SeriesRow {
            t: seq.times[n],
            d: seq.features[n].d,
            arousal: seq.targets[n],
            prediction: theta.predict(&design[n]),
            p_attentive: post.gamma[n][0],
        });
        let p = a.out.join(format!("{}.csv", seq.subject_id));
        io::write_csv(&p, rows)?;
        rec.output(&p);
    }
    let trace = a.out.join("ll_trace.csv");
    io::write_csv(
        &trace,
        report.ll_trace.iter().enumerate().map(|(iteration, &log_likelihood)| TraceRow { iteration, log_likelihood }),
    )?;
    rec.output(&trace);
    rec.finish(&a.out.join("manifest.json"))?;
    Ok(())
}
