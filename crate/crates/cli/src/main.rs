use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;
use serde_json::json;

use wdruc::data::six_bus;
use wdruc::experiments::{
    generate_samples, generate_scenarios, run_comparison, solve_model, ExperimentConfig, ModelKind, SolvedModel,
};
use wdruc::robust::CcgConfig;
use wdruc::system::{load_forecast, load_system};
use wdruc::wasserstein::{read_samples_csv, write_samples, write_samples_csv, SampleSet, WassersteinConfig};
use wdruc::{BackendKind, SolveParams, Solver, UcInstance};

/// Unit commitment under forecast-error uncertainty: deterministic,
/// stochastic, robust and Wasserstein distributionally robust models.
#[derive(Parser, Debug)]
#[command(name = "wdruc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a model comparison described by a TOML or JSON config.
    Run(RunArgs),
    /// Solve one model on a sample file and write the solution as JSON.
    Solve(SolveArgs),
    /// Evaluate a stored solution on scenarios with exact recourse.
    Eval(EvalArgs),
    /// Draw forecast-error samples and write them as CSV.
    GenSamples(GenArgs),
}

#[derive(Args, Debug, Clone)]
struct DataArgs {
    /// System JSON; the bundled 6-bus system when omitted.
    #[arg(long, requires = "forecast")]
    system: Option<PathBuf>,
    /// Forecast CSV for `--system`.
    #[arg(long, requires = "system")]
    forecast: Option<PathBuf>,
}

impl DataArgs {
    fn instance(&self) -> Result<UcInstance> {
        match (&self.system, &self.forecast) {
            (Some(s), Some(f)) => {
                let system = load_system(s)?;
                let forecast = load_forecast(&system, f)?;
                Ok(UcInstance::new(system, forecast)?)
            }
            _ => Ok(six_bus()),
        }
    }
}

#[derive(Args, Debug, Clone)]
struct SolverArgs {
    /// LP/MILP backend.
    #[arg(long)]
    backend: Option<BackendKind>,
    /// Relative MIP gap.
    #[arg(long)]
    mip_gap: Option<f64>,
    /// Seconds per MILP solve.
    #[arg(long)]
    time_limit: Option<f64>,
    /// Relative gap of the C&CG loops.
    #[arg(long)]
    ccg_gap: Option<f64>,
    /// Iteration cap of the C&CG and cutting-plane loops.
    #[arg(long)]
    ccg_max_iter: Option<usize>,
}

impl SolverArgs {
    fn solver(&self) -> Solver {
        let mut params = SolveParams::default();
        if let Some(g) = self.mip_gap {
            params.mip_gap = g;
        }
        params.time_limit = self.time_limit;
        Solver::new(self.backend.unwrap_or_default(), params)
    }

    fn ccg(&self) -> CcgConfig {
        let mut c = CcgConfig {
            max_iter: wdruc::affine::DEFAULT_MAX_ITER,
            ..CcgConfig::default()
        };
        if let Some(g) = self.ccg_gap {
            c.gap = g;
        }
        if let Some(n) = self.ccg_max_iter {
            c.max_iter = n;
        }
        c
    }
}

#[derive(Args, Debug)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the config.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Run a single seed instead of the configured list.
    #[arg(long, conflicts_with = "full")]
    seed: Option<u64>,
    /// Full run: 50 seeds.
    #[arg(long)]
    full: bool,
    /// Fixed radius; skips the holdout selection.
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[arg(long)]
    model: ModelKind,
    /// Wasserstein radius (MW).
    #[arg(long, default_value_t = 0.0)]
    epsilon: f64,
    #[arg(long, default_value_t = 100.0)]
    beta: f64,
    /// Training samples CSV (`scenario_id,reg_unit_id,period,error_mw`).
    #[arg(long)]
    samples: PathBuf,
    /// Solution JSON path; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args, Debug)]
struct EvalArgs {
    /// Solution JSON written by `solve` or `run`.
    #[arg(long)]
    solution: PathBuf,
    /// Scenario CSV in the samples layout.
    #[arg(long)]
    scenarios: PathBuf,
    /// Also list the cost of every scenario.
    #[arg(long)]
    per_scenario: bool,
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long, default_value_t = 100)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Error standard deviation as a fraction of the forecast.
    #[arg(long, default_value_t = 0.2)]
    sigma_ratio: f64,
    /// Draw evaluation scenarios (untruncated, separate stream) instead of
    /// training samples truncated to W.
    #[arg(long)]
    evaluation: bool,
    /// CSV path; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    #[command(flatten)]
    data: DataArgs,
}

fn write_json(path: Option<&Path>, value: &serde_json::Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match path {
        Some(p) => fs::write(p, text + "\n").with_context(|| format!("writing {}", p.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn run(args: RunArgs) -> Result<()> {
    let mut cfg = ExperimentConfig::from_path(&args.config)?;
    if args.full {
        cfg.seeds = (0..50).collect();
    }
    if let Some(s) = args.seed {
        cfg.seeds = vec![s];
    }
    if args.epsilon.is_some() {
        cfg.epsilon = args.epsilon;
    }
    if let Some(b) = args.beta {
        cfg.beta = b;
    }
    let s = &args.solver;
    if let Some(b) = s.backend {
        cfg.solver.backend = b;
    }
    if let Some(g) = s.mip_gap {
        cfg.solver.mip_gap = g;
    }
    if s.time_limit.is_some() {
        cfg.solver.time_limit = s.time_limit;
    }
    if let Some(g) = s.ccg_gap {
        cfg.ccg.gap = g;
    }
    if let Some(n) = s.ccg_max_iter {
        cfg.ccg.max_iter = n;
    }
    cfg.validate()?;
    let out = args
        .output
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("results"));

    info!("running {} seeds, sample sizes {:?}", cfg.seeds.len(), cfg.sample_sizes);
    let report = run_comparison(&cfg, &cfg.solver.build())?;
    report.write(&out, &cfg)?;

    println!(
        "{:<8} {:>6} {:>5} {:>14} {:>14} {:>14} {:>14} {:>9}",
        "model", "S", "runs", "objective", "eval_mean", "eval_p25", "eval_p75", "solve_s"
    );
    for a in &report.aggregates {
        println!(
            "{:<8} {:>6} {:>5} {:>14.2} {:>14.2} {:>14.2} {:>14.2} {:>9.3}",
            a.model.to_string(),
            a.samples,
            a.runs,
            a.mean_objective,
            a.mean_eval_cost,
            a.p25_eval_cost,
            a.p75_eval_cost,
            a.mean_solve_secs
        );
    }
    let failures: usize = report.aggregates.iter().map(|a| a.failures).sum();
    if failures > 0 {
        eprintln!("{failures} cell(s) failed; see the error column of report.csv");
    }
    println!("results written to {}", out.display());
    Ok(())
}

fn solve(args: SolveArgs) -> Result<()> {
    let inst = args.data.instance()?;
    let raw = read_samples_csv(&inst.system, &args.samples)?;
    let samples = SampleSet::new(raw, &inst.w_box, 1e-6)?;
    let wcfg = WassersteinConfig::new(args.epsilon, args.beta).map_err(anyhow::Error::msg)?;
    let solved = solve_model(args.model, &inst, &samples, &wcfg, &args.solver.ccg(), &args.solver.solver())?;
    if solved.certified == Some(false) {
        log::warn!("solution is not certified; the iteration limit was reached");
    }
    eprintln!(
        "{}: objective {:.4}, {} rows x {} cols, {} iteration(s), {:.3}s",
        solved.model,
        solved.objective,
        solved.rows,
        solved.cols,
        solved.iterations,
        solved.wall_time.as_secs_f64()
    );
    write_json(args.output.as_deref(), &serde_json::to_value(&solved)?)
}

fn eval(args: EvalArgs) -> Result<()> {
    let inst = args.data.instance()?;
    let text = fs::read_to_string(&args.solution).with_context(|| format!("reading {}", args.solution.display()))?;
    let solved: SolvedModel = serde_json::from_str(&text).context("parsing solution JSON")?;
    if solved.schedule.on.len() != inst.num_gens() || solved.range.horizon() != inst.horizon() {
        bail!("solution does not match the system (generators or horizon differ)");
    }
    let scenarios = read_samples_csv(&inst.system, &args.scenarios)?;
    let ev = solved.evaluate(&inst, &scenarios, &args.solver.solver())?;
    let mut out = json!({
        "model": solved.model,
        "scenarios": scenarios.len(),
        "mean_cost": ev.mean_cost,
        "infeasible": ev.infeasible,
    });
    if args.per_scenario {
        out["costs"] = json!(ev.costs);
    }
    write_json(None, &out)
}

fn gen_samples(args: GenArgs) -> Result<()> {
    if args.sigma_ratio < 0.0 {
        bail!("--sigma-ratio must be >= 0");
    }
    let inst = args.data.instance()?;
    let data = if args.evaluation {
        generate_scenarios(&inst.forecast, args.sigma_ratio, args.count, args.seed)
    } else {
        generate_samples(&inst.forecast, args.sigma_ratio, args.count, args.seed, &inst.w_box)?.into_inner()
    };
    match &args.output {
        Some(p) => write_samples_csv(&inst.system, &data, p)?,
        None => write_samples(&inst.system, &data, std::io::stdout().lock())?,
    }
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Run(a) => run(a),
        Command::Solve(a) => solve(a),
        Command::Eval(a) => eval(a),
        Command::GenSamples(a) => gen_samples(a),
    }
}
