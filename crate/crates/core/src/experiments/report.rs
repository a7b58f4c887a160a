use std::fs;
use std::path::Path;
use std::time::Instant;

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::statistics::{Data, OrderStatistics};

use super::{
    generate_samples, generate_scenarios, select_epsilon_holdout, solve_model, ExperimentConfig, ExperimentError,
    HoldoutRow, ModelKind, SolvedModel,
};
use crate::instance::UcInstance;
use crate::solver::Solver;
use crate::wasserstein::WassersteinConfig;

/// Column order of `report.csv`.
pub const REPORT_COLUMNS: [&str; 15] = [
    "model",
    "samples",
    "seed",
    "epsilon",
    "objective",
    "eval_mean_cost",
    "eval_infeasible",
    "eval_scenarios",
    "rows",
    "cols",
    "base_rows",
    "base_cols",
    "iterations",
    "certified",
    "error",
];

/// Column order of `timings.csv`.
pub const TIMING_COLUMNS: [&str; 5] = ["model", "samples", "seed", "solve_secs", "eval_secs"];

/// One (model, sample size, seed) cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub model: ModelKind,
    pub samples: usize,
    pub seed: u64,
    pub epsilon: Option<f64>,
    pub objective: Option<f64>,
    pub eval_mean_cost: Option<f64>,
    pub eval_infeasible: Option<usize>,
    pub eval_scenarios: usize,
    pub rows: Option<usize>,
    pub cols: Option<usize>,
    /// Size before cut generation, see [`SolvedModel::base_size`].
    pub base_rows: Option<usize>,
    pub base_cols: Option<usize>,
    pub iterations: Option<usize>,
    pub certified: Option<bool>,
    pub error: Option<String>,
    pub solve_secs: f64,
    pub eval_secs: f64,
}

impl ReportRow {
    fn failed(model: ModelKind, samples: usize, seed: u64, epsilon: Option<f64>, error: String) -> Self {
        ReportRow {
            model,
            samples,
            seed,
            epsilon,
            objective: None,
            eval_mean_cost: None,
            eval_infeasible: None,
            eval_scenarios: 0,
            rows: None,
            cols: None,
            base_rows: None,
            base_cols: None,
            iterations: None,
            certified: None,
            error: Some(error),
            solve_secs: 0.0,
            eval_secs: 0.0,
        }
    }

    fn record(&self) -> Vec<String> {
        fn opt<T: ToString>(v: &Option<T>) -> String {
            v.as_ref().map_or_else(String::new, T::to_string)
        }
        vec![
            self.model.to_string(),
            self.samples.to_string(),
            self.seed.to_string(),
            opt(&self.epsilon),
            opt(&self.objective),
            opt(&self.eval_mean_cost),
            opt(&self.eval_infeasible),
            self.eval_scenarios.to_string(),
            opt(&self.rows),
            opt(&self.cols),
            opt(&self.base_rows),
            opt(&self.base_cols),
            opt(&self.iterations),
            opt(&self.certified),
            opt(&self.error),
        ]
    }
}

/// Statistics over seeds for one (model, sample size).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub model: ModelKind,
    pub samples: usize,
    /// Seeds with a successful solve and evaluation.
    pub runs: usize,
    pub failures: usize,
    pub mean_objective: f64,
    pub mean_eval_cost: f64,
    pub p25_eval_cost: f64,
    pub p75_eval_cost: f64,
    pub mean_solve_secs: f64,
    pub base_rows: Option<usize>,
    pub base_cols: Option<usize>,
}

/// Selected radius per (sample size, seed).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HoldoutRecord {
    pub samples: usize,
    pub seed: u64,
    pub epsilon: Option<f64>,
    pub rows: Vec<HoldoutRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    /// Sorted by model, sample size, seed.
    pub rows: Vec<ReportRow>,
    pub aggregates: Vec<Aggregate>,
    pub holdout: Vec<HoldoutRecord>,
    /// Stored solutions, keyed like `rows` (absent for failed cells).
    #[serde(skip)]
    pub solutions: Vec<Option<SolvedModel>>,
}

/// Quantile `p ∈ [0, 1]` with the median-unbiased interpolation; NaN for
/// an empty slice.
pub fn percentile(values: &[f64], p: f64) -> f64 {
    Data::new(values.to_vec()).quantile(p)
}

fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        f64::NAN
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

pub(crate) fn aggregate(rows: &[ReportRow]) -> Vec<Aggregate> {
    let mut keys: Vec<(ModelKind, usize)> = rows.iter().map(|r| (r.model, r.samples)).collect();
    keys.sort();
    keys.dedup();
    keys.into_iter()
        .map(|(model, samples)| {
            let cell: Vec<&ReportRow> = rows.iter().filter(|r| r.model == model && r.samples == samples).collect();
            let ok: Vec<&ReportRow> = cell
                .iter()
                .copied()
                .filter(|r| r.error.is_none() && r.eval_mean_cost.is_some_and(f64::is_finite))
                .collect();
            let objectives: Vec<f64> = ok.iter().filter_map(|r| r.objective).collect();
            let costs: Vec<f64> = ok.iter().filter_map(|r| r.eval_mean_cost).collect();
            let secs: Vec<f64> = ok.iter().map(|r| r.solve_secs).collect();
            // Base size is reported only when it does not vary across seeds.
            let same = |f: fn(&ReportRow) -> Option<usize>| {
                let first = ok.first().and_then(|r| f(r));
                ok.iter().all(|r| f(r) == first).then_some(first).flatten()
            };
            Aggregate {
                model,
                samples,
                runs: ok.len(),
                failures: cell.len() - ok.len(),
                mean_objective: mean(&objectives),
                mean_eval_cost: mean(&costs),
                p25_eval_cost: percentile(&costs, 0.25),
                p75_eval_cost: percentile(&costs, 0.75),
                mean_solve_secs: mean(&secs),
                base_rows: same(|r| r.base_rows),
                base_cols: same(|r| r.base_cols),
            }
        })
        .collect()
}

struct SeedOutput {
    rows: Vec<(ReportRow, Option<SolvedModel>)>,
    holdout: Vec<HoldoutRecord>,
}

fn run_seed(cfg: &ExperimentConfig, inst: &UcInstance, seed: u64, solver: &Solver) -> SeedOutput {
    let scenarios = generate_scenarios(&inst.forecast, cfg.sigma_ratio, cfg.eval_scenarios, seed);
    let mut out = SeedOutput {
        rows: Vec::new(),
        holdout: Vec::new(),
    };
    for &s in &cfg.sample_sizes {
        let samples = match generate_samples(&inst.forecast, cfg.sigma_ratio, s, seed, &inst.w_box) {
            Ok(x) => x,
            Err(e) => {
                for &m in &cfg.models {
                    out.rows.push((ReportRow::failed(m, s, seed, None, e.to_string()), None));
                }
                continue;
            }
        };

        let needs_epsilon = cfg.models.iter().any(|m| m.uses_epsilon());
        let epsilon: Result<f64, String> = match cfg.epsilon {
            Some(e) => Ok(e),
            None if needs_epsilon => {
                match select_epsilon_holdout(inst, &samples, &cfg.epsilon_grid, cfg.holdout_split, cfg.beta, &cfg.ccg, solver) {
                    Ok(h) => {
                        info!("seed {seed}, S={s}: holdout picked epsilon {}", h.epsilon);
                        out.holdout.push(HoldoutRecord {
                            samples: s,
                            seed,
                            epsilon: Some(h.epsilon),
                            rows: h.rows,
                        });
                        Ok(h.epsilon)
                    }
                    Err(e) => {
                        warn!("seed {seed}, S={s}: holdout failed: {e}");
                        out.holdout.push(HoldoutRecord {
                            samples: s,
                            seed,
                            epsilon: None,
                            rows: Vec::new(),
                        });
                        Err(format!("holdout: {e}"))
                    }
                }
            }
            None => Ok(0.0),
        };

        for &model in &cfg.models {
            let eps = model.uses_epsilon().then(|| epsilon.clone().ok()).flatten();
            let wcfg = match (&epsilon, model.uses_epsilon()) {
                (Err(e), true) => {
                    out.rows.push((ReportRow::failed(model, s, seed, None, e.clone()), None));
                    continue;
                }
                _ => match WassersteinConfig::new(eps.unwrap_or(0.0), cfg.beta) {
                    Ok(w) => w,
                    Err(e) => {
                        out.rows.push((ReportRow::failed(model, s, seed, eps, e), None));
                        continue;
                    }
                },
            };
            let solved = match solve_model(model, inst, &samples, &wcfg, &cfg.ccg, solver) {
                Ok(x) => x,
                Err(e) => {
                    warn!("seed {seed}, S={s}, {model}: {e}");
                    out.rows.push((ReportRow::failed(model, s, seed, eps, e.to_string()), None));
                    continue;
                }
            };
            let started = Instant::now();
            let evaluation = solved.evaluate(inst, &scenarios, solver);
            let eval_secs = started.elapsed().as_secs_f64();
            let mut row = ReportRow {
                model,
                samples: s,
                seed,
                epsilon: eps,
                objective: Some(solved.objective),
                eval_mean_cost: None,
                eval_infeasible: None,
                eval_scenarios: scenarios.len(),
                rows: Some(solved.rows),
                cols: Some(solved.cols),
                base_rows: solved.base_size().map(|b| b.0),
                base_cols: solved.base_size().map(|b| b.1),
                iterations: Some(solved.iterations),
                certified: solved.certified,
                error: None,
                solve_secs: solved.wall_time.as_secs_f64(),
                eval_secs,
            };
            match evaluation {
                Ok(ev) => {
                    row.eval_mean_cost = Some(ev.mean_cost);
                    row.eval_infeasible = Some(ev.infeasible);
                }
                Err(e) => row.error = Some(format!("evaluation: {e}")),
            }
            out.rows.push((row, Some(solved)));
        }
    }
    out
}

/// Runs every (model, sample size, seed) cell. Seeds run in parallel; a
/// failed cell is recorded in its row and the run continues.
pub fn run_comparison(cfg: &ExperimentConfig, solver: &Solver) -> Result<ComparisonReport, ExperimentError> {
    cfg.validate()?;
    let inst = cfg.load_instance()?;
    run_comparison_on(cfg, &inst, solver)
}

/// [`run_comparison`] on an instance already in memory; the config's data
/// paths are ignored.
pub fn run_comparison_on(
    cfg: &ExperimentConfig,
    inst: &UcInstance,
    solver: &Solver,
) -> Result<ComparisonReport, ExperimentError> {
    cfg.validate()?;
    let outputs: Vec<SeedOutput> = cfg.seeds.par_iter().map(|&seed| run_seed(cfg, inst, seed, solver)).collect();

    let mut cells: Vec<(ReportRow, Option<SolvedModel>)> = Vec::new();
    let mut holdout = Vec::new();
    for o in outputs {
        cells.extend(o.rows);
        holdout.extend(o.holdout);
    }
    cells.sort_by(|(a, _), (b, _)| (a.model, a.samples, a.seed).cmp(&(b.model, b.samples, b.seed)));
    holdout.sort_by_key(|h| (h.samples, h.seed));
    let (rows, solutions): (Vec<_>, Vec<_>) = cells.into_iter().unzip();
    Ok(ComparisonReport {
        aggregates: aggregate(&rows),
        rows,
        holdout,
        solutions,
    })
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ExperimentError + '_ {
    move |source| ExperimentError::Io {
        path: path.display().to_string(),
        source,
    }
}

impl ComparisonReport {
    /// `report.csv` as bytes, columns per [`REPORT_COLUMNS`]. Wall times are
    /// kept out so identical runs give identical bytes.
    pub fn report_csv(&self) -> Result<Vec<u8>, ExperimentError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(REPORT_COLUMNS)?;
        for r in &self.rows {
            w.write_record(r.record())?;
        }
        w.into_inner().map_err(|e| ExperimentError::Csv(e.into_error().into()))
    }

    pub fn timings_csv(&self) -> Result<Vec<u8>, ExperimentError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(TIMING_COLUMNS)?;
        for r in &self.rows {
            w.write_record([
                r.model.to_string(),
                r.samples.to_string(),
                r.seed.to_string(),
                format!("{:.6}", r.solve_secs),
                format!("{:.6}", r.eval_secs),
            ])?;
        }
        w.into_inner().map_err(|e| ExperimentError::Csv(e.into_error().into()))
    }

    /// Writes `report.csv`, `timings.csv`, `summary.json` and one solution
    /// JSON per successful cell under `solutions/`.
    pub fn write(&self, dir: &Path, cfg: &ExperimentConfig) -> Result<(), ExperimentError> {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        let put = |name: &str, bytes: &[u8]| {
            let path = dir.join(name);
            fs::write(&path, bytes).map_err(io_err(&path))
        };
        put("report.csv", &self.report_csv()?)?;
        put("timings.csv", &self.timings_csv()?)?;
        let summary = serde_json::json!({
            "config": cfg,
            "aggregates": self.aggregates,
            "holdout": self.holdout,
        });
        put("summary.json", &serde_json::to_vec_pretty(&summary)?)?;

        let sol_dir = dir.join("solutions");
        fs::create_dir_all(&sol_dir).map_err(io_err(&sol_dir))?;
        for (row, sol) in self.rows.iter().zip(&self.solutions) {
            if let Some(sol) = sol {
                let path = sol_dir.join(solution_file_name(row.model, row.samples, row.seed));
                fs::write(&path, serde_json::to_vec_pretty(sol)?).map_err(io_err(&path))?;
            }
        }
        Ok(())
    }
}

pub fn solution_file_name(model: ModelKind, samples: usize, seed: u64) -> String {
    format!("{model}_s{samples}_seed{seed}.json")
}
