//! Experiment harness: sample generation, holdout selection of ε,
//! out-of-sample evaluation and the model comparison.

mod config;
mod holdout;
mod report;
mod sampling;

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::affine::{solve_awdruc, AffinePolicy, DualMultipliers};
use crate::instance::UcInstance;
use crate::robust::{solve_ruc, CcgConfig, RobustError};
use crate::solver::Solver;
use crate::system::{ErrorVector, SystemError};
use crate::uc::{evaluate_out_of_sample, solve_duc, solve_suc, DispatchRange, Evaluation, Schedule, UcError};
use crate::wasserstein::{solve_ewdruc, SampleError, SampleSet, WassersteinConfig};

pub use config::{ExperimentConfig, SolverConfig};
pub use holdout::{select_epsilon_holdout, HoldoutResult, HoldoutRow};
pub use report::{
    percentile, run_comparison, run_comparison_on, solution_file_name, Aggregate, ComparisonReport, HoldoutRecord, ReportRow, REPORT_COLUMNS,
    TIMING_COLUMNS,
};
pub use sampling::{generate_samples, generate_scenarios, EVALUATION_STREAM, TRAINING_STREAM};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    System(#[from] SystemError),
    #[error(transparent)]
    Samples(#[from] SampleError),
    #[error(transparent)]
    Robust(#[from] RobustError),
    #[error(transparent)]
    Uc(#[from] UcError),
    #[error("holdout: no grid value produced a certified solution")]
    NoCertifiedEpsilon,
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Duc,
    Suc,
    Ruc,
    Ewdruc,
    Awdruc,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [
        ModelKind::Duc,
        ModelKind::Suc,
        ModelKind::Ruc,
        ModelKind::Ewdruc,
        ModelKind::Awdruc,
    ];

    /// Whether the model is parameterised by the Wasserstein radius.
    pub fn uses_epsilon(self) -> bool {
        matches!(self, ModelKind::Ewdruc | ModelKind::Awdruc)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Duc => "duc",
            ModelKind::Suc => "suc",
            ModelKind::Ruc => "ruc",
            ModelKind::Ewdruc => "ewdruc",
            ModelKind::Awdruc => "awdruc",
        })
    }
}

impl FromStr for ModelKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ModelKind::ALL
            .into_iter()
            .find(|m| m.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown model {s:?} (expected duc, suc, ruc, ewdruc or awdruc)"))
    }
}

/// Affine-model detail kept in a stored solution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineDetails {
    pub policy: AffinePolicy,
    pub multipliers: DualMultipliers,
    pub affine_cuts: usize,
    pub feasibility_cuts: usize,
    pub affine_certified: bool,
    pub feasibility_certified: bool,
    pub base_rows: usize,
    pub base_cols: usize,
}

/// A solved model in the form written to and read from solution JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolvedModel {
    pub model: ModelKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    pub samples: usize,
    pub schedule: Schedule,
    pub range: DispatchRange,
    pub objective: f64,
    pub lower_bound: f64,
    pub rows: usize,
    pub cols: usize,
    pub iterations: usize,
    /// Recourse feasibility over W (and, for the affine model, the policy
    /// constraints over Ω) was certified. `None` for models without such a
    /// guarantee.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certified: Option<bool>,
    #[serde(with = "crate::uc::duration_secs")]
    pub wall_time: Duration,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub affine: Option<AffineDetails>,
}

impl SolvedModel {
    /// Model size before any cut generation: the full model for DUC and
    /// SUC, the seeded master for A-WDRUC, and `None` for the C&CG models
    /// whose master is built from cuts.
    pub fn base_size(&self) -> Option<(usize, usize)> {
        match self.model {
            ModelKind::Duc | ModelKind::Suc => Some((self.rows, self.cols)),
            ModelKind::Awdruc => self.affine.as_ref().map(|a| (a.base_rows, a.base_cols)),
            ModelKind::Ruc | ModelKind::Ewdruc => None,
        }
    }

    pub fn evaluate(&self, inst: &UcInstance, scenarios: &[ErrorVector], solver: &Solver) -> Result<Evaluation, UcError> {
        evaluate_out_of_sample(inst, &self.schedule, &self.range, scenarios, solver)
    }
}

/// Solves one model. `samples` feeds SUC and the Wasserstein models; DUC
/// uses the zero error and RUC the physical box W.
pub fn solve_model(
    kind: ModelKind,
    inst: &UcInstance,
    samples: &SampleSet,
    wcfg: &WassersteinConfig,
    ccg: &CcgConfig,
    solver: &Solver,
) -> Result<SolvedModel, ExperimentError> {
    let started = Instant::now();
    let base = |c: crate::uc::CommitmentSolution| SolvedModel {
        model: kind,
        epsilon: kind.uses_epsilon().then_some(wcfg.epsilon),
        beta: kind.uses_epsilon().then_some(wcfg.beta),
        samples: samples.len(),
        schedule: c.schedule,
        range: c.range,
        objective: c.objective,
        lower_bound: c.lower_bound,
        rows: c.rows,
        cols: c.cols,
        iterations: 1,
        certified: None,
        wall_time: Duration::ZERO,
        lambda: None,
        affine: None,
    };
    let mut out = match kind {
        ModelKind::Duc => base(solve_duc(inst, &inst.zero_error(), solver)?),
        ModelKind::Suc => base(solve_suc(inst, samples.samples(), solver)?),
        ModelKind::Ruc => {
            let r = solve_ruc(inst, &inst.w_box, ccg, solver)?;
            let (iterations, certified) = (r.iterations, r.certified);
            let mut m = base(r.solution);
            m.iterations = iterations;
            m.certified = Some(certified);
            m
        }
        ModelKind::Ewdruc => {
            let e = solve_ewdruc(inst, samples, wcfg, ccg, solver)?;
            let (iterations, certified, lambda) = (e.robust.iterations, e.robust.certified, e.lambda);
            let mut m = base(e.robust.solution);
            m.iterations = iterations;
            m.certified = Some(certified);
            m.lambda = Some(lambda);
            m
        }
        ModelKind::Awdruc => {
            let a = solve_awdruc(inst, samples, wcfg, ccg, solver)?;
            let certified = a.certified();
            let details = AffineDetails {
                policy: a.policy,
                multipliers: a.multipliers,
                affine_cuts: a.affine_cuts,
                feasibility_cuts: a.feasibility_cuts,
                affine_certified: a.affine_certified,
                feasibility_certified: a.feasibility_certified,
                base_rows: a.base_rows,
                base_cols: a.base_cols,
            };
            let iterations = a.iterations;
            let mut m = base(a.solution);
            m.iterations = iterations;
            m.certified = Some(certified);
            m.affine = Some(details);
            m
        }
    };
    out.wall_time = started.elapsed();
    Ok(out)
}
