//! Deterministic and stochastic unit commitment, dispatch ranges and the
//! single-period recourse problem.

mod commitment;
mod dispatch;
mod evaluate;
mod models;
pub mod replay;

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::solver::{SolverError, Status};

pub use commitment::{build_commitment_constraints, CommitmentVars, Schedule};
pub use dispatch::{
    add_period_block, build_dispatch_range_stage, evaluate_second_stage, network_rows, rt_dispatch,
    second_stage_monolithic, AffineRow, DispatchLayout, DispatchRange, DispatchResult, GenSource, PeriodBlock,
    PeriodLp, PeriodOutcome, RangeVars, RowKind, SecondStage,
};
pub use evaluate::{evaluate_out_of_sample, Evaluation};
pub use models::{build_duc, build_first_stage, build_suc, solve_duc, solve_suc, DucModel, FirstStage, SucModel};

#[derive(Debug, Error)]
pub enum UcError {
    #[error("recourse problem infeasible in period {period}")]
    Infeasible { period: usize },
    #[error("solver stopped with status {0:?}")]
    Status(Status),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// First-stage decisions of any of the commitment models plus solve data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommitmentSolution {
    pub schedule: Schedule,
    pub range: DispatchRange,
    pub objective: f64,
    /// Proven lower bound on the optimal objective.
    pub lower_bound: f64,
    pub rows: usize,
    pub cols: usize,
    #[serde(with = "duration_secs")]
    pub wall_time: Duration,
}

impl CommitmentSolution {
    pub fn relative_gap(&self) -> f64 {
        (self.objective - self.lower_bound).max(0.0) / self.objective.abs().max(1.0)
    }
}

/// Serde helper writing durations as fractional seconds.
pub mod duration_secs {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        let secs = f64::deserialize(d)?;
        Ok(Duration::from_secs_f64(secs.max(0.0)))
    }
}
