use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::commitment::Schedule;
use super::dispatch::{DispatchRange, SecondStage};
use super::UcError;
use crate::instance::UcInstance;
use crate::solver::Solver;
use crate::system::ErrorVector;

/// Out-of-sample cost of a day-ahead decision under exact recourse.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    /// Mean total cost (fixed plus dispatch) over feasible scenarios.
    pub mean_cost: f64,
    /// Total cost per scenario; `None` where some period had no feasible dispatch.
    pub costs: Vec<Option<f64>>,
    pub infeasible: usize,
}

/// Runs the real-time dispatch of every period of every scenario at the
/// given ranges.
pub fn evaluate_out_of_sample(
    inst: &UcInstance,
    schedule: &Schedule,
    range: &DispatchRange,
    scenarios: &[ErrorVector],
    solver: &Solver,
) -> Result<Evaluation, UcError> {
    let fixed = schedule.fixed_cost(&inst.system);
    let stage = SecondStage::new(inst, range, solver);
    let costs: Vec<Option<f64>> = scenarios
        .par_iter()
        .map(|w| match stage.cost(w) {
            Ok(c) => Ok(Some(fixed + c)),
            Err(UcError::Infeasible { .. }) => Ok(None),
            Err(e) => Err(e),
        })
        .collect::<Result<_, _>>()?;
    let feasible: Vec<f64> = costs.iter().flatten().copied().collect();
    let mean_cost = if feasible.is_empty() {
        f64::NAN
    } else {
        feasible.iter().sum::<f64>() / feasible.len() as f64
    };
    Ok(Evaluation {
        mean_cost,
        infeasible: costs.len() - feasible.len(),
        costs,
    })
}
