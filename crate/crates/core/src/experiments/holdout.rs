use log::warn;
use serde::{Deserialize, Serialize};

use super::ExperimentError;
use crate::affine::{evaluate_awdruc, solve_awdruc};
use crate::instance::UcInstance;
use crate::robust::CcgConfig;
use crate::solver::Solver;
use crate::wasserstein::{SampleSet, WassersteinConfig};

/// Validation outcome for one grid value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HoldoutRow {
    pub epsilon: f64,
    /// Mean exact-recourse cost on the validation split; `None` when the
    /// training solve was skipped.
    pub validation_cost: Option<f64>,
    pub training_objective: Option<f64>,
    pub certified: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HoldoutResult {
    pub epsilon: f64,
    pub rows: Vec<HoldoutRow>,
}

/// Number of training samples for a split fraction, leaving at least one
/// sample on each side.
pub(crate) fn training_count(total: usize, split: f64) -> usize {
    ((total as f64 * split).round() as usize).clamp(1, total.saturating_sub(1).max(1))
}

/// Trains A-WDRUC on the first `split` share of `samples` for every radius
/// in `grid` and returns the radius with the lowest validation cost. Ties go
/// to the smaller radius; uncertified training solves are skipped.
pub fn select_epsilon_holdout(
    inst: &UcInstance,
    samples: &SampleSet,
    grid: &[f64],
    split: f64,
    beta: f64,
    ccg: &CcgConfig,
    solver: &Solver,
) -> Result<HoldoutResult, ExperimentError> {
    if samples.len() < 2 {
        return Err(ExperimentError::Config(format!(
            "holdout needs at least 2 samples, got {}",
            samples.len()
        )));
    }
    if !(split > 0.0 && split < 1.0) {
        return Err(ExperimentError::Config(format!("holdout split must lie in (0, 1), got {split}")));
    }
    let mut grid: Vec<f64> = grid.to_vec();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    if grid.is_empty() {
        return Err(ExperimentError::Config("epsilon grid is empty".into()));
    }

    let (train, validate) = samples.split_at(training_count(samples.len(), split));
    let mut rows = Vec::with_capacity(grid.len());
    let mut best: Option<(f64, f64)> = None;
    for &epsilon in &grid {
        let wcfg = WassersteinConfig::new(epsilon, beta).map_err(ExperimentError::Config)?;
        let sol = solve_awdruc(inst, &train, &wcfg, ccg, solver)?;
        if !sol.certified() {
            warn!("holdout: epsilon {epsilon} skipped, training solve not certified");
            rows.push(HoldoutRow {
                epsilon,
                validation_cost: None,
                training_objective: Some(sol.objective()),
                certified: false,
            });
            continue;
        }
        let cost = evaluate_awdruc(&sol, inst, validate.samples(), solver)?.mean_cost;
        // Strict improvement only, so the first (smallest) radius wins ties.
        if cost.is_finite() && best.is_none_or(|(_, c)| cost < c) {
            best = Some((epsilon, cost));
        }
        rows.push(HoldoutRow {
            epsilon,
            validation_cost: Some(cost),
            training_objective: Some(sol.objective()),
            certified: true,
        });
    }
    let (epsilon, _) = best.ok_or(ExperimentError::NoCertifiedEpsilon)?;
    Ok(HoldoutResult { epsilon, rows })
}
