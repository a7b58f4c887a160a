use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{feasibility_subproblem, theta_cut, worst_case_cost, CutOrigin, RobustError, ScenarioPool};
use crate::instance::UcInstance;
use crate::solver::{Model, Sense, Solver, Status, VarId};
use crate::system::IntervalBox;
use crate::uc::{build_first_stage, CommitmentSolution, FirstStage, UcError};

/// Outer-loop controls shared by the column-and-constraint generation loops.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CcgConfig {
    /// Relative gap at which the loop stops.
    pub gap: f64,
    pub max_iter: usize,
    /// Violation (MW or $) below which a candidate is accepted.
    pub tol: f64,
}

impl Default for CcgConfig {
    fn default() -> Self {
        CcgConfig {
            gap: 1e-4,
            max_iter: 50,
            tol: 1e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobustSolution {
    pub solution: CommitmentSolution,
    pub upper_bound: f64,
    pub lower_bound: f64,
    pub iterations: usize,
    pub pool_size: usize,
    /// Recourse feasibility over the box was certified for the returned ranges.
    pub certified: bool,
    /// `(lower, upper)` after each iteration.
    pub history: Vec<(f64, f64)>,
}

impl RobustSolution {
    pub fn objective(&self) -> f64 {
        self.solution.objective
    }

    pub fn relative_gap(&self) -> f64 {
        (self.upper_bound - self.lower_bound).max(0.0) / self.upper_bound.abs().max(1.0)
    }
}

struct Master {
    model: Model,
    stage: FirstStage,
    theta: Vec<VarId>,
}

impl Master {
    fn new(inst: &UcInstance) -> Self {
        let mut model = Model::new(Sense::Minimize);
        let stage = build_first_stage(&mut model, inst);
        let theta = (0..inst.horizon()).map(|_| model.free(1.0)).collect();
        Master { model, stage, theta }
    }

    fn add(&mut self, inst: &UcInstance, t: usize, w_t: &[f64]) {
        let cost = super::add_scenario_block(&mut self.model, inst, &self.stage, t, w_t);
        theta_cut(&mut self.model, self.theta[t], cost);
    }
}

/// Robust UC `min c1'u + max_{w in box} f(x̄, x̲, w)` over X^r(u) with
/// recourse feasibility for every `w` in the box.
///
/// Each master solve gives a lower bound; each candidate whose recourse is
/// feasible over the whole box gives an upper bound `c1'u + max f`. Worst
/// periods enter the pool as optimality cuts, infeasible periods as
/// feasibility cuts.
pub fn solve_ruc(
    inst: &UcInstance,
    b: &IntervalBox<f64>,
    cfg: &CcgConfig,
    solver: &Solver,
) -> Result<RobustSolution, RobustError> {
    let started = Instant::now();
    let mut master = Master::new(inst);
    let mut pool = ScenarioPool::default();
    let center = b.center();
    for (t, w) in center.iter().enumerate() {
        pool.insert(t, w.clone(), CutOrigin::Initial);
        master.add(inst, t, w);
    }

    let mut lower = f64::NEG_INFINITY;
    let mut upper = f64::INFINITY;
    let mut best: Option<CommitmentSolution> = None;
    let mut history = Vec::new();
    let mut iterations = 0;
    let mut certified = false;

    while iterations < cfg.max_iter {
        iterations += 1;
        let sol = solver.solve(&master.model).map_err(UcError::from)?;
        match sol.status {
            Status::Optimal => {}
            Status::Infeasible => return Err(RobustError::MasterInfeasible),
            Status::Limit if !sol.values.is_empty() => {}
            other => return Err(UcError::Status(other).into()),
        }
        lower = lower.max(sol.stats.best_bound.unwrap_or(sol.objective).min(sol.objective));
        let cand = master
            .stage
            .extract(&sol, master.model.num_rows(), master.model.num_cols());

        let feas = feasibility_subproblem(inst, &cand.range, b, solver)?;
        let bad = feas.violated_periods(cfg.tol);
        let mut added = 0;
        if !bad.is_empty() {
            for t in bad {
                if pool.insert(t, feas.witness[t].clone(), CutOrigin::Feasibility) {
                    master.add(inst, t, &feas.witness[t]);
                    added += 1;
                }
            }
            log::debug!("ruc iter {iterations}: {added} feasibility cuts");
        } else {
            let wc = worst_case_cost(inst, &cand.range, b, solver)?;
            let value = cand.schedule.fixed_cost(&inst.system) + wc.cost;
            if value < upper {
                upper = value;
                let mut incumbent = cand.clone();
                incumbent.objective = value;
                best = Some(incumbent);
                certified = true;
            }
            for t in 0..inst.horizon() {
                let theta = sol.value(master.theta[t]);
                if wc.per_period[t] > theta + cfg.tol * (1.0 + theta.abs())
                    && pool.insert(t, wc.w[t].clone(), CutOrigin::Optimality)
                {
                    master.add(inst, t, &wc.w[t]);
                    added += 1;
                }
            }
        }
        history.push((lower, upper));
        log::debug!("ruc iter {iterations}: lb {lower:.6} ub {upper:.6}");
        let gap = (upper - lower) / upper.abs().max(1.0);
        if gap <= cfg.gap || (added == 0 && upper.is_finite()) {
            break;
        }
        if added == 0 {
            // Violations found but every witness is already pooled.
            break;
        }
    }

    let mut solution = best.ok_or(RobustError::Infeasible {
        period: usize::MAX,
        witness: Vec::new(),
    })?;
    solution.lower_bound = lower.min(upper);
    solution.rows = master.model.num_rows();
    solution.cols = master.model.num_cols();
    solution.wall_time = started.elapsed();
    Ok(RobustSolution {
        solution,
        upper_bound: upper,
        lower_bound: lower.min(upper),
        iterations,
        pool_size: pool.len(),
        certified,
        history,
    })
}
