//! Distributionally robust UC with affine recourse policies.
//!
//! Each recourse variable is an affine function of the period-total error.
//! The worst-case expected policy cost over the Wasserstein ball on Ω then
//! splits into a sample-mean term `g^c` and a small LP whose dual is folded
//! into the master, so the master's size does not depend on the number of
//! samples. Robust policy constraints over Ω are handled by closed-form
//! separation and cutting planes; recourse feasibility over W by exact
//! recourse blocks, as in the robust UC.

mod constraints;
mod master;
mod policy;

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::instance::UcInstance;
use crate::robust::{feasibility_subproblem, CcgConfig, RobustError};
use crate::solver::{Solver, Status};
use crate::system::ErrorVector;
use crate::uc::{evaluate_out_of_sample, CommitmentSolution, Evaluation, UcError};
use crate::wasserstein::{OmegaBox, SampleSet, WassersteinConfig};

pub use constraints::{
    affine_constraint_system, separate, AffineConstraintSystem, BalanceIdentity, ConstraintId, ConstraintKind,
    RangeSide, RobustConstraint, Violation,
};
pub use master::{build_master, CutPool, DualMultipliers, MasterModel, PolicyVars};
pub use policy::{cost_coefficients, AffinePolicy, CostFunctions};

/// Default cap on outer iterations.
pub const DEFAULT_MAX_ITER: usize = 100;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AwdrucSolution {
    pub solution: CommitmentSolution,
    pub policy: AffinePolicy,
    pub multipliers: DualMultipliers,
    pub omega: OmegaBox,
    pub iterations: usize,
    pub affine_cuts: usize,
    pub feasibility_cuts: usize,
    /// No robust policy constraint is violated over Ω.
    pub affine_certified: bool,
    /// Exact recourse is feasible for every error in W.
    pub feasibility_certified: bool,
    /// Master size with only the seed cuts, before the outer loop adds any.
    pub base_rows: usize,
    pub base_cols: usize,
}

impl AwdrucSolution {
    pub fn objective(&self) -> f64 {
        self.solution.objective
    }

    pub fn certified(&self) -> bool {
        self.affine_certified && self.feasibility_certified
    }
}

/// Outer loop: solve the master, separate the robust policy constraints
/// over Ω, certify recourse feasibility over W, add what is violated, and
/// repeat until nothing is. Hitting `ccg.max_iter` returns the last
/// candidate flagged uncertified.
pub fn solve_awdruc(
    inst: &UcInstance,
    samples: &SampleSet,
    cfg: &WassersteinConfig,
    ccg: &CcgConfig,
    solver: &Solver,
) -> Result<AwdrucSolution, RobustError> {
    let started = Instant::now();
    let mut master = build_master(inst, samples, cfg, &CutPool::default());
    let seeds = CutPool::seeded(&master.system, &master.omega);
    let mut affine_cuts = 0;
    for (i, w) in &seeds.affine {
        if master.add_affine_cut(*i, w) {
            affine_cuts += 1;
        }
    }
    let (base_rows, base_cols) = (master.rows(), master.cols());
    let mut feasibility_cuts = 0;
    let mut iterations = 0;
    loop {
        iterations += 1;
        let sol = solver.solve(&master.model).map_err(UcError::from)?;
        match sol.status {
            Status::Optimal => {}
            Status::Infeasible => return Err(RobustError::MasterInfeasible),
            Status::Limit if !sol.values.is_empty() => log::warn!("awdruc: master hit a solver limit"),
            other => return Err(UcError::Status(other).into()),
        }
        let cand = master.stage.extract(&sol, master.rows(), master.cols());
        let policy = master.policy_values(&sol);

        let violations = separate(&master.system, &policy, &cand.range, &master.omega, ccg.tol);
        let feas = feasibility_subproblem(inst, &cand.range, &inst.w_box, solver)?;
        let bad = feas.violated_periods(ccg.tol);
        let mut added = 0;
        for v in &violations {
            if master.add_affine_cut(v.index, &v.witness) {
                added += 1;
                affine_cuts += 1;
            }
        }
        for t in &bad {
            if master.add_feasibility_cut(inst, *t, &feas.witness[*t]) {
                added += 1;
                feasibility_cuts += 1;
            }
        }
        log::debug!(
            "awdruc iter {iterations}: obj {:.6} violations {} infeasible periods {}",
            sol.objective,
            violations.len(),
            bad.len()
        );
        if added == 0 || iterations >= ccg.max_iter {
            if added > 0 {
                log::warn!("awdruc: iteration limit {} reached", ccg.max_iter);
            }
            let mut solution = cand;
            solution.wall_time = started.elapsed();
            return Ok(AwdrucSolution {
                multipliers: master.multipliers(&sol),
                solution,
                policy,
                omega: master.omega.clone(),
                iterations,
                affine_cuts,
                feasibility_cuts,
                affine_certified: violations.is_empty(),
                feasibility_certified: bad.is_empty(),
                base_rows,
                base_cols,
            });
        }
    }
}

/// Out-of-sample cost with exact recourse at the solution's ranges; the
/// affine policy itself is not used for dispatch.
pub fn evaluate_awdruc(
    solution: &AwdrucSolution,
    inst: &UcInstance,
    scenarios: &[ErrorVector],
    solver: &Solver,
) -> Result<Evaluation, UcError> {
    evaluate_out_of_sample(inst, &solution.solution.schedule, &solution.solution.range, scenarios, solver)
}

#[cfg(test)]
mod tests;
