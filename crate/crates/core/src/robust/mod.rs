//! Two-stage robust machinery over boxes: worst-case recourse cost,
//! recourse feasibility certification, and the column-and-constraint
//! generation solver for the robust UC.

mod ccg;
pub mod lattice;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::UcInstance;
use crate::solver::{Model, Relation, Solver};
use crate::system::{ErrorVector, IntervalBox};
use crate::uc::{add_period_block, DispatchRange, FirstStage, GenSource, PeriodLp, UcError};

pub use ccg::{solve_ruc, CcgConfig, RobustSolution};
pub use lattice::{Lattice, LatticeMax};

#[derive(Debug, Error)]
pub enum RobustError {
    #[error("recourse infeasible in period {period} at w = {witness:?}")]
    Infeasible { period: usize, witness: Vec<f64> },
    #[error("master problem infeasible")]
    MasterInfeasible,
    #[error(transparent)]
    Uc(#[from] UcError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutOrigin {
    Feasibility,
    Optimality,
    Initial,
}

/// One period's error vector with the reason it entered the pool.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoolEntry {
    pub period: usize,
    pub w: Vec<f64>,
    pub origin: CutOrigin,
}

/// Per-period scenarios accumulated by an outer loop.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct ScenarioPool {
    pub entries: Vec<PoolEntry>,
}

impl ScenarioPool {
    /// Adds the entry unless an identical `(period, w)` is already present.
    pub fn insert(&mut self, period: usize, w: Vec<f64>, origin: CutOrigin) -> bool {
        let dup = self
            .entries
            .iter()
            .any(|e| e.period == period && e.w.iter().zip(&w).all(|(a, b)| (a - b).abs() <= 1e-9));
        if !dup {
            self.entries.push(PoolEntry { period, w, origin });
        }
        !dup
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Adds a recourse copy for `w_t`, tied to the first-stage ranges.
/// Returns the block's cost expression.
pub fn add_scenario_block(
    model: &mut Model,
    inst: &UcInstance,
    stage: &FirstStage,
    t: usize,
    w_t: &[f64],
) -> crate::solver::LinExpr {
    add_period_block(model, inst, t, w_t, GenSource::WithinRanges(&stage.ranges)).cost
}

/// Recourse copies keyed by `(period, w_t)` so that identical scenarios
/// share one block.
#[derive(Clone, Debug, Default)]
pub struct BlockCache {
    blocks: std::collections::HashMap<(usize, Vec<u64>), crate::solver::LinExpr>,
}

impl BlockCache {
    /// Cost expression of the block for `(t, w_t)`, and whether it is new.
    pub fn get_or_add(
        &mut self,
        model: &mut Model,
        inst: &UcInstance,
        stage: &FirstStage,
        t: usize,
        w_t: &[f64],
    ) -> (crate::solver::LinExpr, bool) {
        let key = (t, w_t.iter().map(|v| (v + 0.0).to_bits()).collect());
        if let Some(cost) = self.blocks.get(&key) {
            return (cost.clone(), false);
        }
        let cost = add_scenario_block(model, inst, stage, t, w_t);
        self.blocks.insert(key, cost.clone());
        (cost, true)
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }
}

/// Worst case of the recourse cost over a box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorstCase {
    pub w: ErrorVector,
    pub cost: f64,
    pub per_period: Vec<f64>,
}

fn box_lattice(b: &IntervalBox<f64>, t: usize) -> Lattice {
    Lattice::box_vertices(&b.lower[t], &b.upper[t])
}

/// Per-period worst-case recourse cost; the maximum is attained at a box
/// vertex since the LP value is convex in its right-hand side.
pub fn period_worst_case(
    inst: &UcInstance,
    range: &DispatchRange,
    b: &IntervalBox<f64>,
    t: usize,
    solver: &Solver,
) -> Result<(Vec<f64>, f64), RobustError> {
    let lp = PeriodLp::dispatch(inst, t, &range.period(t));
    match lattice::maximize(&lp, &box_lattice(b, t), solver)? {
        LatticeMax::Value { w, value, .. } => Ok((w, value)),
        LatticeMax::Infeasible { w } => Err(RobustError::Infeasible { period: t, witness: w }),
    }
}

/// `max_{w in box} f(x̄, x̲, w)`, separated by period.
pub fn worst_case_cost(
    inst: &UcInstance,
    range: &DispatchRange,
    b: &IntervalBox<f64>,
    solver: &Solver,
) -> Result<WorstCase, RobustError> {
    let per: Vec<(Vec<f64>, f64)> = (0..inst.horizon())
        .into_par_iter()
        .map(|t| period_worst_case(inst, range, b, t, solver))
        .collect::<Result<_, _>>()?;
    let cost = per.iter().map(|p| p.1).sum();
    let per_period = per.iter().map(|p| p.1).collect();
    Ok(WorstCase {
        w: per.into_iter().map(|p| p.0).collect(),
        cost,
        per_period,
    })
}

/// Largest total elastic violation over a box, by period.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    /// Maximum over periods.
    pub violation: f64,
    /// Witness error vector; each period holds its own maximiser.
    pub witness: ErrorVector,
    pub per_period: Vec<f64>,
}

impl FeasibilityReport {
    pub fn is_certified(&self, tol: f64) -> bool {
        self.violation <= tol
    }

    /// Periods whose violation exceeds `tol`.
    pub fn violated_periods(&self, tol: f64) -> Vec<usize> {
        (0..self.per_period.len()).filter(|&t| self.per_period[t] > tol).collect()
    }
}

pub fn period_feasibility(
    inst: &UcInstance,
    range: &DispatchRange,
    b: &IntervalBox<f64>,
    t: usize,
    solver: &Solver,
) -> Result<(Vec<f64>, f64), RobustError> {
    let lp = PeriodLp::elastic(inst, t, &range.period(t));
    match lattice::maximize(&lp, &box_lattice(b, t), solver)? {
        LatticeMax::Value { w, value, .. } => Ok((w, value.max(0.0))),
        // Bounds are hard but always consistent, so this cannot happen.
        LatticeMax::Infeasible { w } => Err(RobustError::Infeasible { period: t, witness: w }),
    }
}

/// Certifies recourse feasibility for every error in the box: the elastic
/// LP (unit slack cost on balance and line rows) is maximised over the box.
pub fn feasibility_subproblem(
    inst: &UcInstance,
    range: &DispatchRange,
    b: &IntervalBox<f64>,
    solver: &Solver,
) -> Result<FeasibilityReport, RobustError> {
    let per: Vec<(Vec<f64>, f64)> = (0..inst.horizon())
        .into_par_iter()
        .map(|t| period_feasibility(inst, range, b, t, solver))
        .collect::<Result<_, _>>()?;
    let violation = per.iter().map(|p| p.1).fold(0.0, f64::max);
    let per_period = per.iter().map(|p| p.1).collect();
    Ok(FeasibilityReport {
        violation,
        witness: per.into_iter().map(|p| p.0).collect(),
        per_period,
    })
}

/// Counts infeasible `rt_dispatch` calls over all box vertices of each
/// period (when their number is within the enumeration limit) and
/// `random_points` uniformly drawn interior points per period.
pub fn count_dispatch_failures(
    inst: &UcInstance,
    range: &DispatchRange,
    b: &IntervalBox<f64>,
    random_points: usize,
    seed: u64,
    solver: &Solver,
) -> Result<usize, UcError> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    for t in 0..inst.horizon() {
        let lp = PeriodLp::dispatch(inst, t, &range.period(t));
        let mut points: Vec<Vec<f64>> = Vec::new();
        let lat = box_lattice(b, t);
        if lat.size() <= lattice::ENUMERATION_LIMIT {
            points.extend(lat.points().into_iter().map(|p| p.0));
        }
        for _ in 0..random_points {
            points.push(
                b.lower[t]
                    .iter()
                    .zip(&b.upper[t])
                    .map(|(lo, hi)| if hi > lo { rng.gen_range(*lo..=*hi) } else { *lo })
                    .collect(),
            );
        }
        for w in points {
            if matches!(lp.solve(solver, &w)?, crate::uc::PeriodOutcome::Infeasible) {
                failures += 1;
            }
        }
    }
    Ok(failures)
}

/// Adds a recourse copy whose only role is to make the ranges feasible for
/// `w_t` (a feasibility cut).
pub fn add_feasibility_block(model: &mut Model, inst: &UcInstance, stage: &FirstStage, t: usize, w_t: &[f64]) {
    add_scenario_block(model, inst, stage, t, w_t);
}

pub(crate) fn theta_cut(model: &mut Model, theta: crate::solver::VarId, cost: crate::solver::LinExpr) {
    let mut e = cost;
    e.add_term(theta, -1.0);
    model.constrain_expr(e, Relation::Le, 0.0);
}
