use super::commitment::{build_commitment_constraints, CommitmentVars};
use super::dispatch::{add_period_block, build_dispatch_range_stage, DispatchRange, GenSource, RangeVars};
use super::{CommitmentSolution, UcError};
use crate::instance::UcInstance;
use crate::solver::{LinExpr, Model, Relation, Sense, Solution, Solver, Status, VarId};
use crate::system::ErrorVector;

/// Commitment binaries together with the dispatch-range variables.
#[derive(Clone, Debug)]
pub struct FirstStage {
    pub commit: CommitmentVars,
    pub ranges: RangeVars,
}

impl FirstStage {
    pub fn extract(&self, sol: &Solution, rows: usize, cols: usize) -> CommitmentSolution {
        CommitmentSolution {
            schedule: self.commit.extract(sol),
            range: self.ranges.extract(sol),
            objective: sol.objective,
            lower_bound: sol.stats.best_bound.unwrap_or(sol.objective).min(sol.objective),
            rows,
            cols,
            wall_time: sol.stats.wall_time,
        }
    }
}

/// Commitment logic plus X^r(u); the shared first stage of every two-stage model.
pub fn build_first_stage(model: &mut Model, inst: &UcInstance) -> FirstStage {
    let commit = build_commitment_constraints(model, &inst.system);
    let ranges = build_dispatch_range_stage(model, inst, &commit);
    FirstStage { commit, ranges }
}

/// Solves a MILP and accepts optimal or limit-with-incumbent outcomes.
pub(crate) fn solve_mip(model: &Model, solver: &Solver) -> Result<Solution, UcError> {
    let sol = solver.solve(model)?;
    match sol.status {
        Status::Optimal => Ok(sol),
        Status::Limit if sol.values.len() == model.num_cols() && sol.objective.is_finite() => {
            log::warn!("solver limit reached, using incumbent");
            Ok(sol)
        }
        other => Err(UcError::Status(other)),
    }
}

#[derive(Clone, Debug)]
pub struct DucModel {
    pub model: Model,
    pub commit: CommitmentVars,
    /// `x^g`, `[generator][period]`.
    pub dispatch: Vec<Vec<VarId>>,
}

/// Deterministic UC at a known error vector `w` (`[period][reg_unit]`).
pub fn build_duc(inst: &UcInstance, w: &ErrorVector) -> DucModel {
    let system = &inst.system;
    let mut model = Model::new(Sense::Minimize);
    let commit = build_commitment_constraints(&mut model, system);
    let horizon = system.horizon();
    let dispatch: Vec<Vec<VarId>> = system
        .generators()
        .iter()
        .map(|gen| (0..horizon).map(|_| model.continuous(0.0, gen.p_max, 0.0)).collect())
        .collect();

    for (g, gen) in system.generators().iter().enumerate() {
        for t in 0..horizon {
            let (x, on) = (dispatch[g][t], commit.on[g][t]);
            model.constrain([(x, 1.0), (on, -gen.p_min)], Relation::Ge, 0.0);
            model.constrain([(x, 1.0), (on, -gen.p_max)], Relation::Le, 0.0);
            let prev = if t == 0 {
                LinExpr::constant(gen.initial_output)
            } else {
                LinExpr::var(dispatch[g][t - 1])
            };
            let on_prev = commit.on_prev(system, g, t);
            let mut up = LinExpr::var(x);
            up.add_scaled(&prev, -1.0)
                .add_scaled(&on_prev, -gen.ramp_up)
                .add_term(commit.startup[g][t], -gen.startup_ramp);
            model.constrain_expr(up, Relation::Le, 0.0);
            let mut down = prev.clone();
            down.add_term(x, -1.0)
                .add_term(on, -gen.ramp_down)
                .add_term(commit.shutdown[g][t], -gen.shutdown_ramp);
            model.constrain_expr(down, Relation::Le, 0.0);
        }
    }

    for t in 0..horizon {
        let gens: Vec<VarId> = dispatch.iter().map(|row| row[t]).collect();
        let block = add_period_block(&mut model, inst, t, &w[t], GenSource::Existing(&gens));
        model.add_objective_expr(&block.cost, 1.0);
    }
    DucModel {
        model,
        commit,
        dispatch,
    }
}

/// Solves the deterministic UC. The returned ranges are the degenerate
/// intervals at the optimal dispatch.
pub fn solve_duc(inst: &UcInstance, w: &ErrorVector, solver: &Solver) -> Result<CommitmentSolution, UcError> {
    let duc = build_duc(inst, w);
    let sol = solve_mip(&duc.model, solver)?;
    let dispatch: Vec<Vec<f64>> = duc
        .dispatch
        .iter()
        .map(|row| row.iter().map(|v| sol.value(*v).max(0.0)).collect())
        .collect();
    Ok(CommitmentSolution {
        schedule: duc.commit.extract(&sol),
        range: DispatchRange::point(&dispatch),
        objective: sol.objective,
        lower_bound: sol.stats.best_bound.unwrap_or(sol.objective).min(sol.objective),
        rows: duc.model.num_rows(),
        cols: duc.model.num_cols(),
        wall_time: sol.stats.wall_time,
    })
}

#[derive(Clone, Debug)]
pub struct SucModel {
    pub model: Model,
    pub stage: FirstStage,
}

/// Extensive-form SUC: one recourse copy per sample and period, each
/// weighted `1/S`.
pub fn build_suc(inst: &UcInstance, samples: &[ErrorVector]) -> SucModel {
    assert!(!samples.is_empty(), "SUC needs at least one sample");
    let mut model = Model::new(Sense::Minimize);
    let stage = build_first_stage(&mut model, inst);
    let weight = 1.0 / samples.len() as f64;
    for w in samples {
        for t in 0..inst.horizon() {
            let block = add_period_block(&mut model, inst, t, &w[t], GenSource::WithinRanges(&stage.ranges));
            model.add_objective_expr(&block.cost, weight);
        }
    }
    SucModel { model, stage }
}

pub fn solve_suc(inst: &UcInstance, samples: &[ErrorVector], solver: &Solver) -> Result<CommitmentSolution, UcError> {
    let suc = build_suc(inst, samples);
    let sol = solve_mip(&suc.model, solver)?;
    Ok(suc.stage.extract(&sol, suc.model.num_rows(), suc.model.num_cols()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::fixtures::single_bus;
    use crate::system::{ForecastSeries, SystemData};

    fn inst(demand: Vec<f64>) -> UcInstance {
        let s = SystemData::try_from(single_bus(demand, None)).unwrap();
        UcInstance::new(s.clone(), ForecastSeries::zeros(&s)).unwrap()
    }

    #[test]
    fn duc_single_bus_costs_balance() {
        let i = inst(vec![50.0]);
        let sol = solve_duc(&i, &i.zero_error(), &Solver::default()).unwrap();
        assert!((sol.objective - 500.0).abs() < 1e-6);
        assert!((sol.range.upper[0][0] - 50.0).abs() < 1e-6);
    }

    #[test]
    fn duc_zero_demand_all_off() {
        let i = inst(vec![0.0]);
        let sol = solve_duc(&i, &i.zero_error(), &Solver::default()).unwrap();
        assert!(sol.objective.abs() < 1e-9);
    }

    #[test]
    fn suc_single_zero_sample_matches_duc() {
        let i = inst(vec![30.0, 60.0]);
        let duc = solve_duc(&i, &i.zero_error(), &Solver::default()).unwrap();
        let suc = solve_suc(&i, &[i.zero_error()], &Solver::default()).unwrap();
        assert!((duc.objective - suc.objective).abs() < 1e-6);
        let twice = solve_suc(&i, &[i.zero_error(), i.zero_error()], &Solver::default()).unwrap();
        assert!((twice.objective - suc.objective).abs() < 1e-6);
    }

    #[test]
    fn suc_rows_affine_in_sample_count() {
        let i = inst(vec![30.0, 60.0]);
        let rows = |s: usize| build_suc(&i, &vec![i.zero_error(); s]).model.num_rows();
        let (r1, r10, r100) = (rows(1), rows(10), rows(100));
        assert_eq!((r10 - r1) * 11, r100 - r1);
    }
}
