use std::time::Instant;

use highs::{HighsModelStatus, RowProblem};

use super::{Backend, Model, Relation, Sense, SolveParams, SolveStats, Solution, SolverError, Status};

/// HiGHS (open-source LP/MIP solver) backend.
#[derive(Clone, Copy, Debug, Default)]
pub struct HighsBackend;

fn backend_error(message: impl Into<String>) -> SolverError {
    SolverError::Backend {
        backend: "highs",
        message: message.into(),
    }
}

impl HighsBackend {
    fn run(&self, model: &Model, params: &SolveParams, presolve: bool) -> Result<highs::SolvedModel, SolverError> {
        let mut pb = RowProblem::default();
        let cols: Vec<highs::Col> = model
            .variables()
            .iter()
            .map(|v| pb.add_column_with_integrality(v.obj, v.lower..=v.upper, v.integral))
            .collect();
        for c in model.constraints() {
            let factors = c.terms.iter().map(|(v, a)| (cols[v.index()], *a));
            match c.relation {
                Relation::Le => pb.add_row(..=c.rhs, factors),
                Relation::Ge => pb.add_row(c.rhs.., factors),
                Relation::Eq => pb.add_row(c.rhs..=c.rhs, factors),
            }
        }
        let sense = match model.sense() {
            Sense::Minimize => highs::Sense::Minimise,
            Sense::Maximize => highs::Sense::Maximise,
        };
        let mut hm = pb.optimise(sense);
        hm.make_quiet();
        hm.set_option("mip_rel_gap", params.mip_gap);
        hm.set_option("primal_feasibility_tolerance", params.feasibility_tol);
        hm.set_option("dual_feasibility_tolerance", params.feasibility_tol.min(1e-7));
        hm.set_option("mip_feasibility_tolerance", params.feasibility_tol);
        if let Some(limit) = params.time_limit {
            hm.set_option("time_limit", limit);
        }
        if let Some(seed) = params.seed {
            hm.set_option("random_seed", (seed % (i32::MAX as u64)) as i32);
        }
        if !presolve {
            hm.set_option("presolve", "off");
        }
        hm.try_solve()
            .map_err(|status| backend_error(format!("solve returned {status:?}")))
    }
}

impl Backend for HighsBackend {
    fn name(&self) -> &'static str {
        "highs"
    }

    fn solve(&self, model: &Model, params: &SolveParams) -> Result<Solution, SolverError> {
        let started = Instant::now();
        let stats = |best_bound, mip_gap| SolveStats {
            rows: model.num_rows(),
            cols: model.num_cols(),
            wall_time: started.elapsed(),
            best_bound,
            mip_gap,
        };

        if model.num_cols() == 0 {
            // HiGHS refuses empty models; every row reads 0 (rel) rhs.
            let feasible = model.constraints().iter().all(|c| match c.relation {
                Relation::Le => 0.0 <= c.rhs + params.feasibility_tol,
                Relation::Ge => 0.0 >= c.rhs - params.feasibility_tol,
                Relation::Eq => c.rhs.abs() <= params.feasibility_tol,
            });
            return Ok(Solution {
                status: if feasible { Status::Optimal } else { Status::Infeasible },
                objective: model.objective_constant(),
                values: Vec::new(),
                duals: (!model.is_mip()).then(|| vec![0.0; model.num_rows()]),
                stats: stats(None, None),
            });
        }

        let mut solved = self.run(model, params, true)?;
        if solved.status() == HighsModelStatus::UnboundedOrInfeasible {
            solved = self.run(model, params, false)?;
        }
        let status = match solved.status() {
            HighsModelStatus::Optimal => Status::Optimal,
            HighsModelStatus::Infeasible => Status::Infeasible,
            HighsModelStatus::Unbounded => Status::Unbounded,
            HighsModelStatus::UnboundedOrInfeasible => Status::Infeasible,
            HighsModelStatus::ReachedTimeLimit
            | HighsModelStatus::ReachedIterationLimit
            | HighsModelStatus::ReachedSolutionLimit
            | HighsModelStatus::ReachedInterrupt
            | HighsModelStatus::ReachedMemoryLimit
            | HighsModelStatus::ObjectiveBound
            | HighsModelStatus::ObjectiveTarget => Status::Limit,
            other => return Err(backend_error(format!("model status {other:?}"))),
        };
        let solution = solved.get_solution();
        let is_mip = model.is_mip();
        let (best_bound, mip_gap) = if is_mip && status != Status::Infeasible {
            (
                solved.double_info_value(c"mip_dual_bound").ok().map(|b| b + model.objective_constant()),
                Some(solved.mip_gap()),
            )
        } else {
            (None, None)
        };
        let duals = (!is_mip && status == Status::Optimal).then(|| solution.dual_rows().to_vec());
        Ok(Solution {
            status,
            objective: solved.objective_value() + model.objective_constant(),
            values: solution.columns().to_vec(),
            duals,
            stats: stats(best_bound, mip_gap),
        })
    }
}
