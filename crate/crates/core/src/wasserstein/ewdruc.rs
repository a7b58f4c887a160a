//! Exact Wasserstein distributionally robust UC through its dual form:
//! `min c1'u + λε + (1/S) Σ_s η^s` with
//! `f(x̄, x̲, w) - λ‖w - ŵ^s‖₁ <= η^s` for all `w ∈ Ω`, plus recourse
//! feasibility over W. Both f and the 1-norm split by period, so `η^s` is
//! kept per period.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{omega, OmegaBox, SampleSet, WassersteinConfig};
use crate::instance::UcInstance;
use crate::robust::lattice::{self, Lattice, LatticeMax};
use crate::robust::{feasibility_subproblem, BlockCache, CcgConfig, RobustError, RobustSolution};
use crate::solver::{Model, Relation, Sense, Solver, Status, VarId};
use crate::uc::{build_first_stage, CommitmentSolution, PeriodLp, UcError};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EwdrucSolution {
    pub robust: RobustSolution,
    pub lambda: f64,
    pub omega: OmegaBox,
}

impl EwdrucSolution {
    pub fn objective(&self) -> f64 {
        self.robust.objective()
    }
}

/// Upper bound on λ. Beyond the Lipschitz constant of the recourse cost a
/// larger λ only adds `λε`, and that constant is a small multiple of the
/// largest cost coefficient for any network where shedding and curtailment
/// can offset an error near its bus.
pub fn lambda_cap(inst: &UcInstance) -> f64 {
    let s = &inst.system;
    let c = s
        .generators()
        .iter()
        .map(|g| g.marginal_cost)
        .chain(s.loads().iter().map(|l| l.shed_cost))
        .chain(s.reg_units().iter().map(|r| r.curtail_cost))
        .fold(0.0, f64::max);
    10.0 * c.max(1.0)
}

pub fn solve_ewdruc(
    inst: &UcInstance,
    samples: &SampleSet,
    cfg: &WassersteinConfig,
    ccg: &CcgConfig,
    solver: &Solver,
) -> Result<EwdrucSolution, RobustError> {
    let started = Instant::now();
    let data = samples.samples();
    let count = data.len();
    let weight = 1.0 / count as f64;
    let om = omega(data, &cfg.epsilon, &cfg.beta, &inst.w_box);
    let horizon = inst.horizon();

    let mut model = Model::new(Sense::Minimize);
    let stage = build_first_stage(&mut model, inst);
    let cap = lambda_cap(inst);
    let lambda = model.continuous(0.0, cap, cfg.epsilon);
    let eta: Vec<Vec<VarId>> = (0..count)
        .map(|_| (0..horizon).map(|_| model.free(weight)).collect())
        .collect();
    let mut blocks = BlockCache::default();
    for (s, w) in data.iter().enumerate() {
        for t in 0..horizon {
            let (mut cost, _) = blocks.get_or_add(&mut model, inst, &stage, t, &w[t]);
            cost.add_term(eta[s][t], -1.0);
            model.constrain_expr(cost, Relation::Le, 0.0);
        }
    }

    let mut lower = f64::NEG_INFINITY;
    let mut upper = f64::INFINITY;
    let mut best: Option<(CommitmentSolution, f64)> = None;
    let mut history = Vec::new();
    let mut iterations = 0;
    let mut cuts = 0;

    while iterations < ccg.max_iter {
        iterations += 1;
        let sol = solver.solve(&model).map_err(UcError::from)?;
        match sol.status {
            Status::Optimal => {}
            Status::Infeasible => return Err(RobustError::MasterInfeasible),
            Status::Limit if !sol.values.is_empty() => {}
            other => return Err(UcError::Status(other).into()),
        }
        lower = lower.max(sol.stats.best_bound.unwrap_or(sol.objective).min(sol.objective));
        let cand = stage.extract(&sol, model.num_rows(), model.num_cols());
        let lam = sol.value(lambda);

        let feas = feasibility_subproblem(inst, &cand.range, &inst.w_box, solver)?;
        let bad = feas.violated_periods(ccg.tol);
        let mut added = 0;
        if !bad.is_empty() {
            for t in bad {
                if blocks.get_or_add(&mut model, inst, &stage, t, &feas.witness[t]).1 {
                    added += 1;
                }
            }
        } else {
            let lps: Vec<PeriodLp> = (0..horizon)
                .map(|t| PeriodLp::dispatch(inst, t, &cand.range.period(t)))
                .collect();
            let jobs: Vec<(usize, usize)> = (0..count).flat_map(|s| (0..horizon).map(move |t| (s, t))).collect();
            let results: Vec<(usize, usize, Vec<f64>, f64)> = jobs
                .par_iter()
                .map(|&(s, t)| {
                    let lat = Lattice::around(&data[s][t], &om.lower[t], &om.upper[t], lam);
                    match lattice::maximize(&lps[t], &lat, solver)? {
                        LatticeMax::Value { w, value, .. } => Ok((s, t, w, value)),
                        LatticeMax::Infeasible { w } => Err(RobustError::Infeasible { period: t, witness: w }),
                    }
                })
                .collect::<Result<_, RobustError>>()?;
            let value = cand.schedule.fixed_cost(&inst.system)
                + lam * cfg.epsilon
                + weight * results.iter().map(|r| r.3).sum::<f64>();
            if value < upper {
                upper = value;
                let mut incumbent = cand.clone();
                incumbent.objective = value;
                best = Some((incumbent, lam));
            }
            for (s, t, w, v) in results {
                let current = sol.value(eta[s][t]);
                if v > current + ccg.tol * (1.0 + current.abs()) {
                    let dist: f64 = w.iter().zip(&data[s][t]).map(|(a, b)| (a - b).abs()).sum();
                    let (mut cost, _) = blocks.get_or_add(&mut model, inst, &stage, t, &w);
                    cost.add_term(lambda, -dist).add_term(eta[s][t], -1.0);
                    model.constrain_expr(cost, Relation::Le, 0.0);
                    added += 1;
                    cuts += 1;
                }
            }
            if cfg.epsilon > 0.0 && lam >= cap * (1.0 - 1e-9) {
                log::warn!("ewdruc: lambda at its cap {cap}");
            }
        }
        history.push((lower, upper));
        log::debug!("ewdruc iter {iterations}: lb {lower:.6} ub {upper:.6} cuts {cuts}");
        let gap = (upper - lower) / upper.abs().max(1.0);
        if gap <= ccg.gap || added == 0 {
            break;
        }
    }

    let (mut solution, lam) = best.ok_or(RobustError::Infeasible {
        period: usize::MAX,
        witness: Vec::new(),
    })?;
    solution.lower_bound = lower.min(upper);
    solution.rows = model.num_rows();
    solution.cols = model.num_cols();
    solution.wall_time = started.elapsed();
    Ok(EwdrucSolution {
        robust: RobustSolution {
            solution,
            upper_bound: upper,
            lower_bound: lower.min(upper),
            iterations,
            pool_size: blocks.len(),
            certified: true,
            history,
        },
        lambda: lam,
        omega: om,
    })
}
