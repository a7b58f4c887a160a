use serde::{Deserialize, Serialize};

use crate::solver::{LinExpr, Model, Relation, Solution, VarId};
use crate::system::SystemData;

/// Binary on/start-up/shut-down variables, `[generator][period]`.
#[derive(Clone, Debug)]
pub struct CommitmentVars {
    pub on: Vec<Vec<VarId>>,
    pub startup: Vec<Vec<VarId>>,
    pub shutdown: Vec<Vec<VarId>>,
}

/// Commitment decisions, `[generator][period]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    pub on: Vec<Vec<bool>>,
    pub startup: Vec<Vec<bool>>,
    pub shutdown: Vec<Vec<bool>>,
}

impl Schedule {
    /// No-load, start-up and shut-down cost of the schedule.
    pub fn fixed_cost(&self, system: &SystemData) -> f64 {
        system
            .generators()
            .iter()
            .enumerate()
            .map(|(g, gen)| {
                (0..system.horizon())
                    .map(|t| {
                        let b = |x: bool| if x { 1.0 } else { 0.0 };
                        gen.no_load_cost * b(self.on[g][t])
                            + gen.startup_cost * b(self.startup[g][t])
                            + gen.shutdown_cost * b(self.shutdown[g][t])
                    })
                    .sum::<f64>()
            })
            .sum()
    }

    pub fn all_off(system: &SystemData) -> Self {
        let off = vec![vec![false; system.horizon()]; system.generators().len()];
        Schedule {
            on: off.clone(),
            startup: off.clone(),
            shutdown: off,
        }
    }
}

impl CommitmentVars {
    /// `u^o_{g,t-1}` as an expression; the initial status is a constant.
    pub fn on_prev(&self, system: &SystemData, g: usize, t: usize) -> LinExpr {
        if t == 0 {
            LinExpr::constant(if system.generators()[g].initial_on { 1.0 } else { 0.0 })
        } else {
            LinExpr::var(self.on[g][t - 1])
        }
    }

    pub fn extract(&self, sol: &Solution) -> Schedule {
        let read = |vars: &Vec<Vec<VarId>>| {
            vars.iter()
                .map(|row| row.iter().map(|v| sol.value(*v) > 0.5).collect())
                .collect()
        };
        Schedule {
            on: read(&self.on),
            startup: read(&self.startup),
            shutdown: read(&self.shutdown),
        }
    }

    /// Fixes all binaries to a given schedule.
    pub fn fix(&self, model: &mut Model, schedule: &Schedule) {
        let pairs = [
            (&self.on, &schedule.on),
            (&self.startup, &schedule.startup),
            (&self.shutdown, &schedule.shutdown),
        ];
        for (vars, values) in pairs {
            for (row, vals) in vars.iter().zip(values) {
                for (v, &x) in row.iter().zip(vals) {
                    let b = if x { 1.0 } else { 0.0 };
                    model.set_bounds(*v, b, b).expect("binary fix");
                }
            }
        }
    }
}

/// Adds the commitment binaries with their fixed costs, the status logic
/// and the minimum up/down time constraints.
pub fn build_commitment_constraints(model: &mut Model, system: &SystemData) -> CommitmentVars {
    let horizon = system.horizon();
    let gens = system.generators();
    let mut vars = CommitmentVars {
        on: Vec::with_capacity(gens.len()),
        startup: Vec::with_capacity(gens.len()),
        shutdown: Vec::with_capacity(gens.len()),
    };
    for gen in gens {
        vars.on.push((0..horizon).map(|_| model.binary(gen.no_load_cost)).collect());
        vars.startup.push((0..horizon).map(|_| model.binary(gen.startup_cost)).collect());
        vars.shutdown.push((0..horizon).map(|_| model.binary(gen.shutdown_cost)).collect());
    }

    for (g, gen) in gens.iter().enumerate() {
        for t in 0..horizon {
            let on = vars.on[g][t];
            let up = vars.startup[g][t];
            let down = vars.shutdown[g][t];
            let prev = vars.on_prev(system, g, t);

            // u^u_t >= u_t - u_{t-1}
            let mut e = LinExpr::var(up);
            e.add_term(on, -1.0).add_scaled(&prev, 1.0);
            model.constrain_expr(e, Relation::Ge, 0.0);
            // u^d_t >= u_{t-1} - u_t
            let mut e = LinExpr::var(down);
            e.add_term(on, 1.0).add_scaled(&prev, -1.0);
            model.constrain_expr(e, Relation::Ge, 0.0);
            // u_t + u^d_t <= 1
            model.constrain([(on, 1.0), (down, 1.0)], Relation::Le, 1.0);
            // u_{t-1} + u^u_t <= 1
            let mut e = prev.clone();
            e.add_term(up, 1.0);
            model.constrain_expr(e, Relation::Le, 1.0);

            // Minimum up time: u_t - u_{t-1} <= u_tau for tau in [t, t + T^u - 1].
            // tau = t is implied, so start at t + 1.
            for tau in (t + 1)..(t + gen.min_up).min(horizon) {
                let mut e = LinExpr::var(on);
                e.add_scaled(&prev, -1.0).add_term(vars.on[g][tau], -1.0);
                model.constrain_expr(e, Relation::Le, 0.0);
            }
            // Minimum down time: u_{t-1} - u_t <= 1 - u_tau.
            for tau in (t + 1)..(t + gen.min_down).min(horizon) {
                let mut e = prev.clone();
                e.add_term(on, -1.0).add_term(vars.on[g][tau], 1.0);
                model.constrain_expr(e, Relation::Le, 1.0);
            }
        }
    }
    vars
}
