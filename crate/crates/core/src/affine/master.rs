use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::constraints::{affine_constraint_system, AffineConstraintSystem, RangeSide, RobustConstraint};
use super::policy::{cost_coefficients, AffinePolicy, CostFunctions};
use crate::instance::UcInstance;
use crate::robust::add_feasibility_block;
use crate::solver::{LinExpr, Model, Relation, Sense, Solution, VarId};
use crate::uc::{build_first_stage, FirstStage};
use crate::wasserstein::{gv_bounds, omega, GvBounds, OmegaBox, SampleSet, WassersteinConfig};

/// Cuts accumulated by the outer loop: robust-constraint instances at
/// witness points, and recourse-feasibility scenarios.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CutPool {
    /// `(constraint index, w_t)`.
    pub affine: Vec<(usize, Vec<f64>)>,
    /// `(period, w_t)`.
    pub feasibility: Vec<(usize, Vec<f64>)>,
}

fn key(w: &[f64]) -> Vec<u64> {
    w.iter().map(|v| (v + 0.0).to_bits()).collect()
}

impl CutPool {
    /// Every robust constraint at the two Ω corners where `σ_t` is extreme.
    pub fn seeded(system: &AffineConstraintSystem, omega: &OmegaBox) -> Self {
        let mut pool = CutPool::default();
        for (i, c) in system.constraints.iter().enumerate() {
            let t = c.id.period;
            pool.affine.push((i, omega.lower[t].clone()));
            if omega.upper[t] != omega.lower[t] {
                pool.affine.push((i, omega.upper[t].clone()));
            }
        }
        pool
    }
}

#[derive(Clone, Debug)]
pub struct PolicyVars {
    /// `[period][local variable]`.
    pub slope: Vec<Vec<VarId>>,
    pub intercept: Vec<Vec<VarId>>,
}

/// The sample-size-invariant master MILP. Sample data enters only through
/// objective coefficients (`g^c`, `z̄^±`) and the dual rows' `S`.
#[derive(Clone, Debug)]
pub struct MasterModel {
    pub model: Model,
    pub stage: FirstStage,
    pub policy: PolicyVars,
    pub xi: VarId,
    pub xi_plus: Vec<VarId>,
    pub xi_minus: Vec<VarId>,
    pub system: AffineConstraintSystem,
    pub costs: CostFunctions,
    pub omega: OmegaBox,
    pub bounds: GvBounds,
    affine_keys: HashSet<(usize, Vec<u64>)>,
    feasibility_keys: HashSet<(usize, Vec<u64>)>,
}

/// Candidate read back from a master solution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualMultipliers {
    pub xi: f64,
    pub xi_plus: Vec<f64>,
    pub xi_minus: Vec<f64>,
}

impl MasterModel {
    pub fn rows(&self) -> usize {
        self.model.num_rows()
    }

    pub fn cols(&self) -> usize {
        self.model.num_cols()
    }

    /// Adds `c` at `w_t` as a deterministic linear row. Returns false for a
    /// duplicate `(constraint, witness)` pair.
    pub fn add_affine_cut(&mut self, index: usize, w_t: &[f64]) -> bool {
        if !self.affine_keys.insert((index, key(w_t))) {
            return false;
        }
        let c: &RobustConstraint = &self.system.constraints[index];
        let t = c.id.period;
        let sigma: f64 = w_t.iter().sum();
        let mut e = LinExpr::new();
        for (j, a) in &c.terms {
            e.add_term(self.policy.slope[t][*j], a * sigma)
                .add_term(self.policy.intercept[t][*j], *a);
        }
        match c.range {
            Some((g, RangeSide::Upper, b)) => {
                e.add_term(self.stage.ranges.upper[g][t], b);
            }
            Some((g, RangeSide::Lower, b)) => {
                e.add_term(self.stage.ranges.lower[g][t], b);
            }
            None => {}
        }
        let rhs = c.rhs + c.rhs_w.iter().map(|(r, g)| g * w_t[*r]).sum::<f64>();
        self.model.constrain_expr(e, Relation::Le, rhs);
        true
    }

    /// Adds an exact-recourse copy at `w_t` tied to the ranges.
    pub fn add_feasibility_cut(&mut self, inst: &UcInstance, t: usize, w_t: &[f64]) -> bool {
        if !self.feasibility_keys.insert((t, key(w_t))) {
            return false;
        }
        add_feasibility_block(&mut self.model, inst, &self.stage, t, w_t);
        true
    }

    pub fn policy_values(&self, sol: &Solution) -> AffinePolicy {
        let read = |vars: &Vec<Vec<VarId>>| -> Vec<Vec<f64>> {
            vars.iter()
                .map(|row| {
                    row.iter()
                        .map(|v| {
                            let x = sol.value(*v);
                            if x.abs() < 1e-10 {
                                0.0
                            } else {
                                x
                            }
                        })
                        .collect()
                })
                .collect()
        };
        AffinePolicy::from_local(self.system.layout, &read(&self.policy.slope), &read(&self.policy.intercept))
    }

    pub fn multipliers(&self, sol: &Solution) -> DualMultipliers {
        DualMultipliers {
            xi: sol.value(self.xi),
            xi_plus: self.xi_plus.iter().map(|v| sol.value(*v)).collect(),
            xi_minus: self.xi_minus.iter().map(|v| sol.value(*v)).collect(),
        }
    }
}

/// Master problem `min c1'u + g^c(a¹, a⁰) + εξ + Σ_t (z̄⁺_t ξ⁺_t + z̄⁻_t ξ⁻_t)`
/// over X^r(u), the balance identities, the dual rows
/// `ξ + S ξ^±_t >= ±c¹_t(a¹_t)`, and every cut in `cuts`.
pub fn build_master(inst: &UcInstance, samples: &SampleSet, cfg: &WassersteinConfig, cuts: &CutPool) -> MasterModel {
    let data = samples.samples();
    let count = data.len() as f64;
    let om = omega(data, &cfg.epsilon, &cfg.beta, &inst.w_box);
    let bounds = gv_bounds(data, &om);
    let system = affine_constraint_system(inst, &om);
    let costs = cost_coefficients(inst);
    let horizon = inst.horizon();
    let mean = samples.mean();

    let mut model = Model::new(Sense::Minimize);
    let stage = build_first_stage(&mut model, inst);
    let n = system.layout.len();
    let mut slope = Vec::with_capacity(horizon);
    let mut intercept = Vec::with_capacity(horizon);
    for t in 0..horizon {
        // g^c: c¹_t · mean_t(σ) + c⁰_t.
        let sigma_mean: f64 = mean[t].iter().sum();
        let pinned = system.balance[t].slope_target.is_none();
        slope.push(
            (0..n)
                .map(|j| {
                    if pinned {
                        model.continuous(0.0, 0.0, 0.0)
                    } else {
                        model.free(costs.coef[t][j] * sigma_mean)
                    }
                })
                .collect::<Vec<_>>(),
        );
        intercept.push((0..n).map(|j| model.free(costs.coef[t][j])).collect::<Vec<_>>());
    }
    let xi = model.continuous(0.0, f64::INFINITY, cfg.epsilon);
    let xi_plus: Vec<VarId> = (0..horizon)
        .map(|t| model.continuous(0.0, f64::INFINITY, bounds.plus[t]))
        .collect();
    let xi_minus: Vec<VarId> = (0..horizon)
        .map(|t| model.continuous(0.0, f64::INFINITY, bounds.minus[t]))
        .collect();
    for t in 0..horizon {
        let c1 = || (0..n).map(|j| (slope[t][j], costs.coef[t][j]));
        model.constrain(
            [(xi, 1.0), (xi_plus[t], count)].into_iter().chain(c1().map(|(v, c)| (v, -c))),
            Relation::Ge,
            0.0,
        );
        model.constrain([(xi, 1.0), (xi_minus[t], count)].into_iter().chain(c1()), Relation::Ge, 0.0);
    }
    for b in &system.balance {
        let t = b.period;
        if let Some(target) = b.slope_target {
            model.constrain(b.terms.iter().map(|(j, a)| (slope[t][*j], *a)), Relation::Eq, target);
        }
        model.constrain(
            b.terms.iter().map(|(j, a)| (intercept[t][*j], *a)),
            Relation::Eq,
            b.intercept_target,
        );
    }

    let mut master = MasterModel {
        model,
        stage,
        policy: PolicyVars { slope, intercept },
        xi,
        xi_plus,
        xi_minus,
        system,
        costs,
        omega: om,
        bounds,
        affine_keys: HashSet::new(),
        feasibility_keys: HashSet::new(),
    };
    for (i, w) in &cuts.affine {
        master.add_affine_cut(*i, w);
    }
    for (t, w) in &cuts.feasibility {
        master.add_feasibility_cut(inst, *t, w);
    }
    master
}
