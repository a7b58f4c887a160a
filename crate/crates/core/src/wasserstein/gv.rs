//! The worst-case variance term of the affine cost: aggregated LP (closed
//! form), the per-sample LP it aggregates, and its LP dual.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::{GvBounds, OmegaBox};
use crate::scalar::Scalar;
use crate::solver::{Model, Relation, Sense, Solver, SolverError, Status};

/// Optimal value of
/// `max (1/S) Σ_t c_t (z⁺_t - z⁻_t)` s.t. `(1/S) Σ_t (z⁺_t + z⁻_t) <= ε`,
/// `0 <= z^± <= z̄^±`.
///
/// Only the sign-matching variable of each period can pay off, and every
/// unit of budget buys `|c_t|/S`, so the LP is a fractional knapsack solved
/// greedily by decreasing `|c_t|`.
pub fn gv_primal<S: Scalar>(c1: &[S], bounds: &GvBounds<S>, epsilon: &S, count: usize) -> S {
    let n = S::from_count(count);
    let mut items: Vec<(S, S)> = c1
        .iter()
        .enumerate()
        .filter_map(|(t, c)| match c.partial_cmp(&S::zero()) {
            Some(Ordering::Greater) => Some((c.clone(), bounds.plus[t].clone())),
            Some(Ordering::Less) => Some((-c.clone(), bounds.minus[t].clone())),
            _ => None,
        })
        .collect();
    items.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(Ordering::Equal));
    let mut budget = n.clone() * epsilon.clone();
    let mut value = S::zero();
    for (gain, cap) in items {
        if budget <= S::zero() {
            break;
        }
        let take = S::min_of(cap, budget.clone());
        budget = budget - take.clone();
        value = value + gain * take;
    }
    value / n
}

fn lp_error(solver: &Solver, what: &str, status: Status) -> SolverError {
    SolverError::Backend {
        backend: solver.backend_name(),
        message: format!("{what} ended with {status:?}"),
    }
}

/// The per-sample form: `max (1/S) Σ_{i,s,t} c_t v^s_it` over
/// `v̲^s_it <= v^s_it <= v̄^s_it` with `(1/S) Σ |v^s_it| <= ε`. The absolute
/// values are modelled by epigraph variables.
pub fn gv_disaggregated(
    c1: &[f64],
    samples: &[Vec<Vec<f64>>],
    omega: &OmegaBox<f64>,
    epsilon: f64,
    solver: &Solver,
) -> Result<f64, SolverError> {
    let n = samples.len() as f64;
    let mut m = Model::new(Sense::Maximize);
    let mut budget = Vec::new();
    for s in samples {
        for (t, row) in s.iter().enumerate() {
            for (r, w) in row.iter().enumerate() {
                let lo = (omega.lower[t][r] - w).min(0.0);
                let hi = (omega.upper[t][r] - w).max(0.0);
                let v = m.continuous(lo, hi, c1[t] / n);
                let a = m.continuous(0.0, f64::INFINITY, 0.0);
                m.constrain([(a, 1.0), (v, -1.0)], Relation::Ge, 0.0);
                m.constrain([(a, 1.0), (v, 1.0)], Relation::Ge, 0.0);
                budget.push((a, 1.0 / n));
            }
        }
    }
    m.constrain(budget, Relation::Le, epsilon);
    let sol = solver.solve(&m)?;
    match sol.status {
        Status::Optimal => Ok(sol.objective),
        other => Err(lp_error(solver, "disaggregated LP", other)),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GvDual {
    pub value: f64,
    pub xi: f64,
    pub xi_plus: Vec<f64>,
    pub xi_minus: Vec<f64>,
}

/// `min εξ + Σ_t (z̄⁺_t ξ⁺_t + z̄⁻_t ξ⁻_t)` s.t. `ξ + S ξ⁺_t >= c_t`,
/// `ξ + S ξ⁻_t >= -c_t`, all variables nonnegative.
pub fn gv_dual(
    c1: &[f64],
    bounds: &GvBounds<f64>,
    epsilon: f64,
    count: usize,
    solver: &Solver,
) -> Result<GvDual, SolverError> {
    let n = count as f64;
    let mut m = Model::new(Sense::Minimize);
    let xi = m.continuous(0.0, f64::INFINITY, epsilon);
    let plus: Vec<_> = bounds.plus.iter().map(|z| m.continuous(0.0, f64::INFINITY, *z)).collect();
    let minus: Vec<_> = bounds.minus.iter().map(|z| m.continuous(0.0, f64::INFINITY, *z)).collect();
    for (t, c) in c1.iter().enumerate() {
        m.constrain([(xi, 1.0), (plus[t], n)], Relation::Ge, *c);
        m.constrain([(xi, 1.0), (minus[t], n)], Relation::Ge, -c);
    }
    let sol = solver.solve(&m)?;
    match sol.status {
        Status::Optimal => Ok(GvDual {
            value: sol.objective,
            xi: sol.value(xi),
            xi_plus: plus.iter().map(|v| sol.value(*v)).collect(),
            xi_minus: minus.iter().map(|v| sol.value(*v)).collect(),
        }),
        other => Err(lp_error(solver, "dual LP", other)),
    }
}
