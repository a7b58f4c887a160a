//! Maximisation of a single-period LP value over a finite lattice of error
//! vectors, minus a linear penalty on the moves.
//!
//! Each coordinate starts at `base[r]` and may take at most one of its moves
//! `base[r] + delta`. With moves to the two box ends this is the vertex set
//! of a box; with moves to both ends from a sample point it is the candidate
//! set of the transport-penalised subproblem. The LP value is convex in its
//! right-hand side, so on each coordinate segment the optimum sits at an end.

use crate::solver::{Model, Relation, Sense, Solver, Status, VarId};
use crate::uc::{PeriodLp, PeriodOutcome, UcError};

#[derive(Clone, Debug)]
pub struct Move {
    pub delta: f64,
    pub penalty: f64,
}

#[derive(Clone, Debug)]
pub struct Lattice {
    pub base: Vec<f64>,
    /// Moves per coordinate; at most one is taken.
    pub moves: Vec<Vec<Move>>,
}

impl Lattice {
    /// Vertex set of the box `[lower, upper]`.
    pub fn box_vertices(lower: &[f64], upper: &[f64]) -> Self {
        Lattice {
            base: lower.to_vec(),
            moves: lower
                .iter()
                .zip(upper)
                .map(|(lo, hi)| {
                    if hi > lo {
                        vec![Move { delta: hi - lo, penalty: 0.0 }]
                    } else {
                        Vec::new()
                    }
                })
                .collect(),
        }
    }

    /// `{lower, center, upper}` per coordinate with penalty `lambda * |w - center|`.
    pub fn around(center: &[f64], lower: &[f64], upper: &[f64], lambda: f64) -> Self {
        Lattice {
            base: center.to_vec(),
            moves: (0..center.len())
                .map(|r| {
                    [upper[r] - center[r], lower[r] - center[r]]
                        .into_iter()
                        .filter(|d| *d != 0.0)
                        .map(|d| Move {
                            delta: d,
                            penalty: lambda * d.abs(),
                        })
                        .collect()
                })
                .collect(),
        }
    }

    pub fn size(&self) -> f64 {
        self.moves.iter().map(|m| (m.len() + 1) as f64).product()
    }

    /// All lattice points with their penalties.
    pub fn points(&self) -> Vec<(Vec<f64>, f64)> {
        let mut out = vec![(self.base.clone(), 0.0)];
        for (r, moves) in self.moves.iter().enumerate() {
            let mut next = Vec::with_capacity(out.len() * (moves.len() + 1));
            for (w, pen) in &out {
                next.push((w.clone(), *pen));
                for m in moves {
                    let mut w2 = w.clone();
                    w2[r] += m.delta;
                    next.push((w2, pen + m.penalty));
                }
            }
            out = next;
        }
        out
    }
}

/// Result of maximising `LP(w) - penalty(w)` over a lattice.
#[derive(Clone, Debug)]
pub enum LatticeMax {
    Value { w: Vec<f64>, value: f64, lp_value: f64 },
    /// The LP is infeasible at `w`.
    Infeasible { w: Vec<f64> },
}

/// Largest lattice for which points are enumerated; beyond it the dualised
/// MILP is used.
pub const ENUMERATION_LIMIT: f64 = 4096.0;

pub fn maximize(lp: &PeriodLp, lattice: &Lattice, solver: &Solver) -> Result<LatticeMax, UcError> {
    if lattice.size() <= ENUMERATION_LIMIT {
        maximize_by_enumeration(lp, lattice, solver)
    } else {
        maximize_by_dual_milp(lp, lattice, solver)
    }
}

pub fn maximize_by_enumeration(lp: &PeriodLp, lattice: &Lattice, solver: &Solver) -> Result<LatticeMax, UcError> {
    let mut best: Option<(Vec<f64>, f64, f64)> = None;
    for (w, pen) in lattice.points() {
        match lp.solve(solver, &w)? {
            PeriodOutcome::Infeasible => return Ok(LatticeMax::Infeasible { w }),
            PeriodOutcome::Feasible { cost, .. } => {
                let value = cost - pen;
                if best.as_ref().map_or(true, |b| value > b.1) {
                    best = Some((w, value, cost));
                }
            }
        }
    }
    let (w, value, lp_value) = best.expect("lattice has at least its base point");
    Ok(LatticeMax::Value { w, value, lp_value })
}

/// Dual bound `M = 10 (max |c| + max |rhs| + max |w|)`, a heuristic that the tests
/// cross-check against enumeration.
pub fn big_m(lp: &PeriodLp, lattice: &Lattice) -> f64 {
    let (c, b) = lp.magnitude();
    let w_scale = lattice
        .base
        .iter()
        .zip(&lattice.moves)
        .map(|(b, ms)| ms.iter().fold(b.abs(), |a, m| a.max((b + m.delta).abs())))
        .fold(0.0, f64::max);
    10.0 * (c + b + w_scale).max(1.0)
}

/// Maximises the LP dual over the lattice as one MILP. Bilinear products of
/// a binary move indicator and a bounded dual are linearised exactly.
pub fn maximize_by_dual_milp(lp: &PeriodLp, lattice: &Lattice, solver: &Solver) -> Result<LatticeMax, UcError> {
    let m_dual = big_m(lp, lattice);
    let mut model = Model::new(Sense::Maximize);

    let z: Vec<Vec<VarId>> = lattice
        .moves
        .iter()
        .map(|ms| ms.iter().map(|m| model.binary(-m.penalty)).collect())
        .collect();
    for zs in &z {
        if zs.len() > 1 {
            model.constrain(zs.iter().map(|v| (*v, 1.0)), Relation::Le, 1.0);
        }
    }

    // Row duals, sign-restricted by relation for a minimisation primal.
    let y: Vec<(VarId, f64, f64)> = lp
        .rows
        .iter()
        .map(|row| {
            let (lo, hi) = match row.relation {
                Relation::Ge => (0.0, m_dual),
                Relation::Le => (-m_dual, 0.0),
                Relation::Eq => (-m_dual, m_dual),
            };
            let base_rhs = row.rhs_at(&lattice.base);
            (model.continuous(lo, hi, base_rhs), lo, hi)
        })
        .collect();

    // Bound duals: alpha for lower bounds, beta for finite upper bounds.
    let mut column: Vec<Vec<(VarId, f64)>> = vec![Vec::new(); lp.vars.len()];
    for (i, row) in lp.rows.iter().enumerate() {
        for (j, a) in &row.terms {
            column[*j].push((y[i].0, *a));
        }
    }
    for (j, &(lo, hi, c)) in lp.vars.iter().enumerate() {
        let alpha = model.continuous(0.0, f64::INFINITY, lo);
        column[j].push((alpha, 1.0));
        if hi.is_finite() {
            let beta = model.continuous(0.0, f64::INFINITY, -hi);
            column[j].push((beta, -1.0));
        }
        model.constrain(column[j].iter().copied(), Relation::Eq, c);
    }

    // rhs_i(w) y_i = rhs_i(base) y_i + sum_r g_ir sum_k delta_k z_rk y_i.
    for (i, row) in lp.rows.iter().enumerate() {
        let (yi, lo, hi) = y[i];
        for &(r, g) in &row.rhs_w {
            for (k, mv) in lattice.moves[r].iter().enumerate() {
                let coef = g * mv.delta;
                if coef == 0.0 {
                    continue;
                }
                let zk = z[r][k];
                let p = model.continuous(lo, hi, coef);
                model.constrain([(p, 1.0), (zk, -hi)], Relation::Le, 0.0);
                model.constrain([(p, 1.0), (zk, -lo)], Relation::Ge, 0.0);
                model.constrain([(p, 1.0), (yi, -1.0), (zk, -lo)], Relation::Le, -lo);
                model.constrain([(p, 1.0), (yi, -1.0), (zk, -hi)], Relation::Ge, -hi);
            }
        }
    }

    let sol = solver.solve(&model)?;
    if sol.status != Status::Optimal && !(sol.status == Status::Limit && !sol.values.is_empty()) {
        return Err(UcError::Status(sol.status));
    }
    let mut w = lattice.base.clone();
    let mut penalty = 0.0;
    for (r, ms) in lattice.moves.iter().enumerate() {
        for (k, mv) in ms.iter().enumerate() {
            if sol.value(z[r][k]) > 0.5 {
                w[r] += mv.delta;
                penalty += mv.penalty;
            }
        }
    }
    // Re-evaluate the primal at the chosen point; this also exposes
    // infeasibility hidden by the dual bound.
    match lp.solve(solver, &w)? {
        PeriodOutcome::Infeasible => Ok(LatticeMax::Infeasible { w }),
        PeriodOutcome::Feasible { cost, .. } => Ok(LatticeMax::Value {
            value: cost - penalty,
            lp_value: cost,
            w,
        }),
    }
}
