//! Backend-agnostic LP/MILP models.
//!
//! Every optimization problem in the crate is assembled as a [`Model`] and
//! handed to a [`Solver`], which dispatches to a concrete backend. Models are
//! plain data: they can be inspected (row/column counts), cloned, and solved
//! repeatedly.

mod highs_backend;

pub use highs_backend::HighsBackend;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VarId(usize);

impl VarId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ConId(usize);

impl ConId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Variable {
    pub lower: f64,
    pub upper: f64,
    pub integral: bool,
    pub obj: f64,
    pub name: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    /// Sorted by variable, no duplicates.
    pub terms: Vec<(VarId, f64)>,
    pub relation: Relation,
    pub rhs: f64,
    pub name: String,
}

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("inverted bounds [{lower}, {upper}]")]
    InvertedBounds { lower: f64, upper: f64 },
    #[error("unknown variable id {0}")]
    UnknownVariable(usize),
    #[error("non-finite coefficient or right-hand side")]
    NonFinite,
}

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("{backend} backend failure: {message}")]
    Backend {
        backend: &'static str,
        message: String,
    },
    #[error("unknown solver backend {0:?}")]
    UnknownBackend(String),
}

/// LP/MILP under construction.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    sense: Sense,
    vars: Vec<Variable>,
    cons: Vec<Constraint>,
    obj_offset: f64,
}

impl Model {
    pub fn new(sense: Sense) -> Self {
        Model {
            sense,
            vars: Vec::new(),
            cons: Vec::new(),
            obj_offset: 0.0,
        }
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    pub fn add_variable(
        &mut self,
        lower: f64,
        upper: f64,
        integral: bool,
        obj: f64,
    ) -> Result<VarId, ModelError> {
        self.add_named_variable(lower, upper, integral, obj, String::new())
    }

    pub fn add_named_variable(
        &mut self,
        lower: f64,
        upper: f64,
        integral: bool,
        obj: f64,
        name: impl Into<String>,
    ) -> Result<VarId, ModelError> {
        if lower.is_nan() || upper.is_nan() || !obj.is_finite() {
            return Err(ModelError::NonFinite);
        }
        if lower > upper {
            return Err(ModelError::InvertedBounds { lower, upper });
        }
        self.vars.push(Variable {
            lower,
            upper,
            integral,
            obj,
            name: name.into(),
        });
        Ok(VarId(self.vars.len() - 1))
    }

    /// Continuous variable; panics on inverted bounds.
    pub fn continuous(&mut self, lower: f64, upper: f64, obj: f64) -> VarId {
        self.add_variable(lower, upper, false, obj)
            .unwrap_or_else(|e| panic!("continuous variable: {e}"))
    }

    pub fn free(&mut self, obj: f64) -> VarId {
        self.continuous(f64::NEG_INFINITY, f64::INFINITY, obj)
    }

    pub fn binary(&mut self, obj: f64) -> VarId {
        self.add_variable(0.0, 1.0, true, obj).expect("binary bounds are valid")
    }

    pub fn add_constraint(
        &mut self,
        terms: impl IntoIterator<Item = (VarId, f64)>,
        relation: Relation,
        rhs: f64,
    ) -> Result<ConId, ModelError> {
        self.add_named_constraint(terms, relation, rhs, String::new())
    }

    pub fn add_named_constraint(
        &mut self,
        terms: impl IntoIterator<Item = (VarId, f64)>,
        relation: Relation,
        rhs: f64,
        name: impl Into<String>,
    ) -> Result<ConId, ModelError> {
        let mut terms: Vec<(VarId, f64)> = terms.into_iter().collect();
        for (v, c) in &terms {
            if v.0 >= self.vars.len() {
                return Err(ModelError::UnknownVariable(v.0));
            }
            if !c.is_finite() {
                return Err(ModelError::NonFinite);
            }
        }
        if !rhs.is_finite() {
            return Err(ModelError::NonFinite);
        }
        // Canonical form: one entry per variable, duplicate coefficients summed.
        terms.sort_by_key(|(v, _)| *v);
        let mut merged: Vec<(VarId, f64)> = Vec::with_capacity(terms.len());
        for (v, c) in terms {
            match merged.last_mut() {
                Some((last, acc)) if *last == v => *acc += c,
                _ => merged.push((v, c)),
            }
        }
        merged.retain(|(_, c)| *c != 0.0);
        self.cons.push(Constraint {
            terms: merged,
            relation,
            rhs,
            name: name.into(),
        });
        Ok(ConId(self.cons.len() - 1))
    }

    /// Adds a constraint whose variable ids are known to be valid; panics otherwise.
    pub fn constrain(
        &mut self,
        terms: impl IntoIterator<Item = (VarId, f64)>,
        relation: Relation,
        rhs: f64,
    ) -> ConId {
        self.add_constraint(terms, relation, rhs)
            .unwrap_or_else(|e| panic!("constraint: {e}"))
    }

    pub fn set_objective_coefficient(&mut self, var: VarId, obj: f64) {
        self.vars[var.0].obj = obj;
    }

    pub fn add_objective_coefficient(&mut self, var: VarId, delta: f64) {
        self.vars[var.0].obj += delta;
    }

    pub fn add_objective_constant(&mut self, c: f64) {
        self.obj_offset += c;
    }

    pub fn objective_constant(&self) -> f64 {
        self.obj_offset
    }

    pub fn set_bounds(&mut self, var: VarId, lower: f64, upper: f64) -> Result<(), ModelError> {
        if lower > upper {
            return Err(ModelError::InvertedBounds { lower, upper });
        }
        let v = &mut self.vars[var.0];
        v.lower = lower;
        v.upper = upper;
        Ok(())
    }

    pub fn variables(&self) -> &[Variable] {
        &self.vars
    }

    pub fn variable(&self, var: VarId) -> &Variable {
        &self.vars[var.0]
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.cons
    }

    pub fn num_rows(&self) -> usize {
        self.cons.len()
    }

    pub fn num_cols(&self) -> usize {
        self.vars.len()
    }

    pub fn is_mip(&self) -> bool {
        self.vars.iter().any(|v| v.integral)
    }

    /// Objective value of an arbitrary assignment (including the constant).
    pub fn evaluate_objective(&self, values: &[f64]) -> f64 {
        self.obj_offset + self.vars.iter().zip(values).map(|(v, x)| v.obj * x).sum::<f64>()
    }

    /// Largest bound or constraint violation of an assignment.
    pub fn max_violation(&self, values: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (v, x) in self.vars.iter().zip(values) {
            worst = worst.max(v.lower - x).max(x - v.upper);
        }
        for c in &self.cons {
            let lhs: f64 = c.terms.iter().map(|(v, a)| a * values[v.0]).sum();
            let viol = match c.relation {
                Relation::Le => lhs - c.rhs,
                Relation::Ge => c.rhs - lhs,
                Relation::Eq => (lhs - c.rhs).abs(),
            };
            worst = worst.max(viol);
        }
        worst
    }
}

/// Linear expression `sum(coef * var) + constant`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinExpr {
    pub terms: Vec<(VarId, f64)>,
    pub constant: f64,
}

impl LinExpr {
    pub fn new() -> Self {
        LinExpr::default()
    }

    pub fn constant(c: f64) -> Self {
        LinExpr {
            terms: Vec::new(),
            constant: c,
        }
    }

    pub fn var(v: VarId) -> Self {
        LinExpr {
            terms: vec![(v, 1.0)],
            constant: 0.0,
        }
    }

    pub fn add_term(&mut self, v: VarId, c: f64) -> &mut Self {
        self.terms.push((v, c));
        self
    }

    pub fn add_constant(&mut self, c: f64) -> &mut Self {
        self.constant += c;
        self
    }

    pub fn add_scaled(&mut self, other: &LinExpr, scale: f64) -> &mut Self {
        self.terms.extend(other.terms.iter().map(|(v, c)| (*v, c * scale)));
        self.constant += other.constant * scale;
        self
    }

    pub fn evaluate(&self, values: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|(v, c)| c * values[v.0]).sum::<f64>()
    }
}

impl Model {
    /// `expr (rel) rhs`, with the expression constant moved to the right-hand side.
    pub fn constrain_expr(&mut self, expr: LinExpr, relation: Relation, rhs: f64) -> ConId {
        self.constrain(expr.terms, relation, rhs - expr.constant)
    }

    /// Adds `expr` to the objective.
    pub fn add_objective_expr(&mut self, expr: &LinExpr, scale: f64) {
        for (v, c) in &expr.terms {
            self.vars[v.0].obj += c * scale;
        }
        self.obj_offset += expr.constant * scale;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveParams {
    /// Relative MIP gap.
    pub mip_gap: f64,
    pub feasibility_tol: f64,
    /// Seconds.
    pub time_limit: Option<f64>,
    pub seed: Option<u64>,
}

impl Default for SolveParams {
    fn default() -> Self {
        SolveParams {
            mip_gap: 1e-4,
            feasibility_tol: 1e-6,
            time_limit: None,
            seed: None,
        }
    }
}

impl SolveParams {
    pub fn with_mip_gap(mut self, gap: f64) -> Self {
        self.mip_gap = gap;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
    /// Time or iteration limit reached; primal values hold the incumbent if any.
    Limit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub rows: usize,
    pub cols: usize,
    pub wall_time: Duration,
    /// Best proven bound for MILPs.
    pub best_bound: Option<f64>,
    pub mip_gap: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Solution {
    pub status: Status,
    pub objective: f64,
    pub values: Vec<f64>,
    /// Sensitivities of the optimal value to each right-hand side (LP only).
    pub duals: Option<Vec<f64>>,
    pub stats: SolveStats,
}

impl Solution {
    pub fn value(&self, var: VarId) -> f64 {
        self.values[var.0]
    }

    pub fn dual(&self, con: ConId) -> Option<f64> {
        self.duals.as_ref().map(|d| d[con.0])
    }

    pub fn is_optimal(&self) -> bool {
        self.status == Status::Optimal
    }

    /// Objective of the LP dual built from the row duals and the implied
    /// reduced costs. Equals [`Solution::objective`] at an optimal basis.
    pub fn dual_objective(&self, model: &Model) -> Option<f64> {
        let y = self.duals.as_ref()?;
        let mut reduced: Vec<f64> = model.vars.iter().map(|v| v.obj).collect();
        let mut value = model.obj_offset;
        for (c, &yr) in model.cons.iter().zip(y) {
            value += yr * c.rhs;
            for (v, a) in &c.terms {
                reduced[v.0] -= a * yr;
            }
        }
        let scale = 1.0 + reduced.iter().fold(0.0f64, |m, d| m.max(d.abs()));
        for (v, d) in model.vars.iter().zip(reduced) {
            if d.abs() <= 1e-9 * scale {
                continue;
            }
            // Minimization: positive reduced cost pins the variable at its lower bound.
            let at_lower = (d > 0.0) == (model.sense == Sense::Minimize);
            let bound = if at_lower { v.lower } else { v.upper };
            if bound.is_finite() {
                value += d * bound;
            }
        }
        Some(value)
    }
}

pub trait Backend: Send + Sync {
    fn name(&self) -> &'static str;
    fn solve(&self, model: &Model, params: &SolveParams) -> Result<Solution, SolverError>;
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    #[default]
    Highs,
}

impl BackendKind {
    pub fn instantiate(self) -> Arc<dyn Backend> {
        match self {
            BackendKind::Highs => Arc::new(HighsBackend),
        }
    }
}

impl FromStr for BackendKind {
    type Err = SolverError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "highs" => Ok(BackendKind::Highs),
            other => Err(SolverError::UnknownBackend(other.to_string())),
        }
    }
}

impl fmt::Display for BackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BackendKind::Highs => f.write_str("highs"),
        }
    }
}

/// A backend plus default parameters. Cheap to clone and share across threads.
#[derive(Clone)]
pub struct Solver {
    backend: Arc<dyn Backend>,
    pub params: SolveParams,
}

impl fmt::Debug for Solver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Solver")
            .field("backend", &self.backend.name())
            .field("params", &self.params)
            .finish()
    }
}

impl Default for Solver {
    fn default() -> Self {
        Solver::new(BackendKind::Highs, SolveParams::default())
    }
}

impl Solver {
    pub fn new(kind: BackendKind, params: SolveParams) -> Self {
        Solver {
            backend: kind.instantiate(),
            params,
        }
    }

    pub fn with_backend(backend: Arc<dyn Backend>, params: SolveParams) -> Self {
        Solver { backend, params }
    }

    pub fn with_params(&self, params: SolveParams) -> Self {
        Solver {
            backend: Arc::clone(&self.backend),
            params,
        }
    }

    pub fn backend_name(&self) -> &'static str {
        self.backend.name()
    }

    pub fn solve(&self, model: &Model) -> Result<Solution, SolverError> {
        self.backend.solve(model, &self.params)
    }

    pub fn solve_with(&self, model: &Model, params: &SolveParams) -> Result<Solution, SolverError> {
        self.backend.solve(model, params)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solver() -> Solver {
        Solver::default()
    }

    #[test]
    fn binary_and_free_variables() {
        let mut m = Model::new(Sense::Minimize);
        let b = m.add_variable(0.0, 1.0, true, 1.0).unwrap();
        let f = m.add_variable(f64::NEG_INFINITY, f64::INFINITY, false, 0.0).unwrap();
        assert!(m.variable(b).integral);
        assert!(m.variable(f).lower.is_infinite());
        assert!(m.is_mip());
    }

    #[test]
    fn inverted_bounds_rejected() {
        let mut m = Model::new(Sense::Minimize);
        assert_eq!(
            m.add_variable(5.0, 3.0, false, 0.0),
            Err(ModelError::InvertedBounds { lower: 5.0, upper: 3.0 })
        );
    }

    #[test]
    fn unknown_variable_rejected() {
        let mut m = Model::new(Sense::Minimize);
        let mut other = Model::new(Sense::Minimize);
        other.free(0.0);
        let foreign = other.free(0.0);
        assert_eq!(
            m.add_constraint([(foreign, 1.0)], Relation::Le, 1.0),
            Err(ModelError::UnknownVariable(1))
        );
    }

    #[test]
    fn duplicate_terms_are_summed() {
        let mut m = Model::new(Sense::Minimize);
        let x = m.continuous(0.0, 10.0, 0.0);
        let y = m.continuous(0.0, 10.0, 0.0);
        let c = m.constrain([(y, 1.0), (x, 1.0), (x, 2.0)], Relation::Le, 4.0);
        assert_eq!(m.constraints()[c.index()].terms, vec![(x, 3.0), (y, 1.0)]);
    }

    #[test]
    fn two_binaries_with_packing_row_is_feasible() {
        let mut m = Model::new(Sense::Maximize);
        let x = m.binary(1.0);
        let y = m.binary(1.0);
        m.constrain([(x, 1.0), (y, 1.0)], Relation::Le, 1.0);
        let s = solver().solve(&m).unwrap();
        assert_eq!(s.status, Status::Optimal);
        assert!((s.objective - 1.0).abs() < 1e-9);
    }

    #[test]
    fn empty_row_with_impossible_rhs_is_infeasible() {
        let mut m = Model::new(Sense::Minimize);
        m.continuous(0.0, 1.0, 1.0);
        m.constrain([], Relation::Le, -1.0);
        assert_eq!(solver().solve(&m).unwrap().status, Status::Infeasible);
    }

    #[test]
    fn one_variable_lp_with_dual() {
        let mut m = Model::new(Sense::Minimize);
        let x = m.free(1.0);
        let c = m.constrain([(x, 1.0)], Relation::Ge, 3.0);
        let s = solver().solve(&m).unwrap();
        assert_eq!(s.status, Status::Optimal);
        assert!((s.objective - 3.0).abs() < 1e-9);
        assert!((s.dual(c).unwrap() - 1.0).abs() < 1e-9);
        assert!((s.dual_objective(&m).unwrap() - 3.0).abs() < 1e-9);
    }

    #[test]
    fn maximize_dual_is_rhs_sensitivity() {
        let mut m = Model::new(Sense::Maximize);
        let x = m.continuous(0.0, f64::INFINITY, 2.0);
        let c = m.constrain([(x, 1.0)], Relation::Le, 2.0);
        let s = solver().solve(&m).unwrap();
        assert!((s.objective - 4.0).abs() < 1e-9);
        assert!((s.dual(c).unwrap() - 2.0).abs() < 1e-9);
        assert!((s.dual_objective(&m).unwrap() - 4.0).abs() < 1e-9);
    }

    #[test]
    fn integer_maximization() {
        let mut m = Model::new(Sense::Maximize);
        let x = m.add_variable(0.0, f64::INFINITY, true, 1.0).unwrap();
        m.constrain([(x, 1.0)], Relation::Le, 2.0);
        let s = solver().solve(&m).unwrap();
        assert!((s.objective - 2.0).abs() < 1e-9);
        assert!(s.duals.is_none());
    }

    #[test]
    fn contradictory_bounds_rows_infeasible() {
        let mut m = Model::new(Sense::Minimize);
        let x = m.free(0.0);
        m.constrain([(x, 1.0)], Relation::Le, 0.0);
        m.constrain([(x, 1.0)], Relation::Ge, 1.0);
        assert_eq!(solver().solve(&m).unwrap().status, Status::Infeasible);
    }

    #[test]
    fn unbounded_detected() {
        let mut m = Model::new(Sense::Minimize);
        let x = m.free(1.0);
        m.constrain([(x, 1.0)], Relation::Le, 0.0);
        assert_eq!(solver().solve(&m).unwrap().status, Status::Unbounded);
    }

    #[test]
    fn objective_constant_is_reported() {
        let mut m = Model::new(Sense::Minimize);
        let x = m.continuous(1.0, 2.0, 1.0);
        m.add_objective_constant(10.0);
        let s = solver().solve(&m).unwrap();
        assert!((s.objective - 11.0).abs() < 1e-9);
        assert!((s.value(x) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn backend_kind_parses() {
        assert_eq!("HiGHS".parse::<BackendKind>().unwrap(), BackendKind::Highs);
        assert!("cplex".parse::<BackendKind>().is_err());
    }
}
