use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;
use crate::solver::{Model, Relation, Sense, Solver, SolverError, Status};

/// Finitely supported distribution; atoms are flattened error vectors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscreteDistribution<S = f64> {
    pub atoms: Vec<Vec<S>>,
    pub probs: Vec<S>,
}

impl<S: Scalar> DiscreteDistribution<S> {
    /// Checks nonnegative probabilities summing to one within `tol`.
    pub fn new(atoms: Vec<Vec<S>>, probs: Vec<S>, tol: S) -> Result<Self, String> {
        if atoms.len() != probs.len() || atoms.is_empty() {
            return Err("atoms and probabilities must be nonempty and of equal length".into());
        }
        if probs.iter().any(|p| *p < S::zero()) {
            return Err("negative probability".into());
        }
        let total = probs.iter().fold(S::zero(), |a, p| a + p.clone());
        if (total - S::one()).abs() > tol {
            return Err("probabilities do not sum to one".into());
        }
        Ok(DiscreteDistribution { atoms, probs })
    }

    /// Uniform mixture of the samples (each `[period][reg_unit]`).
    pub fn empirical(samples: &[Vec<Vec<S>>]) -> Self {
        let p = S::one() / S::from_count(samples.len());
        DiscreteDistribution {
            atoms: samples.iter().map(|s| s.iter().flatten().cloned().collect()).collect(),
            probs: vec![p; samples.len()],
        }
    }

    pub fn to_f64(&self) -> DiscreteDistribution<f64> {
        DiscreteDistribution {
            atoms: self
                .atoms
                .iter()
                .map(|a| a.iter().map(Scalar::to_f64_lossy).collect())
                .collect(),
            probs: self.probs.iter().map(Scalar::to_f64_lossy).collect(),
        }
    }
}

pub(crate) fn l1<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter()
        .zip(b)
        .fold(S::zero(), |acc, (x, y)| acc + (x.clone() - y.clone()).abs())
}

/// 1-Wasserstein distance with 1-norm ground cost, as a transport LP.
pub fn wasserstein_distance_discrete(
    p: &DiscreteDistribution<f64>,
    q: &DiscreteDistribution<f64>,
    solver: &Solver,
) -> Result<f64, SolverError> {
    let mut m = Model::new(Sense::Minimize);
    let plan: Vec<Vec<_>> = p
        .atoms
        .iter()
        .map(|a| q.atoms.iter().map(|b| m.continuous(0.0, f64::INFINITY, l1(a, b))).collect())
        .collect();
    for (i, row) in plan.iter().enumerate() {
        m.constrain(row.iter().map(|v| (*v, 1.0)), Relation::Eq, p.probs[i]);
    }
    for j in 0..q.atoms.len() {
        m.constrain(plan.iter().map(|row| (row[j], 1.0)), Relation::Eq, q.probs[j]);
    }
    let sol = solver.solve(&m)?;
    match sol.status {
        Status::Optimal => Ok(sol.objective),
        other => Err(SolverError::Backend {
            backend: solver.backend_name(),
            message: format!("transport LP ended with {other:?}"),
        }),
    }
}
