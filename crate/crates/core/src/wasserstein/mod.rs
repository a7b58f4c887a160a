//! Ambiguity-set machinery: samples, the Ω box, the tightness witness for
//! its confidence bound, the discrete Wasserstein distance, the aggregated
//! worst-case LP with its disaggregated and dual forms, and the exact
//! distributionally robust UC.
//!
//! The algebra (Ω, bounds, the closed-form LP value, the sample-mean term,
//! the witness) is generic over [`Scalar`] so it can be checked in exact
//! rationals; LP-based routines work in `f64`.

mod distance;
mod ewdruc;
mod gv;
mod samples;
mod witness;

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;
use crate::system::IntervalBox;

pub use distance::{wasserstein_distance_discrete, DiscreteDistribution};
pub use ewdruc::{solve_ewdruc, EwdrucSolution};
pub use gv::{gv_disaggregated, gv_dual, gv_primal, GvDual};
pub use samples::{read_samples, read_samples_csv, write_samples, write_samples_csv, SampleError, SampleSet};
pub use witness::{tightness_witness, Witness, WitnessSkip};

/// Ω: the physical box intersected with the sample hull widened by
/// `ε max{S, β}`.
pub type OmegaBox<S = f64> = IntervalBox<S>;

/// Radius and confidence parameter of the ambiguity set.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WassersteinConfig {
    /// Radius in MW (1-norm transport units).
    pub epsilon: f64,
    /// Confidence parameter; Ω's worst-case coverage is `1 - 1/max{S, β}`.
    pub beta: f64,
}

impl Default for WassersteinConfig {
    fn default() -> Self {
        WassersteinConfig {
            epsilon: 0.01,
            beta: 100.0,
        }
    }
}

impl WassersteinConfig {
    pub fn new(epsilon: f64, beta: f64) -> Result<Self, String> {
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(format!("epsilon must be finite and >= 0, got {epsilon}"));
        }
        if !(beta > 1.0 && beta.is_finite()) {
            return Err(format!("beta must be finite and > 1, got {beta}"));
        }
        Ok(WassersteinConfig { epsilon, beta })
    }
}

/// `max{S, β}`.
pub fn widening_factor<S: Scalar>(count: usize, beta: &S) -> S {
    S::max_of(S::from_count(count), beta.clone())
}

/// Per entry: `[max(w̲, min_s ŵ - ε m), min(w̄, max_s ŵ + ε m)]` with
/// `m = max{S, β}`.
pub fn omega<S: Scalar>(samples: &[Vec<Vec<S>>], epsilon: &S, beta: &S, w: &IntervalBox<S>) -> OmegaBox<S> {
    assert!(!samples.is_empty(), "omega needs at least one sample");
    let reach = epsilon.clone() * widening_factor(samples.len(), beta);
    let mut lower = w.lower.clone();
    let mut upper = w.upper.clone();
    for t in 0..w.horizon() {
        for r in 0..w.lower[t].len() {
            let (mut lo, mut hi) = (samples[0][t][r].clone(), samples[0][t][r].clone());
            for s in &samples[1..] {
                lo = S::min_of(lo, s[t][r].clone());
                hi = S::max_of(hi, s[t][r].clone());
            }
            lower[t][r] = S::max_of(w.lower[t][r].clone(), lo - reach.clone());
            upper[t][r] = S::min_of(w.upper[t][r].clone(), hi + reach.clone());
        }
    }
    IntervalBox { lower, upper }
}

/// Capacities `z̄⁺_t`, `z̄⁻_t` of the aggregated worst-case LP.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GvBounds<S = f64> {
    pub plus: Vec<S>,
    pub minus: Vec<S>,
}

/// `z̄⁺_t = Σ_i Σ_s (Ω̄_it - ŵ^s_it)`, `z̄⁻_t = Σ_i Σ_s (ŵ^s_it - Ω̲_it)`.
pub fn gv_bounds<S: Scalar>(samples: &[Vec<Vec<S>>], omega: &OmegaBox<S>) -> GvBounds<S> {
    let horizon = omega.horizon();
    let mut plus = vec![S::zero(); horizon];
    let mut minus = vec![S::zero(); horizon];
    for s in samples {
        for t in 0..horizon {
            for (r, w) in s[t].iter().enumerate() {
                plus[t] = plus[t].clone() + (omega.upper[t][r].clone() - w.clone());
                minus[t] = minus[t].clone() + (w.clone() - omega.lower[t][r].clone());
            }
        }
    }
    GvBounds { plus, minus }
}

/// Sample-mean term `Σ_t (c¹_t · (1/S) Σ_s Σ_i ŵ^s_it + c⁰_t)`.
pub fn gc<S: Scalar>(c1: &[S], c0: &[S], samples: &[Vec<Vec<S>>]) -> S {
    let count = S::from_count(samples.len());
    let mut total = S::zero();
    for t in 0..c1.len() {
        let mut sum = S::zero();
        for s in samples {
            for w in &s[t] {
                sum = sum + w.clone();
            }
        }
        total = total + c1[t].clone() * sum / count.clone() + c0[t].clone();
    }
    total
}

#[cfg(test)]
mod tests;
