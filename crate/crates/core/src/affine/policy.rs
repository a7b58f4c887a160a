use serde::{Deserialize, Serialize};

use crate::instance::UcInstance;
use crate::uc::DispatchLayout;

/// Recourse decisions as affine functions of the period-total error
/// `σ_t = Σ_i w_it`: `x_jt(w_t) = slope_jt σ_t + intercept_jt`.
///
/// Each family is indexed `[unit][period]`: generators, loads (shedding)
/// and REG units (curtailment).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffinePolicy {
    pub gen_slope: Vec<Vec<f64>>,
    pub gen_intercept: Vec<Vec<f64>>,
    pub shed_slope: Vec<Vec<f64>>,
    pub shed_intercept: Vec<Vec<f64>>,
    pub curtail_slope: Vec<Vec<f64>>,
    pub curtail_intercept: Vec<Vec<f64>>,
}

impl AffinePolicy {
    pub fn zeros(inst: &UcInstance) -> Self {
        let h = inst.horizon();
        let z = |n: usize| vec![vec![0.0; h]; n];
        AffinePolicy {
            gen_slope: z(inst.num_gens()),
            gen_intercept: z(inst.num_gens()),
            shed_slope: z(inst.num_loads()),
            shed_intercept: z(inst.num_loads()),
            curtail_slope: z(inst.num_regs()),
            curtail_intercept: z(inst.num_regs()),
        }
    }

    /// Builds a policy from per-period vectors in dispatch-layout order.
    pub fn from_local(layout: DispatchLayout, slopes: &[Vec<f64>], intercepts: &[Vec<f64>]) -> Self {
        let split = |values: &[Vec<f64>], range: std::ops::Range<usize>| -> Vec<Vec<f64>> {
            range.map(|j| values.iter().map(|v| v[j]).collect()).collect()
        };
        let (g, l) = (layout.gens, layout.gens + layout.loads);
        AffinePolicy {
            gen_slope: split(slopes, 0..g),
            gen_intercept: split(intercepts, 0..g),
            shed_slope: split(slopes, g..l),
            shed_intercept: split(intercepts, g..l),
            curtail_slope: split(slopes, l..layout.len()),
            curtail_intercept: split(intercepts, l..layout.len()),
        }
    }

    fn local(families: [&Vec<Vec<f64>>; 3], t: usize) -> Vec<f64> {
        families.iter().flat_map(|f| f.iter().map(move |row| row[t])).collect()
    }

    /// Slopes of period `t` in dispatch-layout order.
    pub fn slopes(&self, t: usize) -> Vec<f64> {
        Self::local([&self.gen_slope, &self.shed_slope, &self.curtail_slope], t)
    }

    pub fn intercepts(&self, t: usize) -> Vec<f64> {
        Self::local([&self.gen_intercept, &self.shed_intercept, &self.curtail_intercept], t)
    }

    /// Policy dispatch at `w_t`, in dispatch-layout order.
    pub fn dispatch(&self, t: usize, w_t: &[f64]) -> Vec<f64> {
        let sigma: f64 = w_t.iter().sum();
        self.slopes(t)
            .into_iter()
            .zip(self.intercepts(t))
            .map(|(a1, a0)| a1 * sigma + a0)
            .collect()
    }
}

/// Per-period cost coefficients over the policy parameters, so that the
/// recourse cost of a policy is `c¹_t(a¹_t) σ_t + c⁰_t(a⁰_t)` with
/// `c¹_t(a¹_t) = Σ_j coef_tj a¹_tj` and `c⁰_t(a⁰_t) = Σ_j coef_tj a⁰_tj`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostFunctions {
    /// `[period][local variable]`.
    pub coef: Vec<Vec<f64>>,
}

impl CostFunctions {
    pub fn c1(&self, policy: &AffinePolicy) -> Vec<f64> {
        (0..self.coef.len()).map(|t| dot(&self.coef[t], &policy.slopes(t))).collect()
    }

    pub fn c0(&self, policy: &AffinePolicy) -> Vec<f64> {
        (0..self.coef.len()).map(|t| dot(&self.coef[t], &policy.intercepts(t))).collect()
    }

    /// Policy cost of period `t` at `w_t`.
    pub fn period_cost(&self, policy: &AffinePolicy, t: usize, w_t: &[f64]) -> f64 {
        dot(&self.coef[t], &policy.dispatch(t, w_t))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Substitutes the policy into `c2'x`: the coefficient of each local
/// variable is its dispatch cost.
pub fn cost_coefficients(inst: &UcInstance) -> CostFunctions {
    let s = &inst.system;
    let per_period: Vec<f64> = s
        .generators()
        .iter()
        .map(|g| g.marginal_cost)
        .chain(s.loads().iter().map(|l| l.shed_cost))
        .chain(s.reg_units().iter().map(|r| r.curtail_cost))
        .collect();
    CostFunctions {
        coef: vec![per_period; inst.horizon()],
    }
}
