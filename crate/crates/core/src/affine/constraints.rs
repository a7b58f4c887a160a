use serde::{Deserialize, Serialize};

use super::policy::AffinePolicy;
use crate::instance::UcInstance;
use crate::solver::Relation;
use crate::uc::{network_rows, DispatchLayout, DispatchRange, RowKind};
use crate::wasserstein::OmegaBox;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintKind {
    GenUpper(usize),
    GenLower(usize),
    ShedUpper(usize),
    ShedLower(usize),
    CurtailLower(usize),
    CurtailCap(usize),
    LineUpper(usize),
    LineLower(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConstraintId {
    pub period: usize,
    pub kind: ConstraintKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RangeSide {
    Upper,
    Lower,
}

/// `Σ_j a_j x_j(w) + b · range <= rhs + Σ_r g_r w_r` for every `w ∈ Ω`,
/// with `x_j(w)` the policy dispatch in layout order.
#[derive(Clone, Debug, PartialEq)]
pub struct RobustConstraint {
    pub id: ConstraintId,
    pub terms: Vec<(usize, f64)>,
    /// `(generator, side, b)`.
    pub range: Option<(usize, RangeSide, f64)>,
    pub rhs: f64,
    pub rhs_w: Vec<(usize, f64)>,
}

impl RobustConstraint {
    fn range_value(&self, range: &DispatchRange) -> f64 {
        match self.range {
            Some((g, RangeSide::Upper, b)) => b * range.upper[g][self.id.period],
            Some((g, RangeSide::Lower, b)) => b * range.lower[g][self.id.period],
            None => 0.0,
        }
    }

    /// Left minus right side at `w_t`; positive means violated.
    pub fn excess(&self, policy: &AffinePolicy, range: &DispatchRange, w_t: &[f64]) -> f64 {
        let x = policy.dispatch(self.id.period, w_t);
        let lhs: f64 = self.terms.iter().map(|(j, a)| a * x[*j]).sum::<f64>() + self.range_value(range);
        lhs - self.rhs - self.rhs_w.iter().map(|(r, g)| g * w_t[*r]).sum::<f64>()
    }

    /// Coefficient of each `w_r` in the excess.
    pub fn w_coefficients(&self, policy: &AffinePolicy, regs: usize) -> Vec<f64> {
        let slopes = policy.slopes(self.id.period);
        let s: f64 = self.terms.iter().map(|(j, a)| a * slopes[*j]).sum();
        let mut c = vec![s; regs];
        for (r, g) in &self.rhs_w {
            c[*r] -= g;
        }
        c
    }

    /// Maximiser of the excess over the box `[lo, hi]`: each coordinate sits
    /// at the end its coefficient points to (lower end on ties).
    pub fn worst_case(&self, policy: &AffinePolicy, range: &DispatchRange, lo: &[f64], hi: &[f64]) -> (Vec<f64>, f64) {
        let c = self.w_coefficients(policy, lo.len());
        let w: Vec<f64> = (0..lo.len()).map(|r| if c[r] > 0.0 { hi[r] } else { lo[r] }).collect();
        let excess = self.excess(policy, range, &w);
        (w, excess)
    }
}

/// Balance under the policy, enforced by matching coefficients:
/// `Σ_j a_j a¹_j = slope_target` and `Σ_j a_j a⁰_j = intercept_target`.
/// When Ω has no effective coordinate in the period, the slopes are pinned
/// to zero and only the intercept identity is kept (at Ω's single point).
#[derive(Clone, Debug, PartialEq)]
pub struct BalanceIdentity {
    pub period: usize,
    pub terms: Vec<(usize, f64)>,
    pub slope_target: Option<f64>,
    pub intercept_target: f64,
}

impl BalanceIdentity {
    /// Residual of the balance row at `w_t` under the policy.
    pub fn residual(&self, policy: &AffinePolicy, rhs_at_w: f64, w_t: &[f64]) -> f64 {
        let x = policy.dispatch(self.period, w_t);
        self.terms.iter().map(|(j, a)| a * x[*j]).sum::<f64>() - rhs_at_w
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AffineConstraintSystem {
    pub constraints: Vec<RobustConstraint>,
    pub balance: Vec<BalanceIdentity>,
    pub layout: DispatchLayout,
}

fn le_form(kind: RowKind, relation: Relation) -> (ConstraintKind, f64) {
    match (kind, relation) {
        (RowKind::LineUpper(l), Relation::Le) => (ConstraintKind::LineUpper(l), 1.0),
        (RowKind::LineLower(l), Relation::Ge) => (ConstraintKind::LineLower(l), -1.0),
        (RowKind::CurtailCap(r), Relation::Le) => (ConstraintKind::CurtailCap(r), 1.0),
        other => unreachable!("unexpected recourse row {other:?}"),
    }
}

/// The recourse polytope with the policy substituted for `x`: balance as
/// coefficient-matching identities, every inequality (range, shedding and
/// curtailment bounds, curtailment cap, line limits) as a robust constraint
/// over Ω.
pub fn affine_constraint_system(inst: &UcInstance, omega: &OmegaBox) -> AffineConstraintSystem {
    let lay = DispatchLayout::of(inst);
    let system = &inst.system;
    let mut constraints = Vec::new();
    let mut balance = Vec::new();
    for t in 0..inst.horizon() {
        let id = |kind| ConstraintId { period: t, kind };
        for g in 0..lay.gens {
            constraints.push(RobustConstraint {
                id: id(ConstraintKind::GenUpper(g)),
                terms: vec![(lay.gen(g), 1.0)],
                range: Some((g, RangeSide::Upper, -1.0)),
                rhs: 0.0,
                rhs_w: Vec::new(),
            });
            constraints.push(RobustConstraint {
                id: id(ConstraintKind::GenLower(g)),
                terms: vec![(lay.gen(g), -1.0)],
                range: Some((g, RangeSide::Lower, 1.0)),
                rhs: 0.0,
                rhs_w: Vec::new(),
            });
        }
        for (k, load) in system.loads().iter().enumerate() {
            constraints.push(RobustConstraint {
                id: id(ConstraintKind::ShedUpper(k)),
                terms: vec![(lay.shed(k), 1.0)],
                range: None,
                rhs: load.shed_limit(t),
                rhs_w: Vec::new(),
            });
            constraints.push(RobustConstraint {
                id: id(ConstraintKind::ShedLower(k)),
                terms: vec![(lay.shed(k), -1.0)],
                range: None,
                rhs: 0.0,
                rhs_w: Vec::new(),
            });
        }
        let forecast = inst.forecast.period(t);
        for r in 0..lay.regs {
            constraints.push(RobustConstraint {
                id: id(ConstraintKind::CurtailLower(r)),
                terms: vec![(lay.curtail(r), -1.0)],
                range: None,
                rhs: 0.0,
                rhs_w: Vec::new(),
            });
            constraints.push(RobustConstraint {
                id: id(ConstraintKind::CurtailCap(r)),
                terms: vec![(lay.curtail(r), 1.0)],
                range: None,
                rhs: forecast[r],
                rhs_w: vec![(r, 1.0)],
            });
        }

        let point = omega.effective_dims(t).is_empty();
        for row in network_rows(inst, t) {
            if row.kind == RowKind::Balance {
                let g = row.rhs_w.first().map_or(0.0, |x| x.1);
                debug_assert!(row.rhs_w.iter().all(|x| x.1 == g), "balance error weights must be uniform");
                balance.push(BalanceIdentity {
                    period: t,
                    terms: row.terms.clone(),
                    slope_target: (!point).then_some(g),
                    intercept_target: if point { row.rhs_at(&omega.lower[t]) } else { row.rhs },
                });
                continue;
            }
            let (kind, sign) = le_form(row.kind, row.relation);
            constraints.push(RobustConstraint {
                id: id(kind),
                terms: row.terms.iter().map(|(j, a)| (*j, sign * a)).collect(),
                range: None,
                rhs: sign * row.rhs,
                rhs_w: row.rhs_w.iter().map(|(r, g)| (*r, sign * g)).collect(),
            });
        }
    }
    AffineConstraintSystem {
        constraints,
        balance,
        layout: lay,
    }
}

/// A robust constraint violated at `witness` by `violation`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub id: ConstraintId,
    /// Index into [`AffineConstraintSystem::constraints`].
    pub index: usize,
    pub witness: Vec<f64>,
    pub violation: f64,
}

/// Exact worst case of every robust constraint over Ω, in closed form;
/// returns those violated by more than `tol`.
pub fn separate(
    system: &AffineConstraintSystem,
    policy: &AffinePolicy,
    range: &DispatchRange,
    omega: &OmegaBox,
    tol: f64,
) -> Vec<Violation> {
    system
        .constraints
        .iter()
        .enumerate()
        .filter_map(|(index, c)| {
            let t = c.id.period;
            let (w, excess) = c.worst_case(policy, range, &omega.lower[t], &omega.upper[t]);
            (excess > tol).then(|| Violation {
                id: c.id,
                index,
                witness: w,
                violation: excess,
            })
        })
        .collect()
}
