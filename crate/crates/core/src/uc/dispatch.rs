//! Dispatch ranges and the single-period recourse problem.
//!
//! The recourse polytope of period `t` has no link to other periods, so the
//! second-stage cost is a sum of independent single-period LPs. The rows of
//! that LP are produced once here, with right-hand sides affine in the
//! period's error vector, and reused by every model that embeds recourse.

use serde::{Deserialize, Serialize};

use super::commitment::CommitmentVars;
use super::UcError;
use crate::instance::UcInstance;
use crate::solver::{LinExpr, Model, Relation, Sense, Solution, Solver, Status, VarId};

/// Allowable output interval per generator and period, `[generator][period]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DispatchRange {
    pub upper: Vec<Vec<f64>>,
    pub lower: Vec<Vec<f64>>,
}

impl DispatchRange {
    /// `(lower, upper)` per generator for period `t`.
    pub fn period(&self, t: usize) -> Vec<(f64, f64)> {
        self.lower.iter().zip(&self.upper).map(|(lo, hi)| (lo[t], hi[t])).collect()
    }

    /// Degenerate ranges pinned to a fixed dispatch.
    pub fn point(dispatch: &[Vec<f64>]) -> Self {
        DispatchRange {
            upper: dispatch.to_vec(),
            lower: dispatch.to_vec(),
        }
    }

    pub fn horizon(&self) -> usize {
        self.upper.first().map_or(0, Vec::len)
    }
}

/// Range variables `x̄^g`, `x̲^g`, `[generator][period]`.
#[derive(Clone, Debug)]
pub struct RangeVars {
    pub upper: Vec<Vec<VarId>>,
    pub lower: Vec<Vec<VarId>>,
}

impl RangeVars {
    pub fn extract(&self, sol: &Solution) -> DispatchRange {
        let mut upper: Vec<Vec<f64>> = self
            .upper
            .iter()
            .map(|row| row.iter().map(|v| sol.value(*v)).collect())
            .collect();
        let mut lower: Vec<Vec<f64>> = self
            .lower
            .iter()
            .map(|row| row.iter().map(|v| sol.value(*v)).collect())
            .collect();
        // Remove solver noise: clip at zero, keep lower <= upper.
        for (hi, lo) in upper.iter_mut().zip(lower.iter_mut()) {
            for (h, l) in hi.iter_mut().zip(lo.iter_mut()) {
                if h.abs() < 1e-9 {
                    *h = 0.0;
                }
                if l.abs() < 1e-9 {
                    *l = 0.0;
                }
                if *l > *h {
                    let mid = 0.5 * (*l + *h);
                    *l = mid;
                    *h = mid;
                }
            }
        }
        DispatchRange { upper, lower }
    }
}

/// Adds `x̄^g`, `x̲^g` constrained to the set X^r(u): capacity nesting,
/// up-ramp linking `x̄_t - x̲_{t-1}`, down-ramp linking `x̄_{t-1} - x̲_t`.
pub fn build_dispatch_range_stage(model: &mut Model, inst: &UcInstance, commit: &CommitmentVars) -> RangeVars {
    let system = &inst.system;
    let horizon = system.horizon();
    let mut ranges = RangeVars {
        upper: Vec::new(),
        lower: Vec::new(),
    };
    for gen in system.generators() {
        ranges
            .upper
            .push((0..horizon).map(|_| model.continuous(0.0, gen.p_max, 0.0)).collect());
        ranges
            .lower
            .push((0..horizon).map(|_| model.continuous(0.0, gen.p_max, 0.0)).collect());
    }
    for (g, gen) in system.generators().iter().enumerate() {
        for t in 0..horizon {
            let (hi, lo, on) = (ranges.upper[g][t], ranges.lower[g][t], commit.on[g][t]);
            model.constrain([(lo, 1.0), (on, -gen.p_min)], Relation::Ge, 0.0);
            model.constrain([(lo, 1.0), (hi, -1.0)], Relation::Le, 0.0);
            model.constrain([(hi, 1.0), (on, -gen.p_max)], Relation::Le, 0.0);

            let (hi_prev, lo_prev) = if t == 0 {
                (LinExpr::constant(gen.initial_output), LinExpr::constant(gen.initial_output))
            } else {
                (LinExpr::var(ranges.upper[g][t - 1]), LinExpr::var(ranges.lower[g][t - 1]))
            };
            let on_prev = commit.on_prev(system, g, t);

            // x̄_t - x̲_{t-1} <= X^ru u_{t-1} + X^su u^u_t
            let mut e = LinExpr::var(hi);
            e.add_scaled(&lo_prev, -1.0)
                .add_scaled(&on_prev, -gen.ramp_up)
                .add_term(commit.startup[g][t], -gen.startup_ramp);
            model.constrain_expr(e, Relation::Le, 0.0);

            // x̄_{t-1} - x̲_t <= X^rd u_t + X^sd u^d_t
            let mut e = hi_prev.clone();
            e.add_term(lo, -1.0)
                .add_term(on, -gen.ramp_down)
                .add_term(commit.shutdown[g][t], -gen.shutdown_ramp);
            model.constrain_expr(e, Relation::Le, 0.0);
        }
    }
    ranges
}

/// Which constraint of the single-period polytope a row encodes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RowKind {
    Balance,
    LineUpper(usize),
    LineLower(usize),
    CurtailCap(usize),
}

/// `sum(a_j x_j) (rel) rhs + sum(g_r w_r)` over the local dispatch variables.
#[derive(Clone, Debug)]
pub struct AffineRow {
    pub kind: RowKind,
    pub terms: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
    pub rhs_w: Vec<(usize, f64)>,
}

impl AffineRow {
    pub fn rhs_at(&self, w: &[f64]) -> f64 {
        self.rhs + self.rhs_w.iter().map(|(r, g)| g * w[*r]).sum::<f64>()
    }
}

/// Local variable layout `[gen..., shed..., curtail...]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DispatchLayout {
    pub gens: usize,
    pub loads: usize,
    pub regs: usize,
}

impl DispatchLayout {
    pub fn of(inst: &UcInstance) -> Self {
        DispatchLayout {
            gens: inst.num_gens(),
            loads: inst.num_loads(),
            regs: inst.num_regs(),
        }
    }
    pub fn gen(&self, g: usize) -> usize {
        g
    }
    pub fn shed(&self, k: usize) -> usize {
        self.gens + k
    }
    pub fn curtail(&self, r: usize) -> usize {
        self.gens + self.loads + r
    }
    pub fn len(&self) -> usize {
        self.gens + self.loads + self.regs
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Balance and line-limit rows of period `t`.
pub fn network_rows(inst: &UcInstance, t: usize) -> Vec<AffineRow> {
    let system = &inst.system;
    let lay = DispatchLayout::of(inst);
    let forecast = inst.forecast.period(t);
    let mut rows = Vec::with_capacity(1 + 2 * inst.num_lines());

    let mut terms = Vec::with_capacity(lay.len());
    terms.extend((0..lay.gens).map(|g| (lay.gen(g), 1.0)));
    terms.extend((0..lay.loads).map(|k| (lay.shed(k), 1.0)));
    terms.extend((0..lay.regs).map(|r| (lay.curtail(r), -1.0)));
    rows.push(AffineRow {
        kind: RowKind::Balance,
        terms,
        relation: Relation::Eq,
        rhs: system.total_demand(t) - forecast.iter().sum::<f64>(),
        rhs_w: (0..lay.regs).map(|r| (r, -1.0)).collect(),
    });

    for (l, line) in system.lines().iter().enumerate() {
        let mut terms = Vec::new();
        terms.extend((0..lay.gens).map(|g| (lay.gen(g), inst.gen_factor(g, l))));
        terms.extend((0..lay.loads).map(|k| (lay.shed(k), inst.load_factor(k, l))));
        terms.extend((0..lay.regs).map(|r| (lay.curtail(r), -inst.reg_factor(r, l))));
        terms.retain(|(_, a)| *a != 0.0);
        // Constant part of the flow: -sum F d + sum F w^f, moved to the rhs.
        let fixed: f64 = (0..lay.loads)
            .map(|k| -inst.load_factor(k, l) * system.loads()[k].demand[t])
            .sum::<f64>()
            + (0..lay.regs).map(|r| inst.reg_factor(r, l) * forecast[r]).sum::<f64>();
        let rhs_w: Vec<(usize, f64)> = (0..lay.regs)
            .map(|r| (r, -inst.reg_factor(r, l)))
            .filter(|(_, g)| *g != 0.0)
            .collect();
        rows.push(AffineRow {
            kind: RowKind::LineUpper(l),
            terms: terms.clone(),
            relation: Relation::Le,
            rhs: line.capacity - fixed,
            rhs_w: rhs_w.clone(),
        });
        rows.push(AffineRow {
            kind: RowKind::LineLower(l),
            terms,
            relation: Relation::Ge,
            rhs: -line.capacity - fixed,
            rhs_w,
        });
    }
    rows
}

/// Single-period LP with constant bounds and right-hand sides affine in the
/// period error `w_t`.
#[derive(Clone, Debug)]
pub struct PeriodLp {
    /// `(lower, upper, cost)` per local variable.
    pub vars: Vec<(f64, f64, f64)>,
    pub rows: Vec<AffineRow>,
    pub layout: DispatchLayout,
}

pub enum PeriodOutcome {
    Feasible { cost: f64, x: Vec<f64> },
    Infeasible,
}

impl PeriodLp {
    /// Recourse LP of period `t` with generator bounds `(lower, upper)`.
    pub fn dispatch(inst: &UcInstance, t: usize, gen_bounds: &[(f64, f64)]) -> Self {
        let system = &inst.system;
        let layout = DispatchLayout::of(inst);
        let mut vars = Vec::with_capacity(layout.len());
        for (g, gen) in system.generators().iter().enumerate() {
            let (lo, hi) = gen_bounds[g];
            vars.push((lo, hi.max(lo), gen.marginal_cost));
        }
        for load in system.loads() {
            vars.push((0.0, load.shed_limit(t), load.shed_cost));
        }
        for unit in system.reg_units() {
            vars.push((0.0, f64::INFINITY, unit.curtail_cost));
        }
        let mut rows = network_rows(inst, t);
        let forecast = inst.forecast.period(t);
        for r in 0..layout.regs {
            rows.push(AffineRow {
                kind: RowKind::CurtailCap(r),
                terms: vec![(layout.curtail(r), 1.0)],
                relation: Relation::Le,
                rhs: forecast[r],
                rhs_w: vec![(r, 1.0)],
            });
        }
        PeriodLp { vars, rows, layout }
    }

    /// Elastic variant: zero dispatch cost, unit-cost slacks on balance and
    /// line rows. Bounds and the curtailment cap stay hard. Its optimal value
    /// is the minimal total violation of the recourse polytope.
    pub fn elastic(inst: &UcInstance, t: usize, gen_bounds: &[(f64, f64)]) -> Self {
        let mut lp = PeriodLp::dispatch(inst, t, gen_bounds);
        for v in &mut lp.vars {
            v.2 = 0.0;
        }
        let mut slacks = Vec::new();
        for row in &mut lp.rows {
            match row.kind {
                RowKind::Balance => {
                    let up = lp.vars.len() + slacks.len();
                    slacks.push(());
                    let down = lp.vars.len() + slacks.len();
                    slacks.push(());
                    row.terms.push((up, 1.0));
                    row.terms.push((down, -1.0));
                }
                RowKind::LineUpper(_) => {
                    row.terms.push((lp.vars.len() + slacks.len(), -1.0));
                    slacks.push(());
                }
                RowKind::LineLower(_) => {
                    row.terms.push((lp.vars.len() + slacks.len(), 1.0));
                    slacks.push(());
                }
                RowKind::CurtailCap(_) => {}
            }
        }
        lp.vars.extend(slacks.iter().map(|_| (0.0, f64::INFINITY, 1.0)));
        lp
    }

    /// Concrete LP at error `w_t`. The curtailment cap is clamped at zero for
    /// errors beyond the physical box.
    pub fn to_model(&self, w: &[f64]) -> Model {
        let mut m = Model::new(Sense::Minimize);
        let ids: Vec<VarId> = self
            .vars
            .iter()
            .map(|&(lo, hi, c)| m.continuous(lo, hi, c))
            .collect();
        for row in &self.rows {
            let mut rhs = row.rhs_at(w);
            if matches!(row.kind, RowKind::CurtailCap(_)) {
                rhs = rhs.max(0.0);
            }
            m.constrain(row.terms.iter().map(|(j, a)| (ids[*j], *a)), row.relation, rhs);
        }
        m
    }

    pub fn solve(&self, solver: &Solver, w: &[f64]) -> Result<PeriodOutcome, UcError> {
        let model = self.to_model(w);
        let sol = solver.solve(&model)?;
        match sol.status {
            Status::Optimal => Ok(PeriodOutcome::Feasible {
                cost: sol.objective,
                x: sol.values,
            }),
            Status::Infeasible => Ok(PeriodOutcome::Infeasible),
            other => Err(UcError::Status(other)),
        }
    }

    /// Largest absolute cost coefficient and right-hand-side constant; used
    /// to size big-M bounds.
    pub fn magnitude(&self) -> (f64, f64) {
        let c = self.vars.iter().map(|v| v.2.abs()).fold(0.0, f64::max);
        let b = self.rows.iter().map(|r| r.rhs.abs()).fold(0.0, f64::max);
        (c, b)
    }
}

/// Recourse variables of one period embedded in a larger model.
#[derive(Clone, Debug)]
pub struct PeriodBlock {
    pub gen: Vec<VarId>,
    pub shed: Vec<VarId>,
    pub curtail: Vec<VarId>,
    /// `c2_t^T x_t` for this block.
    pub cost: LinExpr,
}

/// Where the generation variables of a recourse block come from.
pub enum GenSource<'a> {
    /// Already-created dispatch variables (deterministic UC).
    Existing(&'a [VarId]),
    /// New variables bounded by the range variables of period `t`.
    WithinRanges(&'a RangeVars),
}

/// Adds the recourse polytope of period `t` at a fixed error `w_t`.
pub fn add_period_block(
    model: &mut Model,
    inst: &UcInstance,
    t: usize,
    w_t: &[f64],
    gens: GenSource<'_>,
) -> PeriodBlock {
    let system = &inst.system;
    let gen: Vec<VarId> = match gens {
        GenSource::Existing(ids) => ids.to_vec(),
        GenSource::WithinRanges(ranges) => system
            .generators()
            .iter()
            .enumerate()
            .map(|(g, gen)| {
                let x = model.continuous(0.0, gen.p_max, 0.0);
                model.constrain([(x, 1.0), (ranges.upper[g][t], -1.0)], Relation::Le, 0.0);
                model.constrain([(x, 1.0), (ranges.lower[g][t], -1.0)], Relation::Ge, 0.0);
                x
            })
            .collect(),
    };
    let shed: Vec<VarId> = system
        .loads()
        .iter()
        .map(|l| model.continuous(0.0, l.shed_limit(t), 0.0))
        .collect();
    let forecast = inst.forecast.period(t);
    let curtail: Vec<VarId> = (0..inst.num_regs())
        .map(|r| model.continuous(0.0, (forecast[r] + w_t[r]).max(0.0), 0.0))
        .collect();

    let lay = DispatchLayout::of(inst);
    let local = |j: usize| -> VarId {
        if j < lay.gens {
            gen[j]
        } else if j < lay.gens + lay.loads {
            shed[j - lay.gens]
        } else {
            curtail[j - lay.gens - lay.loads]
        }
    };
    for row in network_rows(inst, t) {
        let rhs = row.rhs_at(w_t);
        model.constrain(row.terms.iter().map(|(j, a)| (local(*j), *a)), row.relation, rhs);
    }

    let mut cost = LinExpr::new();
    for (g, gen_data) in system.generators().iter().enumerate() {
        cost.add_term(gen[g], gen_data.marginal_cost);
    }
    for (k, load) in system.loads().iter().enumerate() {
        if load.shed_cost != 0.0 {
            cost.add_term(shed[k], load.shed_cost);
        }
    }
    for (r, unit) in system.reg_units().iter().enumerate() {
        if unit.curtail_cost != 0.0 {
            cost.add_term(curtail[r], unit.curtail_cost);
        }
    }
    PeriodBlock {
        gen,
        shed,
        curtail,
        cost,
    }
}

/// Outcome of a real-time dispatch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DispatchResult {
    pub gen: Vec<f64>,
    pub shed: Vec<f64>,
    pub curtail: Vec<f64>,
    pub cost: f64,
}

fn split_dispatch(lay: DispatchLayout, x: &[f64], cost: f64) -> DispatchResult {
    DispatchResult {
        gen: x[..lay.gens].to_vec(),
        shed: x[lay.gens..lay.gens + lay.loads].to_vec(),
        curtail: x[lay.gens + lay.loads..lay.len()].to_vec(),
        cost,
    }
}

/// Optimal single-period dispatch within the ranges for a realized error.
pub fn rt_dispatch(
    inst: &UcInstance,
    range: &DispatchRange,
    w_t: &[f64],
    t: usize,
    solver: &Solver,
) -> Result<DispatchResult, UcError> {
    let lp = PeriodLp::dispatch(inst, t, &range.period(t));
    match lp.solve(solver, w_t)? {
        PeriodOutcome::Feasible { cost, x } => Ok(split_dispatch(lp.layout, &x, cost)),
        PeriodOutcome::Infeasible => Err(UcError::Infeasible { period: t }),
    }
}

/// Reusable second-stage evaluator for fixed ranges.
pub struct SecondStage<'a> {
    lps: Vec<PeriodLp>,
    solver: &'a Solver,
}

impl<'a> SecondStage<'a> {
    pub fn new(inst: &UcInstance, range: &DispatchRange, solver: &'a Solver) -> Self {
        SecondStage {
            lps: (0..inst.horizon())
                .map(|t| PeriodLp::dispatch(inst, t, &range.period(t)))
                .collect(),
            solver,
        }
    }

    pub fn period_cost(&self, t: usize, w_t: &[f64]) -> Result<f64, UcError> {
        match self.lps[t].solve(self.solver, w_t)? {
            PeriodOutcome::Feasible { cost, .. } => Ok(cost),
            PeriodOutcome::Infeasible => Err(UcError::Infeasible { period: t }),
        }
    }

    pub fn cost(&self, w: &[Vec<f64>]) -> Result<f64, UcError> {
        (0..self.lps.len()).map(|t| self.period_cost(t, &w[t])).sum()
    }
}

/// Second-stage cost f(x̄, x̲, w) as the sum of the period dispatch costs.
pub fn evaluate_second_stage(
    inst: &UcInstance,
    range: &DispatchRange,
    w: &[Vec<f64>],
    solver: &Solver,
) -> Result<f64, UcError> {
    SecondStage::new(inst, range, solver).cost(w)
}

/// The same quantity as one LP over all periods.
pub fn second_stage_monolithic(
    inst: &UcInstance,
    range: &DispatchRange,
    w: &[Vec<f64>],
    solver: &Solver,
) -> Result<f64, UcError> {
    let mut m = Model::new(Sense::Minimize);
    for t in 0..inst.horizon() {
        let gens: Vec<VarId> = range
            .period(t)
            .into_iter()
            .map(|(lo, hi)| m.continuous(lo, hi.max(lo), 0.0))
            .collect();
        let block = add_period_block(&mut m, inst, t, &w[t], GenSource::Existing(&gens));
        m.add_objective_expr(&block.cost, 1.0);
    }
    let sol = solver.solve(&m)?;
    match sol.status {
        Status::Optimal => Ok(sol.objective),
        Status::Infeasible => Err(UcError::Infeasible { period: usize::MAX }),
        other => Err(UcError::Status(other)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::fixtures::single_bus;
    use crate::system::{ForecastSeries, SystemData};

    /// One bus, generator C^g = 10, load 5 (sheddable at 1000), PV with
    /// forecast 2 and curtailment cost 3.
    fn toy(forecast: f64) -> UcInstance {
        let mut f = single_bus(vec![5.0], Some(20.0));
        f.loads[0].sheddable = true;
        f.loads[0].shed_cost = 1000.0;
        f.reg_units[0].curtail_cost = 3.0;
        let s = SystemData::try_from(f).unwrap();
        let fc = ForecastSeries::new(&s, vec![vec![forecast]]).unwrap();
        UcInstance::new(s, fc).unwrap()
    }

    fn range(lo: f64, hi: f64) -> DispatchRange {
        DispatchRange {
            lower: vec![vec![lo]],
            upper: vec![vec![hi]],
        }
    }

    #[test]
    fn balance_arithmetic_no_error() {
        let inst = toy(2.0);
        let r = rt_dispatch(&inst, &range(0.0, 10.0), &[0.0], 0, &Solver::default()).unwrap();
        assert!((r.gen[0] - 3.0).abs() < 1e-9);
        assert!(r.shed[0].abs() < 1e-9 && r.curtail[0].abs() < 1e-9);
        assert!((r.cost - 30.0).abs() < 1e-9);
    }

    #[test]
    fn surplus_is_curtailed() {
        let inst = toy(2.0);
        let r = rt_dispatch(&inst, &range(0.0, 10.0), &[7.0], 0, &Solver::default()).unwrap();
        assert!(r.gen[0].abs() < 1e-9);
        assert!((r.curtail[0] - 4.0).abs() < 1e-9);
        assert!((r.cost - 12.0).abs() < 1e-9);
    }

    #[test]
    fn shortfall_is_shed() {
        // Hand LP: supply = x^g + (2 - 2) - x^r, x^g <= 2, demand 5:
        // x^g = 2, shed 3, curtail 0, cost 2*10 + 3*1000.
        let inst = toy(2.0);
        let r = rt_dispatch(&inst, &range(0.0, 2.0), &[-2.0], 0, &Solver::default()).unwrap();
        assert!((r.gen[0] - 2.0).abs() < 1e-9);
        assert!((r.shed[0] - 3.0).abs() < 1e-9);
        assert!(r.curtail[0].abs() < 1e-9);
        assert!((r.cost - 3020.0).abs() < 1e-9);
    }

    #[test]
    fn out_of_box_error_clamps_curtailment_cap() {
        let inst = toy(2.0);
        let r = rt_dispatch(&inst, &range(0.0, 10.0), &[-4.0], 0, &Solver::default()).unwrap();
        // Available renewable power is treated as zero, not negative.
        assert!((r.gen[0] - 7.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_range_reported() {
        let mut f = single_bus(vec![5.0], None);
        f.loads[0].sheddable = false;
        let s = SystemData::try_from(f).unwrap();
        let inst = UcInstance::new(s.clone(), ForecastSeries::zeros(&s)).unwrap();
        let err = rt_dispatch(&inst, &range(0.0, 1.0), &[], 0, &Solver::default()).unwrap_err();
        assert!(matches!(err, UcError::Infeasible { period: 0 }));
    }

    #[test]
    fn elastic_lp_measures_shortfall() {
        let mut f = single_bus(vec![5.0], Some(3.0));
        f.loads[0].sheddable = false;
        let s = SystemData::try_from(f).unwrap();
        let fc = ForecastSeries::new(&s, vec![vec![1.0]]).unwrap();
        let inst = UcInstance::new(s, fc).unwrap();
        let lp = PeriodLp::elastic(&inst, 0, &[(0.0, 0.0)]);
        match lp.solve(&Solver::default(), &[1.5]).unwrap() {
            PeriodOutcome::Feasible { cost, .. } => assert!((cost - 2.5).abs() < 1e-9),
            PeriodOutcome::Infeasible => panic!("elastic LP is always feasible"),
        }
    }
}
