//! Constraint replay: checks decisions against the UC constraints directly,
//! without going through any model builder.

use super::{DispatchRange, DispatchResult, Schedule};
use crate::instance::UcInstance;
use crate::system::SystemData;

fn flag(x: bool) -> i32 {
    i32::from(x)
}

/// Status logic and minimum up/down violations of a schedule.
pub fn check_schedule(system: &SystemData, s: &Schedule) -> Vec<String> {
    let mut out = Vec::new();
    for (g, gen) in system.generators().iter().enumerate() {
        let on = |t: isize| -> i32 {
            if t < 0 {
                flag(gen.initial_on)
            } else {
                flag(s.on[g][t as usize])
            }
        };
        for t in 0..system.horizon() {
            let ti = t as isize;
            let (u, prev) = (on(ti), on(ti - 1));
            let (up, down) = (flag(s.startup[g][t]), flag(s.shutdown[g][t]));
            if up < u - prev || down < prev - u || u + down > 1 || prev + up > 1 {
                out.push(format!("{} t={t}: status logic", gen.id));
            }
            if u - prev == 1 {
                for tau in t..(t + gen.min_up).min(system.horizon()) {
                    if !s.on[g][tau] {
                        out.push(format!("{} t={t}: min up broken at {tau}", gen.id));
                    }
                }
            }
            if prev - u == 1 {
                for tau in t..(t + gen.min_down).min(system.horizon()) {
                    if s.on[g][tau] {
                        out.push(format!("{} t={t}: min down broken at {tau}", gen.id));
                    }
                }
            }
        }
    }
    out
}

/// Checks that every dispatch drawn independently per period from the
/// ranges satisfies capacity and ramp limits. The extreme pairs are
/// `(x̄_t, x̲_{t-1})` for ramp-up and `(x̲_t, x̄_{t-1})` for ramp-down.
pub fn check_ranges(system: &SystemData, s: &Schedule, r: &DispatchRange, tol: f64) -> Vec<String> {
    let mut out = Vec::new();
    for (g, gen) in system.generators().iter().enumerate() {
        for t in 0..system.horizon() {
            let u = if s.on[g][t] { 1.0 } else { 0.0 };
            let (lo, hi) = (r.lower[g][t], r.upper[g][t]);
            if lo < gen.p_min * u - tol || hi > gen.p_max * u + tol || lo > hi + tol {
                out.push(format!("{} t={t}: range [{lo}, {hi}] outside capacity", gen.id));
            }
            let (u_prev, lo_prev, hi_prev) = if t == 0 {
                let u0 = if gen.initial_on { 1.0 } else { 0.0 };
                (u0, gen.initial_output, gen.initial_output)
            } else {
                let u0 = if s.on[g][t - 1] { 1.0 } else { 0.0 };
                (u0, r.lower[g][t - 1], r.upper[g][t - 1])
            };
            let su = if s.startup[g][t] { 1.0 } else { 0.0 };
            let sd = if s.shutdown[g][t] { 1.0 } else { 0.0 };
            if hi - lo_prev > gen.ramp_up * u_prev + gen.startup_ramp * su + tol {
                out.push(format!("{} t={t}: ramp-up exceeded", gen.id));
            }
            if hi_prev - lo > gen.ramp_down * u + gen.shutdown_ramp * sd + tol {
                out.push(format!("{} t={t}: ramp-down exceeded", gen.id));
            }
        }
    }
    out
}

/// Bounds, balance and line limits of one period's dispatch.
pub fn check_dispatch(
    inst: &UcInstance,
    t: usize,
    w_t: &[f64],
    range: &DispatchRange,
    d: &DispatchResult,
    tol: f64,
) -> Vec<String> {
    let system = &inst.system;
    let mut out = Vec::new();
    for (g, &x) in d.gen.iter().enumerate() {
        if x < range.lower[g][t] - tol || x > range.upper[g][t] + tol {
            out.push(format!("gen {g} t={t}: {x} outside range"));
        }
    }
    for (k, load) in system.loads().iter().enumerate() {
        if d.shed[k] < -tol || d.shed[k] > load.shed_limit(t) + tol {
            out.push(format!("load {} t={t}: shed {} out of bounds", load.id, d.shed[k]));
        }
    }
    let forecast = inst.forecast.period(t);
    for r in 0..inst.num_regs() {
        let cap = (forecast[r] + w_t[r]).max(0.0);
        if d.curtail[r] < -tol || d.curtail[r] > cap + tol {
            out.push(format!("reg {r} t={t}: curtailment {} out of bounds", d.curtail[r]));
        }
    }

    // Nodal net injections.
    let mut inj = vec![0.0; system.buses().len()];
    for (g, gen) in system.generators().iter().enumerate() {
        inj[system.bus_index(gen.bus)] += d.gen[g];
    }
    for (k, load) in system.loads().iter().enumerate() {
        inj[system.bus_index(load.bus)] += d.shed[k] - load.demand[t];
    }
    for (r, unit) in system.reg_units().iter().enumerate() {
        inj[system.bus_index(unit.bus)] += forecast[r] + w_t[r] - d.curtail[r];
    }
    let imbalance: f64 = inj.iter().sum();
    if imbalance.abs() > tol {
        out.push(format!("t={t}: imbalance {imbalance}"));
    }
    for (l, (flow, line)) in inst.ptdf.flows(&inj).iter().zip(system.lines()).enumerate() {
        if flow.abs() > line.capacity + tol {
            out.push(format!("line {l} t={t}: flow {flow} over {}", line.capacity));
        }
    }
    out
}

/// Second-stage cost of a dispatch recomputed from the cost data.
pub fn dispatch_cost(system: &SystemData, d: &DispatchResult) -> f64 {
    let gen: f64 = system
        .generators()
        .iter()
        .zip(&d.gen)
        .map(|(g, x)| g.marginal_cost * x)
        .sum();
    let shed: f64 = system.loads().iter().zip(&d.shed).map(|(l, x)| l.shed_cost * x).sum();
    let curt: f64 = system
        .reg_units()
        .iter()
        .zip(&d.curtail)
        .map(|(r, x)| r.curtail_cost * x)
        .sum();
    gen + shed + curt
}
