use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::robust::add_feasibility_block;
use crate::solver::SolveParams;
use crate::synthetic::{random_instance, SyntheticShape};
use crate::system::fixtures::{bus, generator, single_bus};
use crate::system::{BusId, ForecastSeries, Line, LoadSeries, RegUnit, SystemData, SystemFile};
use crate::uc::{build_suc, evaluate_second_stage, DispatchLayout, DispatchRange, PeriodLp};
use crate::system::IntervalBox;
use crate::wasserstein::{gc, gv_dual, gv_primal, omega, solve_ewdruc};

fn solver() -> Solver {
    Solver::default().with_params(SolveParams::default().with_mip_gap(1e-7))
}

fn one_bus_costs() -> UcInstance {
    let mut f = single_bus(vec![30.0], Some(20.0));
    f.loads[0].sheddable = true;
    f.loads[0].shed_cost = 1000.0;
    let s = SystemData::try_from(f).unwrap();
    let fc = ForecastSeries::new(&s, vec![vec![10.0]]).unwrap();
    UcInstance::new(s, fc).unwrap()
}

/// Two buses joined by one line, a generator and a sheddable load on each,
/// a REG unit on each.
fn two_bus() -> UcInstance {
    let mut f = single_bus(vec![20.0], Some(15.0));
    f.buses.push(bus(2));
    f.generators.push(generator("G2", 2, 0.0, 60.0, 25.0));
    f.lines.push(Line {
        id: "L12".into(),
        from_bus: BusId(1),
        to_bus: BusId(2),
        reactance: 0.1,
        capacity: 25.0,
    });
    f.loads[0].sheddable = true;
    f.loads[0].shed_cost = 900.0;
    f.loads.push(LoadSeries {
        id: "L2".into(),
        bus: BusId(2),
        demand: vec![35.0],
        sheddable: true,
        shed_cost: 1100.0,
    });
    f.reg_units[0].curtail_cost = 2.0;
    f.reg_units.push(RegUnit {
        id: "PV2".into(),
        bus: BusId(2),
        capacity: 12.0,
        curtail_cost: 1.0,
    });
    let s = SystemData::try_from(SystemFile { horizon: 1, ..f }).unwrap();
    let fc = ForecastSeries::new(&s, vec![vec![6.0, 4.0]]).unwrap();
    UcInstance::new(s, fc).unwrap()
}

fn random_policy(rng: &mut ChaCha8Rng, inst: &UcInstance) -> AffinePolicy {
    let lay = DispatchLayout::of(inst);
    let h = inst.horizon();
    let mut draw = |scale: f64| -> Vec<Vec<f64>> {
        (0..h).map(|_| (0..lay.len()).map(|_| rng.gen_range(-scale..scale)).collect()).collect()
    };
    let slopes = draw(1.5);
    let intercepts = draw(30.0);
    AffinePolicy::from_local(lay, &slopes, &intercepts)
}

#[test]
fn cost_of_single_bus_policy() {
    let inst = one_bus_costs();
    let costs = cost_coefficients(&inst);
    let mut p = AffinePolicy::zeros(&inst);
    p.gen_slope[0][0] = 0.5;
    p.shed_slope[0][0] = 0.0;
    p.curtail_slope[0][0] = 0.2;
    assert_eq!(costs.c1(&p), vec![5.0]);
    assert_eq!(costs.c0(&p), vec![0.0]);
    let mut q = AffinePolicy::zeros(&inst);
    q.gen_intercept[0][0] = 3.0;
    assert_eq!(costs.c1(&q), vec![0.0]);
}

#[test]
fn policy_cost_matches_expanded_dispatch_cost() {
    // c¹ σ + c⁰ against c2'x with x the policy dispatch and c2 read off the
    // recourse LP.
    let inst = two_bus();
    let costs = cost_coefficients(&inst);
    let lp = PeriodLp::dispatch(&inst, 0, &[(0.0, 100.0), (0.0, 60.0)]);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let p = random_policy(&mut rng, &inst);
        let w = vec![rng.gen_range(-6.0..9.0), rng.gen_range(-4.0..8.0)];
        let x = p.dispatch(0, &w);
        let direct: f64 = lp.vars.iter().zip(&x).map(|(v, x)| v.2 * x).sum();
        let sigma = w[0] + w[1];
        let via = costs.c1(&p)[0] * sigma + costs.c0(&p)[0];
        assert!((direct - via).abs() <= 1e-9 * (1.0 + direct.abs()), "{direct} vs {via}");
    }
}

#[test]
fn single_bus_balance_identity() {
    let inst = one_bus_costs();
    let sys = affine_constraint_system(&inst, &inst.w_box);
    let b = &sys.balance[0];
    let lay = sys.layout;
    let mut terms = b.terms.clone();
    terms.sort_by_key(|x| x.0);
    assert_eq!(terms, vec![(lay.gen(0), 1.0), (lay.shed(0), 1.0), (lay.curtail(0), -1.0)]);
    assert_eq!(b.slope_target, Some(-1.0));
    assert_eq!(b.intercept_target, 30.0 - 10.0);
}

#[test]
fn degenerate_period_keeps_only_intercept_identity() {
    let inst = one_bus_costs();
    let om = IntervalBox::point(&[vec![2.0]]);
    let sys = affine_constraint_system(&inst, &om);
    assert_eq!(sys.balance[0].slope_target, None);
    assert_eq!(sys.balance[0].intercept_target, 30.0 - 10.0 - 2.0);
}

#[test]
fn range_violation_at_upper_corner() {
    let inst = one_bus_costs();
    let om = IntervalBox::new(vec![vec![-3.0]], vec![vec![5.0]]);
    let sys = affine_constraint_system(&inst, &om);
    let range = DispatchRange {
        upper: vec![vec![40.0]],
        lower: vec![vec![0.0]],
    };
    let mut p = AffinePolicy::zeros(&inst);
    p.gen_slope[0][0] = 1.0;
    p.gen_intercept[0][0] = 40.0;
    let v: Vec<_> = separate(&sys, &p, &range, &om, 1e-6)
        .into_iter()
        .filter(|v| v.id.kind == ConstraintKind::GenUpper(0))
        .collect();
    assert_eq!(v.len(), 1);
    assert_eq!(v[0].witness, vec![5.0]);
    assert!((v[0].violation - 5.0).abs() < 1e-12);
}

#[test]
fn closed_form_matches_vertex_enumeration() {
    let inst = two_bus();
    let sys = affine_constraint_system(&inst, &inst.w_box);
    let (lo, hi) = (&inst.w_box.lower[0], &inst.w_box.upper[0]);
    let vertices: Vec<Vec<f64>> = (0..4)
        .map(|m| (0..2).map(|r| if m >> r & 1 == 1 { hi[r] } else { lo[r] }).collect())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let p = random_policy(&mut rng, &inst);
        let range = DispatchRange {
            upper: vec![vec![rng.gen_range(20.0..100.0)], vec![rng.gen_range(20.0..60.0)]],
            lower: vec![vec![rng.gen_range(0.0..20.0)], vec![rng.gen_range(0.0..20.0)]],
        };
        for c in &sys.constraints {
            let brute = vertices
                .iter()
                .map(|w| c.excess(&p, &range, w))
                .fold(f64::NEG_INFINITY, f64::max);
            let (_, closed) = c.worst_case(&p, &range, lo, hi);
            assert_eq!(closed, brute, "{:?}", c.id);
        }
    }
}

#[test]
fn feasible_policy_has_no_violations() {
    // Curtail every REG MW, shed nothing, generators at a fixed level that
    // meets demand.
    let inst = one_bus_costs();
    let om = inst.w_box.clone();
    let sys = affine_constraint_system(&inst, &om);
    let mut p = AffinePolicy::zeros(&inst);
    p.gen_intercept[0][0] = 30.0;
    p.curtail_slope[0][0] = 1.0;
    p.curtail_intercept[0][0] = 10.0;
    let range = DispatchRange {
        upper: vec![vec![30.0]],
        lower: vec![vec![30.0]],
    };
    assert!(separate(&sys, &p, &range, &om, 1e-9).is_empty());
    for w in [-10.0, 0.0, 10.0] {
        assert!(sys.balance[0].residual(&p, 20.0 - w, &[w]).abs() < 1e-12);
    }
}

fn toy(seed: u64, buses: usize, horizon: usize, count: usize) -> (UcInstance, SampleSet) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inst = random_instance(
        &mut rng,
        SyntheticShape {
            buses,
            horizon,
            reg_units: buses,
        },
    );
    let samples = random_samples(&mut rng, &inst, count);
    (inst, samples)
}

fn random_samples(rng: &mut ChaCha8Rng, inst: &UcInstance, count: usize) -> SampleSet {
    let w = &inst.w_box;
    let data: Vec<Vec<Vec<f64>>> = (0..count)
        .map(|_| {
            (0..inst.horizon())
                .map(|t| {
                    (0..inst.num_regs())
                        .map(|r| rng.gen_range(w.lower[t][r]..=w.upper[t][r]) * 0.3)
                        .collect()
                })
                .collect()
        })
        .collect();
    SampleSet::new(data, w, 1e-9).unwrap()
}

#[test]
fn master_size_ignores_sample_count() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let inst = random_instance(
        &mut rng,
        SyntheticShape {
            buses: 2,
            horizon: 3,
            reg_units: 2,
        },
    );
    let cfg = WassersteinConfig::new(0.01, 100.0).unwrap();
    let base = random_samples(&mut rng, &inst, 10);
    let proto = build_master(&inst, &base, &cfg, &CutPool::default());
    let mut pool = CutPool::seeded(&proto.system, &inst.w_box);
    pool.feasibility.push((1, inst.w_box.lower[1].clone()));
    let sizes: Vec<(usize, usize)> = [10, 100, 1000]
        .iter()
        .map(|&n| {
            let s = random_samples(&mut rng, &inst, n);
            let m = build_master(&inst, &s, &cfg, &pool);
            (m.rows(), m.cols())
        })
        .collect();
    assert!(sizes.windows(2).all(|p| p[0] == p[1]), "{sizes:?}");
}

#[test]
fn master_objective_decomposes() {
    let (inst, samples) = toy(21, 2, 2, 4);
    let cfg = WassersteinConfig::new(0.05, 100.0).unwrap();
    let sol = solve_awdruc(&inst, &samples, &cfg, &CcgConfig::default(), &solver()).unwrap();
    assert!(sol.certified());
    let costs = cost_coefficients(&inst);
    let c1 = costs.c1(&sol.policy);
    let c0 = costs.c0(&sol.policy);
    let om = omega(samples.samples(), &cfg.epsilon, &cfg.beta, &inst.w_box);
    let bounds = crate::wasserstein::gv_bounds(samples.samples(), &om);
    let dual = gv_dual(&c1, &bounds, cfg.epsilon, samples.len(), &Solver::default()).unwrap();
    let primal = gv_primal(&c1, &bounds, &cfg.epsilon, samples.len());
    let expected = sol.solution.schedule.fixed_cost(&inst.system) + gc(&c1, &c0, samples.samples()) + dual.value;
    let scale = 1.0 + expected.abs();
    assert!((sol.objective() - expected).abs() <= 1e-6 * scale, "{} vs {expected}", sol.objective());
    assert!((dual.value - primal).abs() <= 1e-6 * (1.0 + primal.abs()));
}

#[test]
fn balance_holds_exactly_at_random_points() {
    let (inst, samples) = toy(8, 2, 2, 3);
    let cfg = WassersteinConfig::new(0.1, 100.0).unwrap();
    let sol = solve_awdruc(&inst, &samples, &cfg, &CcgConfig::default(), &solver()).unwrap();
    let sys = affine_constraint_system(&inst, &sol.omega);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for b in &sys.balance {
        let t = b.period;
        let rows = crate::uc::network_rows(&inst, t);
        for _ in 0..200 {
            let w: Vec<f64> = (0..inst.num_regs())
                .map(|r| {
                    let (lo, hi) = (sol.omega.lower[t][r], sol.omega.upper[t][r]);
                    if hi > lo {
                        rng.gen_range(lo..=hi)
                    } else {
                        lo
                    }
                })
                .collect();
            let res = b.residual(&sol.policy, rows[0].rhs_at(&w), &w);
            assert!(res.abs() <= 1e-9 * (1.0 + rows[0].rhs.abs()), "residual {res}");
        }
    }
}

#[test]
fn certified_policy_holds_over_omega() {
    let (inst, samples) = toy(13, 2, 2, 5);
    let cfg = WassersteinConfig::new(0.05, 100.0).unwrap();
    let sol = solve_awdruc(&inst, &samples, &cfg, &CcgConfig::default(), &solver()).unwrap();
    assert!(sol.certified());
    let sys = affine_constraint_system(&inst, &sol.omega);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let om = &sol.omega;
    for c in &sys.constraints {
        let t = c.id.period;
        let mut points: Vec<Vec<f64>> = (0..4)
            .map(|m| (0..2).map(|r| if m >> r & 1 == 1 { om.upper[t][r] } else { om.lower[t][r] }).collect())
            .collect();
        points.extend((0..200).map(|_| {
            (0..2)
                .map(|r| rng.gen_range(om.lower[t][r]..=om.upper[t][r].max(om.lower[t][r])))
                .collect()
        }));
        for w in points {
            assert!(c.excess(&sol.policy, &sol.solution.range, &w) <= 1e-6, "{:?} at {w:?}", c.id);
        }
    }
}

#[test]
fn affine_not_below_exact_and_monotone() {
    let (inst, samples) = toy(30, 1, 2, 3);
    let mut prev = f64::NEG_INFINITY;
    for eps in [0.0, 0.01, 0.1] {
        let cfg = WassersteinConfig::new(eps, 100.0).unwrap();
        let a = solve_awdruc(&inst, &samples, &cfg, &CcgConfig::default(), &solver()).unwrap();
        let e = solve_ewdruc(&inst, &samples, &cfg, &CcgConfig::default(), &solver()).unwrap();
        let tol = 1e-6 * (1.0 + a.objective().abs());
        assert!(e.objective() <= a.objective() + tol, "eps {eps}: {} > {}", e.objective(), a.objective());
        assert!(a.objective() >= prev - tol, "eps {eps}: {} < {prev}", a.objective());
        prev = a.objective();
    }
}

#[test]
fn single_zero_sample_matches_feasible_suc() {
    let (inst, _) = toy(40, 1, 2, 1);
    let zero = SampleSet::new(vec![inst.zero_error()], &inst.w_box, 1e-9).unwrap();
    let cfg = WassersteinConfig::new(0.0, 100.0).unwrap();
    let a = solve_awdruc(&inst, &zero, &cfg, &CcgConfig::default(), &solver()).unwrap();

    // One-scenario SUC whose recourse is the (constant) policy, with
    // recourse feasibility over W added scenario by scenario.
    let s = solver();
    let mut suc = build_suc(&inst, zero.samples());
    let oracle = loop {
        let sol = s.solve(&suc.model).unwrap();
        let cand = suc.stage.extract(&sol, 0, 0);
        let rep = crate::robust::feasibility_subproblem(&inst, &cand.range, &inst.w_box, &s).unwrap();
        if rep.is_certified(1e-6) {
            break sol.objective;
        }
        for t in rep.violated_periods(1e-6) {
            add_feasibility_block(&mut suc.model, &inst, &suc.stage, t, &rep.witness[t]);
        }
    };
    assert!((a.objective() - oracle).abs() <= 1e-6 * (1.0 + oracle.abs()), "{} vs {oracle}", a.objective());
}

#[test]
fn exact_recourse_on_training_samples_is_cheaper() {
    let (inst, samples) = toy(50, 2, 2, 4);
    let cfg = WassersteinConfig::new(0.0, 100.0).unwrap();
    let a = solve_awdruc(&inst, &samples, &cfg, &CcgConfig::default(), &solver()).unwrap();
    let ev = evaluate_awdruc(&a, &inst, samples.samples(), &Solver::default()).unwrap();
    assert_eq!(ev.infeasible, 0);
    assert!(ev.mean_cost <= a.objective() + 1e-6 * (1.0 + a.objective().abs()));
}

#[test]
fn zero_error_evaluation_is_dispatch_at_ranges() {
    let (inst, samples) = toy(60, 1, 2, 2);
    let cfg = WassersteinConfig::new(0.01, 100.0).unwrap();
    let a = solve_awdruc(&inst, &samples, &cfg, &CcgConfig::default(), &solver()).unwrap();
    let ev = evaluate_awdruc(&a, &inst, &[inst.zero_error()], &Solver::default()).unwrap();
    let direct = a.solution.schedule.fixed_cost(&inst.system)
        + evaluate_second_stage(&inst, &a.solution.range, &inst.zero_error(), &Solver::default()).unwrap();
    assert!((ev.mean_cost - direct).abs() < 1e-9 * (1.0 + direct));
}

#[test]
fn out_of_box_scenario_still_priced() {
    let (inst, samples) = toy(61, 1, 2, 2);
    let cfg = WassersteinConfig::new(0.01, 100.0).unwrap();
    let a = solve_awdruc(&inst, &samples, &cfg, &CcgConfig::default(), &solver()).unwrap();
    // REG output above capacity: curtailment absorbs the excess.
    let far: Vec<Vec<f64>> = inst.w_box.upper.iter().map(|row| row.iter().map(|v| v + 50.0).collect()).collect();
    let ev = evaluate_awdruc(&a, &inst, &[far], &Solver::default()).unwrap();
    assert_eq!(ev.infeasible, 0);
    assert!(ev.mean_cost.is_finite());
}
