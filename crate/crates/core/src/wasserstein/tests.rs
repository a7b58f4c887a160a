use num_rational::Rational64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::solver::{Model, Relation, Sense, SolveParams, Solver, Status};
use crate::synthetic::{random_instance, SyntheticShape};
use crate::uc::{build_suc, PeriodLp, PeriodOutcome};

fn r(n: i64, d: i64) -> Rational64 {
    Rational64::new(n, d)
}

fn one_dim(values: &[f64]) -> Vec<Vec<Vec<f64>>> {
    values.iter().map(|v| vec![vec![*v]]).collect()
}

#[test]
fn omega_clipped_by_w() {
    let w = IntervalBox::new(vec![vec![-0.5]], vec![vec![0.7]]);
    let om = omega(&one_dim(&[0.1, 0.3]), &0.01, &100.0, &w);
    assert_eq!((om.lower[0][0], om.upper[0][0]), (-0.5, 0.7));
    let wide = IntervalBox::new(vec![vec![-5.0]], vec![vec![5.0]]);
    let om = omega(&one_dim(&[0.1, 0.3]), &0.01, &100.0, &wide);
    assert!((om.lower[0][0] + 0.9).abs() < 1e-12 && (om.upper[0][0] - 1.3).abs() < 1e-12);
}

#[test]
fn omega_zero_radius_is_sample_hull() {
    let w = IntervalBox::new(vec![vec![-5.0]], vec![vec![5.0]]);
    let om = omega(&one_dim(&[0.2, -1.0, 0.4]), &0.0, &100.0, &w);
    assert_eq!((om.lower[0][0], om.upper[0][0]), (-1.0, 0.4));
}

#[test]
fn widening_uses_larger_of_count_and_beta() {
    assert_eq!(widening_factor(200, &100.0), 200.0);
    assert_eq!(widening_factor(2, &100.0), 100.0);
}

fn wide_box(h: usize, d: usize) -> IntervalBox<Rational64> {
    IntervalBox::new(vec![vec![r(-1000, 1); d]; h], vec![vec![r(1000, 1); d]; h])
}

#[test]
fn witness_single_atom() {
    let samples = vec![vec![vec![r(0, 1)]]];
    let w = tightness_witness(&samples, &r(1, 10), &r(1, 1), &wide_box(1, 1)).unwrap();
    assert_eq!(w.transport_cost, r(1, 10));
    assert_eq!(w.mass_outside, r(1, 1));
}

#[test]
fn witness_partial_mass_when_beta_dominates() {
    let samples = vec![vec![vec![r(0, 1)]], vec![vec![r(1, 2)]]];
    let eps = r(3, 100);
    let w = tightness_witness(&samples, &eps, &r(100, 1), &wide_box(1, 1)).unwrap();
    assert_eq!(w.transport_cost, eps);
    assert_eq!(w.mass_outside, r(1, 100));
    let d = wasserstein_distance_discrete(
        &DiscreteDistribution::empirical(&samples).to_f64(),
        &w.distribution.to_f64(),
        &Solver::default(),
    )
    .unwrap();
    assert!((d - 0.03).abs() < 1e-9);
}

#[test]
fn witness_full_atom_when_count_matches_beta() {
    let samples = vec![vec![vec![r(0, 1)]], vec![vec![r(1, 2)]]];
    let eps = r(1, 5);
    let w = tightness_witness(&samples, &eps, &r(2, 1), &wide_box(1, 1)).unwrap();
    assert_eq!(w.transport_cost, eps);
    assert_eq!(w.mass_outside, r(1, 2));
    let d = wasserstein_distance_discrete(
        &DiscreteDistribution::empirical(&samples).to_f64(),
        &w.distribution.to_f64(),
        &Solver::default(),
    )
    .unwrap();
    assert!((d - 0.2).abs() < 1e-9);
}

#[test]
fn witness_skips_when_clipped() {
    let samples = vec![vec![vec![r(0, 1)]]];
    let tight = IntervalBox::new(vec![vec![r(-1, 10)]], vec![vec![r(1, 10)]]);
    assert_eq!(
        tightness_witness(&samples, &r(1, 1), &r(2, 1), &tight).unwrap_err(),
        WitnessSkip::Clipped
    );
    assert_eq!(
        tightness_witness(&samples, &r(0, 1), &r(2, 1), &wide_box(1, 1)).unwrap_err(),
        WitnessSkip::ZeroRadius
    );
}

#[test]
fn distance_basic_cases() {
    let solver = Solver::default();
    let p = DiscreteDistribution::new(vec![vec![0.0], vec![1.0]], vec![0.5, 0.5], 1e-12).unwrap();
    assert!(wasserstein_distance_discrete(&p, &p, &solver).unwrap().abs() < 1e-12);
    let a = DiscreteDistribution::new(vec![vec![0.0]], vec![1.0], 1e-12).unwrap();
    let b = DiscreteDistribution::new(vec![vec![3.0]], vec![1.0], 1e-12).unwrap();
    assert!((wasserstein_distance_discrete(&a, &b, &solver).unwrap() - 3.0).abs() < 1e-12);
}

/// Minimum transport cost over plans whose entries are multiples of 1/8.
fn brute_force_transport(p: &[f64], q: &[f64], cost: &[Vec<f64>]) -> f64 {
    let (n, m) = (p.len(), q.len());
    let pu: Vec<i32> = p.iter().map(|x| (x * 8.0).round() as i32).collect();
    let qu: Vec<i32> = q.iter().map(|x| (x * 8.0).round() as i32).collect();
    let mut best = f64::INFINITY;
    let mut plan = vec![0i32; n * m];
    fn rec(
        k: usize,
        plan: &mut Vec<i32>,
        n: usize,
        m: usize,
        pu: &[i32],
        qu: &[i32],
        cost: &[Vec<f64>],
        best: &mut f64,
    ) {
        if k == n * m {
            let ok_rows = (0..n).all(|i| (0..m).map(|j| plan[i * m + j]).sum::<i32>() == pu[i]);
            let ok_cols = (0..m).all(|j| (0..n).map(|i| plan[i * m + j]).sum::<i32>() == qu[j]);
            if ok_rows && ok_cols {
                let c: f64 = (0..n * m).map(|x| plan[x] as f64 / 8.0 * cost[x / m][x % m]).sum();
                *best = best.min(c);
            }
            return;
        }
        let (i, j) = (k / m, k % m);
        let used_row: i32 = (0..j).map(|jj| plan[i * m + jj]).sum();
        let used_col: i32 = (0..i).map(|ii| plan[ii * m + j]).sum();
        let cap = (pu[i] - used_row).min(qu[j] - used_col);
        for v in 0..=cap.max(0) {
            plan[k] = v;
            rec(k + 1, plan, n, m, pu, qu, cost, best);
        }
        plan[k] = 0;
    }
    rec(0, &mut plan, n, m, &pu, &qu, cost, &mut best);
    best
}

#[test]
fn distance_matches_brute_force_on_eighths() {
    let solver = Solver::default();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let eighths = |rng: &mut ChaCha8Rng| {
        // Four masses in eighths summing to 8.
        let mut cuts: Vec<i32> = (0..3).map(|_| rng.gen_range(0..=8)).collect();
        cuts.sort();
        vec![cuts[0], cuts[1] - cuts[0], cuts[2] - cuts[1], 8 - cuts[2]]
            .into_iter()
            .map(|x| x as f64 / 8.0)
            .collect::<Vec<f64>>()
    };
    for _ in 0..20 {
        let atoms = |rng: &mut ChaCha8Rng| -> Vec<Vec<f64>> {
            (0..4).map(|_| vec![rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)]).collect()
        };
        let (pa, qa) = (atoms(&mut rng), atoms(&mut rng));
        let (pp, qp) = (eighths(&mut rng), eighths(&mut rng));
        let cost: Vec<Vec<f64>> = pa
            .iter()
            .map(|a| qa.iter().map(|b| (a[0] - b[0]).abs() + (a[1] - b[1]).abs()).collect())
            .collect();
        let oracle = brute_force_transport(&pp, &qp, &cost);
        let p = DiscreteDistribution::new(pa, pp, 1e-12).unwrap();
        let q = DiscreteDistribution::new(qa, qp, 1e-12).unwrap();
        let d = wasserstein_distance_discrete(&p, &q, &solver).unwrap();
        // Vertices of the transportation polytope have entries in eighths
        // when the marginals do, so the grid search is exact.
        assert!((d - oracle).abs() < 1e-6, "{d} vs {oracle}");
    }
}

#[test]
fn gv_bounds_symmetric_and_boundary() {
    let om = IntervalBox::new(vec![vec![r(-2, 1)]], vec![vec![r(2, 1)]]);
    let b = gv_bounds(&[vec![vec![r(0, 1)]]], &om);
    assert_eq!(b.plus[0], b.minus[0]);
    let b = gv_bounds(&[vec![vec![r(2, 1)]]], &om);
    assert_eq!(b.plus[0], r(0, 1));
    assert_eq!(b.minus[0], r(4, 1));
}

#[test]
fn gv_bounds_match_definition_entrywise() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..20 {
        let (s_n, t_n, i_n) = (rng.gen_range(1..5), rng.gen_range(1..4), rng.gen_range(1..4));
        let samples: Vec<Vec<Vec<Rational64>>> = (0..s_n)
            .map(|_| (0..t_n).map(|_| (0..i_n).map(|_| r(rng.gen_range(-20..20), 4)).collect()).collect())
            .collect();
        let w = IntervalBox::new(vec![vec![r(-6, 1); i_n]; t_n], vec![vec![r(6, 1); i_n]; t_n]);
        let eps = r(rng.gen_range(0..5), 100);
        let beta = r(rng.gen_range(2..50), 1);
        let om = omega(&samples, &eps, &beta, &w);
        let b = gv_bounds(&samples, &om);
        // v̄ = min{w̄, w̄^a} - ŵ, v̲ = max{w̲, w̲^a} - ŵ, summed over i and s.
        let m = if r(s_n as i64, 1) > beta { r(s_n as i64, 1) } else { beta };
        for t in 0..t_n {
            let (mut zp, mut zm) = (r(0, 1), r(0, 1));
            for i in 0..i_n {
                let hi = samples.iter().map(|s| s[t][i]).max().unwrap() + eps * m;
                let lo = samples.iter().map(|s| s[t][i]).min().unwrap() - eps * m;
                for s in &samples {
                    zp += hi.min(w.upper[t][i]) - s[t][i];
                    zm -= lo.max(w.lower[t][i]) - s[t][i];
                }
            }
            assert_eq!((b.plus[t], b.minus[t]), (zp, zm));
        }
    }
}

#[test]
fn gv_primal_hand_cases() {
    let b = GvBounds {
        plus: vec![r(1, 1)],
        minus: vec![r(1, 1)],
    };
    assert_eq!(gv_primal(&[r(2, 1)], &b, &r(1, 2), 1), r(1, 1));
    assert_eq!(gv_primal(&[r(-3, 1)], &b, &r(1, 2), 1), r(3, 2));
    assert_eq!(gv_primal(&[r(2, 1)], &b, &r(0, 1), 1), r(0, 1));
}

#[test]
fn gv_dual_hand_cases() {
    let solver = Solver::default();
    let b = GvBounds {
        plus: vec![1.0],
        minus: vec![1.0],
    };
    assert!((gv_dual(&[2.0], &b, 0.5, 1, &solver).unwrap().value - 1.0).abs() < 1e-9);
    let d = gv_dual(&[0.0, 0.0], &GvBounds { plus: vec![1.0; 2], minus: vec![1.0; 2] }, 0.3, 2, &solver).unwrap();
    assert!(d.value.abs() < 1e-12 && d.xi.abs() < 1e-12);
}

#[test]
fn gc_zero_mean_or_zero_slope() {
    let samples = vec![vec![vec![r(1, 1)], vec![r(2, 1)]], vec![vec![r(-1, 1)], vec![r(-2, 1)]]];
    assert_eq!(gc(&[r(5, 1), r(7, 1)], &[r(3, 1), r(4, 1)], &samples), r(7, 1));
    let skewed = vec![vec![vec![r(1, 1)], vec![r(2, 1)]]];
    assert_eq!(gc(&[r(0, 1), r(0, 1)], &[r(3, 1), r(4, 1)], &skewed), r(7, 1));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]
    #[test]
    fn gv_chain_small(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (s_n, t_n, i_n) = (rng.gen_range(1..=5), rng.gen_range(1..=4), rng.gen_range(1..=3));
        let w = IntervalBox::new(vec![vec![-5.0; i_n]; t_n], vec![vec![5.0; i_n]; t_n]);
        let samples: Vec<Vec<Vec<f64>>> = (0..s_n)
            .map(|_| (0..t_n).map(|_| (0..i_n).map(|_| rng.gen_range(-4.0..4.0)).collect()).collect())
            .collect();
        let eps = rng.gen_range(0.0..0.5);
        let om = omega(&samples, &eps, &rng.gen_range(1.5..50.0), &w);
        let c1: Vec<f64> = (0..t_n).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let b = gv_bounds(&samples, &om);
        let solver = Solver::default();
        let p = gv_primal(&c1, &b, &eps, s_n);
        let d = gv_dual(&c1, &b, eps, s_n, &solver).unwrap().value;
        let g = gv_disaggregated(&c1, &samples, &om, eps, &solver).unwrap();
        prop_assert!(p >= 0.0);
        prop_assert!((p - d).abs() <= 1e-6 * (1.0 + p.abs()), "{} {}", p, d);
        prop_assert!((p - g).abs() <= 1e-6 * (1.0 + p.abs()), "{} {}", p, g);
    }

    #[test]
    fn omega_contains_samples_and_sits_in_w(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = IntervalBox::new(vec![vec![-3.0, 0.0]], vec![vec![4.0, 0.0]]);
        let samples: Vec<Vec<Vec<f64>>> = (0..rng.gen_range(1..6))
            .map(|_| vec![vec![rng.gen_range(-3.0..=4.0), 0.0]])
            .collect();
        let om = omega(&samples, &rng.gen_range(0.0..0.2), &100.0, &w);
        prop_assert!(w.contains_box(&om, 1e-9));
        for s in &samples {
            prop_assert!(om.contains(s, 1e-9));
        }
    }
}

fn solver() -> Solver {
    Solver::default().with_params(SolveParams::default().with_mip_gap(1e-7))
}

fn toy_instance(seed: u64, horizon: usize) -> (crate::UcInstance, SampleSet) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inst = random_instance(
        &mut rng,
        SyntheticShape {
            buses: 1,
            horizon,
            reg_units: 1,
        },
    );
    let samples: Vec<Vec<Vec<f64>>> = (0..2)
        .map(|_| {
            (0..horizon)
                .map(|t| vec![rng.gen_range(inst.w_box.lower[t][0]..=inst.w_box.upper[t][0]) * 0.5])
                .collect()
        })
        .collect();
    let set = SampleSet::new(samples, &inst.w_box, 1e-9).unwrap();
    (inst, set)
}

/// SUC plus recourse feasibility over W, by adding feasibility blocks until
/// certified.
fn suc_with_feasibility(inst: &crate::UcInstance, samples: &SampleSet) -> f64 {
    let solver = solver();
    let mut suc = build_suc(inst, samples.samples());
    loop {
        let sol = solver.solve(&suc.model).unwrap();
        assert_eq!(sol.status, Status::Optimal);
        let cand = suc.stage.extract(&sol, 0, 0);
        let rep = crate::robust::feasibility_subproblem(inst, &cand.range, &inst.w_box, &solver).unwrap();
        if rep.is_certified(1e-6) {
            return sol.objective;
        }
        for t in rep.violated_periods(1e-6) {
            crate::robust::add_feasibility_block(&mut suc.model, inst, &suc.stage, t, &rep.witness[t]);
        }
    }
}

#[test]
fn ewdruc_zero_radius_equals_feasible_suc() {
    let (inst, samples) = toy_instance(4, 2);
    let cfg = WassersteinConfig::new(0.0, 100.0).unwrap();
    let ew = solve_ewdruc(&inst, &samples, &cfg, &crate::robust::CcgConfig::default(), &solver()).unwrap();
    let suc = suc_with_feasibility(&inst, &samples);
    assert!((ew.objective() - suc).abs() <= 1e-6 * (1.0 + suc.abs()), "{} vs {suc}", ew.objective());
}

#[test]
fn ewdruc_monotone_in_radius() {
    let (inst, samples) = toy_instance(9, 2);
    let mut prev = f64::NEG_INFINITY;
    for eps in [0.0, 0.01, 0.1, 0.5] {
        let cfg = WassersteinConfig::new(eps, 100.0).unwrap();
        let ew = solve_ewdruc(&inst, &samples, &cfg, &crate::robust::CcgConfig::default(), &solver()).unwrap();
        assert!(ew.objective() >= prev - 1e-6 * (1.0 + prev.abs()), "eps {eps}: {} < {prev}", ew.objective());
        prev = ew.objective();
    }
}

/// Worst-case expectation over distributions on a grid of Ω within the ball,
/// as a transport LP: `max Σ π_sg f(g)` s.t. `Σ_g π_sg = 1/S`,
/// `Σ π_sg |g - ŵ^s| <= ε`.
fn grid_dro_value(values: &[f64], grid: &[f64], samples: &[f64], eps: f64) -> f64 {
    let n = samples.len() as f64;
    let mut m = Model::new(Sense::Maximize);
    let plan: Vec<Vec<_>> = samples
        .iter()
        .map(|_| values.iter().map(|f| m.continuous(0.0, f64::INFINITY, *f)).collect())
        .collect();
    for row in &plan {
        m.constrain(row.iter().map(|v| (*v, 1.0)), Relation::Eq, 1.0 / n);
    }
    m.constrain(
        plan.iter()
            .zip(samples)
            .flat_map(|(row, s)| row.iter().zip(grid).map(move |(v, g)| (*v, (g - s).abs()))),
        Relation::Le,
        eps,
    );
    let sol = Solver::default().solve(&m).unwrap();
    assert_eq!(sol.status, Status::Optimal);
    sol.objective
}

#[test]
fn ewdruc_matches_discretised_ambiguity_set() {
    let (inst, samples) = toy_instance(12, 1);
    let cfg = WassersteinConfig::new(0.05, 100.0).unwrap();
    let ew = solve_ewdruc(&inst, &samples, &cfg, &crate::robust::CcgConfig::default(), &solver()).unwrap();
    let range = &ew.robust.solution.range;
    let recourse = ew.objective() - ew.robust.solution.schedule.fixed_cost(&inst.system);
    let lp = PeriodLp::dispatch(&inst, 0, &range.period(0));
    let (lo, hi) = (ew.omega.lower[0][0], ew.omega.upper[0][0]);
    let pts: Vec<f64> = samples.samples().iter().map(|s| s[0][0]).collect();
    let mut errs = Vec::new();
    for n in [4usize, 16, 64] {
        // Keep the empirical atoms in the support so the ball is nonempty.
        let mut grid: Vec<f64> = (0..=n).map(|k| lo + (hi - lo) * k as f64 / n as f64).collect();
        grid.extend(&pts);
        let values: Vec<f64> = grid
            .iter()
            .map(|g| match lp.solve(&Solver::default(), &[*g]).unwrap() {
                PeriodOutcome::Feasible { cost, .. } => cost,
                PeriodOutcome::Infeasible => panic!("certified ranges are feasible on Ω"),
            })
            .collect();
        let v = grid_dro_value(&values, &grid, &pts, cfg.epsilon);
        errs.push((v - recourse).abs() / recourse.abs().max(1.0));
    }
    assert!(errs.iter().all(|e| *e <= 0.02), "errors {errs:?}");
}
