mod common;

use consensus_saddle::copt::{
    exact_gamma, min_agreement_round, run_dual_bound_protocol, slater_components, CoptError,
    ProtocolOptions,
};
use consensus_saddle::graph::{DigraphSequence, WeightedDigraph};
use consensus_saddle::harness::oracle::{dual_value, inner_minimizer};
use consensus_saddle::harness::{oracle_solve, BenchmarkInstance};
use proptest::prelude::*;
use rand::Rng;

fn random_instance(n: usize, rng: &mut impl Rng) -> BenchmarkInstance {
    loop {
        let c: Vec<f64> = (0..n).map(|_| 1.0 - rng.random::<f64>()).collect();
        let d: Vec<f64> = (0..n).map(|_| 1.0 - rng.random::<f64>()).collect();
        let cap = std::f64::consts::LN_2 * d.iter().sum::<f64>();
        let b = rng.random_range(-0.2..0.95) * cap;
        if let Ok(inst) = BenchmarkInstance::new(c, d, b) {
            return inst;
        }
    }
}

/// Primal optimum of a two-agent instance by grid search.
fn grid_optimum(inst: &BenchmarkInstance, steps: usize) -> f64 {
    let mut best = f64::INFINITY;
    for a in 0..=steps {
        let w0 = a as f64 / steps as f64;
        // For fixed w0 the cheapest feasible w1 solves the constraint exactly.
        let need = inst.b - inst.d[0] * w0.ln_1p();
        let w1 = if need <= 0.0 {
            0.0
        } else {
            (need / inst.d[1]).exp_m1()
        };
        if w1 <= 1.0 {
            best = best.min(inst.c[0] * w0 + inst.c[1] * w1);
        }
    }
    best
}

#[test]
fn oracle_matches_grid_search_on_two_agents() {
    let mut r = common::rng(5);
    for _ in 0..50 {
        let inst = random_instance(2, &mut r);
        let sol = oracle_solve(&inst, 1e-10, 2.0 * inst.formula_radius()).unwrap();
        let grid = grid_optimum(&inst, 200_000);
        // The grid value overshoots by at most max(c)·(1/steps)·(slope bound).
        assert!(
            sol.value <= grid + 1e-9,
            "oracle {} above grid {}",
            sol.value,
            grid
        );
        assert!(
            grid - sol.value <= 1e-4,
            "oracle {} vs grid {}",
            sol.value,
            grid
        );
    }
}

#[test]
fn analytic_instance() {
    let inst = BenchmarkInstance::new(vec![1.0, 1.0], vec![1.0, 1.0], 2.0 * 1.5f64.ln()).unwrap();
    let sol = oracle_solve(&inst, 1e-10, 10.0).unwrap();
    assert!((sol.z - 1.5).abs() <= 1e-6);
    assert!((sol.w[0] - 0.5).abs() <= 1e-9 && (sol.w[1] - 0.5).abs() <= 1e-9);
    assert!((sol.value - 1.0).abs() <= 1e-9);
    let w = inner_minimizer(1.0, 1.0, 1.5);
    assert!((w - 1.5 * w.ln_1p() - (0.5 - 1.5 * 1.5f64.ln())).abs() < 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn oracle_certifies_kkt_and_weak_duality(n in 1usize..=20, seed in any::<u64>()) {
        let mut r = common::rng(seed);
        let inst = random_instance(n, &mut r);
        let tol = 1e-10;
        let sol = oracle_solve(&inst, tol, 2.0 * inst.formula_radius()).unwrap();
        prop_assert!(sol.kkt.primal_violation <= 10.0 * tol);
        prop_assert!(sol.kkt.stationarity <= 10.0 * tol || (sol.z == 0.0 && inst.constraint(&sol.w) <= 0.0));
        prop_assert!(sol.kkt.complementarity <= 10.0 * tol * (1.0 + sol.z));
        prop_assert!(sol.kkt.duality_gap >= -tol);
        prop_assert!(sol.kkt.duality_gap <= tol);
        // Weak duality against arbitrary multipliers.
        for _ in 0..10 {
            let z = r.random_range(0.0..10.0);
            prop_assert!(dual_value(&inst, z) <= sol.value + 1e-12);
        }
        prop_assert!(sol.w.iter().all(|w| (0.0..=1.0).contains(w)));
    }

    #[test]
    fn protocol_radius_bounds_the_optimal_multiplier(n in 2usize..=5, b in 1usize..=3, seed in any::<u64>()) {
        let mut r = common::rng(seed);
        let inst = random_instance(n, &mut r);
        let sep = inst.to_separable();
        let seq = common::random_balanced_sequence(n, b, &mut r);
        let w = seq.stepsize_window(0.84).unwrap();
        let sigma = r.random_range(w.lo..=w.hi);
        let run = run_dual_bound_protocol(&sep, &seq, sigma, &ProtocolOptions::default()).unwrap();
        let sol = oracle_solve(&inst, 1e-12, 2.0 * run.radius()).unwrap();
        prop_assert!(sol.z <= run.radius(), "z* = {} > r = {}", sol.z, run.radius());
        prop_assert!(run.agents_agree());
        prop_assert!(run.agreement_rounds_used <= (n - 1) * b);
        prop_assert!(run.k_star.iter().all(|k| *k <= run.k_star_star));
        let slater = slater_components(&sep).unwrap();
        prop_assert!(run.gamma() <= exact_gamma(&sep, &slater));
        prop_assert!(run.gamma() > 0.0);
    }

    #[test]
    fn min_agreement_finishes_within_bound(n in 2usize..=6, b in 1usize..=3, seed in any::<u64>()) {
        let mut r = common::rng(seed);
        let seq = common::random_balanced_sequence(n, b, &mut r);
        let start = r.random_range(0..5) * b;
        let mut v: Vec<Vec<f64>> = (0..n).map(|_| vec![r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)]).collect();
        let target: Vec<f64> = (0..2).map(|l| v.iter().map(|x| x[l]).fold(f64::INFINITY, f64::min)).collect();
        for k in 1..=(n - 1) * b {
            v = min_agreement_round(&v, seq.at(start + k));
        }
        for x in &v {
            prop_assert_eq!(x, &target);
        }
    }
}

#[test]
fn protocol_rejects_unbalanced_graphs() {
    let inst = BenchmarkInstance::new(vec![1.0; 3], vec![1.0; 3], 0.3).unwrap();
    let g = WeightedDigraph::from_edges(3, &[(0, 1, 1.0), (1, 2, 1.0), (2, 0, 0.5)]).unwrap();
    let seq = DigraphSequence::fixed(g).unwrap();
    let err = run_dual_bound_protocol(&inst.to_separable(), &seq, 0.1, &ProtocolOptions::default())
        .unwrap_err();
    assert!(matches!(err, CoptError::Invalid(_)));
}

#[test]
fn protocol_rejects_sigma_outside_window() {
    let inst = BenchmarkInstance::new(vec![1.0; 2], vec![1.0; 2], 0.3).unwrap();
    let seq =
        DigraphSequence::fixed(WeightedDigraph::undirected(2, &[(0, 1)], 1.0).unwrap()).unwrap();
    assert!(
        run_dual_bound_protocol(&inst.to_separable(), &seq, 5.0, &ProtocolOptions::default())
            .is_err()
    );
}

#[test]
fn round_cap_reports_non_termination() {
    // One agent far from feasibility, one barely feasible: the sign average
    // needs a few rounds, more than the cap allows.
    let inst = BenchmarkInstance {
        c: vec![1.0, 1.0, 1.0],
        d: vec![0.01, 0.01, 1.0],
        b: 0.6,
    };
    let sep = inst.to_separable();
    let seq =
        DigraphSequence::fixed(WeightedDigraph::undirected(3, &[(0, 1), (1, 2)], 1.0).unwrap())
            .unwrap();
    let w = seq.stepsize_window(0.84).unwrap();
    let opts = ProtocolOptions {
        max_rounds: 0,
        ..Default::default()
    };
    match run_dual_bound_protocol(&sep, &seq, w.lo, &opts) {
        Err(CoptError::ProtocolNonTermination { rounds, diagnostic }) => {
            assert_eq!(rounds, 0);
            assert!(!diagnostic.is_empty());
        }
        other => panic!("expected non-termination, got {other:?}"),
    }
}
