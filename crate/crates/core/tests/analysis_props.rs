use consensus_saddle::analysis::{
    c_u, cdoubling, check_dominance, disagreement, envelope_at_record, rho, theorem_bound,
    BoundConstants, NetworkParams, NormBounds, DOUBLING_FACTOR,
};
use consensus_saddle::harness::{run_experiment, ExperimentConfig, GraphSpec, ProblemSpec};
use proptest::prelude::*;

fn naive_c_u(dt: f64, n: usize, b: usize) -> f64 {
    let rho = 1.0 - dt / (4.0 * (n * n) as f64);
    (32.0 / 9.0) / (1.0 - rho.powf(1.0 / b as f64))
}

fn network(n: usize, b: usize, sigma: f64, lambda_bar: f64, dt: f64) -> NetworkParams {
    NetworkParams {
        n,
        b,
        sigma,
        lambda_bar,
        delta_tilde: dt,
    }
}

#[test]
fn c_u_reference_values() {
    let v = c_u(0.01, 50, 1).unwrap();
    assert!((v - 32.0 / 9.0 * 1e6).abs() <= 1e-6 * v);
    assert!((rho(0.01, 50).unwrap() - (1.0 - 1e-6)).abs() < 1e-16);
    assert!(c_u(0.0, 5, 1).is_err());
    assert!(c_u(1.0, 5, 1).is_err());
    assert!(c_u(0.5, 1, 1).is_err());
    assert!(c_u(0.5, 5, 0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn c_u_matches_direct_formula(dt in 0.01..0.99f64, n in 2usize..=20, b in 1usize..=5) {
        let ours = c_u(dt, n, b).unwrap();
        let naive = naive_c_u(dt, n, b);
        prop_assert!((ours - naive).abs() <= 1e-9 * naive);
    }

    #[test]
    fn c_u_is_monotone(dt in 0.01..0.9f64, n in 2usize..=30, b in 1usize..=5) {
        let base = c_u(dt, n, b).unwrap();
        prop_assert!(c_u(dt * 1.05, n, b).unwrap() < base);
        prop_assert!(c_u(dt, n + 1, b).unwrap() > base);
        prop_assert!(c_u(dt, n, b + 1).unwrap() > base);
    }

    #[test]
    fn disagreement_vanishes_exactly_on_agreement(
        n in 1usize..=6,
        d in 1usize..=3,
        v in prop::collection::vec(-5.0..5.0f64, 18),
        k in 0usize..6,
        bump in 0.01..1.0f64,
    ) {
        let common: Vec<f64> = v[..d].to_vec();
        let mut x: Vec<f64> = (0..n).flat_map(|_| common.clone()).collect();
        prop_assert!(disagreement(&x, n, d).unwrap() <= 1e-12);
        if n >= 2 {
            let i = k % n;
            x[i * d] += bump;
            // The exact value for a single bumped entry.
            let expected = bump * ((n - 1) as f64 / n as f64).sqrt();
            prop_assert!((disagreement(&x, n, d).unwrap() - expected).abs() <= 1e-12);
        }
        let y = v[..n * d].to_vec();
        let shift: Vec<f64> = (0..n * d).map(|k| y[k] + common[k % d]).collect();
        let a = disagreement(&y, n, d).unwrap();
        let b = disagreement(&shift, n, d).unwrap();
        prop_assert!((a - b).abs() <= 1e-9);
        let scaled: Vec<f64> = y.iter().map(|t| -2.0 * t).collect();
        prop_assert!((disagreement(&scaled, n, d).unwrap() - 2.0 * a).abs() <= 1e-9);
    }

    #[test]
    fn doubling_constants_match_formula(
        norms in prop::collection::vec(0.0..10.0f64, 8),
        sigma in 0.0..1.0f64,
        lambda_bar in 0.0..5.0f64,
        dt in 0.01..0.99f64,
        n in 2usize..=10,
        b in 1usize..=3,
    ) {
        let nb = NormBounds {
            b_w: norms[0], b_d: norms[1], b_mu: norms[2], b_z: norms[3],
            h_w: norms[4], h_d: norms[5], h_mu: norms[6], h_z: norms[7],
        };
        let c = BoundConstants::new(nb, network(n, b, sigma, lambda_bar, dt)).unwrap();
        let cu = naive_c_u(dt, n, b);
        let g = (3.0 + sigma * lambda_bar) * cu;
        let wd = 4.0 * (norms[0].powi(2) + norms[1].powi(2))
            + 6.0 * (norms[4].powi(2) + norms[5].powi(2))
            + norms[5] * g * (norms[1] + 2.0 * norms[5]);
        let muz = 4.0 * (norms[2].powi(2) + norms[3].powi(2))
            + 6.0 * (norms[6].powi(2) + norms[7].powi(2))
            + norms[7] * g * (norms[3] + 2.0 * norms[7]);
        prop_assert!((c.c_wd - wd).abs() <= 1e-9 * wd.max(1.0));
        prop_assert!((c.c_muz - muz).abs() <= 1e-9 * muz.max(1.0));
        let d = cdoubling(&c);
        prop_assert!((d.cbar_wd - (2f64.sqrt() / (2f64.sqrt() - 1.0)) * wd).abs() <= 1e-9 * wd.max(1.0));
        prop_assert_eq!(d.cbar_muz, DOUBLING_FACTOR * c.c_muz);
        let mut prev = f64::INFINITY;
        for t in [2usize, 3, 10, 100, 1000] {
            let v = theorem_bound(t, &c).unwrap();
            let expected = (c.cbar_wd + c.cbar_muz) / (2.0 * ((t - 1) as f64).sqrt());
            prop_assert!((v - expected).abs() <= 1e-12 * expected.max(1.0));
            prop_assert!(v <= prev);
            prev = v;
            prop_assert_eq!(envelope_at_record(t, &c).unwrap(), theorem_bound(t + 1, &c).unwrap());
        }
        prop_assert!(theorem_bound(1, &c).is_err());
    }
}

#[test]
fn negative_norms_are_rejected() {
    let nb = NormBounds {
        b_w: -1.0,
        b_d: 0.0,
        b_mu: 0.0,
        b_z: 0.0,
        h_w: 0.0,
        h_d: 0.0,
        h_mu: 0.0,
        h_z: 0.0,
    };
    assert!(BoundConstants::new(nb, network(3, 1, 0.1, 1.0, 0.5)).is_err());
}

#[test]
fn benchmark_constants_have_the_reported_magnitude() {
    // Formula radius rather than the protocol radius, which is looser.
    let mut cfg = ExperimentConfig::default_benchmark();
    cfg.seed = Some(1);
    cfg.sigma = Some(0.2475);
    let setup = consensus_saddle::harness::Setup::new(&cfg).unwrap();
    let r = setup.instance.as_ref().unwrap().formula_radius();
    let c = setup.constants(r).unwrap();
    let total = c.cbar_wd + c.cbar_muz;
    assert!(total > 1e8 && total < 1e10, "C̄ sum {total:e}");
    // Unit out-degree: δ̃ = (1 − 0.84)·0.25 / 1.
    assert!((c.network.delta_tilde - 0.04).abs() < 1e-15);
}

#[test]
fn small_networks_satisfy_iss_and_dominance() {
    for seed in 0..10u64 {
        for n in [2usize, 4, 6] {
            let mut cfg = ExperimentConfig::new(ProblemSpec::Benchmark { n, b: None });
            cfg.graph = GraphSpec::Ring;
            cfg.seed = Some(seed);
            cfg.horizon = 3000;
            cfg.stride = 7;
            let out = run_experiment(&cfg).unwrap();
            let rep = &out.report;
            assert!(rep.iss.passed(), "seed {seed}, n {n}: {:?}", rep.iss);
            assert!(rep.dominance.ok, "seed {seed}, n {n}: {:?}", rep.dominance);
            // Recomputed dominance from the recorded series.
            let again = check_dominance(&out.trace.records, &rep.constants);
            assert_eq!(again.ok, rep.dominance.ok);
            for rec in &out.trace.records {
                let gap = rec.saddle_gap.unwrap();
                assert!(gap <= envelope_at_record(rec.t, &rep.constants).unwrap());
            }
        }
    }
}
