mod common;

use consensus_saddle::projection::ConvexSet;
use proptest::prelude::*;
use rand::Rng;

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Dykstra's alternating projections onto the orthant and the ball; converges
/// to the projection onto their intersection.
fn dykstra(x: &[f64], r: f64, iters: usize) -> Vec<f64> {
    let m = x.len();
    let mut y = x.to_vec();
    let mut p = vec![0.0; m];
    let mut q = vec![0.0; m];
    for _ in 0..iters {
        let a: Vec<f64> = (0..m).map(|k| (y[k] + p[k]).max(0.0)).collect();
        for k in 0..m {
            p[k] += y[k] - a[k];
        }
        let b: Vec<f64> = (0..m).map(|k| a[k] + q[k]).collect();
        let nb = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        let s = if nb > r { r / nb } else { 1.0 };
        let c: Vec<f64> = b.iter().map(|v| v * s).collect();
        for k in 0..m {
            q[k] = b[k] - c[k];
        }
        y = c;
    }
    y
}

fn sample_orthant_ball(m: usize, r: f64, rng: &mut impl Rng) -> Vec<f64> {
    let dir: Vec<f64> = (0..m).map(|_| rng.random::<f64>()).collect();
    let nd = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
    let rad = if rng.random_bool(0.2) {
        r
    } else {
        r * rng.random::<f64>().powf(1.0 / m as f64)
    };
    let mut y: Vec<f64> = dir.iter().map(|v| v / nd * rad).collect();
    if rng.random_bool(0.2) {
        let k = rng.random_range(0..m);
        y[k] = 0.0;
    }
    y
}

#[test]
fn orthant_ball_matches_dykstra_and_variational_inequality() {
    let mut rng = common::rng(2024);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let m = rng.random_range(1..=3);
        let r = rng.random_range(0.1..4.0);
        let x: Vec<f64> = (0..m).map(|_| rng.random_range(-6.0..6.0)).collect();
        let set = ConvexSet::OrthantBall { r };
        let p = set.project(&x).unwrap();
        let reference = dykstra(&x, r, 5000);
        worst = worst.max(dist(&p, &reference));
        assert!(
            dist(&p, &reference) <= 1e-6,
            "x={x:?} r={r} p={p:?} ref={reference:?}"
        );
        assert!(set.contains(&p, 1e-12).unwrap());
        let d_p = dist(&x, &p);
        for _ in 0..50 {
            let y = sample_orthant_ball(m, r, &mut rng);
            assert!(dist(&x, &y) >= d_p - 1e-12);
            let vi: f64 = (0..m).map(|k| (x[k] - p[k]) * (y[k] - p[k])).sum();
            assert!(
                vi <= 1e-10,
                "variational inequality {vi} at x={x:?}, y={y:?}"
            );
        }
    }
    assert!(worst <= 1e-6);
}

#[test]
fn closed_form_examples() {
    let s = ConvexSet::OrthantBall { r: 1.0 };
    assert_eq!(s.project(&[3.0, -4.0]).unwrap(), vec![1.0, 0.0]);
    let p = s.project(&[3.0, 4.0]).unwrap();
    assert!(dist(&p, &[0.6, 0.8]) < 1e-15);
    assert_eq!(s.project(&[0.2, 0.3]).unwrap(), vec![0.2, 0.3]);
    let b = ConvexSet::Box {
        lower: vec![0.0, -1.0],
        upper: vec![1.0, 1.0],
    };
    assert_eq!(b.project(&[2.0, -3.0]).unwrap(), vec![1.0, -1.0]);
    assert!(b.project(&[1.0]).is_err());
}

fn arb_set(m: usize) -> impl Strategy<Value = ConvexSet> {
    let lo_hi =
        prop::collection::vec((-3.0..3.0f64, 0.0..3.0f64), m).prop_map(|v| ConvexSet::Box {
            lower: v.iter().map(|(a, _)| *a).collect(),
            upper: v.iter().map(|(a, w)| a + w).collect(),
        });
    prop_oneof![
        Just(ConvexSet::FullSpace),
        Just(ConvexSet::NonnegOrthant),
        (0.1..5.0f64).prop_map(|r| ConvexSet::CenteredBall { r }),
        (0.1..5.0f64).prop_map(|r| ConvexSet::OrthantBall { r }),
        lo_hi,
    ]
}

fn arb_case() -> impl Strategy<Value = (ConvexSet, Vec<f64>, Vec<f64>)> {
    (1usize..=4, 0usize..=3).prop_flat_map(|(m1, m2)| {
        let set = if m2 == 0 {
            arb_set(m1).boxed()
        } else {
            (arb_set(m1), arb_set(m2))
                .prop_map(move |(a, b)| ConvexSet::product(vec![(a, m1), (b, m2)]))
                .boxed()
        };
        let m = m1 + m2;
        (
            set,
            prop::collection::vec(-10.0..10.0f64, m),
            prop::collection::vec(-10.0..10.0f64, m),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn projection_is_idempotent_feasible_and_nonexpansive((set, x, y) in arb_case()) {
        let px = set.project(&x).unwrap();
        let py = set.project(&y).unwrap();
        prop_assert!(set.contains(&px, 1e-10).unwrap());
        let ppx = set.project(&px).unwrap();
        prop_assert!(dist(&ppx, &px) <= 1e-12);
        prop_assert!(dist(&px, &py) <= dist(&x, &y) + 1e-12);
        prop_assert!((set.residual(&x).unwrap() - dist(&x, &px)).abs() <= 1e-12);
        prop_assert!(set.residual(&px).unwrap() <= 1e-12);
    }

    #[test]
    fn projection_satisfies_variational_inequality((set, x, y) in arb_case()) {
        let px = set.project(&x).unwrap();
        let fy = set.project(&y).unwrap();
        let vi: f64 = x.iter().zip(&px).zip(&fy).map(|((a, p), f)| (a - p) * (f - p)).sum();
        prop_assert!(vi <= 1e-9, "vi = {}", vi);
    }

    #[test]
    fn descriptors_round_trip_through_json((set, _x, _y) in arb_case()) {
        let text = serde_json::to_string(&set).unwrap();
        let back: ConvexSet = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, set);
    }
}

#[test]
fn descriptor_json_shape() {
    let s: ConvexSet = serde_json::from_str(r#"{"type":"orthant_ball","r":3.313}"#).unwrap();
    assert_eq!(s, ConvexSet::OrthantBall { r: 3.313 });
}
