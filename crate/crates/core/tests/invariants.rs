use fkqc::chain::{alpha_beta, alpha_beta_scan, enumerate_points, index_of, local_patch, point, super_alpha_beta};
use fkqc::minimal::{collapse, level_geometry, lift, project};
use fkqc::model::{rotation_number_estimate, AnchorFn, Configuration};
use fkqc::potential::{check_equivariance, matched_partner, PotentialSpec};
use fkqc::solver::{ball_radius, lambda_threshold, solve_fixed_point, AilParams};
use fkqc::{GoldenNumber, TAU};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::OnceLock;

fn oracle_points() -> &'static [GoldenNumber] {
    static PTS: OnceLock<Vec<GoldenNumber>> = OnceLock::new();
    PTS.get_or_init(|| enumerate_points(-800, 800).unwrap())
}

fn golden_in(lo: f64, hi: f64) -> impl Strategy<Value = GoldenNumber> {
    (-600i64..=600, lo..hi).prop_map(|(b, target)| GoldenNumber::new((target - b as f64 * TAU).round() as i64, b))
}

proptest! {
    #[test]
    fn alpha_beta_equals_window_scan(x in golden_in(-999.0, 999.0)) {
        prop_assert_eq!(alpha_beta_scan(oracle_points(), x), Some(alpha_beta(x)));
    }

    #[test]
    fn alpha_beta_bracket_float_inputs(x in -5000.0f64..5000.0) {
        let (a, b) = alpha_beta(x);
        prop_assert!(a.to_f64() <= x && x < b.to_f64() + 1e-9);
        let d = b - a;
        prop_assert!(d == GoldenNumber::ONE || d == GoldenNumber::TAU);
        prop_assert_eq!(index_of(b), index_of(a) + 1);
    }

    #[test]
    fn point_index_round_trip(k in -1_000_000_000i64..1_000_000_000) {
        let p = point(k).unwrap();
        prop_assert_eq!(index_of(p), k);
        prop_assert_eq!(alpha_beta(p), (p, point(k + 1).unwrap()));
    }

    #[test]
    fn matched_patches_give_equal_potential(k in -500i64..500, a in -3i64..=3, b in -2i64..=2, start in -600i64..600) {
        let x = point(k).unwrap() + GoldenNumber::new(a, b);
        if let Some(y) = matched_partner(x, start..start + 300).unwrap() {
            let spec = PotentialSpec::default();
            prop_assert_eq!(spec.v(x), spec.v(y));
            prop_assert!(check_equivariance(x, y));
        }
    }

    #[test]
    fn super_alpha_beta_bracket(l in 1u32..=4, x in -3000.0f64..3000.0) {
        let (a, b) = super_alpha_beta(l, x).unwrap();
        prop_assert!(a.to_f64() <= x && x < b.to_f64() + 1e-9);
        prop_assert!(project(l, a).unwrap().is_r());
    }

    #[test]
    fn ail_solution_stays_in_ball(lambda in 0.2f64..20.0, n in 10i64..120) {
        let h = AnchorFn::default_linear();
        prop_assume!(lambda > lambda_threshold(&h, -n - 1, n + 1).unwrap());
        let mut p = AilParams::new(h, n);
        p.lambda = lambda;
        let sol = solve_fixed_point(&p).unwrap();
        prop_assert!(sol.max_deviation() <= ball_radius(lambda, 0.0) * (1.0 + 1e-12));
        for r in sol.step_ratios() {
            prop_assert!(r <= 1.0 / (32.0 * lambda) + 1e-9);
        }
    }
}

#[test]
fn finite_local_complexity() {
    for radius in [1.0, 2.0, 4.0] {
        let mut classes = std::collections::HashSet::new();
        for k in -5000..5000 {
            classes.insert(format!("{:?}", local_patch(point(k).unwrap(), radius).unwrap().offsets));
        }
        // a Sturmian chain has n + 1 patterns of n consecutive letters
        let letters = (2.0 * radius).ceil() as usize;
        assert!(classes.len() <= letters + 2, "radius {radius}: {}", classes.len());
    }
}

#[test]
fn project_collapse_identity_random_floats() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10_000 {
        let x: f64 = rng.gen_range(-2000.0..2000.0);
        let l = rng.gen_range(1..=3);
        let up = collapse(l, project(l + 1, x).unwrap()).unwrap();
        assert!(up.same_point(&project(l, x).unwrap()), "l={l} x={x}");
    }
}

#[test]
fn lifted_configurations_are_ordered() {
    for l in 1..=4 {
        let cfg = lift(l, &level_geometry(l).unwrap(), 400).unwrap();
        assert_eq!(cfg.at(0), 0.0);
        assert!(cfg.theta.windows(2).all(|w| w[1] > w[0]));
        assert!(cfg.max_gap() <= 2.0 * TAU.powi(2 * l as i32 + 2));
    }
}

#[test]
fn linear_configuration_has_its_slope() {
    let theta = (3.0 * TAU + 1.0) / 2.0;
    let cfg = Configuration::from_fn(-100, 100, |i| theta * i as f64)
        .unwrap()
        .with_anchor(AnchorFn::default_linear());
    let est = rotation_number_estimate(&cfg).unwrap();
    assert!((est.estimate - theta).abs() < 1e-14);
    assert!(est.error_bound.unwrap() < 1e-14);
}
