use std::sync::Arc;

use nalgebra::DVector;
use proptest::prelude::*;

use jamgame::channel::{ChannelSet, JammerPolicy, LinkState};
use jamgame::game::{
    check_ranking, conditional_payoff, conditional_payoff_du, expected_payoff, lift_strategy,
    reduce_game, GameInstance,
};
use jamgame::lq::{lq_control_set, lq_region, lq_u_star, random_instances, LqScenario, Region};
use jamgame::numeric::central_diff;
use jamgame::oracle::{grid_game_values, GridSpec};
use jamgame::solver::{solve, SaddleKind};

fn instance(seed: u64) -> LqScenario {
    random_instances(seed, 1).pop().unwrap()
}

fn policy(weights: &[f64]) -> JammerPolicy {
    let total: f64 = weights.iter().sum();
    JammerPolicy::new(weights.iter().map(|w| w / total).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn expected_payoff_is_affine_in_the_policy(
        seed in any::<u64>(),
        u in -3.0..3.0f64,
        w1 in prop::collection::vec(0.01..1.0f64, 4),
        w2 in prop::collection::vec(0.01..1.0f64, 4),
        lambda in 0.0..=1.0f64,
    ) {
        let s = instance(seed);
        let n = s.n_channels();
        let game = s.to_game();
        let (p, p2) = (policy(&w1[..n]), policy(&w2[..n]));
        let mix: Vec<f64> = p.probabilities().iter().zip(p2.probabilities()).map(|(a, b)| lambda * a + (1.0 - lambda) * b).collect();
        let mix = JammerPolicy::new(mix).unwrap();
        let lhs = expected_payoff(&game, u, &mix).unwrap();
        let rhs = lambda * expected_payoff(&game, u, &p).unwrap() + (1.0 - lambda) * expected_payoff(&game, u, &p2).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
    }

    #[test]
    fn lifting_preserves_the_reduced_value(seed in any::<u64>(), p in 0.0..=1.0f64, t in 0.0..=1.0f64) {
        let s = instance(seed);
        let game = s.to_game();
        let set = lq_control_set(&s);
        let rg = reduce_game(&game, &set).unwrap();
        let u = set.lo + t * set.width();
        let lifted = lift_strategy([p, 1.0 - p], rg.blocking_index(), rg.j_minus(), rg.n_channels()).unwrap();
        let full = expected_payoff(&game, u, &lifted).unwrap();
        prop_assert!((full - rg.mixed([p, 1.0 - p], u)).abs() <= 1e-12 * (1.0 + full.abs()));
    }

    #[test]
    fn analytic_slopes_match_finite_differences(seed in any::<u64>(), t in 0.0..=1.0f64) {
        let s = instance(seed);
        let game = s.to_game();
        let set = lq_control_set(&s);
        let u = set.lo + t * set.width();
        for j in 1..=s.n_channels() {
            let analytic = conditional_payoff_du(&game, u, j).unwrap();
            let numeric = central_diff(|v| conditional_payoff(&game, v, j).unwrap(), u);
            prop_assert!((analytic - numeric).abs() <= 1e-5 * (1.0 + analytic.abs()), "j={} {} vs {}", j, analytic, numeric);
        }
    }

    #[test]
    fn z_scales_with_the_inverse_square_of_the_state(seed in any::<u64>(), lambda in 0.1..10.0f64) {
        let s = instance(seed);
        let z = lq_region(&s).z.unwrap();
        let scaled = s.with_state(s.x() * lambda).unwrap();
        let z2 = lq_region(&scaled).z.unwrap();
        prop_assert!((z2 - z / (lambda * lambda)).abs() <= 1e-10 * z2.abs().max(1e-300));
    }

    #[test]
    fn ascending_channels_are_ranked_on_the_control_set(seed in any::<u64>()) {
        let s = instance(seed);
        let report = check_ranking(&s.to_game(), &lq_control_set(&s), 501);
        prop_assert!(report.holds, "{:?}", report.violation);
    }

    #[test]
    fn grid_values_satisfy_weak_duality(seed in any::<u64>()) {
        let s = instance(seed);
        let set = lq_control_set(&s);
        let rg = reduce_game(&s.to_game(), &set).unwrap();
        let spec = GridSpec::new(201, 101, set).unwrap();
        let o = grid_game_values(&rg, &spec);
        prop_assert!(o.j2_hat <= o.j1_hat + 1e-12 * (1.0 + o.j1_hat.abs()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn solver_reproduces_the_closed_form(seed in any::<u64>()) {
        let s = instance(seed);
        let rep = solve(&s.to_game()).unwrap();
        let region = lq_region(&s).region;
        match region {
            Region::Inside => {
                prop_assert_eq!(rep.kind, SaddleKind::NontrivialMixed);
                let u = lq_u_star(&s).unwrap();
                prop_assert!((rep.u_star.unwrap() - u).abs() <= 1e-6 * (1.0 + u.abs()));
            }
            Region::Below => prop_assert_eq!(rep.kind, SaddleKind::TrivialBlocking),
            Region::Above => prop_assert_eq!(rep.kind, SaddleKind::TrivialStay),
            Region::Undefined => {}
        }
    }

    #[test]
    fn grid_upper_value_converges_at_the_grid_rate(seed in any::<u64>()) {
        // 0 ≤ ĵ₁ − J ≤ L·Δu/2 with L the largest slope, so the bound halves
        // with the grid step
        let s = instance(seed);
        let game = s.to_game();
        let rep = solve(&game).unwrap();
        let set = rep.control_set;
        let rg = reduce_game(&game, &set).unwrap();
        let slope = [set.lo, set.hi]
            .iter()
            .map(|&u| rg.h1_du(u).abs().max(rg.h2_du(u).abs()))
            .fold(0.0, f64::max);
        let mut spec = GridSpec::new(101, 11, set).unwrap();
        for _ in 0..3 {
            let step = set.width() / (spec.u_points - 1) as f64;
            let excess = grid_game_values(&rg, &spec).j1_hat - rep.value;
            prop_assert!(excess >= -1e-9 * (1.0 + rep.value.abs()));
            prop_assert!(excess <= slope * step / 2.0 + 1e-9, "excess {} bound {}", excess, slope * step / 2.0);
            spec = spec.doubled();
        }
    }
}

/// Three channels with q descending and the current channel last.
fn descending_game() -> GameInstance {
    let s = LqScenario::scalar(2.0, 1.0, 1.0, vec![0.1, 0.5, 0.9], 3, 1.0).unwrap();
    let me = s.clone();
    GameInstance::new(
        vec![1.0],
        Arc::new(|x: &[f64], v: f64| vec![2.0 * x[0] + v]),
        Arc::new(move |y: &[f64], u: f64, j: usize| me.sigma(y, u, j)),
        ChannelSet::constant(vec![0.9, 0.5, 0.1]).unwrap(),
        LinkState::on_channel(3, 3).unwrap(),
    )
    .unwrap()
}

#[test]
fn descending_channels_violate_the_ranking() {
    let game = descending_game();
    let set = jamgame::game::ControlInterval::new(-4.0, 0.0).unwrap();
    let report = check_ranking(&game, &set, 101);
    assert!(!report.holds);
    let v = report.violation.unwrap();
    assert_eq!((v.j, v.k), (1, 2));
    assert!(v.u > -4.0 && v.u < 0.0);
    assert!(matches!(
        reduce_game(&game, &set),
        Err(jamgame::Error::Ranking { .. })
    ));
}

#[test]
fn zero_state_collapses_the_control_set() {
    let s = LqScenario::scalar(2.0, 1.0, 0.0, vec![0.1, 0.9], 2, 1.6).unwrap();
    assert_eq!(lq_control_set(&s).width(), 0.0);
    assert_eq!(lq_region(&s).region, Region::Undefined);
    let rescaled = s.with_state(DVector::from_element(1, 3.0)).unwrap();
    assert_eq!(lq_control_set(&rescaled).width(), 12.0);
}
