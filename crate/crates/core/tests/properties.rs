//! Property-based invariants over the public API.

use proptest::prelude::*;

use skm_lab::operators::{GradientFamily, OperatorRule, ScenarioSet, StochasticOperator};
use skm_lab::skm::{lambda_products, run_skm, RecordFlags, Schedule};
use skm_lab::Vector;

fn translation_with_probs(p0: f64) -> StochasticOperator {
    StochasticOperator::new(
        1,
        ScenarioSet::new(vec![p0, 1.0 - p0]).unwrap(),
        OperatorRule::Translation(vec![
            Vector::from_slice(&[1.0]).unwrap(),
            Vector::from_slice(&[-1.0]).unwrap(),
        ]),
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lambda_products_nonincreasing_and_above_exp_bound(
        lambda0 in 0.05f64..0.95,
        exponent in 0.51f64..1.0,
        horizon in 1usize..64,
    ) {
        let schedule = Schedule::power_decay(lambda0, exponent).unwrap();
        let products = lambda_products(&schedule, horizon).unwrap();
        prop_assert_eq!(products.value(0), 1.0);
        for k in 0..horizon {
            prop_assert!(products.value(k + 1) <= products.value(k));
            prop_assert!(products.value(k + 1) > 0.0);
        }
        let sq_sum: f64 = schedule.lambdas(horizon).unwrap().iter().map(|l| l * l).sum();
        prop_assert!(products.last() >= (-8.0 * sq_sum).exp() - 1e-12);
    }

    #[test]
    fn constant_schedule_stays_in_unit_interval(
        lambda0 in 0.01f64..3.0,
        horizon in 1usize..512,
    ) {
        if let Ok(schedule) = Schedule::constant_horizon(lambda0, horizon) {
            let l = schedule.lambda(0).unwrap();
            prop_assert!(l > 0.0 && l < 1.0);
        } else {
            // rejected exactly when the constant value would leave (0, 1)
            prop_assert!(lambda0 / (horizon as f64).sqrt() >= 1.0);
        }
    }

    #[test]
    fn expected_apply_is_linear_in_probabilities(
        p0 in 0.05f64..0.95,
        q0 in 0.05f64..0.95,
        alpha in 0.0f64..1.0,
        xv in -5.0f64..5.0,
    ) {
        let x = Vector::from_slice(&[xv]).unwrap();
        let op_p = translation_with_probs(p0);
        let op_q = translation_with_probs(q0);
        let mixed = alpha * p0 + (1.0 - alpha) * q0;
        let op_mixed = translation_with_probs(mixed);

        let ep = op_p.expected_apply(&x).unwrap()[0];
        let eq = op_q.expected_apply(&x).unwrap()[0];
        let emixed = op_mixed.expected_apply(&x).unwrap()[0];
        prop_assert!((emixed - (alpha * ep + (1.0 - alpha) * eq)).abs() <= 1e-12);
    }

    #[test]
    fn variance_matches_second_moment_identity(
        p0 in 0.05f64..0.95,
        gamma in 0.05f64..1.9,
        a0 in -3.0f64..3.0,
        a1 in -3.0f64..3.0,
        xv in -5.0f64..5.0,
    ) {
        let op = StochasticOperator::new(
            1,
            ScenarioSet::new(vec![p0, 1.0 - p0]).unwrap(),
            OperatorRule::GradientStep {
                gamma,
                family: GradientFamily::scalar_targets(&[a0, a1]).unwrap(),
            },
        )
        .unwrap();
        let x = Vector::from_slice(&[xv]).unwrap();
        let mean_sq = op.expected_apply(&x).unwrap().norm_sq();
        let mut second = 0.0;
        for i in 0..2 {
            second += op.scenarios().prob(i) * op.apply(i, &x).unwrap().norm_sq();
        }
        let direct = op.variance_at(&x).unwrap();
        prop_assert!((direct - (second - mean_sq)).abs() <= 1e-10);
        prop_assert!(direct >= -1e-15);
    }

    #[test]
    fn trajectories_reproduce_bit_for_bit(
        seed in any::<u64>(),
        horizon in 1usize..40,
        x0 in -3.0f64..3.0,
    ) {
        let op = translation_with_probs(0.5);
        let schedule = Schedule::power_decay(0.5, 0.75).unwrap();
        let start = Vector::from_slice(&[x0]).unwrap();
        let a = run_skm(&op, &schedule, &start, horizon, seed, RecordFlags::default()).unwrap();
        let b = run_skm(&op, &schedule, &start, horizon, seed, RecordFlags::default()).unwrap();
        prop_assert_eq!(a.iterates(), b.iterates());
        prop_assert_eq!(a.drawn_scenarios(), b.drawn_scenarios());
    }

    #[test]
    fn variance_transfer_holds_on_random_points(
        xv in -10.0f64..10.0,
    ) {
        // E||(T_i - T) x||^2 <= 2 sigma*^2 + 8 ||x - p||^2 on the sgd instance
        let entry = skm_lab::problems::lookup("sgd1d").unwrap();
        let x = Vector::from_slice(&[xv]).unwrap();
        let lhs = entry.operator.variance_at(&x).unwrap();
        let rhs = 2.0 * entry.known.sigma_star_sq + 8.0 * x.distance_sq(&entry.known.p);
        prop_assert!(lhs <= rhs + 1e-9);
    }
}

#[test]
fn catalog_operators_are_nonexpansive_on_thousand_pairs() {
    for name in [
        "identity",
        "negate",
        "translation",
        "sgd1d",
        "sgd2dline",
        "stos_eqls",
        "randomls:4:3:11",
    ] {
        let entry = skm_lab::problems::lookup(name).unwrap();
        let report = entry.operator.check_nonexpansive(31, 1000).unwrap();
        assert!(
            report.pass,
            "{name}: min margin {:?} below -1e-9",
            report.min_margin
        );
    }
}
