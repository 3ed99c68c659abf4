//! Acceptance suite: one test per criterion, each printing a pass/fail line
//! with its measured margin and wall time. Tolerances are pinned in the
//! asserts. Run with `cargo test --test acceptance -- --nocapture` to see
//! the per-criterion lines.

use std::time::Instant;

use skm_lab::cli::{cmd_rates, RatesSpec};
use skm_lab::problems::{lookup, ProblemKind};
use skm_lab::rng::{mix_seed, sample_states};
use skm_lab::skm::{
    run_skm, running_min_residual, theoretical_residual_bound, RecordFlags, Schedule,
};
use skm_lab::verify::{
    check_decrease_inequality, check_residual_bound, check_variance_constancy,
    check_variance_transfer, check_weighted_min_vanishing, enumerate_expectations, fit_rate,
    SequenceSpec,
};
use skm_lab::Vector;

fn report(criterion: &str, started: Instant, limit_s: f64, detail: &str) {
    let elapsed = started.elapsed().as_secs_f64();
    println!("acceptance {criterion}: PASS ({detail}; {elapsed:.3} s)");
    assert!(
        elapsed < limit_s,
        "criterion {criterion} exceeded its {limit_s} s budget ({elapsed:.3} s)"
    );
}

#[test]
fn criterion_1_exact_decrease_inequality() {
    let started = Instant::now();
    let mut worst = f64::INFINITY;
    for name in ["sgd1d", "translation"] {
        let entry = lookup(name).unwrap();
        let states = sample_states(entry.operator.dim(), 1000, 5.0, 2024);
        for lambda in [0.1, 0.5, 0.9] {
            let rep = check_decrease_inequality(
                &entry.operator,
                &entry.known.p,
                &states,
                lambda,
                entry.known.sigma_star_sq,
            )
            .unwrap();
            let min = rep.min_margin.unwrap();
            assert!(
                min >= -1e-10,
                "decrease inequality violated on {name} at lambda {lambda}: {min}"
            );
            worst = worst.min(min);
        }
    }
    report(
        "1 (decrease inequality)",
        started,
        1.0,
        &format!("min margin {worst:.3e}"),
    );
}

#[test]
fn criterion_2_exact_residual_bound() {
    let started = Instant::now();

    // enumerable stochastic case: m = 2, K = 8, constant lambda0 / sqrt(K)
    let entry = lookup("sgd1d").unwrap();
    let schedule = Schedule::constant_horizon(0.5, 8).unwrap();
    let e = enumerate_expectations(
        &entry.operator,
        &schedule,
        &entry.x0,
        8,
        &entry.known.p,
        1_000,
    )
    .unwrap();
    let rep = check_residual_bound(
        &e,
        &schedule,
        entry.known.dist0_sq(&entry.x0),
        entry.known.sigma_star_sq,
    )
    .unwrap();
    let sgd_margin = rep.min_margin.unwrap();
    assert!(sgd_margin >= -1e-9, "sgd bound margin {sgd_margin}");

    // hand-computable case: T x = -x, lambda = 1/2, K = 2
    let entry = lookup("negate").unwrap();
    let schedule = Schedule::constant_value(0.5, 2).unwrap();
    let e = enumerate_expectations(
        &entry.operator,
        &schedule,
        &entry.x0,
        2,
        &entry.known.p,
        100,
    )
    .unwrap();
    assert!(
        (e.expected_residual_sq_at_output - 3.0).abs() <= 1e-12,
        "exact expectation {}",
        e.expected_residual_sq_at_output
    );
    let bound = theoretical_residual_bound(&schedule, 2, 1.0, 0.0).unwrap();
    assert!((bound - 18.0).abs() <= 1e-12, "bound {bound}");
    let rep = check_residual_bound(&e, &schedule, 1.0, 0.0).unwrap();
    assert!((rep.min_margin.unwrap() - 15.0).abs() <= 1e-9);

    report(
        "2 (residual bound)",
        started,
        5.0,
        &format!("sgd margin {sgd_margin:.3e}, hand case 3 vs 18"),
    );
}

#[test]
fn criterion_3_variance_lemmas() {
    let started = Instant::now();

    let entry = lookup("sgd1d").unwrap();
    let points = sample_states(1, 1000, 5.0, 17);
    let transfer = check_variance_transfer(
        &entry.operator,
        &entry.known.p,
        entry.known.sigma_star_sq,
        &points,
    )
    .unwrap();
    let transfer_min = transfer.min_margin.unwrap();
    assert!(
        transfer_min >= -1e-9,
        "variance transfer margin {transfer_min}"
    );

    let entry = lookup("sgd2dline").unwrap();
    let line_points: Vec<Vector> = (0..10)
        .map(|i| Vector::from_slice(&[0.0, -4.5 + i as f64]).unwrap())
        .collect();
    let constancy = check_variance_constancy(&entry.operator, &line_points).unwrap();
    let constancy_min = constancy.min_margin.unwrap();
    assert!(
        constancy_min >= -1e-10,
        "variance constancy margin {constancy_min}"
    );

    report(
        "3 (variance lemmas)",
        started,
        1.0,
        &format!("transfer {transfer_min:.3e}, constancy {constancy_min:.3e}"),
    );
}

#[test]
fn criterion_4_rate_reproduction() {
    let started = Instant::now();
    let spec = RatesSpec {
        problem: "sgd1d".into(),
        lambda0: 0.5,
        horizons: vec![64, 256, 1024, 4096],
        reps: 200,
        seed: 2024,
    };
    let out = cmd_rates(&spec).unwrap();
    for row in &out.rows {
        assert!(
            row.mean_residual <= row.bound + 3.0 * row.stderr,
            "K = {}: mean {} above bound {} + 3 * {}",
            row.horizon,
            row.mean_residual,
            row.bound,
            row.stderr
        );
    }
    assert!(
        out.fit.slope <= -0.15,
        "fitted decay slope {} is shallower than -0.15",
        out.fit.slope
    );
    report(
        "4 (rate reproduction)",
        started,
        60.0,
        &format!("slope {:.4}", out.fit.slope),
    );
}

#[test]
fn criterion_5_stos_convergence() {
    let started = Instant::now();
    let entry = lookup("stos_eqls").unwrap();
    let ProblemKind::Stos(stos) = &entry.kind else {
        panic!("stos_eqls kind")
    };

    // independent closed-form solve of the constrained least-squares system
    let x_star = stos.kkt_solution().unwrap();
    // the iterative reference oracle agrees with it
    let reference = stos.solve_reference(1e-10).unwrap();
    assert!(reference.x_star.distance(&x_star) <= 1e-8);

    let schedule = Schedule::power_decay(0.5, 0.75).unwrap();
    let traj = run_skm(
        &entry.operator,
        &schedule,
        &entry.x0,
        10_000,
        42,
        RecordFlags::default(),
    )
    .unwrap();
    let projected = stos.resolvent_a().apply(traj.final_iterate()).unwrap();
    let err = projected.distance(&x_star);
    let threshold = 1e-2 * (1.0 + x_star.norm());
    assert!(err <= threshold, "|Ja(x_K) - x*| = {err} above {threshold}");
    report(
        "5 (splitting convergence)",
        started,
        10.0,
        &format!("error {err:.3e} vs {threshold:.3e}"),
    );
}

#[test]
fn criterion_6_zero_to_fixed_point_lift() {
    let started = Instant::now();
    let entry = lookup("stos_eqls").unwrap();
    let ProblemKind::Stos(stos) = &entry.kind else {
        panic!("stos_eqls kind")
    };
    let z = stos.kkt_solution().unwrap();
    // the box constraint is inactive at the solution, so the certificate is 0
    let lifted = stos
        .lift_zero_to_fixed_point(&z, &Vector::zeros(stos.dim()))
        .unwrap();
    let residual = entry.operator.residual(&lifted).unwrap();
    assert!(residual <= 1e-8, "lifted point residual {residual}");
    report(
        "6 (fixed-point lift)",
        started,
        1.0,
        &format!("residual {residual:.3e}"),
    );
}

#[test]
fn criterion_7_iterate_convergence() {
    let started = Instant::now();
    let entry = lookup("sgd1d").unwrap();
    let schedule = Schedule::power_decay(0.5, 0.75).unwrap();
    let dist0 = entry.x0.distance(&entry.known.x_star);

    let mut close_count = 0;
    let mut worst_ratio: f64 = 0.0;
    for seed in 0..20u64 {
        let traj = run_skm(
            &entry.operator,
            &schedule,
            &entry.x0,
            10_000,
            seed,
            RecordFlags::default(),
        )
        .unwrap();
        if traj.final_iterate().distance(&entry.known.x_star) <= 0.1 * dist0 {
            close_count += 1;
        }
        let mins = running_min_residual(&entry.operator, &traj).unwrap();
        let ratio = mins[9_999] / mins[99];
        worst_ratio = worst_ratio.max(ratio);
        assert!(
            ratio <= 0.1,
            "seed {seed}: running-min ratio {ratio} above 10%"
        );
    }
    assert!(
        close_count >= 18,
        "only {close_count}/20 seeds ended within 10% of x*"
    );
    report(
        "7 (iterate convergence)",
        started,
        30.0,
        &format!("{close_count}/20 seeds close, worst running-min ratio {worst_ratio:.3}"),
    );
}

#[test]
fn criterion_8_oracle_equivalence() {
    let started = Instant::now();
    let entry = lookup("sgd1d").unwrap();
    let schedule = Schedule::constant_horizon(0.5, 8).unwrap();
    let exact = enumerate_expectations(
        &entry.operator,
        &schedule,
        &entry.x0,
        8,
        &entry.known.p,
        1_000,
    )
    .unwrap()
    .dist_sq[8];

    let runs = 10_000usize;
    let mut samples = Vec::with_capacity(runs);
    for i in 0..runs {
        let traj = run_skm(
            &entry.operator,
            &schedule,
            &entry.x0,
            8,
            mix_seed(777, i as u64),
            RecordFlags::default(),
        )
        .unwrap();
        samples.push(traj.final_iterate().distance_sq(&entry.known.p));
    }
    let mean: f64 = samples.iter().sum::<f64>() / runs as f64;
    let var: f64 = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (runs as f64 - 1.0);
    let se = (var / runs as f64).sqrt();
    let deviation = (mean - exact).abs();
    assert!(
        deviation <= 4.0 * se,
        "Monte Carlo mean {mean} vs exact {exact} differs by {deviation} > 4 * {se}"
    );
    report(
        "8 (oracle equivalence)",
        started,
        10.0,
        &format!("|mc - exact| = {deviation:.3e} <= 4 se = {:.3e}", 4.0 * se),
    );
}

#[test]
fn criterion_9_weighted_running_min_diagnostic() {
    let started = Instant::now();
    let harmonic = SequenceSpec::new(1.0, 1.0).unwrap();
    let rep = check_weighted_min_vanishing(&harmonic, &harmonic, 100_000).unwrap();
    assert!(rep.pass, "diagnostic margin {:?}", rep.min_margin);
    report(
        "9 (weighted running-min diagnostic)",
        started,
        1.0,
        &format!("margin {:.3e}", rep.min_margin.unwrap()),
    );
}

#[test]
fn rate_fit_sanity_on_synthetic_power_law() {
    // pass-through sanity for the slope used by criterion 4
    let ks = [64usize, 256, 1024, 4096];
    let values: Vec<f64> = ks.iter().map(|k| 2.0 * (*k as f64).powf(-0.25)).collect();
    let fit = fit_rate(&ks, &values).unwrap();
    assert!((fit.slope + 0.25).abs() <= 1e-12);
}
