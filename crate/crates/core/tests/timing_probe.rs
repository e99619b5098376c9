//! Temporary timing probe; removed once budgets are set.

use std::time::Instant;

use ibs_core::models::fourinarow::{self, BASELINE_THETA};
use ibs_core::models::orientation;
use ibs_core::optimizer::{fit_mle, EstimatorSpec, OptimizerConfig};
use ibs_core::rng::unit_stream;

#[test]
#[ignore]
fn probe_fourinarow_simulate() {
    let boards = fourinarow::generate_positions(20, 3);
    let board = boards
        .iter()
        .find(|b| b.piece_count() >= 6 && b.piece_count() <= 10)
        .unwrap()
        .clone();
    let mut rng = unit_stream(1, 0);
    let n = 20_000;
    let start = Instant::now();
    let mut acc = 0u64;
    for _ in 0..n {
        acc += fourinarow::simulate_move(&board, &BASELINE_THETA, &mut rng).unwrap() as u64;
    }
    let dt = start.elapsed();
    println!(
        "fourinarow simulate: {:.1} us/move (acc {acc}), 1e6 draws would take {:.0} s",
        dt.as_secs_f64() * 1e6 / n as f64,
        dt.as_secs_f64() * 1e6 / n as f64 * 1e6 / 1e6,
    );
}

#[test]
#[ignore]
fn probe_orientation_fit() {
    let theta_true = [2.0f64.ln(), 0.1, 0.1];
    let data = orientation::generate(600, &theta_true, 5);
    let n = 600.0;
    let spec = EstimatorSpec::Ibs {
        repeats: 1,
        early_stop: Some(-n * 2.0f64.ln()),
        sample_cap: None,
    };
    let start = Instant::now();
    let fit = fit_mle(&orientation::OrientationModel, &data, spec, &OptimizerConfig::new(1)).unwrap();
    println!(
        "orientation IBS fit: {:.1} s, theta_hat = {:?} (true {:?}), evals {}, samples/trial/eval {:.2}",
        start.elapsed().as_secs_f64(),
        fit.theta_hat,
        theta_true,
        fit.evaluations_used,
        fit.samples_used as f64 / 600.0 / fit.evaluations_used as f64
    );

    let start = Instant::now();
    let fit_exact =
        fit_mle(&orientation::OrientationModel, &data, EstimatorSpec::Exact, &OptimizerConfig::new(1))
            .unwrap();
    println!(
        "orientation exact fit: {:.1} s, theta_hat = {:?}",
        start.elapsed().as_secs_f64(),
        fit_exact.theta_hat
    );

    let start = Instant::now();
    let fit_fixed = fit_mle(
        &orientation::OrientationModel,
        &data,
        EstimatorSpec::Fixed { samples: 10, variant: ibs_core::engine::FixedVariant::AddOne },
        &OptimizerConfig::new(1),
    )
    .unwrap();
    println!(
        "orientation fixed M=10 fit: {:.1} s, theta_hat = {:?}",
        start.elapsed().as_secs_f64(),
        fit_fixed.theta_hat
    );
}
