//! Temporary optimizer diagnostics.

use ibs_core::models::orientation::{self, OrientationModel};
use ibs_core::optimizer::{fit_mle, EstimatorSpec, OptimizerConfig};

#[test]
#[ignore]
fn probe_exact_fit_quality() {
    let theta_true = [2.0f64.ln(), 0.1, 0.1];
    for seed in 0..6u64 {
        let data = orientation::generate(600, &theta_true, seed);
        let fit =
            fit_mle(&OrientationModel, &data, EstimatorSpec::Exact, &OptimizerConfig::new(1))
                .unwrap();
        let l_true = orientation::exact_loglik(&data, &theta_true);
        let l_hat = orientation::exact_loglik(&data, &fit.theta_hat);
        println!(
            "seed {seed}: theta_hat = [{:+.3} {:+.3} {:.3}]  L(hat) = {:.3}  L(true) = {:.3}  diff = {:+.3}  evals {}",
            fit.theta_hat[0],
            fit.theta_hat[1],
            fit.theta_hat[2],
            l_hat,
            l_true,
            l_hat - l_true,
            fit.evaluations_used,
        );
        // L(hat) must be >= L(true) for a successful maximization
        // (up to tiny numerical slack)
    }
}
