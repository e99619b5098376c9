//! Orientation discrimination: was the patch tilted left or right of the
//! reference? The observer measures the orientation with Gaussian noise,
//! compares against a criterion, and occasionally lapses into a random
//! response. The trial likelihood is a standard psychometric function, so
//! this model doubles as the exact-likelihood reference for calibration and
//! recovery studies.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{Dataset, ParamBounds, ParameterSpace, ResponseSpace, Simulator, TrialData};
use crate::rng::{unit_stream, Stream};
use crate::special::normal_cdf;

/// Stimulus orientation spread used when generating synthetic sessions, in
/// degrees around the reference.
pub const STIMULUS_SD_DEGREES: f64 = 3.0;

/// Default trials per synthetic session.
pub const DEFAULT_TRIALS: usize = 600;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OrientationResponse {
    Leftward,
    Rightward,
}

/// theta = [eta, mu, gamma] with eta = log sigma (degrees), mu the response
/// criterion (degrees), gamma the lapse rate.
pub struct OrientationModel;

pub const ETA: usize = 0;
pub const MU: usize = 1;
pub const GAMMA: usize = 2;

/// Probability of a rightward response: gamma/2 + (1 - gamma) Phi((s - mu)/sigma).
pub fn prob_rightward(s: f64, theta: &[f64]) -> f64 {
    let sigma = theta[ETA].exp();
    let gamma = theta[GAMMA];
    gamma / 2.0 + (1.0 - gamma) * normal_cdf((s - theta[MU]) / sigma)
}

impl Simulator for OrientationModel {
    type Stimulus = f64;
    type Response = OrientationResponse;

    fn name(&self) -> &'static str {
        "orientation"
    }

    fn simulate(&self, stimulus: &f64, theta: &[f64], rng: &mut Stream) -> OrientationResponse {
        if rng.gen::<f64>() < theta[GAMMA] {
            return if rng.gen::<f64>() < 0.5 {
                OrientationResponse::Rightward
            } else {
                OrientationResponse::Leftward
            };
        }
        let sigma = theta[ETA].exp();
        let noise: f64 = rng.sample(StandardNormal);
        if stimulus + sigma * noise > theta[MU] {
            OrientationResponse::Rightward
        } else {
            OrientationResponse::Leftward
        }
    }

    fn response_space(&self, _stimulus: &f64) -> ResponseSpace<OrientationResponse> {
        ResponseSpace::Finite(vec![OrientationResponse::Leftward, OrientationResponse::Rightward])
    }

    fn exact_trial_loglik(
        &self,
        stimulus: &f64,
        response: &OrientationResponse,
        theta: &[f64],
    ) -> Option<f64> {
        let p_right = prob_rightward(*stimulus, theta);
        let p = match response {
            OrientationResponse::Rightward => p_right,
            OrientationResponse::Leftward => 1.0 - p_right,
        };
        Some(p.ln())
    }

    fn parameter_space(&self) -> ParameterSpace {
        ParameterSpace {
            params: vec![
                ParamBounds::new("eta", 0.1f64.ln(), 10f64.ln(), 0.1f64.ln(), 5f64.ln()),
                ParamBounds::new("mu", -2.0, 2.0, -1.0, 1.0),
                ParamBounds::new("gamma", 0.01, 1.0, 0.01, 0.2),
            ],
        }
    }
}

/// Synthetic session: stimuli drawn around the reference, responses from the
/// simulator. Reproducible bit-exactly from the seed.
pub fn generate(n: usize, theta: &[f64], seed: u64) -> Dataset<f64, OrientationResponse> {
    let model = OrientationModel;
    let mut rng = unit_stream(seed, 0);
    let trials = (0..n)
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            let stimulus = STIMULUS_SD_DEGREES * z;
            let response = model.simulate(&stimulus, theta, &mut rng);
            TrialData { stimulus, response }
        })
        .collect();
    Dataset { trials }
}

/// Exact dataset log-likelihood under the psychometric function.
pub fn exact_loglik(data: &Dataset<f64, OrientationResponse>, theta: &[f64]) -> f64 {
    let model = OrientationModel;
    data.trials
        .iter()
        .map(|t| model.exact_trial_loglik(&t.stimulus, &t.response, theta).unwrap())
        .sum()
}

/// Exact per-trial probabilities of the observed responses.
pub fn trial_probabilities(data: &Dataset<f64, OrientationResponse>, theta: &[f64]) -> Vec<f64> {
    data.trials
        .iter()
        .map(|t| match t.response {
            OrientationResponse::Rightward => prob_rightward(t.stimulus, theta),
            OrientationResponse::Leftward => 1.0 - prob_rightward(t.stimulus, theta),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const THETA: [f64; 3] = [0.6931471805599453, 0.1, 0.1]; // (log 2, 0.1, 0.1)

    #[test]
    fn probability_at_criterion_is_half() {
        for &(eta, gamma) in &[(0.0, 0.01), (1.0, 0.3), (-1.5, 0.9)] {
            let theta = [eta, 0.4, gamma];
            assert_relative_eq!(prob_rightward(0.4, &theta), 0.5, max_relative = 1e-14);
        }
    }

    #[test]
    fn pure_lapse_is_flat() {
        let theta = [0.2, -0.3, 1.0];
        for s in [-5.0, 0.0, 7.0] {
            assert_relative_eq!(prob_rightward(s, &theta), 0.5, max_relative = 1e-14);
        }
    }

    #[test]
    fn asymptote_is_one_minus_half_lapse() {
        let theta = [0.0, 0.0, 0.1];
        assert_relative_eq!(prob_rightward(1e3, &theta), 1.0 - 0.05, max_relative = 1e-12);
        assert_relative_eq!(prob_rightward(-1e3, &theta), 0.05, max_relative = 1e-10);
    }

    #[test]
    fn probability_strictly_increasing_without_full_lapse() {
        let theta = [0.3, 0.0, 0.15];
        let mut prev = 0.0;
        for i in -40..=40 {
            let p = prob_rightward(i as f64 * 0.25, &theta);
            assert!(p > prev);
            prev = p;
        }
    }

    #[test]
    fn generation_is_reproducible() {
        let a = generate(50, &THETA, 99);
        let b = generate(50, &THETA, 99);
        assert_eq!(a, b);
        let c = generate(50, &THETA, 100);
        assert_ne!(a, c);
    }

    #[test]
    fn single_trial_at_criterion() {
        let data = Dataset {
            trials: vec![TrialData { stimulus: 0.1, response: OrientationResponse::Rightward }],
        };
        assert_relative_eq!(exact_loglik(&data, &THETA), 0.5f64.ln(), max_relative = 1e-13);
    }

    #[test]
    fn response_rate_matches_analytic_expectation() {
        // fraction of rightward responses over many trials vs the stimulus
        // distribution integral, by Gauss-damped quadrature oracle
        let n = 100_000;
        let data = generate(n, &THETA, 7);
        let frac = data
            .trials
            .iter()
            .filter(|t| t.response == OrientationResponse::Rightward)
            .count() as f64
            / n as f64;
        // quadrature over s ~ N(0, 3): E[p_right(s)]
        let mut expect = 0.0;
        let grid = 4001;
        let lo = -18.0;
        let hi = 18.0;
        let h = (hi - lo) / (grid - 1) as f64;
        let mut weight_sum = 0.0;
        for i in 0..grid {
            let s = lo + i as f64 * h;
            let w = (-s * s / (2.0 * 9.0)).exp();
            expect += w * prob_rightward(s, &THETA);
            weight_sum += w;
        }
        expect /= weight_sum;
        let se = (expect * (1.0 - expect) / n as f64).sqrt();
        assert!((frac - expect).abs() < 3.0 * se, "frac = {frac}, expect = {expect}");
    }

    #[test]
    fn full_lapse_response_rate_is_half() {
        let theta = [0.0, 0.0, 1.0];
        let n = 100_000;
        let data = generate(n, &theta, 13);
        let frac = data
            .trials
            .iter()
            .filter(|t| t.response == OrientationResponse::Rightward)
            .count() as f64
            / n as f64;
        let se = 0.5 / (n as f64).sqrt();
        assert!((frac - 0.5).abs() < 3.0 * se);
    }

    #[test]
    fn likelihood_normalizes() {
        let model = OrientationModel;
        for i in 0..20 {
            let mut rng = unit_stream(55, i);
            let theta = [
                rng.gen_range(-2.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(0.01..1.0),
            ];
            let s: f64 = rng.gen_range(-8.0..8.0);
            if let ResponseSpace::Finite(space) = model.response_space(&s) {
                let total: f64 = space
                    .iter()
                    .map(|r| model.exact_trial_loglik(&s, r, &theta).unwrap().exp())
                    .sum();
                assert_relative_eq!(total, 1.0, max_relative = 1e-12);
            } else {
                panic!("orientation response space must be finite");
            }
        }
    }

    #[test]
    fn simulation_frequencies_match_exact_likelihood() {
        let model = OrientationModel;
        let theta = [0.1, -0.2, 0.25];
        let s = 1.3;
        let n = 100_000;
        let mut rng = unit_stream(88, 0);
        let hits = (0..n)
            .filter(|_| model.simulate(&s, &theta, &mut rng) == OrientationResponse::Rightward)
            .count() as f64;
        let p = prob_rightward(s, &theta);
        let se = (p * (1.0 - p) / n as f64).sqrt();
        assert!((hits / n as f64 - p).abs() < 4.0 * se);
    }
}
