//! Change localization: six oriented patches are shown twice, one changes
//! orientation between displays, and the observer reports which. Measurements
//! carry von Mises noise; the observer picks the patch whose measured
//! orientation changed the most, lapsing uniformly with probability gamma.
//!
//! The trial likelihood reduces to the probability of a correct response as a
//! function of the true change magnitude, an integral over the measured
//! change evaluated by trapezoidal quadrature on a fixed grid.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Dataset, ParamBounds, ParameterSpace, ResponseSpace, Simulator, TrialData};
use crate::rng::{unit_stream, Stream};
use crate::special::{circ_diff_cdf, circ_diff_coefficients};

/// Number of patches per display.
pub const N_PATCHES: usize = 6;

/// Concentration of the change-magnitude distribution used for generation.
pub const CHANGE_CONCENTRATION: f64 = 1.0;

/// Default trials per synthetic session.
pub const DEFAULT_TRIALS: usize = 400;

/// Quadrature intervals for the correct-response integral on [0, pi].
pub const QUADRATURE_INTERVALS: usize = 2000;

pub const ETA: usize = 0;
pub const GAMMA: usize = 1;

/// Both displays' patch orientations, in degrees on the full circle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChangeLocStimulus {
    pub first_deg: [f64; N_PATCHES],
    pub second_deg: [f64; N_PATCHES],
}

impl ChangeLocStimulus {
    /// Index of the changed patch and the absolute circular change in
    /// radians. Falls back to patch 0 with zero change if the displays are
    /// identical (in which case every response is equally likely anyway).
    pub fn changed_patch(&self) -> (usize, f64) {
        for i in 0..N_PATCHES {
            if self.first_deg[i] != self.second_deg[i] {
                let delta = circ_dist(self.first_deg[i].to_radians(), self.second_deg[i].to_radians());
                return (i, delta);
            }
        }
        (0, 0.0)
    }
}

/// theta = [eta, gamma] with eta = log sigma = -(1/2) log kappa.
pub struct ChangeLocModel;

/// Concentration parameter implied by eta.
pub fn kappa_from_eta(eta: f64) -> f64 {
    (-2.0 * eta).exp()
}

/// Absolute circular distance between two angles in radians, in [0, pi].
pub fn circ_dist(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    if d > PI {
        TAU - d
    } else {
        d
    }
}

/// Von Mises sample around `mean` with concentration `kappa` (Best-Fisher
/// rejection scheme), wrapped to [0, 2 pi).
pub fn sample_von_mises(mean: f64, kappa: f64, rng: &mut Stream) -> f64 {
    assert!(kappa > 0.0, "sample_von_mises: kappa must be positive");
    let a = 1.0 + (1.0 + 4.0 * kappa * kappa).sqrt();
    let b = (a - (2.0 * a).sqrt()) / (2.0 * kappa);
    let r = (1.0 + b * b) / (2.0 * b);
    loop {
        let u1: f64 = rng.gen();
        let z = (PI * u1).cos();
        let f = (1.0 + r * z) / (r + z);
        let c = kappa * (r - f);
        let u2: f64 = rng.gen();
        if c * (2.0 - c) - u2 > 0.0 || (c / u2).ln() + 1.0 - c >= 0.0 {
            let u3: f64 = rng.gen();
            let angle = mean + (u3 - 0.5).signum() * f.clamp(-1.0, 1.0).acos();
            return angle.rem_euclid(TAU);
        }
    }
}

impl Simulator for ChangeLocModel {
    type Stimulus = ChangeLocStimulus;
    type Response = u8;

    fn name(&self) -> &'static str {
        "changeloc"
    }

    fn simulate(&self, stimulus: &ChangeLocStimulus, theta: &[f64], rng: &mut Stream) -> u8 {
        if rng.gen::<f64>() < theta[GAMMA] {
            return rng.gen_range(1..=N_PATCHES as u8);
        }
        let kappa = kappa_from_eta(theta[ETA]);
        let mut best = 0usize;
        let mut best_delta = -1.0;
        for i in 0..N_PATCHES {
            let x1 = sample_von_mises(stimulus.first_deg[i].to_radians(), kappa, rng);
            let x2 = sample_von_mises(stimulus.second_deg[i].to_radians(), kappa, rng);
            let delta = circ_dist(x1, x2);
            if delta > best_delta {
                best_delta = delta;
                best = i;
            }
        }
        (best + 1) as u8
    }

    fn response_space(&self, _stimulus: &ChangeLocStimulus) -> ResponseSpace<u8> {
        ResponseSpace::Finite((1..=N_PATCHES as u8).collect())
    }

    fn exact_trial_loglik(
        &self,
        stimulus: &ChangeLocStimulus,
        response: &u8,
        theta: &[f64],
    ) -> Option<f64> {
        let tables = PCorrectTables::new(kappa_from_eta(theta[ETA]));
        let (changed, delta_s) = stimulus.changed_patch();
        let p_corr = tables.p_correct(delta_s, theta[GAMMA]);
        let p = if *response as usize == changed + 1 {
            p_corr
        } else {
            (1.0 - p_corr) / (N_PATCHES as f64 - 1.0)
        };
        Some(p.ln())
    }

    fn parameter_space(&self) -> ParameterSpace {
        ParameterSpace {
            params: vec![
                ParamBounds::new("eta", 0.05f64.ln(), 2f64.ln(), 0.1f64.ln(), 1f64.ln()),
                ParamBounds::new("gamma", 0.01, 1.0, 0.01, 0.5),
            ],
        }
    }
}

/// Quadrature tables for the correct-response probability at one kappa.
///
/// Holds the measured-change density basis and the fifth power of the
/// null-change CDF on the fixed grid, so a whole dataset can be evaluated
/// with one setup.
pub struct PCorrectTables {
    coeffs: Vec<f64>,
    /// cos(n * d_j) for n = 1..coeffs.len(), row-major per n.
    cos_basis: Vec<f64>,
    /// F0(d_j)^5 at the grid points.
    f5: Vec<f64>,
    step: f64,
}

impl PCorrectTables {
    pub fn new(kappa: f64) -> Self {
        let coeffs = circ_diff_coefficients(kappa);
        let points = QUADRATURE_INTERVALS + 1;
        let step = PI / QUADRATURE_INTERVALS as f64;
        let mut cos_basis = vec![0.0; (coeffs.len() - 1) * points];
        for n in 1..coeffs.len() {
            let row = &mut cos_basis[(n - 1) * points..n * points];
            for (j, v) in row.iter_mut().enumerate() {
                *v = (n as f64 * j as f64 * step).cos();
            }
        }
        let f5 = (0..points)
            .map(|j| circ_diff_cdf(j as f64 * step, &coeffs).powi(5))
            .collect();
        PCorrectTables { coeffs, cos_basis, f5, step }
    }

    /// Probability of reporting the changed patch given the true change
    /// magnitude `delta_s` (radians in [0, pi]) and lapse rate `gamma`.
    pub fn p_correct(&self, delta_s: f64, gamma: f64) -> f64 {
        assert!(
            (0.0..=PI + 1e-12).contains(&delta_s),
            "p_correct: delta_s outside [0, pi]: {delta_s}"
        );
        let points = self.f5.len();
        // density of the measured change at each grid point
        let mut integral = 0.0;
        for j in 0..points {
            let mut s = 1.0;
            for n in 1..self.coeffs.len() {
                s += 2.0
                    * self.coeffs[n]
                    * (n as f64 * delta_s).cos()
                    * self.cos_basis[(n - 1) * points + j];
            }
            let pdf = s / PI;
            let w = if j == 0 || j == points - 1 { 0.5 } else { 1.0 };
            integral += w * pdf * self.f5[j];
        }
        integral *= self.step;
        gamma / N_PATCHES as f64 + (1.0 - gamma) * integral.clamp(0.0, 1.0)
    }
}

/// Correct-response probability for one (delta_s, theta); builds the tables
/// for the implied kappa. Prefer [`PCorrectTables`] when sweeping trials.
pub fn p_correct(delta_s: f64, theta: &[f64]) -> f64 {
    PCorrectTables::new(kappa_from_eta(theta[ETA])).p_correct(delta_s, theta[GAMMA])
}

/// Synthetic session: first-display orientations uniform on the circle, one
/// patch changed by a von Mises-distributed amount, responses simulated.
pub fn generate(n: usize, theta: &[f64], seed: u64) -> Dataset<ChangeLocStimulus, u8> {
    let model = ChangeLocModel;
    let mut rng = unit_stream(seed, 1);
    let trials = (0..n)
        .map(|_| {
            let mut first = [0.0; N_PATCHES];
            for v in first.iter_mut() {
                *v = rng.gen::<f64>() * 360.0;
            }
            let change = sample_von_mises(0.0, CHANGE_CONCENTRATION, &mut rng);
            let patch = rng.gen_range(0..N_PATCHES);
            let mut second = first;
            second[patch] = (second[patch] + change.to_degrees()).rem_euclid(360.0);
            let stimulus = ChangeLocStimulus { first_deg: first, second_deg: second };
            let response = model.simulate(&stimulus, theta, &mut rng);
            TrialData { stimulus, response }
        })
        .collect();
    Dataset { trials }
}

/// Exact dataset log-likelihood via the quadrature tables (shared per call).
pub fn exact_loglik(data: &Dataset<ChangeLocStimulus, u8>, theta: &[f64]) -> f64 {
    let tables = PCorrectTables::new(kappa_from_eta(theta[ETA]));
    data.trials
        .iter()
        .map(|t| {
            let (changed, delta_s) = t.stimulus.changed_patch();
            let p_corr = tables.p_correct(delta_s, theta[GAMMA]);
            let p = if t.response as usize == changed + 1 {
                p_corr
            } else {
                (1.0 - p_corr) / (N_PATCHES as f64 - 1.0)
            };
            p.ln()
        })
        .sum()
}

/// Exact per-trial probabilities of the observed responses.
pub fn trial_probabilities(data: &Dataset<ChangeLocStimulus, u8>, theta: &[f64]) -> Vec<f64> {
    let tables = PCorrectTables::new(kappa_from_eta(theta[ETA]));
    data.trials
        .iter()
        .map(|t| {
            let (changed, delta_s) = t.stimulus.changed_patch();
            let p_corr = tables.p_correct(delta_s, theta[GAMMA]);
            if t.response as usize == changed + 1 {
                p_corr
            } else {
                (1.0 - p_corr) / (N_PATCHES as f64 - 1.0)
            }
        })
        .collect()
}
