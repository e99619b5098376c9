//! Noise-robust maximum-likelihood fitting over bounded parameter spaces.
//!
//! The search is a mesh-based pattern search adapted to stochastic
//! objectives: every visited point keeps a running mean of its evaluations,
//! poll points are re-evaluated across rounds rather than trusted after one
//! look, a move is accepted only when it beats the incumbent by more than one
//! pooled standard error, and the mesh contracts when the poll set is
//! confidently exhausted. With a noiseless objective the standard errors
//! vanish and the procedure reduces to plain compass search.

use rayon::prelude::*;

use crate::engine::{
    estimate_parallel, fixed_dataset_estimate, EngineConfig, FixedVariant, Repeats,
};
use crate::error::{Error, Result};
use crate::models::{dataset_exact_loglik, Dataset, ParameterSpace, Simulator};
use crate::rng::derive_seed;

/// One objective evaluation: a value, its reported variance when the
/// estimator provides a calibrated one, and the samples consumed.
#[derive(Debug, Clone, Copy)]
pub struct Evaluation {
    pub value: f64,
    pub variance: Option<f64>,
    pub samples: u64,
}

/// A stochastic objective to maximize. `seed` individuates evaluations;
/// repeated calls with distinct seeds are independent.
pub trait NoisyObjective: Sync {
    fn evaluate(&self, theta: &[f64], seed: u64) -> Evaluation;

    /// Higher-precision evaluation for the final candidate comparison
    /// (repeats or sample counts scaled by `multiplier`).
    fn evaluate_precise(&self, theta: &[f64], multiplier: u32, seed: u64) -> Evaluation;
}

#[derive(Debug, Clone)]
pub struct OptimizerConfig {
    /// Evaluation budget per start; defaults to 500 per dimension.
    pub max_evaluations: u32,
    /// Start points in parameter space; defaults to the plausible-range
    /// lattice of [`default_starts`].
    pub starts: Option<Vec<Vec<f64>>>,
    /// Evaluations of the first incumbent before polling begins.
    pub incumbent_reestimates: u32,
    /// Precision multiplier for the final re-estimation of each start's
    /// candidate.
    pub final_precision_multiplier: u32,
    pub seed: u64,
}

impl OptimizerConfig {
    pub fn new(seed: u64) -> Self {
        OptimizerConfig {
            max_evaluations: 0, // resolved to 500 * D at fit time
            starts: None,
            incumbent_reestimates: 3,
            final_precision_multiplier: 10,
            seed,
        }
    }
}

/// Per-start diagnostics.
#[derive(Debug, Clone)]
pub struct StartDiagnostics {
    pub start: Vec<f64>,
    pub candidate: Vec<f64>,
    pub reestimated_loglik: f64,
    pub reestimated_se: Option<f64>,
    pub evaluations: u32,
    pub samples: u64,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub theta_hat: Vec<f64>,
    /// Fresh high-precision re-estimate at `theta_hat`, never the search's
    /// own incumbent value.
    pub loglik_at_solution: f64,
    pub loglik_se: Option<f64>,
    pub evaluations_used: u32,
    pub samples_used: u64,
    pub per_start: Vec<StartDiagnostics>,
    /// At least one start ran out of budget before its mesh collapsed.
    pub budget_exhausted: bool,
}

/// Start points on the plausible-range lattice: each coordinate at one-third
/// or two-thirds between the plausible bounds, full factorial (2^D points).
pub fn default_starts(space: &ParameterSpace) -> Vec<Vec<f64>> {
    let levels: Vec<[f64; 2]> = space
        .params
        .iter()
        .map(|b| {
            let span = b.plausible_upper - b.plausible_lower;
            [b.plausible_lower + span / 3.0, b.plausible_lower + 2.0 * span / 3.0]
        })
        .collect();
    let d = levels.len();
    let mut starts = Vec::with_capacity(1 << d);
    for idx in 0..(1usize << d) {
        let point: Vec<f64> = (0..d).map(|j| levels[j][(idx >> j) & 1]).collect();
        starts.push(point);
    }
    starts
}

// Internal coordinates: probability-like parameters (bounds inside [0, 1])
// move in log-odds, everything else linearly.
#[derive(Clone, Copy)]
enum Transform {
    Identity,
    Logit,
}

impl Transform {
    fn pick(lower: f64, upper: f64) -> Transform {
        if lower >= 0.0 && upper <= 1.0 {
            Transform::Logit
        } else {
            Transform::Identity
        }
    }

    fn encode(self, x: f64) -> f64 {
        match self {
            Transform::Identity => x,
            Transform::Logit => {
                let c = x.clamp(1e-12, 1.0 - 1e-12);
                (c / (1.0 - c)).ln()
            }
        }
    }

    fn decode(self, z: f64) -> f64 {
        match self {
            Transform::Identity => z,
            Transform::Logit => 1.0 / (1.0 + (-z).exp()),
        }
    }
}

struct Geometry {
    transforms: Vec<Transform>,
    z_lower: Vec<f64>,
    z_upper: Vec<f64>,
    scale: Vec<f64>,
}

impl Geometry {
    fn new(space: &ParameterSpace) -> Geometry {
        let transforms: Vec<Transform> = space
            .params
            .iter()
            .map(|b| Transform::pick(b.lower, b.upper))
            .collect();
        let z_lower: Vec<f64> = space
            .params
            .iter()
            .zip(&transforms)
            .map(|(b, t)| t.encode(b.lower))
            .collect();
        let z_upper: Vec<f64> = space
            .params
            .iter()
            .zip(&transforms)
            .map(|(b, t)| t.encode(b.upper))
            .collect();
        let scale: Vec<f64> = space
            .params
            .iter()
            .zip(&transforms)
            .map(|(b, t)| {
                // plausible span in internal coordinates, kept away from the
                // saturated tails of the log-odds map
                let (lo, hi) = match t {
                    Transform::Logit => (
                        b.plausible_lower.clamp(1e-3, 1.0 - 1e-3),
                        b.plausible_upper.clamp(1e-3, 1.0 - 1e-3),
                    ),
                    Transform::Identity => (b.plausible_lower, b.plausible_upper),
                };
                (t.encode(hi) - t.encode(lo)).abs().max(1e-3)
            })
            .collect();
        Geometry { transforms, z_lower, z_upper, scale }
    }

    fn encode(&self, theta: &[f64]) -> Vec<f64> {
        theta.iter().zip(&self.transforms).map(|(x, t)| t.encode(*x)).collect()
    }

    fn decode(&self, z: &[f64], space: &ParameterSpace) -> Vec<f64> {
        z.iter()
            .zip(&self.transforms)
            .zip(&space.params)
            .map(|((zv, t), b)| t.decode(*zv).clamp(b.lower, b.upper))
            .collect()
    }
}

/// Running statistics of repeated evaluations at one point.
struct PointStats {
    z: Vec<f64>,
    n: u32,
    mean: f64,
    m2: f64,
    reported_var_sum: f64,
    all_reported: bool,
}

impl PointStats {
    fn new(z: Vec<f64>) -> PointStats {
        PointStats { z, n: 0, mean: 0.0, m2: 0.0, reported_var_sum: 0.0, all_reported: true }
    }

    fn push(&mut self, e: &Evaluation) {
        self.n += 1;
        let delta = e.value - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (e.value - self.mean);
        match e.variance {
            Some(v) => self.reported_var_sum += v,
            None => self.all_reported = false,
        }
    }

    /// Variance of the running mean: calibrated when the estimator reports
    /// variances, otherwise the pooled empirical noise divided by n.
    fn var_of_mean(&self, pooled_noise: f64) -> f64 {
        let n = self.n as f64;
        if self.all_reported {
            self.reported_var_sum / (n * n)
        } else {
            pooled_noise / n
        }
    }
}

const MESH_START: f64 = 0.25;
const MESH_FLOOR: f64 = MESH_START / (1u64 << 16) as f64;

const MAX_ROUNDS_PER_MESH: u32 = 12;

struct StartOutcome {
    candidate_z: Vec<f64>,
    evaluations: u32,
    samples: u64,
    converged: bool,
}

fn search_one_start<O: NoisyObjective>(
    objective: &O,
    space: &ParameterSpace,
    geometry: &Geometry,
    start: &[f64],
    budget: u32,
    init_evals: u32,
    seed: u64,
    start_idx: u64,
) -> StartOutcome {
    let dim = space.dim();
    let mut evals: u32 = 0;
    let mut samples: u64 = 0;
    let mut eval_counter: u64 = 0;
    // pooled empirical residual variance, for estimators without reported
    // variances
    let mut pooled_ss = 0.0;
    let mut pooled_dof = 0u32;

    macro_rules! eval_point {
        ($stats:expr) => {{
            let theta = geometry.decode(&$stats.z, space);
            let e = objective.evaluate(&theta, derive_seed(seed, start_idx, eval_counter));
            eval_counter += 1;
            evals += 1;
            samples += e.samples;
            let m2_before = $stats.m2;
            $stats.push(&e);
            if $stats.n > 1 {
                pooled_ss += $stats.m2 - m2_before;
                pooled_dof += 1;
            }
        }};
    }

    let mut incumbent = PointStats::new(geometry.encode(start));
    for _ in 0..init_evals.max(1) {
        eval_point!(incumbent);
    }

    let mut mesh = MESH_START;
    let mut converged = false;
    'outer: while evals < budget {
        if mesh < MESH_FLOOR {
            converged = true;
            break;
        }
        // poll set: one step along each coordinate in both directions
        let mut poll: Vec<PointStats> = Vec::with_capacity(2 * dim);
        for j in 0..dim {
            for sign in [1.0, -1.0] {
                let mut z = incumbent.z.clone();
                z[j] = (z[j] + sign * mesh * geometry.scale[j])
                    .clamp(geometry.z_lower[j], geometry.z_upper[j]);
                if z[j] != incumbent.z[j] {
                    poll.push(PointStats::new(z));
                }
            }
        }
        if poll.is_empty() {
            converged = true;
            break;
        }
        let mut live: Vec<usize> = (0..poll.len()).collect();
        let mut rounds = 0;
        loop {
            if evals >= budget {
                break 'outer;
            }
            eval_point!(incumbent);
            for &i in &live {
                eval_point!(poll[i]);
            }
            rounds += 1;
            let pooled_noise = if pooled_dof > 0 { pooled_ss / pooled_dof as f64 } else { 0.0 };
            let v_inc = incumbent.var_of_mean(pooled_noise);
            // accept the best candidate that clears one pooled SE
            let mut accept: Option<usize> = None;
            let mut best_gap = 0.0;
            for &i in &live {
                let gap = poll[i].mean - incumbent.mean;
                let se = (poll[i].var_of_mean(pooled_noise) + v_inc).sqrt();
                if gap > se && gap > best_gap {
                    accept = Some(i);
                    best_gap = gap;
                }
            }
            if let Some(i) = accept {
                incumbent = poll.swap_remove(i);
                continue 'outer; // recenter at the same mesh size
            }
            // drop candidates that are confidently worse
            live.retain(|&i| {
                let gap = poll[i].mean - incumbent.mean;
                let se = (poll[i].var_of_mean(pooled_noise) + v_inc).sqrt();
                gap > -2.0 * se
            });
            if live.is_empty() || rounds >= MAX_ROUNDS_PER_MESH {
                mesh *= 0.5;
                continue 'outer;
            }
        }
    }
    StartOutcome { candidate_z: incumbent.z, evaluations: evals, samples, converged }
}

/// Multi-start noise-aware maximization. Each start's final candidate is
/// re-estimated at `final_precision_multiplier` times the base precision and
/// the best re-estimated candidate wins (ties: fewer samples, lower start
/// index).
pub fn maximize<O: NoisyObjective>(
    objective: &O,
    space: &ParameterSpace,
    config: &OptimizerConfig,
) -> Result<FitResult> {
    let dim = space.dim();
    if dim == 0 {
        return Err(Error::Config("empty parameter space".into()));
    }
    let starts = match &config.starts {
        Some(s) if s.is_empty() => return Err(Error::Config("empty start list".into())),
        Some(s) => s.clone(),
        None => default_starts(space),
    };
    for s in &starts {
        if s.len() != dim {
            return Err(Error::Config("start point dimension mismatch".into()));
        }
        for (v, b) in s.iter().zip(&space.params) {
            if !(*v > b.plausible_lower - 1e-12 && *v < b.plausible_upper + 1e-12) {
                return Err(Error::Config(format!(
                    "start value {v} for {} outside plausible range [{}, {}]",
                    b.name, b.plausible_lower, b.plausible_upper
                )));
            }
        }
    }
    let budget = if config.max_evaluations > 0 {
        config.max_evaluations
    } else {
        500 * dim as u32
    };
    let geometry = Geometry::new(space);
    let multiplier = config.final_precision_multiplier.max(1);

    let outcomes: Vec<(StartOutcome, Vec<f64>, Evaluation)> = starts
        .par_iter()
        .enumerate()
        .map(|(idx, start)| {
            let outcome = search_one_start(
                objective,
                space,
                &geometry,
                start,
                budget,
                config.incumbent_reestimates,
                config.seed,
                idx as u64,
            );
            let theta = geometry.decode(&outcome.candidate_z, space);
            let precise = objective.evaluate_precise(
                &theta,
                multiplier,
                derive_seed(config.seed, u64::MAX - idx as u64, 0),
            );
            (outcome, theta, precise)
        })
        .collect();

    let per_start: Vec<StartDiagnostics> = outcomes
        .iter()
        .zip(&starts)
        .map(|((outcome, theta, precise), start)| StartDiagnostics {
            start: start.clone(),
            candidate: theta.clone(),
            reestimated_loglik: precise.value,
            reestimated_se: precise.variance.map(f64::sqrt),
            evaluations: outcome.evaluations,
            samples: outcome.samples + precise.samples,
            converged: outcome.converged,
        })
        .collect();

    let mut best = 0usize;
    for i in 1..per_start.len() {
        let a = &per_start[i];
        let b = &per_start[best];
        let better = a.reestimated_loglik > b.reestimated_loglik
            || (a.reestimated_loglik == b.reestimated_loglik && a.samples < b.samples);
        if better {
            best = i;
        }
    }
    let evaluations_used = per_start.iter().map(|s| s.evaluations).sum();
    let samples_used = per_start.iter().map(|s| s.samples).sum();
    let budget_exhausted = per_start.iter().any(|s| !s.converged);
    let chosen = &per_start[best];
    Ok(FitResult {
        theta_hat: chosen.candidate.clone(),
        loglik_at_solution: chosen.reestimated_loglik,
        loglik_se: chosen.reestimated_se,
        evaluations_used,
        samples_used,
        per_start,
        budget_exhausted,
    })
}

/// Estimator selection for dataset objectives.
#[derive(Debug, Clone, PartialEq)]
pub enum EstimatorSpec {
    Ibs { repeats: u32, early_stop: Option<f64>, sample_cap: Option<u64> },
    Fixed { samples: u32, variant: FixedVariant },
    Exact,
}

/// A dataset log-likelihood objective backed by one of the estimators.
pub struct SimulatorObjective<'a, M: Simulator> {
    pub model: &'a M,
    pub data: &'a Dataset<M::Stimulus, M::Response>,
    pub estimator: EstimatorSpec,
}

impl<M: Simulator> SimulatorObjective<'_, M> {
    fn run(&self, theta: &[f64], seed: u64, multiplier: u32) -> Evaluation {
        match &self.estimator {
            EstimatorSpec::Ibs { repeats, early_stop, sample_cap } => {
                let config = EngineConfig {
                    repeats: Repeats::Uniform(repeats * multiplier),
                    early_stop_threshold: *early_stop,
                    per_trial_sample_cap: *sample_cap,
                    master_seed: seed,
                };
                let report = estimate_parallel(self.model, self.data, theta, &config)
                    .expect("estimation failed on validated inputs");
                Evaluation {
                    value: report.loglik,
                    variance: Some(report.variance),
                    samples: report.total_samples,
                }
            }
            EstimatorSpec::Fixed { samples, variant } => {
                let (value, used) = fixed_dataset_estimate(
                    self.model,
                    self.data,
                    theta,
                    samples * multiplier,
                    *variant,
                    seed,
                )
                .expect("estimation failed on validated inputs");
                Evaluation { value, variance: None, samples: used }
            }
            EstimatorSpec::Exact => {
                let value = dataset_exact_loglik(self.model, self.data, theta)
                    .expect("exact likelihood not available for this model");
                Evaluation { value, variance: Some(0.0), samples: 0 }
            }
        }
    }
}

impl<M: Simulator> NoisyObjective for SimulatorObjective<'_, M> {
    fn evaluate(&self, theta: &[f64], seed: u64) -> Evaluation {
        self.run(theta, seed, 1)
    }

    fn evaluate_precise(&self, theta: &[f64], multiplier: u32, seed: u64) -> Evaluation {
        self.run(theta, seed, multiplier)
    }
}

/// Convenience wrapper: fit a simulator model's parameters to a dataset.
pub fn fit_mle<M: Simulator>(
    model: &M,
    data: &Dataset<M::Stimulus, M::Response>,
    estimator: EstimatorSpec,
    config: &OptimizerConfig,
) -> Result<FitResult> {
    let space = model.parameter_space();
    let objective = SimulatorObjective { model, data, estimator };
    maximize(&objective, &space, config)
}

/// Re-estimate the objective at a fixed point with increased precision;
/// returns the estimate and its standard error when the estimator reports a
/// calibrated variance.
pub fn reestimate_at<O: NoisyObjective>(
    objective: &O,
    theta: &[f64],
    multiplier: u32,
    seed: u64,
) -> (f64, Option<f64>) {
    let e = objective.evaluate_precise(theta, multiplier.max(1), seed);
    (e.value, e.variance.map(f64::sqrt))
}

/// Exact-log-likelihood shortfall of a fitted solution relative to the exact
/// maximum-likelihood value. Only defined for models with an exact
/// likelihood.
pub fn loglik_loss<M: Simulator>(
    model: &M,
    data: &Dataset<M::Stimulus, M::Response>,
    fit: &FitResult,
    exact_mle_loglik: f64,
) -> Result<f64> {
    let at_solution = dataset_exact_loglik(model, data, &fit.theta_hat)
        .ok_or_else(|| Error::Config("model lacks an exact likelihood".into()))?;
    Ok(exact_mle_loglik - at_solution)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::ParamBounds;

    fn box_space(dim: usize, lo: f64, hi: f64) -> ParameterSpace {
        ParameterSpace {
            params: (0..dim)
                .map(|i| ParamBounds::new(&format!("x{i}"), lo, hi, lo + 0.1, hi - 0.1))
                .collect(),
        }
    }

    /// Deterministic objective from a closure.
    struct Noiseless<F: Fn(&[f64]) -> f64 + Sync>(F);

    impl<F: Fn(&[f64]) -> f64 + Sync> NoisyObjective for Noiseless<F> {
        fn evaluate(&self, theta: &[f64], _seed: u64) -> Evaluation {
            Evaluation { value: (self.0)(theta), variance: Some(0.0), samples: 1 }
        }
        fn evaluate_precise(&self, theta: &[f64], _m: u32, _seed: u64) -> Evaluation {
            self.evaluate(theta, 0)
        }
    }

    #[test]
    fn default_starts_lattice() {
        // 1-D plausible range [0, 3] -> starts {1, 2}
        let space = ParameterSpace { params: vec![ParamBounds::new("x", -1.0, 4.0, 0.0, 3.0)] };
        let starts = default_starts(&space);
        assert_eq!(starts.len(), 2);
        assert!((starts[0][0] - 1.0).abs() < 1e-12);
        assert!((starts[1][0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn default_starts_match_reference_lattice() {
        use crate::models::orientation::OrientationModel;
        use crate::models::Simulator;
        let starts = default_starts(&OrientationModel.parameter_space());
        assert_eq!(starts.len(), 8);
        let etas: Vec<f64> = starts.iter().map(|s| s[0]).collect();
        assert!(etas.iter().any(|e| (e - (-0.998)).abs() < 1e-3));
        assert!(etas.iter().any(|e| (e - 0.305).abs() < 1e-3));
        let gammas: Vec<f64> = starts.iter().map(|s| s[2]).collect();
        assert!(gammas.iter().any(|g| (g - 0.0733).abs() < 1e-3));
        assert!(gammas.iter().any(|g| (g - 0.1367).abs() < 1e-3));
    }

    #[test]
    fn three_dim_space_has_eight_starts() {
        assert_eq!(default_starts(&box_space(3, 0.0, 1.0)).len(), 8);
    }

    #[test]
    fn noiseless_quadratic_recovery() {
        let target = [0.3, -0.4, 0.7];
        let objective = Noiseless(move |x: &[f64]| {
            -(x[0] - target[0]).powi(2)
                - 2.0 * (x[1] - target[1]).powi(2)
                - 0.5 * (x[2] - target[2]).powi(2)
        });
        let space = box_space(3, -2.0, 2.0);
        let config = OptimizerConfig::new(5);
        let fit = maximize(&objective, &space, &config).unwrap();
        for (a, b) in fit.theta_hat.iter().zip(&target) {
            assert!((a - b).abs() < 1e-3, "{:?} vs {target:?}", fit.theta_hat);
        }
        assert!(!fit.budget_exhausted);
        assert!(fit.loglik_se == Some(0.0));
    }

    #[test]
    fn solution_stays_in_bounds() {
        // optimum outside the box: solution must clamp to the boundary
        let objective = Noiseless(|x: &[f64]| -(x[0] - 10.0).powi(2));
        let space = box_space(1, -1.0, 1.0);
        let fit = maximize(&objective, &space, &OptimizerConfig::new(1)).unwrap();
        assert!(fit.theta_hat[0] <= 1.0 && fit.theta_hat[0] >= -1.0);
        assert!((fit.theta_hat[0] - 1.0).abs() < 1e-3);
    }

    #[test]
    fn rejects_bad_starts() {
        let objective = Noiseless(|x: &[f64]| -x[0] * x[0]);
        let space = box_space(1, -1.0, 1.0);
        let mut config = OptimizerConfig::new(0);
        config.starts = Some(vec![vec![5.0]]);
        assert!(matches!(maximize(&objective, &space, &config), Err(Error::Config(_))));
    }

    #[test]
    fn final_selection_is_monotone_over_starts() {
        let objective = Noiseless(|x: &[f64]| -(x[0] - 0.5).powi(2));
        let space = box_space(1, -1.0, 1.0);
        let fit = maximize(&objective, &space, &OptimizerConfig::new(2)).unwrap();
        // the chosen candidate's re-estimated value is the running maximum
        let max_per_start = fit
            .per_start
            .iter()
            .map(|s| s.reestimated_loglik)
            .fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(fit.loglik_at_solution, max_per_start);
    }

    #[test]
    fn matches_deterministic_compass_baseline() {
        // with zero noise the search must land where textbook compass search
        // lands, on standard convex test functions with known optima
        struct Case {
            f: fn(&[f64]) -> f64,
            argmax: [f64; 2],
        }
        let cases = [
            Case { f: |x| -(x[0] * x[0] + x[1] * x[1]), argmax: [0.0, 0.0] },
            Case { f: |x| -((x[0] - 0.7).powi(2) + 3.0 * (x[1] + 0.2).powi(2)), argmax: [0.7, -0.2] },
            Case {
                f: |x| -(x[0] - 0.3).powi(2) - (x[1] - 0.3).powi(2) - (x[0] - 0.3) * (x[1] - 0.3),
                argmax: [0.3, 0.3],
            },
            Case { f: |x| -(x[0].powi(2) + x[1].powi(2) + 1.0).ln(), argmax: [0.0, 0.0] },
            Case { f: |x| -(x[0] - 0.1).abs() - (x[1] + 0.4).abs(), argmax: [0.1, -0.4] },
        ];
        let space = box_space(2, -2.0, 2.0);
        for case in &cases {
            let objective = Noiseless(case.f);
            let fit = maximize(&objective, &space, &OptimizerConfig::new(3)).unwrap();

            // independent baseline: plain compass search from the same starts
            let mut best_baseline = f64::NEG_INFINITY;
            let mut baseline = vec![0.0; 2];
            for start in default_starts(&space) {
                let mut x = start.clone();
                let mut step = 0.5f64;
                while step > 1e-7 {
                    let mut improved = false;
                    for j in 0..2 {
                        for sign in [1.0, -1.0] {
                            let mut y = x.clone();
                            y[j] = (y[j] + sign * step).clamp(-2.0, 2.0);
                            if (case.f)(&y) > (case.f)(&x) {
                                x = y;
                                improved = true;
                            }
                        }
                    }
                    if !improved {
                        step *= 0.5;
                    }
                }
                if (case.f)(&x) > best_baseline {
                    best_baseline = (case.f)(&x);
                    baseline = x;
                }
            }
            for j in 0..2 {
                assert!(
                    (fit.theta_hat[j] - baseline[j]).abs() < 1e-3,
                    "search {:?} vs baseline {:?} (argmax {:?})",
                    fit.theta_hat,
                    baseline,
                    case.argmax
                );
                assert!((fit.theta_hat[j] - case.argmax[j]).abs() < 1e-3);
            }
        }
    }

    #[test]
    fn noisy_quadratic_is_tolerated() {
        use rand::Rng;
        use std::sync::atomic::{AtomicU64, Ordering};
        // additive Gaussian noise of known variance, reported to the search
        struct NoisyQuadratic {
            counter: AtomicU64,
        }
        impl NoisyObjective for NoisyQuadratic {
            fn evaluate(&self, theta: &[f64], seed: u64) -> Evaluation {
                let unique = self.counter.fetch_add(1, Ordering::Relaxed);
                let mut rng = crate::rng::unit_stream(seed, unique);
                let noise: f64 = rng.gen::<f64>() - 0.5;
                let value = -10.0 * (theta[0] - 0.25).powi(2) + noise;
                Evaluation { value, variance: Some(1.0 / 12.0), samples: 1 }
            }
            fn evaluate_precise(&self, theta: &[f64], m: u32, seed: u64) -> Evaluation {
                let mut sum = 0.0;
                for i in 0..m {
                    sum += self.evaluate(theta, seed.wrapping_add(i as u64)).value;
                }
                Evaluation {
                    value: sum / m as f64,
                    variance: Some(1.0 / 12.0 / m as f64),
                    samples: m as u64,
                }
            }
        }
        let space = box_space(1, -1.0, 1.0);
        let mut config = OptimizerConfig::new(9);
        config.max_evaluations = 600;
        let objective = NoisyQuadratic { counter: AtomicU64::new(0) };
        let fit = maximize(&objective, &space, &config).unwrap();
        assert!(
            (fit.theta_hat[0] - 0.25).abs() < 0.05,
            "theta_hat = {:?}",
            fit.theta_hat
        );
    }
}
