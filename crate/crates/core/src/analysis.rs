//! Reproduction harness: bias/variance curves, variance calibration,
//! parameter-recovery sweeps, estimator RMSE studies, repeat-allocation
//! gains, and the information-bound table. Everything is seeded and emits
//! diff-able tables.

use rayon::prelude::*;
use serde::Serialize;

use crate::engine::{
    allocation_gain, allocate_repeats, estimate_entropy, estimate_parallel,
    integer_allocation_gain, EngineConfig, SampleSource,
};
use crate::error::{Error, Result};
use crate::estimator::{
    bias_master_curve, fixed_bias_exact, fixed_estimate, fixed_std_exact, ibs_value_from_k,
    ibs_variance_from_k,
};
use crate::models::discrete::Categorical;
use crate::models::orientation::{self, OrientationModel};
use crate::models::{Dataset, Simulator};
use crate::optimizer::{fit_mle, EstimatorSpec, OptimizerConfig};
use crate::rng::{derive_seed, unit_stream};
use crate::special::dilog;

// ---------------------------------------------------------------------------
// tables

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableMeta {
    pub seed: u64,
    pub replications: u64,
    pub label: String,
}

/// Columnar table over one axis, for curve-style outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveTable {
    pub axis_name: String,
    pub axis: Vec<f64>,
    pub columns: Vec<(String, Vec<f64>)>,
    pub meta: TableMeta,
}

impl CurveTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.axis_name);
        for (name, col) in &self.columns {
            assert_eq!(col.len(), self.axis.len(), "column {name} length mismatch");
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        for (i, x) in self.axis.iter().enumerate() {
            out.push_str(&format!("{x}"));
            for (_, col) in &self.columns {
                out.push_str(&format!(",{}", col[i]));
            }
            out.push('\n');
        }
        out
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns.iter().find(|(n, _)| n == name).map(|(_, c)| c.as_slice())
    }
}

/// Row-oriented table for relational outputs (recovery sweeps).
#[derive(Debug, Clone, PartialEq)]
pub struct RecordTable {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub meta: TableMeta,
}

impl RecordTable {
    pub fn to_csv(&self) -> String {
        let mut out = self.headers.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

// ---------------------------------------------------------------------------
// scalar statistics helpers

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn sample_variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
}

pub fn quantile(xs: &[f64], q: f64) -> f64 {
    assert!((0.0..=1.0).contains(&q));
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}

pub fn median(xs: &[f64]) -> f64 {
    quantile(xs, 0.5)
}

pub fn skewness(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let n = xs.len() as f64;
    let m2 = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
    let m3 = xs.iter().map(|x| (x - m).powi(3)).sum::<f64>() / n;
    m3 / m2.powf(1.5)
}

pub fn excess_kurtosis(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let n = xs.len() as f64;
    let m2 = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
    let m4 = xs.iter().map(|x| (x - m).powi(4)).sum::<f64>() / n;
    m4 / (m2 * m2) - 3.0
}

pub fn rmse(errors: &[f64]) -> f64 {
    (errors.iter().map(|e| e * e).sum::<f64>() / errors.len() as f64).sqrt()
}

// ---------------------------------------------------------------------------
// bias / variance curves

/// Exact bias, spread, and expected-cost curves for the fixed-sample-count
/// estimator at each M, alongside the unbiased estimator's zero-bias line,
/// exact standard deviation, and 1/p expected cost (scaled by repeats).
pub fn bias_variance_curves(p_grid: &[f64], m_list: &[u32], r_list: &[u32]) -> CurveTable {
    assert!(p_grid.iter().all(|p| *p > 0.0 && *p <= 1.0));
    let mut columns: Vec<(String, Vec<f64>)> = Vec::new();
    columns.push(("ibs_bias".into(), vec![0.0; p_grid.len()]));
    columns.push((
        "ibs_std".into(),
        p_grid.iter().map(|&p| dilog(1.0 - p).sqrt()).collect(),
    ));
    columns.push((
        "ibs_expected_samples".into(),
        p_grid.iter().map(|&p| 1.0 / p).collect(),
    ));
    for &r in r_list {
        columns.push((
            format!("ibs_r{r}_std"),
            p_grid.iter().map(|&p| (dilog(1.0 - p) / r as f64).sqrt()).collect(),
        ));
        columns.push((
            format!("ibs_r{r}_expected_samples"),
            p_grid.iter().map(|&p| r as f64 / p).collect(),
        ));
    }
    for &m in m_list {
        columns.push((
            format!("fixed_m{m}_bias"),
            p_grid.iter().map(|&p| fixed_bias_exact(p, m)).collect(),
        ));
        columns.push((
            format!("fixed_m{m}_std"),
            p_grid.iter().map(|&p| fixed_std_exact(p, m)).collect(),
        ));
        columns.push((format!("fixed_m{m}_samples"), vec![m as f64; p_grid.len()]));
    }
    CurveTable {
        axis_name: "p".into(),
        axis: p_grid.to_vec(),
        columns,
        meta: TableMeta { seed: 0, replications: 0, label: "bias-variance-curves".into() },
    }
}

/// Master-curve comparison: exact fixed-sampling bias at p = lambda / M
/// against the asymptotic curve, per lambda.
pub fn master_curve_table(lambda_grid: &[f64], m: u32) -> CurveTable {
    let exact: Vec<f64> = lambda_grid.iter().map(|&l| fixed_bias_exact(l / m as f64, m)).collect();
    let master: Vec<f64> = lambda_grid.iter().map(|&l| bias_master_curve(l)).collect();
    let gap: Vec<f64> = exact.iter().zip(&master).map(|(a, b)| (a - b).abs()).collect();
    CurveTable {
        axis_name: "lambda".into(),
        axis: lambda_grid.to_vec(),
        columns: vec![
            (format!("fixed_m{m}_bias"), exact),
            ("master_curve".into(), master),
            ("abs_gap".into(), gap),
        ],
        meta: TableMeta { seed: 0, replications: 0, label: "master-curve".into() },
    }
}

/// Ratio of the estimator standard deviation to the information-inequality
/// lower bound sqrt(1 - p).
pub fn info_bound_table(p_grid: &[f64]) -> CurveTable {
    assert!(p_grid.iter().all(|p| *p > 0.0 && *p < 1.0));
    let ratio: Vec<f64> = p_grid
        .iter()
        .map(|&p| (dilog(1.0 - p) / (1.0 - p)).sqrt())
        .collect();
    CurveTable {
        axis_name: "p".into(),
        axis: p_grid.to_vec(),
        columns: vec![("std_over_bound".into(), ratio)],
        meta: TableMeta { seed: 0, replications: 0, label: "information-bound".into() },
    }
}

// ---------------------------------------------------------------------------
// calibration

/// z-scores of dataset estimates against the exact log-likelihood, under the
/// estimated (per-draw) and exact (known-p) variances, plus z-scores of the
/// total sample count against its geometric-sum moments.
#[derive(Debug, Clone)]
pub struct CalibrationReport {
    pub z_estimated: Vec<f64>,
    pub z_exact: Vec<f64>,
    pub z_samples: Vec<f64>,
    pub seed: u64,
}

impl CalibrationReport {
    pub fn coverage(z: &[f64], beta: f64) -> f64 {
        z.iter().filter(|v| v.abs() <= beta).count() as f64 / z.len() as f64
    }

    pub fn coverage_estimated(&self, beta: f64) -> f64 {
        Self::coverage(&self.z_estimated, beta)
    }

    pub fn coverage_exact(&self, beta: f64) -> f64 {
        Self::coverage(&self.z_exact, beta)
    }
}

/// Estimate `n_datasets` synthetic orientation sessions at their generating
/// parameters and z-score the estimates (the orientation model is the
/// calibration reference because its likelihood is exact).
pub fn calibration_experiment(
    theta_true: &[f64],
    n_trials: usize,
    n_datasets: usize,
    repeats: u32,
    master_seed: u64,
) -> CalibrationReport {
    let model = OrientationModel;
    let rows: Vec<(f64, f64, f64)> = (0..n_datasets)
        .into_par_iter()
        .map(|i| {
            let data_seed = derive_seed(master_seed, i as u64, 1);
            let data = orientation::generate(n_trials, theta_true, data_seed);
            let exact = orientation::exact_loglik(&data, theta_true);
            let probs = orientation::trial_probabilities(&data, theta_true);
            let exact_var: f64 =
                probs.iter().map(|&p| dilog(1.0 - p)).sum::<f64>() / repeats as f64;
            let k_mean: f64 = repeats as f64 * probs.iter().map(|&p| 1.0 / p).sum::<f64>();
            let k_var: f64 = repeats as f64
                * probs.iter().map(|&p| (1.0 - p) / (p * p)).sum::<f64>();
            let config = EngineConfig::new(repeats, derive_seed(master_seed, i as u64, 2));
            let report = estimate_parallel(&model, &data, theta_true, &config)
                .expect("estimation on generated data");
            let z_est = (report.loglik - exact) / report.variance.sqrt();
            let z_exact = (report.loglik - exact) / exact_var.sqrt();
            let z_k = (report.total_samples as f64 - k_mean) / k_var.sqrt();
            (z_est, z_exact, z_k)
        })
        .collect();
    CalibrationReport {
        z_estimated: rows.iter().map(|r| r.0).collect(),
        z_exact: rows.iter().map(|r| r.1).collect(),
        z_samples: rows.iter().map(|r| r.2).collect(),
        seed: master_seed,
    }
}

// ---------------------------------------------------------------------------
// parameter recovery

/// One fitted cell of a recovery sweep.
#[derive(Debug, Clone)]
pub struct RecoveryCell {
    pub theta_idx: usize,
    pub dataset_idx: usize,
    pub method: String,
    pub theta_true: Vec<f64>,
    pub theta_hat: Vec<f64>,
    pub samples_per_trial: f64,
    /// Exact log-likelihood shortfall vs the exact-likelihood fit of the same
    /// dataset, when the model affords one and the sweep includes it.
    pub loss_exact: Option<f64>,
}

/// Generate-and-fit sweep over a parameter grid: `n_datasets` synthetic
/// sessions per grid point, fitted with every listed estimator.
pub fn recovery_study<M, G>(
    model: &M,
    generate: G,
    theta_grid: &[Vec<f64>],
    n_trials: usize,
    n_datasets: usize,
    estimators: &[(String, EstimatorSpec)],
    opt_config: &OptimizerConfig,
    master_seed: u64,
) -> Result<Vec<RecoveryCell>>
where
    M: Simulator,
    G: Fn(usize, &[f64], u64) -> Dataset<M::Stimulus, M::Response> + Sync,
{
    if theta_grid.is_empty() || estimators.is_empty() {
        return Err(Error::Config("empty recovery grid or estimator list".into()));
    }
    let space = model.parameter_space();
    for theta in theta_grid {
        space.validate(theta)?;
    }
    let jobs: Vec<(usize, usize)> = (0..theta_grid.len())
        .flat_map(|t| (0..n_datasets).map(move |d| (t, d)))
        .collect();
    let cells: Vec<Vec<RecoveryCell>> = jobs
        .par_iter()
        .map(|&(theta_idx, dataset_idx)| {
            let theta_true = &theta_grid[theta_idx];
            let data_seed = derive_seed(master_seed, theta_idx as u64, dataset_idx as u64);
            let data = generate(n_trials, theta_true, data_seed);
            let mut fits = Vec::with_capacity(estimators.len());
            for (m_idx, (name, spec)) in estimators.iter().enumerate() {
                let mut config = opt_config.clone();
                config.seed = derive_seed(data_seed, m_idx as u64, 77);
                let fit = fit_mle(model, &data, spec.clone(), &config)
                    .expect("fit on validated inputs");
                fits.push((name.clone(), spec.clone(), fit));
            }
            // exact-likelihood reference for the loss, when present
            let exact_ref = fits
                .iter()
                .find(|(_, spec, _)| *spec == EstimatorSpec::Exact)
                .and_then(|(_, _, fit)| {
                    crate::models::dataset_exact_loglik(model, &data, &fit.theta_hat)
                });
            fits.into_iter()
                .map(|(name, _spec, fit)| {
                    let loss_exact = exact_ref.and_then(|reference| {
                        crate::models::dataset_exact_loglik(model, &data, &fit.theta_hat)
                            .map(|at_fit| reference - at_fit)
                    });
                    RecoveryCell {
                        theta_idx,
                        dataset_idx,
                        method: name,
                        theta_true: theta_true.clone(),
                        theta_hat: fit.theta_hat.clone(),
                        samples_per_trial: fit.samples_used as f64
                            / (n_trials as f64 * fit.evaluations_used.max(1) as f64),
                        loss_exact,
                    }
                })
                .collect()
        })
        .collect();
    Ok(cells.into_concat())
}

trait Concat<T> {
    fn into_concat(self) -> Vec<T>;
}

impl<T> Concat<T> for Vec<Vec<T>> {
    fn into_concat(self) -> Vec<T> {
        self.into_iter().flatten().collect()
    }
}

/// Aggregate recovery cells into one row per (grid point, method): RMSE and
/// signed bias per parameter, mean samples per trial, median loss.
pub fn recovery_table(cells: &[RecoveryCell], param_names: &[&str], seed: u64) -> RecordTable {
    let mut headers: Vec<String> = vec!["theta_idx".into(), "method".into(), "n_datasets".into()];
    for name in param_names {
        headers.push(format!("true_{name}"));
        headers.push(format!("rmse_{name}"));
        headers.push(format!("bias_{name}"));
    }
    headers.push("mean_samples_per_trial".into());
    headers.push("median_loss".into());

    let mut keys: Vec<(usize, String)> = cells
        .iter()
        .map(|c| (c.theta_idx, c.method.clone()))
        .collect();
    keys.sort();
    keys.dedup();

    let mut rows = Vec::new();
    for (theta_idx, method) in keys {
        let group: Vec<&RecoveryCell> = cells
            .iter()
            .filter(|c| c.theta_idx == theta_idx && c.method == method)
            .collect();
        let mut row = vec![
            theta_idx.to_string(),
            method.clone(),
            group.len().to_string(),
        ];
        for (j, _) in param_names.iter().enumerate() {
            let truth = group[0].theta_true[j];
            let errors: Vec<f64> = group.iter().map(|c| c.theta_hat[j] - truth).collect();
            row.push(format!("{truth}"));
            row.push(format!("{}", rmse(&errors)));
            row.push(format!("{}", mean(&errors)));
        }
        let samples: Vec<f64> = group.iter().map(|c| c.samples_per_trial).collect();
        row.push(format!("{}", mean(&samples)));
        let losses: Vec<f64> = group.iter().filter_map(|c| c.loss_exact).collect();
        row.push(if losses.is_empty() { "".into() } else { format!("{}", median(&losses)) });
        rows.push(row);
    }
    RecordTable {
        headers,
        rows,
        meta: TableMeta {
            seed,
            replications: cells.len() as u64,
            label: "parameter-recovery".into(),
        },
    }
}

// ---------------------------------------------------------------------------
// estimator RMSE study (dataset-level, no optimizer)

/// RMSE of total-dataset log-likelihood estimates versus per-trial sample
/// budget, simulated directly from per-trial hit probabilities drawn from an
/// empirical pool.
pub fn estimator_rmse_study(
    p_pool: &[f64],
    n_list: &[usize],
    budgets: &[u32],
    n_reps: usize,
    master_seed: u64,
) -> CurveTable {
    assert!(!p_pool.is_empty() && p_pool.iter().all(|p| *p > 0.0 && *p <= 1.0));
    let mut columns: Vec<(String, Vec<f64>)> = Vec::new();
    for &n in n_list {
        let mut ibs_rmse = Vec::with_capacity(budgets.len());
        let mut ibs_samples = Vec::with_capacity(budgets.len());
        let mut fixed_rmse = Vec::with_capacity(budgets.len());
        for (bi, &budget) in budgets.iter().enumerate() {
            let errs: Vec<(f64, f64, f64)> = (0..n_reps)
                .into_par_iter()
                .map(|rep| {
                    let mut rng =
                        unit_stream(derive_seed(master_seed, n as u64, bi as u64), rep as u64);
                    // one dataset: n trial probabilities from the pool
                    let probs: Vec<f64> = (0..n)
                        .map(|_| p_pool[rng.gen_range(0..p_pool.len())])
                        .collect();
                    let truth: f64 = probs.iter().map(|p| p.ln()).sum();
                    let mean_cost: f64 =
                        probs.iter().map(|p| 1.0 / p).sum::<f64>() / n as f64;
                    let r = ((budget as f64 / mean_cost).round() as u32).max(1);
                    let mut ibs_total = 0.0;
                    let mut drawn = 0u64;
                    for &p in &probs {
                        let mut acc = 0.0;
                        for _ in 0..r {
                            let mut k = 0u64;
                            loop {
                                k += 1;
                                if rng.gen::<f64>() < p {
                                    break;
                                }
                            }
                            drawn += k;
                            acc += ibs_value_from_k(k);
                        }
                        ibs_total += acc / r as f64;
                    }
                    let mut fixed_total = 0.0;
                    for &p in &probs {
                        let mut hits = 0u64;
                        for _ in 0..budget {
                            if rng.gen::<f64>() < p {
                                hits += 1;
                            }
                        }
                        fixed_total += fixed_estimate(hits, budget as u64);
                    }
                    (
                        ibs_total - truth,
                        fixed_total - truth,
                        drawn as f64 / n as f64,
                    )
                })
                .collect();
            let ibs_errs: Vec<f64> = errs.iter().map(|e| e.0).collect();
            let fixed_errs: Vec<f64> = errs.iter().map(|e| e.1).collect();
            ibs_rmse.push(rmse(&ibs_errs));
            fixed_rmse.push(rmse(&fixed_errs));
            ibs_samples.push(mean(&errs.iter().map(|e| e.2).collect::<Vec<f64>>()));
        }
        columns.push((format!("ibs_rmse_n{n}"), ibs_rmse));
        columns.push((format!("ibs_samples_n{n}"), ibs_samples));
        columns.push((format!("fixed_rmse_n{n}"), fixed_rmse));
    }
    CurveTable {
        axis_name: "samples_per_trial".into(),
        axis: budgets.iter().map(|&b| b as f64).collect(),
        columns,
        meta: TableMeta {
            seed: master_seed,
            replications: n_reps as u64,
            label: "estimator-rmse".into(),
        },
    }
}

use rand::Rng;

// ---------------------------------------------------------------------------
// allocation gains

#[derive(Debug, Clone, Serialize)]
pub struct GainStudy {
    pub continuous_median: f64,
    pub continuous_iqr: (f64, f64),
    pub rounded_median: f64,
    pub rounded_iqr: (f64, f64),
    pub n_trials: usize,
    pub n_draws: usize,
    pub seed: u64,
}

/// Distribution of the optimal-allocation precision gain for uniformly drawn
/// trial probabilities: the continuous optimum, and the integer (ceiling)
/// allocation at `budget_multiplier` expected repeats per trial compared
/// against uniform repeats at the same realized budget.
pub fn allocation_gain_study(
    n_trials: usize,
    n_draws: usize,
    budget_multiplier: f64,
    master_seed: u64,
) -> GainStudy {
    let gains: Vec<(f64, f64)> = (0..n_draws)
        .into_par_iter()
        .map(|i| {
            let mut rng = unit_stream(master_seed, i as u64);
            let p: Vec<f64> = (0..n_trials)
                .map(|_| {
                    // open interval to keep the costs finite
                    let mut u: f64 = rng.gen();
                    while u == 0.0 {
                        u = rng.gen();
                    }
                    u
                })
                .collect();
            let continuous = allocation_gain(&p);
            let budget = budget_multiplier * p.iter().map(|v| 1.0 / v).sum::<f64>();
            let repeats = allocate_repeats(&p, budget).expect("feasible budget");
            let rounded = integer_allocation_gain(&p, &repeats);
            (continuous, rounded)
        })
        .collect();
    let continuous: Vec<f64> = gains.iter().map(|g| g.0).collect();
    let rounded: Vec<f64> = gains.iter().map(|g| g.1).collect();
    GainStudy {
        continuous_median: median(&continuous),
        continuous_iqr: (quantile(&continuous, 0.25), quantile(&continuous, 0.75)),
        rounded_median: median(&rounded),
        rounded_iqr: (quantile(&rounded, 0.25), quantile(&rounded, 0.75)),
        n_trials,
        n_draws,
        seed: master_seed,
    }
}

// ---------------------------------------------------------------------------
// entropy / cross-entropy / KL

#[derive(Debug, Clone, Serialize)]
pub struct DivergenceEstimate {
    pub cross_entropy: f64,
    pub cross_entropy_variance: f64,
    pub kl: f64,
    pub kl_variance: f64,
}

/// Cross-entropy H(p, q): sample from `p`, estimate log q(x) by drawing from
/// `q` until a match, negate. KL(p || q) follows as H(p, q) - H(p).
pub fn kl_and_cross_entropy<D>(
    sampler_p: &D,
    sampler_q: &D,
    repeats: u32,
    sample_cap: Option<u64>,
    master_seed: u64,
) -> Result<DivergenceEstimate>
where
    D: SampleSource,
{
    if repeats == 0 {
        return Err(Error::Config("repeats must be >= 1".into()));
    }
    let mut sum = 0.0;
    let mut var_sum = 0.0;
    for r in 0..repeats {
        let mut rng = unit_stream(derive_seed(master_seed, 101, r as u64), 0);
        let x = sampler_p.draw(&mut rng);
        let mut k = 0u64;
        loop {
            let sim = sampler_q.draw(&mut rng);
            k += 1;
            if sim == x {
                break;
            }
            if sample_cap.is_some_and(|c| k >= c) {
                return Err(Error::Estimation(format!(
                    "cross-entropy run truncated after {k} samples; \
                     the second distribution may assign near-zero mass"
                )));
            }
        }
        sum += ibs_value_from_k(k);
        var_sum += ibs_variance_from_k(k);
    }
    let r = repeats as f64;
    let cross_entropy = -(sum / r);
    let cross_entropy_variance = var_sum / (r * r);
    let (entropy, entropy_variance) =
        estimate_entropy(sampler_p, repeats, sample_cap, derive_seed(master_seed, 202, 0))?;
    Ok(DivergenceEstimate {
        cross_entropy,
        cross_entropy_variance,
        kl: cross_entropy - entropy,
        kl_variance: cross_entropy_variance + entropy_variance,
    })
}

/// Convenience: categorical distributions for the divergence estimators.
pub fn categorical(weights: &[f64]) -> Categorical {
    Categorical::new(weights)
}

// ---------------------------------------------------------------------------
// empirical trial-probability pool for the RMSE study

/// Per-trial likelihoods of a synthetic orientation session at its generating
/// parameters; the empirical pool the RMSE study draws from.
pub fn orientation_probability_pool(n_trials: usize, theta: &[f64], seed: u64) -> Vec<f64> {
    let data = orientation::generate(n_trials, theta, seed);
    orientation::trial_probabilities(&data, theta)
}
