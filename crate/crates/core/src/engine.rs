//! Dataset-level estimation: sequential and rows-first sampling over trials,
//! early stopping against a log-likelihood floor, repeat scheduling with
//! optimal per-trial allocation, the epsilon-ball variant for continuous
//! responses, and entropy estimation.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimator::{ibs_value_from_k, ibs_variance_from_k};
use crate::models::{Dataset, Simulator};
use crate::rng::{cell_stream, Stream};
use crate::special::{dilog, harmonic};

/// Repeat schedule: the same count for every trial, or one count per trial.
#[derive(Debug, Clone, PartialEq)]
pub enum Repeats {
    Uniform(u32),
    PerTrial(Vec<u32>),
}

impl Repeats {
    fn validate(&self, n_trials: usize) -> Result<()> {
        match self {
            Repeats::Uniform(r) if *r >= 1 => Ok(()),
            Repeats::Uniform(_) => Err(Error::Config("repeats must be >= 1".into())),
            Repeats::PerTrial(v) => {
                if v.len() != n_trials {
                    return Err(Error::Config(format!(
                        "per-trial repeat vector has length {}, dataset has {n_trials} trials",
                        v.len()
                    )));
                }
                if v.iter().any(|r| *r == 0) {
                    return Err(Error::Config("per-trial repeats must all be >= 1".into()));
                }
                Ok(())
            }
        }
    }

    fn for_trial(&self, trial: usize) -> u32 {
        match self {
            Repeats::Uniform(r) => *r,
            Repeats::PerTrial(v) => v[trial],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EngineConfig {
    pub repeats: Repeats,
    /// Dataset log-likelihood floor: once the running bound falls below it,
    /// sampling stops and the floor itself is returned (rows-first only).
    pub early_stop_threshold: Option<f64>,
    /// Hard per-cell sample cap; hitting it marks the trial truncated and
    /// voids the unbiasedness contract (the report says so).
    pub per_trial_sample_cap: Option<u64>,
    pub master_seed: u64,
}

impl EngineConfig {
    pub fn new(repeats: u32, master_seed: u64) -> Self {
        EngineConfig {
            repeats: Repeats::Uniform(repeats),
            early_stop_threshold: None,
            per_trial_sample_cap: None,
            master_seed,
        }
    }

    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.early_stop_threshold = Some(threshold);
        self
    }
}

/// Per-trial estimation record.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    /// Samples drawn per repeat. Under early stopping, unfinished repeats
    /// report the misses drawn so far.
    pub k_values: Vec<u64>,
    pub loglik: f64,
    pub variance: f64,
    pub truncated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateReport {
    pub loglik: f64,
    pub variance: f64,
    pub per_trial: Vec<TrialRecord>,
    pub total_samples: u64,
    pub stopped_early: bool,
    /// Some cell hit the sample cap; the estimate is no longer unbiased.
    pub truncated: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CellOutcome {
    Running,
    Hit,
    Truncated,
}

struct Cell {
    trial: u32,
    repeat: u32,
    weight: f64, // 1 / R_trial
    rng: Stream,
    k: u64,
    outcome: CellOutcome,
}

fn make_cells<S, R>(data: &Dataset<S, R>, repeats: &Repeats, master_seed: u64) -> Vec<Cell> {
    let mut cells = Vec::new();
    for trial in 0..data.trials.len() {
        let r = repeats.for_trial(trial);
        for repeat in 0..r {
            cells.push(Cell {
                trial: trial as u32,
                repeat,
                weight: 1.0 / r as f64,
                rng: cell_stream(master_seed, trial as u64, repeat as u64),
                k: 0,
                outcome: CellOutcome::Running,
            });
        }
    }
    cells
}

/// Value a finished cell contributes. Truncated cells contribute the upper
/// bound for their unfinished run (the estimate had they hit one draw later).
fn cell_value(cell: &Cell) -> f64 {
    match cell.outcome {
        CellOutcome::Hit => ibs_value_from_k(cell.k),
        CellOutcome::Truncated => ibs_value_from_k(cell.k + 1),
        CellOutcome::Running => -harmonic(cell.k.saturating_sub(1)),
    }
}

fn cell_variance(cell: &Cell) -> f64 {
    match cell.outcome {
        CellOutcome::Hit => ibs_variance_from_k(cell.k),
        _ => ibs_variance_from_k(cell.k + 1),
    }
}

fn assemble_report<S, R>(
    data: &Dataset<S, R>,
    repeats: &Repeats,
    cells: Vec<Cell>,
    total_samples: u64,
    stopped_at: Option<f64>,
) -> EstimateReport {
    let n = data.trials.len();
    let mut per_trial: Vec<TrialRecord> = (0..n)
        .map(|t| TrialRecord {
            k_values: vec![0; repeats.for_trial(t) as usize],
            loglik: 0.0,
            variance: 0.0,
            truncated: false,
        })
        .collect();
    for cell in &cells {
        let rec = &mut per_trial[cell.trial as usize];
        rec.k_values[cell.repeat as usize] = cell.k;
        rec.loglik += cell.weight * cell_value(cell);
        rec.variance += cell.weight * cell.weight * cell_variance(cell);
        if cell.outcome == CellOutcome::Truncated {
            rec.truncated = true;
        }
    }
    let truncated = per_trial.iter().any(|r| r.truncated);
    let (loglik, variance) = match stopped_at {
        Some(floor) => (floor, per_trial.iter().map(|r| r.variance).sum()),
        None => (
            per_trial.iter().map(|r| r.loglik).sum(),
            per_trial.iter().map(|r| r.variance).sum(),
        ),
    };
    EstimateReport {
        loglik,
        variance,
        per_trial,
        total_samples,
        stopped_early: stopped_at.is_some(),
        truncated,
    }
}

/// Trial-by-trial estimation: for each trial and repeat, draw from the
/// simulator until a sample matches the observed response. Requires uniform
/// repeats and no early-stop threshold (that needs the rows-first scheme).
pub fn estimate_sequential<M: Simulator>(
    model: &M,
    data: &Dataset<M::Stimulus, M::Response>,
    theta: &[f64],
    config: &EngineConfig,
) -> Result<EstimateReport> {
    if data.is_empty() {
        return Err(Error::Data("empty dataset".into()));
    }
    if config.early_stop_threshold.is_some() {
        return Err(Error::Config(
            "early stopping requires the rows-first scheme; use estimate_parallel".into(),
        ));
    }
    if !matches!(config.repeats, Repeats::Uniform(_)) {
        return Err(Error::Config(
            "sequential estimation supports uniform repeats only".into(),
        ));
    }
    config.repeats.validate(data.trials.len())?;
    let cap = config.per_trial_sample_cap;
    let mut cells = make_cells(data, &config.repeats, config.master_seed);
    let mut total_samples = 0u64;
    for cell in cells.iter_mut() {
        let trial = &data.trials[cell.trial as usize];
        loop {
            let sim = model.simulate(&trial.stimulus, theta, &mut cell.rng);
            cell.k += 1;
            total_samples += 1;
            if sim == trial.response {
                cell.outcome = CellOutcome::Hit;
                break;
            }
            if cap.is_some_and(|c| cell.k >= c) {
                cell.outcome = CellOutcome::Truncated;
                break;
            }
        }
    }
    Ok(assemble_report(data, &config.repeats, cells, total_samples, None))
}

/// Rows-first estimation with equality matching. Distribution-identical to
/// [`estimate_sequential`] (trace-identical, in fact, given the per-cell
/// streams), and supports the early-stop threshold.
pub fn estimate_parallel<M: Simulator>(
    model: &M,
    data: &Dataset<M::Stimulus, M::Response>,
    theta: &[f64],
    config: &EngineConfig,
) -> Result<EstimateReport> {
    estimate_rows_matched(model, data, theta, config, &|sim, obs| sim == obs)
}

/// Minimum live cells before a row is worth fanning out to worker threads.
const PARALLEL_ROW_CUTOFF: usize = 64;

fn estimate_rows_matched<M, F>(
    model: &M,
    data: &Dataset<M::Stimulus, M::Response>,
    theta: &[f64],
    config: &EngineConfig,
    matcher: &F,
) -> Result<EstimateReport>
where
    M: Simulator,
    F: Fn(&M::Response, &M::Response) -> bool + Sync,
{
    if data.is_empty() {
        return Err(Error::Data("empty dataset".into()));
    }
    config.repeats.validate(data.trials.len())?;
    let cap = config.per_trial_sample_cap;
    let threshold = config.early_stop_threshold;
    let mut cells = make_cells(data, &config.repeats, config.master_seed);

    let mut n_running = cells.len();
    let mut total_samples = 0u64;
    let mut done_sum = 0.0;
    let mut running_weight: f64 = cells.iter().map(|c| c.weight).sum();
    let mut row = 0u64;
    let mut stopped_at = None;

    while n_running > 0 {
        {
            let live = &mut cells[..n_running];
            let step = |cell: &mut Cell| {
                let trial = &data.trials[cell.trial as usize];
                let sim = model.simulate(&trial.stimulus, theta, &mut cell.rng);
                cell.k += 1;
                if matcher(&sim, &trial.response) {
                    cell.outcome = CellOutcome::Hit;
                } else if cap.is_some_and(|c| cell.k >= c) {
                    cell.outcome = CellOutcome::Truncated;
                }
            };
            if model.parallel_safe() && live.len() >= PARALLEL_ROW_CUTOFF {
                live.par_iter_mut().for_each(step);
            } else {
                live.iter_mut().for_each(step);
            }
        }
        total_samples += n_running as u64;
        row += 1;
        // move finished cells behind the live partition
        let mut i = 0;
        while i < n_running {
            if cells[i].outcome != CellOutcome::Running {
                done_sum += cells[i].weight * cell_value(&cells[i]);
                running_weight -= cells[i].weight;
                n_running -= 1;
                cells.swap(i, n_running);
            } else {
                i += 1;
            }
        }
        if let Some(floor) = threshold {
            // running bound: finished cells at their values, live cells at
            // the estimate they would have if the next draw hit
            let bound = done_sum - running_weight * harmonic(row - 1);
            if bound < floor {
                stopped_at = Some(floor);
                break;
            }
        }
    }
    Ok(assemble_report(data, &config.repeats, cells, total_samples, stopped_at))
}

/// Epsilon-ball estimation for continuous responses: a simulated response
/// counts as a hit when `metric(sim, observed) <= epsilon`, and each trial
/// estimate is shifted down by the log-volume of the matching ball.
pub fn aibs_estimate<M, DF, VF>(
    model: &M,
    data: &Dataset<M::Stimulus, M::Response>,
    theta: &[f64],
    metric: DF,
    epsilon: f64,
    volume: VF,
    config: &EngineConfig,
) -> Result<EstimateReport>
where
    M: Simulator,
    DF: Fn(&M::Response, &M::Response) -> f64 + Sync,
    VF: Fn(&M::Response, f64) -> f64,
{
    if epsilon <= 0.0 {
        return Err(Error::Config("epsilon must be positive".into()));
    }
    if config.early_stop_threshold.is_some() {
        return Err(Error::Config(
            "early stopping is not defined for epsilon-ball estimation".into(),
        ));
    }
    let mut report = estimate_rows_matched(model, data, theta, config, &|sim, obs| {
        metric(sim, obs) <= epsilon
    })?;
    let mut shift = 0.0;
    for (rec, trial) in report.per_trial.iter_mut().zip(&data.trials) {
        let vol = volume(&trial.response, epsilon);
        if !(vol > 0.0) {
            return Err(Error::Config(format!("ball volume must be positive, got {vol}")));
        }
        rec.loglik -= vol.ln();
        shift += vol.ln();
    }
    report.loglik -= shift;
    Ok(report)
}

/// A source of independent draws from a discrete distribution.
pub trait SampleSource: Sync {
    type Item: PartialEq + Clone + Send + Sync;
    fn draw(&self, rng: &mut Stream) -> Self::Item;
}

impl SampleSource for crate::models::discrete::Categorical {
    type Item = usize;
    fn draw(&self, rng: &mut Stream) -> usize {
        Categorical::draw(self, rng)
    }
}
use crate::models::discrete::Categorical;

/// Entropy estimate: draw x from the distribution, estimate log P(x) by
/// drawing until a match, negate. Unbiased for the Shannon entropy; repeats
/// are averaged with the usual variance combination.
pub fn estimate_entropy<D: SampleSource>(
    sampler: &D,
    repeats: u32,
    sample_cap: Option<u64>,
    master_seed: u64,
) -> Result<(f64, f64)> {
    if repeats == 0 {
        return Err(Error::Config("repeats must be >= 1".into()));
    }
    let mut sum = 0.0;
    let mut var_sum = 0.0;
    for r in 0..repeats {
        let mut rng = cell_stream(master_seed, r as u64, u64::MAX);
        let x = sampler.draw(&mut rng);
        let mut k = 0u64;
        loop {
            let sim = sampler.draw(&mut rng);
            k += 1;
            if sim == x {
                break;
            }
            if sample_cap.is_some_and(|c| k >= c) {
                return Err(Error::Estimation(format!(
                    "entropy run truncated after {k} samples"
                )));
            }
        }
        sum += ibs_value_from_k(k);
        var_sum += ibs_variance_from_k(k);
    }
    let r = repeats as f64;
    Ok((-(sum / r), var_sum / (r * r)))
}

/// Optimal per-trial repeat counts for a sample budget: continuous optimum
/// proportional to sqrt(p * Li2(1 - p)), scaled to spend the expected budget,
/// then rounded up to integers (minimum one repeat per trial).
pub fn allocate_repeats(p_hat: &[f64], budget: f64) -> Result<Vec<u32>> {
    if p_hat.is_empty() {
        return Err(Error::Config("empty probability vector".into()));
    }
    if p_hat.iter().any(|p| !(*p > 0.0 && *p <= 1.0)) {
        return Err(Error::Config("trial probabilities must lie in (0, 1]".into()));
    }
    let required: f64 = p_hat.iter().map(|p| 1.0 / p).sum();
    if budget < required {
        return Err(Error::BudgetInfeasible { budget, required });
    }
    let continuous = continuous_allocation(p_hat, budget);
    Ok(continuous
        .iter()
        .map(|r| (r.ceil() as u32).max(1))
        .collect())
}

/// The exact (real-valued) optimal allocation; sums to the budget in
/// expected samples.
pub fn continuous_allocation(p_hat: &[f64], budget: f64) -> Vec<f64> {
    let denom: f64 = p_hat.iter().map(|&p| (dilog(1.0 - p) / p).sqrt()).sum();
    if denom == 0.0 {
        // every trial is certain: any allocation has zero variance
        return vec![1.0; p_hat.len()];
    }
    p_hat
        .iter()
        .map(|&p| budget * (p * dilog(1.0 - p)).sqrt() / denom)
        .collect()
}

/// Precision gain of the optimal continuous allocation over uniform repeats
/// at equal expected budget. Always >= 1, with equality iff the trial
/// probabilities are constant.
pub fn allocation_gain(p: &[f64]) -> f64 {
    assert!(
        !p.is_empty() && p.iter().all(|v| *v > 0.0 && *v <= 1.0),
        "allocation_gain: probabilities must lie in (0, 1]"
    );
    let var_sum: f64 = p.iter().map(|&v| dilog(1.0 - v)).sum();
    let cost_sum: f64 = p.iter().map(|&v| 1.0 / v).sum();
    let mixed: f64 = p.iter().map(|&v| (dilog(1.0 - v) / v).sqrt()).sum();
    if mixed == 0.0 {
        return 1.0; // all p = 1
    }
    var_sum * cost_sum / (mixed * mixed)
}

/// Precision gain of a concrete integer allocation over uniform repeats
/// spending the same realized budget sum(R_i / p_i).
pub fn integer_allocation_gain(p: &[f64], repeats: &[u32]) -> f64 {
    assert_eq!(p.len(), repeats.len());
    let realized: f64 = p.iter().zip(repeats).map(|(&v, &r)| r as f64 / v).sum();
    let uniform_r = realized / p.iter().map(|&v| 1.0 / v).sum::<f64>();
    let var_uniform: f64 = p.iter().map(|&v| dilog(1.0 - v)).sum::<f64>() / uniform_r;
    let var_alloc: f64 = p
        .iter()
        .zip(repeats)
        .map(|(&v, &r)| dilog(1.0 - v) / r as f64)
        .sum();
    var_uniform / var_alloc
}

/// Pilot run followed by allocation: estimate per-trial probabilities from a
/// high-repeat pass at a reference parameter vector (the maximum-likelihood
/// rate of the observed sample counts), clamp away degenerate estimates, and
/// allocate the budget.
pub fn pilot_then_allocate<M: Simulator>(
    model: &M,
    data: &Dataset<M::Stimulus, M::Response>,
    theta0: &[f64],
    pilot_repeats: u32,
    budget: f64,
    master_seed: u64,
) -> Result<Vec<u32>> {
    if pilot_repeats == 0 {
        return Err(Error::Config("pilot repeats must be >= 1".into()));
    }
    let config = EngineConfig::new(pilot_repeats, master_seed);
    let report = estimate_parallel(model, data, theta0, &config)?;
    let floor = 1.0 / (10.0 * budget);
    let p_hat: Vec<f64> = report
        .per_trial
        .iter()
        .map(|rec| {
            let total: u64 = rec.k_values.iter().sum();
            (pilot_repeats as f64 / total as f64).clamp(floor, 1.0)
        })
        .collect();
    allocate_repeats(&p_hat, budget)
}

/// Fixed-sample-count estimator variants for a whole dataset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FixedVariant {
    /// log((m + 1) / (M + 1))
    AddOne,
    /// log(m / M), -inf on all-miss trials
    Naive,
    /// log(max(m, m_min) / M)
    Bounded(f64),
}

/// Estimate a dataset log-likelihood by drawing a constant number of samples
/// per trial and counting hits. Returns the estimate and samples consumed.
pub fn fixed_dataset_estimate<M: Simulator>(
    model: &M,
    data: &Dataset<M::Stimulus, M::Response>,
    theta: &[f64],
    m_samples: u32,
    variant: FixedVariant,
    master_seed: u64,
) -> Result<(f64, u64)> {
    if m_samples == 0 {
        return Err(Error::Config("fixed sampling needs at least one sample".into()));
    }
    if data.is_empty() {
        return Err(Error::Data("empty dataset".into()));
    }
    let per_trial = |trial: usize| -> f64 {
        let t = &data.trials[trial];
        let mut rng = cell_stream(master_seed, trial as u64, 0);
        let mut hits = 0u64;
        for _ in 0..m_samples {
            if model.simulate(&t.stimulus, theta, &mut rng) == t.response {
                hits += 1;
            }
        }
        match variant {
            FixedVariant::AddOne => crate::estimator::fixed_estimate(hits, m_samples as u64),
            FixedVariant::Naive => crate::estimator::fixed_estimate_naive(hits, m_samples as u64),
            FixedVariant::Bounded(m_min) => {
                crate::estimator::fixed_estimate_bounded(hits, m_samples as u64, m_min)
            }
        }
    };
    let n = data.trials.len();
    let loglik: f64 = if model.parallel_safe() && n >= PARALLEL_ROW_CUTOFF {
        (0..n).into_par_iter().map(per_trial).sum()
    } else {
        (0..n).map(per_trial).sum()
    };
    Ok((loglik, n as u64 * m_samples as u64))
}
