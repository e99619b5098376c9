//! Single-trial log-likelihood estimators and their variances.
//!
//! The central quantity is the sample count K of a "draw until hit" run
//! against a Bernoulli source with unknown success probability p. K is
//! geometric, and the estimator maps K to an unbiased estimate of log p with
//! a calibrated per-sample variance. Fixed-sample-count baselines and the
//! exact curves used by the analysis suites live here as well.

use crate::special::{dilog, harmonic, inv_square_sum};

/// One inverse-binomial-sampling run: estimate, variance estimate, and cost.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialEstimate {
    /// Log-likelihood estimate in nats; always <= 0.
    pub loglik: f64,
    /// Variance estimate from the sample count; 0 iff one sample was used.
    pub variance: f64,
    /// Samples drawn, including the final hit.
    pub samples_used: u64,
}

/// Running average of independent repeats of the same estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RepeatedEstimate {
    pub loglik: f64,
    pub variance: f64,
    pub repeats: u32,
}

/// Out-of-band signal: a sample cap was reached before a hit. Carries the
/// number of samples drawn so the caller can account for the cost; it is
/// deliberately not convertible into a numeric estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Truncated {
    pub samples_drawn: u64,
}

/// A source of i.i.d. binary outcomes with hidden success probability.
pub trait BernoulliOracle {
    fn draw(&mut self) -> bool;
}

/// Bernoulli oracle with known probability, for tests and calibration runs.
pub struct ProbOracle<R: rand::Rng> {
    pub p: f64,
    pub rng: R,
}

impl<R: rand::Rng> BernoulliOracle for ProbOracle<R> {
    #[inline]
    fn draw(&mut self) -> bool {
        self.rng.gen::<f64>() < self.p
    }
}

/// Log-likelihood estimate from a sample count K >= 1: 0 for K = 1, else
/// minus the (K-1)-th harmonic number. Equals digamma(1) - digamma(K).
#[inline]
pub fn ibs_value_from_k(k: u64) -> f64 {
    assert!(k >= 1, "ibs_value_from_k: K must be >= 1");
    -harmonic(k - 1)
}

/// Variance estimate from a sample count K >= 1: trigamma(1) - trigamma(K).
/// Strictly increasing in K, bounded above by pi^2/6.
#[inline]
pub fn ibs_variance_from_k(k: u64) -> f64 {
    assert!(k >= 1, "ibs_variance_from_k: K must be >= 1");
    inv_square_sum(k - 1)
}

/// Exact estimator variance for known trial probability p: Li2(1 - p).
pub fn exact_ibs_variance(p: f64) -> f64 {
    assert!(p > 0.0 && p <= 1.0, "exact_ibs_variance: p outside (0, 1]: {p}");
    dilog(1.0 - p)
}

/// Draw from `oracle` until a hit, then convert the count into an estimate.
///
/// With `max_samples` set, a run that exhausts the cap returns the explicit
/// truncation signal instead of an estimate.
pub fn ibs_trial(
    oracle: &mut impl BernoulliOracle,
    max_samples: Option<u64>,
) -> Result<TrialEstimate, Truncated> {
    let mut k = 0u64;
    loop {
        k += 1;
        if oracle.draw() {
            return Ok(TrialEstimate {
                loglik: ibs_value_from_k(k),
                variance: ibs_variance_from_k(k),
                samples_used: k,
            });
        }
        if let Some(cap) = max_samples {
            if k >= cap {
                return Err(Truncated { samples_drawn: k });
            }
        }
    }
}

/// log((m + 1) / (M + 1)): the divergence-free fixed-sampling estimator.
pub fn fixed_estimate(m: u64, big_m: u64) -> f64 {
    assert!(big_m >= 1 && m <= big_m, "fixed_estimate: need 0 <= m <= M, M >= 1");
    ((m + 1) as f64 / (big_m + 1) as f64).ln()
}

/// log(m / M), which is -inf whenever no sample hit.
pub fn fixed_estimate_naive(m: u64, big_m: u64) -> f64 {
    assert!(big_m >= 1 && m <= big_m, "fixed_estimate_naive: need 0 <= m <= M, M >= 1");
    if m == 0 {
        f64::NEG_INFINITY
    } else {
        (m as f64 / big_m as f64).ln()
    }
}

/// log(max(m, m_min) / M): all-miss runs floored at log(m_min / M).
pub fn fixed_estimate_bounded(m: u64, big_m: u64, m_min: f64) -> f64 {
    assert!(big_m >= 1 && m <= big_m, "fixed_estimate_bounded: need 0 <= m <= M, M >= 1");
    assert!(m_min > 0.0 && m_min < 1.0, "fixed_estimate_bounded: m_min outside (0, 1)");
    ((m as f64).max(m_min) / big_m as f64).ln()
}

/// Exact first two moments of the fixed-sampling estimator under known p,
/// by direct binomial expectation.
fn fixed_moments_exact(p: f64, big_m: u32) -> (f64, f64) {
    assert!(p > 0.0 && p <= 1.0, "fixed_moments_exact: p outside (0, 1]: {p}");
    if p == 1.0 {
        return (0.0, 0.0);
    }
    let m_f = big_m as f64;
    let q = 1.0 - p;
    // binomial pmf by the stable multiplicative recurrence
    let mut pmf = q.powi(big_m as i32);
    let ratio = p / q;
    let mut mean = 0.0;
    let mut second = 0.0;
    for m in 0..=big_m {
        let v = (((m + 1) as f64) / (m_f + 1.0)).ln();
        mean += pmf * v;
        second += pmf * v * v;
        if m < big_m {
            pmf *= ratio * (m_f - m as f64) / (m as f64 + 1.0);
        }
    }
    (mean, (second - mean * mean).max(0.0))
}

/// Exact bias of the fixed-sampling estimator: E[log((m+1)/(M+1))] - log p.
pub fn fixed_bias_exact(p: f64, big_m: u32) -> f64 {
    let (mean, _) = fixed_moments_exact(p, big_m);
    mean - p.ln()
}

/// Exact standard deviation of the fixed-sampling estimator.
pub fn fixed_std_exact(p: f64, big_m: u32) -> f64 {
    fixed_moments_exact(p, big_m).1.sqrt()
}

/// Asymptotic fixed-sampling bias as a function of lambda = p * M in the
/// joint limit M -> inf, p -> 0: exp(-lambda) sum_m lambda^m/m! log(m+1)
/// minus log(lambda), series truncated below 1e-12.
pub fn bias_master_curve(lambda: f64) -> f64 {
    assert!(lambda > 0.0, "bias_master_curve: lambda must be positive");
    let mut weight = (-lambda).exp();
    let mut sum = 0.0; // m = 0 contributes log(1) = 0
    let mut m = 0u64;
    loop {
        sum += weight * ((m + 1) as f64).ln();
        m += 1;
        weight *= lambda / m as f64;
        if weight * ((m + 2) as f64).ln() < 1e-12 && m as f64 > lambda {
            break;
        }
    }
    sum - lambda.ln()
}

/// Average independent repeats: mean of the estimates, variances combined as
/// (1/R^2) * sum of per-repeat variances.
pub fn combine_repeats(estimates: &[(f64, f64)]) -> RepeatedEstimate {
    assert!(!estimates.is_empty(), "combine_repeats: empty estimate list");
    let r = estimates.len() as f64;
    let loglik = estimates.iter().map(|e| e.0).sum::<f64>() / r;
    let variance = estimates.iter().map(|e| e.1).sum::<f64>() / (r * r);
    RepeatedEstimate {
        loglik,
        variance,
        repeats: estimates.len() as u32,
    }
}

/// Fold one more repeat into a running combination without storing the list.
pub fn update_repeats(current: RepeatedEstimate, new: (f64, f64)) -> RepeatedEstimate {
    let r = current.repeats as f64;
    let r1 = r + 1.0;
    RepeatedEstimate {
        loglik: (r * current.loglik + new.0) / r1,
        variance: (r * r * current.variance + new.1) / (r1 * r1),
        repeats: current.repeats + 1,
    }
}

/// Posterior-mean likelihood under the log-normal read of the estimate:
/// exp(loglik + variance / 2).
pub fn convexity_corrected_likelihood(loglik: f64, variance: f64) -> f64 {
    assert!(variance >= 0.0, "convexity_corrected_likelihood: negative variance");
    (loglik + 0.5 * variance).exp()
}

/// Deterministic expectation of the estimator under known p, by direct
/// summation over the geometric distribution of K (tail mass below `tail`).
/// Used as the non-Monte-Carlo unbiasedness oracle.
pub fn ibs_expectation_exact(p: f64, tail: f64) -> f64 {
    assert!(p > 0.0 && p <= 1.0);
    if p == 1.0 {
        return 0.0;
    }
    let q = 1.0 - p;
    let mut weight = p; // Pr(K = 1)
    let mut mass = 0.0;
    let mut sum = 0.0;
    let mut k = 1u64;
    let mut value = 0.0; // -H_{k-1}, updated incrementally
    loop {
        sum += weight * value;
        mass += weight;
        if 1.0 - mass < tail {
            return sum;
        }
        value -= 1.0 / k as f64;
        k += 1;
        weight *= q;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::unit_stream;
    use crate::special::{trigamma, PI_SQUARED_OVER_SIX};
    use approx::assert_relative_eq;
    use rand::Rng;

    #[test]
    fn value_from_k_matches_harmonic_sums() {
        assert_eq!(ibs_value_from_k(1), 0.0);
        assert_eq!(ibs_value_from_k(2), -1.0);
        assert_relative_eq!(ibs_value_from_k(4), -11.0 / 6.0, max_relative = 1e-15);
    }

    #[test]
    fn value_from_k_matches_digamma() {
        use crate::special::digamma;
        for k in [1u64, 2, 7, 100, 5_000, 20_000, 1_000_000] {
            let expect = digamma(1.0) - digamma(k as f64);
            assert!(
                (ibs_value_from_k(k) - expect).abs() < 1e-12 * (1.0 + expect.abs()),
                "k = {k}"
            );
        }
    }

    #[test]
    fn variance_from_k_matches_trigamma() {
        assert_eq!(ibs_variance_from_k(1), 0.0);
        assert_relative_eq!(ibs_variance_from_k(2), 1.0, max_relative = 1e-14);
        assert_relative_eq!(ibs_variance_from_k(3), 1.25, max_relative = 1e-14);
        for k in [1u64, 4, 50, 3_000, 40_000, 1_000_000] {
            let expect = trigamma(1.0) - trigamma(k as f64);
            assert!((ibs_variance_from_k(k) - expect).abs() < 1e-12, "k = {k}");
        }
    }

    #[test]
    fn variance_from_k_increasing_and_bounded() {
        let mut prev = -1.0;
        for k in 1..2_000u64 {
            let v = ibs_variance_from_k(k);
            assert!(v > prev);
            assert!(v < PI_SQUARED_OVER_SIX);
            prev = v;
        }
    }

    #[test]
    fn trial_with_certain_hit() {
        let mut oracle = ProbOracle { p: 1.0, rng: unit_stream(1, 0) };
        for _ in 0..100 {
            let est = ibs_trial(&mut oracle, None).unwrap();
            assert_eq!(est.samples_used, 1);
            assert_eq!(est.loglik, 0.0);
            assert_eq!(est.variance, 0.0);
        }
    }

    #[test]
    fn trial_sample_count_is_geometric() {
        // mean of K over 1e5 runs at p = 0.2 is 1/p = 5 within 3 SE
        let mut oracle = ProbOracle { p: 0.2, rng: unit_stream(7, 0) };
        let n = 100_000;
        let counts: Vec<f64> = (0..n)
            .map(|_| ibs_trial(&mut oracle, None).unwrap().samples_used as f64)
            .collect();
        let mean = counts.iter().sum::<f64>() / n as f64;
        let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se = (var / n as f64).sqrt();
        assert!((mean - 5.0).abs() < 3.0 * se, "mean = {mean}, se = {se}");
    }

    #[test]
    fn trial_estimates_are_unbiased_at_half() {
        let mut oracle = ProbOracle { p: 0.5, rng: unit_stream(11, 0) };
        let n = 100_000;
        let vals: Vec<f64> = (0..n)
            .map(|_| ibs_trial(&mut oracle, None).unwrap().loglik)
            .collect();
        let mean = vals.iter().sum::<f64>() / n as f64;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se = (var / n as f64).sqrt();
        assert!(
            (mean - 0.5f64.ln()).abs() < 3.0 * se,
            "mean = {mean}, expect {}, se = {se}",
            0.5f64.ln()
        );
    }

    #[test]
    fn trial_truncation_is_explicit() {
        let mut oracle = ProbOracle { p: 1e-12, rng: unit_stream(3, 0) };
        let out = ibs_trial(&mut oracle, Some(50));
        assert_eq!(out, Err(Truncated { samples_drawn: 50 }));
    }

    #[test]
    fn exact_variance_endpoints() {
        assert_eq!(exact_ibs_variance(1.0), 0.0);
        assert_relative_eq!(exact_ibs_variance(1e-12), PI_SQUARED_OVER_SIX, max_relative = 1e-9);
        assert_relative_eq!(exact_ibs_variance(0.5), 0.5822405264650125, max_relative = 1e-13);
    }

    #[test]
    fn fixed_estimators_forced_values() {
        assert_eq!(fixed_estimate(10, 10), 0.0);
        assert_relative_eq!(fixed_estimate(0, 10), (1.0f64 / 11.0).ln(), max_relative = 1e-15);
        assert_relative_eq!(fixed_estimate(5, 10), (6.0f64 / 11.0).ln(), max_relative = 1e-15);

        assert_eq!(fixed_estimate_naive(0, 5), f64::NEG_INFINITY);
        assert_eq!(fixed_estimate_naive(5, 5), 0.0);
        assert_relative_eq!(fixed_estimate_naive(1, 2), 0.5f64.ln(), max_relative = 1e-15);

        assert_relative_eq!(fixed_estimate_bounded(0, 10, 0.5), 0.05f64.ln(), max_relative = 1e-15);
        assert_eq!(fixed_estimate_bounded(10, 10, 0.5), 0.0);
        assert_relative_eq!(fixed_estimate_bounded(0, 10, 1e-3), 1e-4f64.ln(), max_relative = 1e-12);
    }

    #[test]
    fn fixed_bias_exact_reference_values() {
        assert_eq!(fixed_bias_exact(1.0, 7), 0.0);
        // two-term expectation at p = 1/2, M = 1: 0.5 log 2
        assert_relative_eq!(fixed_bias_exact(0.5, 1), 0.5 * 2.0f64.ln(), max_relative = 1e-13);
        // high-precision binomial oracle
        assert_relative_eq!(fixed_bias_exact(0.01, 10), 2.2753152070108373, max_relative = 1e-10);
    }

    #[test]
    fn fixed_bias_approaches_master_curve() {
        // In the joint limit the exact bias collapses onto the master curve;
        // at M = 10 the gap at lambda = 0.1 is still ~0.095, shrinking by
        // an order of magnitude at M = 100.
        let gap10 = (fixed_bias_exact(0.01, 10) - bias_master_curve(0.1)).abs();
        let gap100 = (fixed_bias_exact(0.001, 100) - bias_master_curve(0.1)).abs();
        assert!(gap10 < 0.15, "gap10 = {gap10}");
        assert!(gap100 < 0.02, "gap100 = {gap100}");
        assert!(gap100 < gap10);
    }

    #[test]
    fn master_curve_reference_values() {
        // series-summation oracle at lambda = 1
        assert_relative_eq!(bias_master_curve(1.0), 0.5734028091226202, max_relative = 1e-10);
        // flat for lambda >> 1
        assert!(bias_master_curve(100.0).abs() < 0.01);
        // diverges like -log(lambda) for lambda -> 0
        assert_relative_eq!(bias_master_curve(1e-4), 9.210409685255856, max_relative = 1e-6);
    }

    #[test]
    fn combine_repeats_forced_arithmetic() {
        let single = combine_repeats(&[(-1.5, 0.25)]);
        assert_eq!(single, RepeatedEstimate { loglik: -1.5, variance: 0.25, repeats: 1 });
        let two = combine_repeats(&[(-1.0, 1.0), (-2.0, 1.0)]);
        assert_eq!(two.loglik, -1.5);
        assert_eq!(two.variance, 0.5);
        assert_eq!(two.repeats, 2);
    }

    #[test]
    fn repeats_reduce_variance_as_one_over_r() {
        // empirical variance of a 10-repeat combination at p = 0.5 is
        // dilog(0.5)/10 within 10% over 1e4 replications
        let mut rng = unit_stream(23, 0);
        let reps = 10_000;
        let mut vals = Vec::with_capacity(reps);
        for _ in 0..reps {
            let estimates: Vec<(f64, f64)> = (0..10)
                .map(|_| {
                    let mut oracle = ProbOracle { p: 0.5, rng: unit_stream(rng.gen(), 1) };
                    let e = ibs_trial(&mut oracle, None).unwrap();
                    (e.loglik, e.variance)
                })
                .collect();
            vals.push(combine_repeats(&estimates).loglik);
        }
        let mean = vals.iter().sum::<f64>() / reps as f64;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
        let expect = exact_ibs_variance(0.5) / 10.0;
        assert!((var - expect).abs() / expect < 0.10, "var = {var}, expect = {expect}");
    }

    #[test]
    fn update_matches_batch_combination() {
        let estimates = [(-1.0, 1.0), (-0.5, 0.8), (-2.0, 1.3), (0.0, 0.0), (-1.2, 0.9)];
        let batch = combine_repeats(&estimates);
        let mut running = RepeatedEstimate {
            loglik: estimates[0].0,
            variance: estimates[0].1,
            repeats: 1,
        };
        for &e in &estimates[1..] {
            running = update_repeats(running, e);
        }
        assert!((running.loglik - batch.loglik).abs() < 1e-12);
        assert!((running.variance - batch.variance).abs() < 1e-12);
        assert_eq!(running.repeats, 5);

        let equal = update_repeats(
            RepeatedEstimate { loglik: -1.0, variance: 1.0, repeats: 1 },
            (-1.0, 1.0),
        );
        assert_eq!(equal, RepeatedEstimate { loglik: -1.0, variance: 0.5, repeats: 2 });
    }

    #[test]
    fn repeats_bound_worst_case_variance() {
        // even all-worst-case repeats stay below pi^2/(6R)
        for r in 1..50u32 {
            let worst: Vec<(f64, f64)> = (0..r).map(|_| (-30.0, PI_SQUARED_OVER_SIX)).collect();
            let combined = combine_repeats(&worst);
            assert!(combined.variance <= PI_SQUARED_OVER_SIX / r as f64 + 1e-12);
        }
    }

    #[test]
    fn convexity_correction_forced_values() {
        assert_eq!(convexity_corrected_likelihood(0.0, 0.0), 1.0);
        assert_relative_eq!(convexity_corrected_likelihood(-1.0, 2.0), 1.0, max_relative = 1e-15);
    }

    #[test]
    fn deterministic_unbiasedness_oracle() {
        for &p in &[0.02, 0.05, 0.1, 0.3, 0.5, 0.8, 1.0] {
            let expect = (p as f64).ln();
            let got = ibs_expectation_exact(p, 1e-12);
            assert!((got - expect).abs() < 1e-9, "p = {p}: {got} vs {expect}");
        }
    }

    #[test]
    fn mc_variance_matches_exact() {
        for (i, &p) in [0.05f64, 0.3, 0.8].iter().enumerate() {
            let mut oracle = ProbOracle { p, rng: unit_stream(31, i as u64) };
            let n = 100_000;
            let vals: Vec<f64> = (0..n)
                .map(|_| ibs_trial(&mut oracle, None).unwrap().loglik)
                .collect();
            let mean = vals.iter().sum::<f64>() / n as f64;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            let expect = exact_ibs_variance(p);
            assert!(
                (var - expect).abs() / expect < 0.05,
                "p = {p}: var = {var}, expect = {expect}"
            );
        }
    }

    #[test]
    fn information_inequality_band() {
        // std is at least sqrt(1-p) and within 30% of that bound
        for i in 1..1000 {
            let p = i as f64 / 1000.0;
            let ratio = exact_ibs_variance(p).sqrt() / (1.0 - p).sqrt();
            assert!(ratio >= 1.0 - 1e-12, "p = {p}: ratio = {ratio}");
            assert!(ratio <= 1.3, "p = {p}: ratio = {ratio}");
        }
    }
}
