//! Finite discrete distributions, used by the entropy and cross-entropy
//! estimators and as simple test models.

use rand::Rng;

use crate::rng::Stream;

/// A distribution over a finite set `0..len`, sampled by CDF inversion.
#[derive(Debug, Clone, PartialEq)]
pub struct Categorical {
    probs: Vec<f64>,
    cdf: Vec<f64>,
}

impl Categorical {
    /// Build from nonnegative weights; they are normalized internally.
    pub fn new(weights: &[f64]) -> Self {
        assert!(!weights.is_empty(), "Categorical: empty weight vector");
        assert!(
            weights.iter().all(|w| w.is_finite() && *w >= 0.0),
            "Categorical: weights must be nonnegative"
        );
        let total: f64 = weights.iter().sum();
        assert!(total > 0.0, "Categorical: weights sum to zero");
        let probs: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let mut cdf = Vec::with_capacity(probs.len());
        let mut acc = 0.0;
        for p in &probs {
            acc += p;
            cdf.push(acc);
        }
        *cdf.last_mut().unwrap() = 1.0;
        Categorical { probs, cdf }
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn prob(&self, item: usize) -> f64 {
        self.probs[item]
    }

    pub fn draw(&self, rng: &mut Stream) -> usize {
        let u: f64 = rng.gen();
        match self.cdf.binary_search_by(|c| c.partial_cmp(&u).unwrap()) {
            Ok(i) | Err(i) => i.min(self.probs.len() - 1),
        }
    }

    /// Shannon entropy in nats.
    pub fn entropy(&self) -> f64 {
        -self
            .probs
            .iter()
            .filter(|p| **p > 0.0)
            .map(|p| p * p.ln())
            .sum::<f64>()
    }
}
