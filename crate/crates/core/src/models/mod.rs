//! The simulator abstraction and the reference generative models.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Stream;

pub mod changeloc;
pub mod discrete;
pub mod fourinarow;
pub mod orientation;

/// Hard and plausible bounds for one model parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamBounds {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub plausible_lower: f64,
    pub plausible_upper: f64,
}

impl ParamBounds {
    pub fn new(name: &str, lower: f64, upper: f64, plausible_lower: f64, plausible_upper: f64) -> Self {
        assert!(
            lower <= plausible_lower && plausible_lower < plausible_upper && plausible_upper <= upper,
            "inconsistent bounds for {name}"
        );
        ParamBounds {
            name: name.to_string(),
            lower,
            upper,
            plausible_lower,
            plausible_upper,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSpace {
    pub params: Vec<ParamBounds>,
}

impl ParameterSpace {
    pub fn dim(&self) -> usize {
        self.params.len()
    }

    /// Check a parameter vector against the hard bounds.
    pub fn validate(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.params.len() {
            return Err(Error::Config(format!(
                "expected {} parameters, got {}",
                self.params.len(),
                theta.len()
            )));
        }
        for (v, b) in theta.iter().zip(&self.params) {
            if !v.is_finite() || *v < b.lower || *v > b.upper {
                return Err(Error::Config(format!(
                    "parameter {} = {v} outside [{}, {}]",
                    b.name, b.lower, b.upper
                )));
            }
        }
        Ok(())
    }

    /// Clamp a vector into the hard bounds, component-wise.
    pub fn clamp(&self, theta: &[f64]) -> Vec<f64> {
        theta
            .iter()
            .zip(&self.params)
            .map(|(v, b)| v.clamp(b.lower, b.upper))
            .collect()
    }
}

/// The response space of a model for a given stimulus.
pub enum ResponseSpace<R> {
    Finite(Vec<R>),
    Continuous,
}

/// A stochastic generative model: simulate a response for a stimulus under a
/// parameter vector, with an optional exact per-trial log-likelihood.
pub trait Simulator: Sync {
    type Stimulus: Clone + Send + Sync;
    type Response: Clone + PartialEq + Send + Sync;

    fn name(&self) -> &'static str;

    fn simulate(&self, stimulus: &Self::Stimulus, theta: &[f64], rng: &mut Stream) -> Self::Response;

    fn response_space(&self, stimulus: &Self::Stimulus) -> ResponseSpace<Self::Response>;

    /// Exact log-probability of `response` given `stimulus`, when available.
    fn exact_trial_loglik(
        &self,
        stimulus: &Self::Stimulus,
        response: &Self::Response,
        theta: &[f64],
    ) -> Option<f64>;

    fn parameter_space(&self) -> ParameterSpace;

    /// Whether the simulator may be invoked concurrently (with independent
    /// streams). Serial models degrade the engine to sequential evaluation.
    fn parallel_safe(&self) -> bool {
        true
    }
}

/// One observed trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialData<S, R> {
    pub stimulus: S,
    pub response: R,
}

/// An ordered set of trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset<S, R> {
    pub trials: Vec<TrialData<S, R>>,
}

impl<S, R> Dataset<S, R> {
    pub fn len(&self) -> usize {
        self.trials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trials.is_empty()
    }
}

/// Header of a serialized dataset file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub model: String,
    pub theta_true: Vec<f64>,
    pub seed: u64,
    pub n_trials: usize,
}

/// Serialize a dataset as line-delimited JSON: a header line followed by one
/// record per trial. Floating-point fields round-trip bit-exactly.
pub fn write_dataset<S: Serialize, R: Serialize>(
    header: &DatasetHeader,
    data: &Dataset<S, R>,
) -> Result<String> {
    let mut out = String::new();
    out.push_str(
        &serde_json::to_string(header).map_err(|e| Error::Data(format!("header: {e}")))?,
    );
    out.push('\n');
    for trial in &data.trials {
        out.push_str(
            &serde_json::to_string(trial).map_err(|e| Error::Data(format!("trial: {e}")))?,
        );
        out.push('\n');
    }
    Ok(out)
}

/// Parse a dataset produced by [`write_dataset`].
pub fn read_dataset<S: DeserializeOwned, R: DeserializeOwned>(
    text: &str,
) -> Result<(DatasetHeader, Dataset<S, R>)> {
    let mut lines = text.lines();
    let header_line = lines
        .next()
        .ok_or_else(|| Error::Data("empty dataset file".into()))?;
    let header: DatasetHeader = serde_json::from_str(header_line)
        .map_err(|e| Error::Data(format!("bad dataset header: {e}")))?;
    let mut trials = Vec::with_capacity(header.n_trials);
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let trial: TrialData<S, R> = serde_json::from_str(line)
            .map_err(|e| Error::Data(format!("bad trial record {i}: {e}")))?;
        trials.push(trial);
    }
    if trials.len() != header.n_trials {
        return Err(Error::Data(format!(
            "header declares {} trials, file contains {}",
            header.n_trials,
            trials.len()
        )));
    }
    Ok((header, Dataset { trials }))
}

/// Dataset-level exact log-likelihood, when the model provides one.
pub fn dataset_exact_loglik<M: Simulator>(
    model: &M,
    data: &Dataset<M::Stimulus, M::Response>,
    theta: &[f64],
) -> Option<f64> {
    let mut total = 0.0;
    for trial in &data.trials {
        total += model.exact_trial_loglik(&trial.stimulus, &trial.response, theta)?;
    }
    Some(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dataset_roundtrip_is_bit_exact() {
        let header = DatasetHeader {
            model: "orientation".into(),
            theta_true: vec![2.0f64.ln(), 0.1, 0.1],
            seed: 991,
            n_trials: 3,
        };
        let data = Dataset {
            trials: vec![
                TrialData { stimulus: 0.1234567890123456789f64, response: 1u8 },
                TrialData { stimulus: -3.9999999999999996, response: 2 },
                TrialData { stimulus: f64::MIN_POSITIVE, response: 6 },
            ],
        };
        let text = write_dataset(&header, &data).unwrap();
        let (h2, d2): (DatasetHeader, Dataset<f64, u8>) = read_dataset(&text).unwrap();
        assert_eq!(header, h2);
        assert_eq!(data, d2);
        // serialize again: byte-identical
        assert_eq!(text, write_dataset(&h2, &d2).unwrap());
    }

    #[test]
    fn trial_count_mismatch_is_a_data_error() {
        let text = "{\"model\":\"m\",\"theta_true\":[],\"seed\":0,\"n_trials\":2}\n{\"stimulus\":0.0,\"response\":1}\n";
        let out: Result<(DatasetHeader, Dataset<f64, u8>)> = read_dataset(text);
        assert!(matches!(out, Err(Error::Data(_))));
    }
}
