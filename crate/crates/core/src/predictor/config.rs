use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::nn::CellKind;

/// Hyperparameters of online training and dropout prediction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PredictorConfig {
    pub cell: CellKind,
    /// Prediction horizon `m`, in steps.
    pub horizon: usize,
    /// Variance of the zero-mean Gaussian noise added to every observed
    /// delta coordinate (m²).
    pub noise_variance: f64,
    pub huber_delta: f64,
    /// Probability that a dropout mask entry is 1.
    pub keep_prob: f64,
    pub hidden: usize,
    /// Adam iterations per training call.
    pub iterations: usize,
    /// Dropout samples per prediction.
    pub samples: usize,
    pub learning_rate: f64,
    /// Most recent deltas used for training and prediction input.
    pub max_history: usize,
    pub seed: u64,
    pub position_covariance: PositionCovariance,
}

/// How the covariance of the predicted position at step `k` is obtained.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PositionCovariance {
    /// The covariance of the step-`k` delta samples, used as is.
    PerStep,
    /// The covariance of the sampled positions, i.e. of the cumulative sums
    /// of each sampled delta trajectory.
    #[default]
    Cumulative,
}

impl Default for PredictorConfig {
    fn default() -> Self {
        PredictorConfig {
            cell: CellKind::Lstm,
            horizon: 10,
            noise_variance: 0.0,
            huber_delta: 1.0,
            keep_prob: 0.9,
            hidden: 20,
            iterations: 100,
            samples: 30,
            learning_rate: 0.003,
            max_history: 50,
            seed: 0,
            position_covariance: PositionCovariance::Cumulative,
        }
    }
}

impl PredictorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.horizon < 1 {
            return Err(invalid("horizon must be at least 1"));
        }
        if !(self.noise_variance >= 0.0) || !self.noise_variance.is_finite() {
            return Err(invalid("noise_variance must be finite and non-negative"));
        }
        if !(self.huber_delta > 0.0) {
            return Err(invalid("huber_delta must be positive"));
        }
        if !(0.0..=1.0).contains(&self.keep_prob) {
            return Err(invalid("keep_prob must lie in [0, 1]"));
        }
        if self.hidden < 1 {
            return Err(invalid("hidden must be at least 1"));
        }
        if self.iterations < 1 {
            return Err(invalid("iterations must be at least 1"));
        }
        if self.samples < 2 {
            return Err(invalid("samples must be at least 2"));
        }
        if !(self.learning_rate > 0.0) {
            return Err(invalid("learning_rate must be positive"));
        }
        if self.max_history <= self.horizon {
            return Err(invalid("max_history must exceed horizon"));
        }
        Ok(())
    }
}
