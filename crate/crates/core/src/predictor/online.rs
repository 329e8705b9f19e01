use super::config::PredictorConfig;
use super::history::ObservationHistory;
use super::predict::{predict_obstacle_motion, PredictionDistribution};
use super::train::{train_network_online, TrainedNetwork};
use crate::error::{invalid, Result};
use crate::geom::{Sym2, Vec2};
use crate::rng::Rng;

/// Anything that turns an observation history into a horizon of confidence
/// ellipses. `Ok(None)` means the history is still too short.
pub trait MotionPredictor: Send {
    fn horizon(&self) -> usize;

    fn predict(
        &mut self,
        history: &ObservationHistory,
        gamma: f64,
        rng: &mut Rng,
    ) -> Result<Option<PredictionDistribution>>;
}

/// Learned predictor: retrains on every call, warm-starting from the
/// previous call's weights and optimizer state.
#[derive(Clone, Debug)]
pub struct OnlinePredictor {
    cfg: PredictorConfig,
    net: Option<TrainedNetwork>,
}

impl OnlinePredictor {
    pub fn new(cfg: PredictorConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(OnlinePredictor { cfg, net: None })
    }

    pub fn config(&self) -> &PredictorConfig {
        &self.cfg
    }

    pub fn network(&self) -> Option<&TrainedNetwork> {
        self.net.as_ref()
    }

    /// Trains only; returns false when the history is still too short.
    pub fn train(&mut self, history: &ObservationHistory, rng: &mut Rng) -> Result<bool> {
        if history.recent_deltas(self.cfg.max_history).len() <= self.cfg.horizon {
            return Ok(false);
        }
        let net = train_network_online(history, &self.cfg, self.net.take(), rng)?;
        self.net = Some(net);
        Ok(true)
    }
}

impl MotionPredictor for OnlinePredictor {
    fn horizon(&self) -> usize {
        self.cfg.horizon
    }

    fn predict(
        &mut self,
        history: &ObservationHistory,
        gamma: f64,
        rng: &mut Rng,
    ) -> Result<Option<PredictionDistribution>> {
        if !self.train(history, rng)? {
            return Ok(None);
        }
        let weights = &self.net.as_ref().expect("trained above").weights;
        predict_obstacle_motion(history, weights, &self.cfg, gamma, rng).map(Some)
    }
}

/// Straight-line extrapolation of the last observed delta with a fixed
/// isotropic covariance.
#[derive(Clone, Debug)]
pub struct ConstantVelocityPredictor {
    horizon: usize,
    variance: f64,
}

impl ConstantVelocityPredictor {
    pub const DEFAULT_VARIANCE: f64 = 1e-4;

    pub fn new(horizon: usize, variance: f64) -> Result<Self> {
        if horizon < 1 {
            return Err(invalid("horizon must be at least 1"));
        }
        if !(variance > 0.0) || !variance.is_finite() {
            return Err(invalid("variance must be positive"));
        }
        Ok(ConstantVelocityPredictor { horizon, variance })
    }
}

impl MotionPredictor for ConstantVelocityPredictor {
    fn horizon(&self) -> usize {
        self.horizon
    }

    fn predict(
        &mut self,
        history: &ObservationHistory,
        gamma: f64,
        _rng: &mut Rng,
    ) -> Result<Option<PredictionDistribution>> {
        let Some(last) = history.deltas().last().copied() else {
            return Ok(None);
        };
        let g = (last, Sym2::scaled_identity(self.variance));
        PredictionDistribution::from_gaussians(history.last(), &vec![g; self.horizon], gamma)
            .map(Some)
    }
}

/// Predicts that the obstacle stays where it is, with the given spread.
#[derive(Clone, Debug)]
pub struct StaticPredictor {
    pub horizon: usize,
    pub variance: f64,
}

impl MotionPredictor for StaticPredictor {
    fn horizon(&self) -> usize {
        self.horizon
    }

    fn predict(
        &mut self,
        history: &ObservationHistory,
        gamma: f64,
        _rng: &mut Rng,
    ) -> Result<Option<PredictionDistribution>> {
        let g = (Vec2::ZERO, Sym2::scaled_identity(self.variance));
        PredictionDistribution::from_gaussians(history.last(), &vec![g; self.horizon], gamma)
            .map(Some)
    }
}
