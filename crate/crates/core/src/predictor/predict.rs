use rand::Rng;
use serde::{Deserialize, Serialize};

use super::config::{PositionCovariance, PredictorConfig};
use super::dataset::perturb;
use super::gaussian::{chi2_2d_quantile, fit_gaussian_mle};
use super::history::ObservationHistory;
use crate::error::{shape, Error, Result};
use crate::geom::{Sym2, Vec2};
use crate::nn::{rollout, MaskPolicy, Masks, WeightSet};
use crate::npvo::Ellipsoid;

/// Draws `cfg.samples` closed-loop delta trajectories of length
/// `cfg.horizon`. Each sample perturbs the observed deltas with fresh noise
/// and holds one dropout mask fixed over its whole rollout.
pub fn sample_predictions<R: Rng + ?Sized>(
    history: &ObservationHistory,
    weights: &WeightSet,
    cfg: &PredictorConfig,
    rng: &mut R,
) -> Result<Vec<Vec<Vec2>>> {
    cfg.validate()?;
    if weights.dim() != 2 {
        return Err(shape(format!(
            "network input dimension {} is not 2",
            weights.dim()
        )));
    }
    let deltas = history.recent_deltas(cfg.max_history);
    if deltas.is_empty() {
        return Err(Error::InsufficientHistory { have: 0, need: 0 });
    }
    let mut out = Vec::with_capacity(cfg.samples);
    for _ in 0..cfg.samples {
        let inputs: Vec<Vec<f64>> = perturb(&deltas, cfg.noise_variance, rng)
            .into_iter()
            .map(|d| d.to_array().to_vec())
            .collect();
        let masks = Masks::draw(
            MaskPolicy::FixedPerSequence,
            cfg.keep_prob,
            (2, weights.hidden()),
            0,
            rng,
        )?;
        let ys = rollout(weights, &inputs, cfg.horizon, &masks)?;
        out.push(ys.iter().map(|y| Vec2::from_slice(y)).collect());
    }
    Ok(out)
}

/// Gaussian summary of one lookahead step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionStep {
    pub k: usize,
    pub mean_delta: Vec2,
    pub cov: Sym2,
    pub position: Vec2,
    pub ellipse: Ellipsoid,
}

/// Per-step delta Gaussians, cumulative position means and the
/// `gamma`-confidence ellipses around them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionDistribution {
    pub origin: Vec2,
    pub gamma: f64,
    pub steps: Vec<PredictionStep>,
}

impl PredictionDistribution {
    /// Builds the distribution from per-step delta Gaussians anchored at the
    /// last observed position.
    pub fn from_gaussians(origin: Vec2, gaussians: &[(Vec2, Sym2)], gamma: f64) -> Result<Self> {
        let c = chi2_2d_quantile(gamma)?;
        let mut position = origin;
        let mut steps = Vec::with_capacity(gaussians.len());
        for (i, (mu, cov)) in gaussians.iter().enumerate() {
            position += *mu;
            steps.push(PredictionStep {
                k: i + 1,
                mean_delta: *mu,
                cov: *cov,
                position,
                ellipse: Ellipsoid::new(position, *cov, c)?,
            });
        }
        Ok(PredictionDistribution {
            origin,
            gamma,
            steps,
        })
    }

    pub fn horizon(&self) -> usize {
        self.steps.len()
    }

    pub fn threshold(&self) -> f64 {
        self.steps.first().map_or(0.0, |s| s.ellipse.threshold())
    }

    pub fn ellipses(&self) -> impl Iterator<Item = &Ellipsoid> {
        self.steps.iter().map(|s| &s.ellipse)
    }

    /// Same prediction with every ellipse moved by `offset`.
    pub fn translated(&self, offset: Vec2) -> Self {
        let steps = self
            .steps
            .iter()
            .map(|s| PredictionStep {
                position: s.position + offset,
                ellipse: s.ellipse.translated(offset),
                ..s.clone()
            })
            .collect();
        PredictionDistribution {
            origin: self.origin + offset,
            gamma: self.gamma,
            steps,
        }
    }

    /// One whitespace-separated record per step:
    /// `k mu_x mu_y s_xx s_xy s_yx s_yy p_x p_y c`.
    pub fn records(&self) -> Vec<String> {
        self.steps
            .iter()
            .map(|s| {
                format!(
                    "{} {} {} {} {} {} {} {} {} {}",
                    s.k,
                    s.mean_delta.x,
                    s.mean_delta.y,
                    s.cov.xx,
                    s.cov.xy,
                    s.cov.xy,
                    s.cov.yy,
                    s.position.x,
                    s.position.y,
                    s.ellipse.threshold()
                )
            })
            .collect()
    }
}

/// Dropout sampling, per-step Gaussian fits and confidence ellipses.
pub fn predict_obstacle_motion<R: Rng + ?Sized>(
    history: &ObservationHistory,
    weights: &WeightSet,
    cfg: &PredictorConfig,
    gamma: f64,
    rng: &mut R,
) -> Result<PredictionDistribution> {
    chi2_2d_quantile(gamma)?;
    let samples = sample_predictions(history, weights, cfg, rng)?;
    let mut gaussians = (0..cfg.horizon)
        .map(|k| {
            let column: Vec<Vec2> = samples.iter().map(|s| s[k]).collect();
            fit_gaussian_mle(&column)
        })
        .collect::<Result<Vec<_>>>()?;
    if cfg.position_covariance == PositionCovariance::Cumulative {
        let mut positions = vec![Vec2::ZERO; samples.len()];
        for (k, g) in gaussians.iter_mut().enumerate() {
            for (p, s) in positions.iter_mut().zip(&samples) {
                *p += s[k];
            }
            g.1 = fit_gaussian_mle(&positions)?.1;
        }
    }
    PredictionDistribution::from_gaussians(history.last(), &gaussians, gamma)
}
