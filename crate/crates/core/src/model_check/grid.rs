use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::geom::{Sym2, Vec2};
use crate::predictor::{MotionPredictor, ObservationHistory, PredictionDistribution};
use crate::rng::Rng;

/// Markov chain over observation histories whose next delta is drawn
/// uniformly from the nine grid moves `{-1, 0, 1}² · cell`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridMotionModel {
    /// Side of one grid cell (m).
    pub cell: f64,
    /// Deltas per sampled trace.
    pub trace_length: usize,
}

impl GridMotionModel {
    pub fn new(cell: f64, trace_length: usize) -> Result<Self> {
        if !(cell > 0.0 && cell.is_finite()) {
            return Err(invalid(format!("cell must be positive, got {cell}")));
        }
        Ok(GridMotionModel { cell, trace_length })
    }

    pub fn alphabet(&self) -> [Vec2; 9] {
        let mut out = [Vec2::ZERO; 9];
        for (i, o) in out.iter_mut().enumerate() {
            *o = Vec2::new((i % 3) as f64 - 1.0, (i / 3) as f64 - 1.0) * self.cell;
        }
        out
    }

    pub fn transition_probability(&self) -> f64 {
        1.0 / 9.0
    }
}

pub fn sample_markov_trace(model: &GridMotionModel, rng: &mut Rng) -> Vec<Vec2> {
    let alphabet = model.alphabet();
    (0..model.trace_length)
        .map(|_| alphabet[rng.random_range(0..alphabet.len())])
        .collect()
}

/// Runs `predictor` online along the trace and reports whether every
/// labeled step was good.
///
/// A prediction is issued after each delta once the predictor has enough
/// history; the step `m` deltas later is labeled good when the realized
/// positions of those `m` steps lie in the predicted ellipses. Steps without
/// a prediction `m` steps back are unlabeled. Stops at the first bad label.
pub fn evaluate_trace(
    deltas: &[Vec2],
    predictor: &mut dyn MotionPredictor,
    gamma: f64,
    rng: &mut Rng,
) -> Result<bool> {
    let m = predictor.horizon();
    let mut positions = Vec::with_capacity(deltas.len() + 1);
    positions.push(Vec2::ZERO);
    for d in deltas {
        positions.push(*positions.last().unwrap() + *d);
    }
    let mut history = ObservationHistory::new(vec![Vec2::ZERO], 1.0)?;
    let mut issued: Vec<Option<PredictionDistribution>> = vec![None; deltas.len() + 1];
    for i in 1..=deltas.len() {
        history.push(positions[i]);
        if i >= m {
            if let Some(p) = issued[i - m].take() {
                let good = p
                    .ellipses()
                    .enumerate()
                    .all(|(k, e)| e.contains(positions[i - m + k + 1]));
                if !good {
                    return Ok(false);
                }
            }
        }
        if i + m <= deltas.len() {
            issued[i] = predictor.predict(&history, gamma, rng)?;
        }
    }
    Ok(true)
}

/// Ellipses so wide they contain every reachable position.
#[derive(Clone, Debug)]
pub struct WholePlanePredictor {
    pub horizon: usize,
}

impl MotionPredictor for WholePlanePredictor {
    fn horizon(&self) -> usize {
        self.horizon
    }

    fn predict(
        &mut self,
        history: &ObservationHistory,
        gamma: f64,
        _rng: &mut Rng,
    ) -> Result<Option<PredictionDistribution>> {
        let g = (Vec2::ZERO, Sym2::scaled_identity(1e12));
        PredictionDistribution::from_gaussians(history.last(), &vec![g; self.horizon], gamma)
            .map(Some)
    }
}

/// Tiny ellipses displaced by `offset` per step from the last position.
#[derive(Clone, Debug)]
pub struct PointPredictor {
    pub horizon: usize,
    pub offset: Vec2,
}

impl MotionPredictor for PointPredictor {
    fn horizon(&self) -> usize {
        self.horizon
    }

    fn predict(
        &mut self,
        history: &ObservationHistory,
        gamma: f64,
        _rng: &mut Rng,
    ) -> Result<Option<PredictionDistribution>> {
        let g = (self.offset, Sym2::scaled_identity(1e-6));
        PredictionDistribution::from_gaussians(history.last(), &vec![g; self.horizon], gamma)
            .map(Some)
    }
}

/// The exact law of the grid walk: zero mean and `k · 2/3 · cell²`
/// variance per axis after `k` steps.
#[derive(Clone, Debug)]
pub struct GridOraclePredictor {
    pub horizon: usize,
    pub cell: f64,
}

impl MotionPredictor for GridOraclePredictor {
    fn horizon(&self) -> usize {
        self.horizon
    }

    fn predict(
        &mut self,
        history: &ObservationHistory,
        gamma: f64,
        _rng: &mut Rng,
    ) -> Result<Option<PredictionDistribution>> {
        let per_step = 2.0 / 3.0 * self.cell * self.cell;
        let g: Vec<_> = (1..=self.horizon)
            .map(|k| (Vec2::ZERO, Sym2::scaled_identity(k as f64 * per_step)))
            .collect();
        PredictionDistribution::from_gaussians(history.last(), &g, gamma).map(Some)
    }
}
