use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::config::PredictorConfig;
use super::history::ObservationHistory;
use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::nn::{StepInput, Unroll};

/// One supervised pair: the first `k` (noisy) deltas and the `m` that follow.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingPair {
    pub input: Vec<Vec2>,
    pub target: Vec<Vec2>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainingDataset {
    pub pairs: Vec<TrainingPair>,
}

/// Adds independent `N(0, variance)` noise to every coordinate.
pub fn perturb<R: Rng + ?Sized>(deltas: &[Vec2], variance: f64, rng: &mut R) -> Vec<Vec2> {
    if variance == 0.0 {
        return deltas.to_vec();
    }
    let normal = Normal::new(0.0, variance.sqrt()).expect("finite non-negative std");
    deltas
        .iter()
        .map(|d| Vec2::new(d.x + normal.sample(rng), d.y + normal.sample(rng)))
        .collect()
}

/// The deltas a predictor trains on: the most recent window of the history.
pub(crate) fn training_deltas(
    history: &ObservationHistory,
    cfg: &PredictorConfig,
) -> Result<Vec<Vec2>> {
    let deltas = history.recent_deltas(cfg.max_history);
    if deltas.len() <= cfg.horizon {
        return Err(Error::InsufficientHistory {
            have: deltas.len(),
            need: cfg.horizon,
        });
    }
    Ok(deltas)
}

/// Pairs `x_k = {Δp_i + ε_i}_{i=1..k}`, `y_k = {Δp_i + ε_i}_{i=k+1..k+m}` for
/// `k = 1..n-m`, with one noise draw per delta shared by every pair.
pub fn build_dataset<R: Rng + ?Sized>(
    history: &ObservationHistory,
    cfg: &PredictorConfig,
    rng: &mut R,
) -> Result<TrainingDataset> {
    let deltas = training_deltas(history, cfg)?;
    let noisy = perturb(&deltas, cfg.noise_variance, rng);
    let m = cfg.horizon;
    let pairs = (1..=noisy.len() - m)
        .map(|k| TrainingPair {
            input: noisy[..k].to_vec(),
            target: noisy[k..k + m].to_vec(),
        })
        .collect();
    Ok(TrainingDataset { pairs })
}

/// The whole dataset as one unrolled graph. Inputs `x_k` are prefixes of the
/// same sequence, so a single chain reads the deltas and every prefix `k`
/// spawns a closed-loop branch of `m - 1` feedback steps; the chain step
/// itself emits the branch's first prediction.
pub(crate) struct DatasetGraph {
    pub unroll: Unroll,
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<(usize, Vec<f64>)>,
}

pub(crate) fn dataset_graph(noisy: &[Vec2], horizon: usize) -> DatasetGraph {
    let n = noisy.len();
    let pairs = n - horizon;
    let mut unroll = Unroll::chain(pairs);
    let inputs: Vec<Vec<f64>> = noisy[..pairs]
        .iter()
        .map(|d| d.to_array().to_vec())
        .collect();
    let mut targets = Vec::with_capacity(pairs * horizon);
    for k in 0..pairs {
        // Chain step k has read deltas 0..=k and predicts delta k + 1.
        targets.push((k, noisy[k + 1].to_array().to_vec()));
        let mut prev = k;
        for j in 2..=horizon {
            prev = unroll
                .push(Some(prev), StepInput::Feedback)
                .expect("parent precedes child");
            targets.push((prev, noisy[k + j].to_array().to_vec()));
        }
    }
    DatasetGraph {
        unroll,
        inputs,
        targets,
    }
}
