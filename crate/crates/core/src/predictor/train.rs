use rand::Rng;

use super::config::PredictorConfig;
use super::dataset::{dataset_graph, perturb, training_deltas};
use super::history::ObservationHistory;
use crate::error::{shape, Error, Result};
use crate::nn::{adam_step, loss_and_gradients, AdamState, MaskPolicy, Masks, WeightSet};

/// Network weights together with the optimizer state that produced them, so
/// training can resume on the next control tick.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainedNetwork {
    pub weights: WeightSet,
    pub optimizer: AdamState,
}

impl TrainedNetwork {
    pub fn cold_start<R: Rng + ?Sized>(cfg: &PredictorConfig, rng: &mut R) -> Self {
        let weights = WeightSet::init(cfg.cell, 2, cfg.hidden, rng);
        let optimizer = AdamState::new(&weights);
        TrainedNetwork { weights, optimizer }
    }
}

/// Runs `cfg.iterations` Adam steps on the summed Huber cost of the whole
/// dataset. Every iteration draws fresh observation noise and fresh per-step
/// dropout masks. Starts from `init` when given, otherwise from a fresh
/// initialization drawn from `rng`.
pub fn train_network_online<R: Rng + ?Sized>(
    history: &ObservationHistory,
    cfg: &PredictorConfig,
    init: Option<TrainedNetwork>,
    rng: &mut R,
) -> Result<TrainedNetwork> {
    cfg.validate()?;
    let deltas = training_deltas(history, cfg)?;
    let mut net = match init {
        Some(net) => net,
        None => TrainedNetwork::cold_start(cfg, rng),
    };
    if net.weights.kind() != cfg.cell
        || net.weights.hidden() != cfg.hidden
        || net.weights.dim() != 2
    {
        return Err(shape(
            "initial weights do not match the predictor configuration",
        ));
    }
    for iteration in 0..cfg.iterations {
        let noisy = perturb(&deltas, cfg.noise_variance, rng);
        let graph = dataset_graph(&noisy, cfg.horizon);
        let masks = Masks::draw(
            MaskPolicy::FreshPerStep,
            cfg.keep_prob,
            (2, cfg.hidden),
            graph.unroll.len(),
            rng,
        )?;
        let g = loss_and_gradients(
            &net.weights,
            &graph.unroll,
            &graph.inputs,
            &graph.targets,
            &masks,
            cfg.huber_delta,
        )?;
        if !g.loss.is_finite() || !g.grads.is_finite() {
            return Err(Error::TrainingDiverged {
                iteration,
                last_finite: Box::new(net.weights),
            });
        }
        let before = net.weights.clone();
        adam_step(
            &mut net.weights,
            &g.grads,
            &mut net.optimizer,
            cfg.learning_rate,
        )?;
        if !net.weights.is_finite() {
            return Err(Error::TrainingDiverged {
                iteration,
                last_finite: Box::new(before),
            });
        }
    }
    Ok(net)
}

/// Summed Huber cost of the noise-free dataset without dropout.
pub fn dataset_cost(
    weights: &WeightSet,
    history: &ObservationHistory,
    cfg: &PredictorConfig,
) -> Result<f64> {
    let deltas = training_deltas(history, cfg)?;
    let graph = dataset_graph(&deltas, cfg.horizon);
    let g = loss_and_gradients(
        weights,
        &graph.unroll,
        &graph.inputs,
        &graph.targets,
        &Masks::None,
        cfg.huber_delta,
    )?;
    Ok(g.loss)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Vec2;
    use crate::nn::{compute_gradients, CellKind};
    use crate::rng::seeded;

    #[test]
    fn shared_graph_equals_sum_over_pairs() {
        let mut rng = seeded(3);
        let deltas: Vec<Vec2> = (0..9)
            .map(|_| Vec2::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let m = 3;
        for kind in [CellKind::Lstm, CellKind::Rnn] {
            let ws = WeightSet::init(kind, 2, 5, &mut rng);
            let graph = dataset_graph(&deltas, m);
            let whole = loss_and_gradients(
                &ws,
                &graph.unroll,
                &graph.inputs,
                &graph.targets,
                &Masks::None,
                0.3,
            )
            .unwrap();
            let mut loss = 0.0;
            let mut sum = ws.zeros_like();
            for k in 1..=deltas.len() - m {
                let x: Vec<Vec<f64>> = deltas[..k].iter().map(|d| d.to_array().to_vec()).collect();
                let y: Vec<Vec<f64>> = deltas[k..k + m]
                    .iter()
                    .map(|d| d.to_array().to_vec())
                    .collect();
                let g = compute_gradients(&x, &y, &ws, &Masks::None, 0.3).unwrap();
                loss += g.loss;
                sum.add_scaled(&g.grads, 1.0);
            }
            assert!((whole.loss - loss).abs() < 1e-12 * loss.max(1.0));
            for (a, b) in whole.grads.flatten().iter().zip(sum.flatten()) {
                assert!((a - b).abs() < 1e-12, "{a} vs {b}");
            }
        }
    }
}
