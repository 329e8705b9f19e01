use super::loss::huber_scalar;
use super::mask::Masks;
use super::unroll::{backward, forward, Unroll};
use super::weights::WeightSet;
use crate::error::{invalid, shape, Result};

#[derive(Clone, Debug)]
pub struct Gradients {
    pub loss: f64,
    pub grads: WeightSet,
}

/// Huber cost of the outputs at the given `(step, target)` pairs and its
/// gradient with respect to every weight.
pub fn loss_and_gradients(
    weights: &WeightSet,
    unroll: &Unroll,
    inputs: &[Vec<f64>],
    targets: &[(usize, Vec<f64>)],
    masks: &Masks,
    delta: f64,
) -> Result<Gradients> {
    if !(delta > 0.0) {
        return Err(invalid(format!(
            "Huber delta must be positive, got {delta}"
        )));
    }
    let pass = forward(weights, unroll, inputs, masks)?;
    let mut loss = 0.0;
    let mut output_grads = Vec::with_capacity(targets.len());
    for (t, target) in targets {
        if *t >= unroll.len() || target.len() != weights.dim() {
            return Err(shape(format!("target for step {t} has wrong shape")));
        }
        let y = pass.output(*t);
        let g: Vec<f64> = y
            .iter()
            .zip(target)
            .map(|(yk, tk)| {
                let (l, dl_dr) = huber_scalar(tk - yk, delta);
                loss += l;
                -dl_dr
            })
            .collect();
        output_grads.push((*t, g));
    }
    let grads = backward(weights, &pass, &output_grads)?;
    Ok(Gradients { loss, grads })
}

/// Gradient of the Huber cost of one training pair: the network reads
/// `inputs`, then rolls out `targets.len()` outputs in closed loop.
pub fn compute_gradients(
    inputs: &[Vec<f64>],
    targets: &[Vec<f64>],
    weights: &WeightSet,
    masks: &Masks,
    delta: f64,
) -> Result<Gradients> {
    let (unroll, outs) = Unroll::rollout(inputs.len(), targets.len())?;
    let pairs: Vec<(usize, Vec<f64>)> = outs.into_iter().zip(targets.iter().cloned()).collect();
    loss_and_gradients(weights, &unroll, inputs, &pairs, masks, delta)
}

/// Closed-loop prediction of `horizon` outputs after reading `inputs`.
pub fn rollout(
    weights: &WeightSet,
    inputs: &[Vec<f64>],
    horizon: usize,
    masks: &Masks,
) -> Result<Vec<Vec<f64>>> {
    let (unroll, outs) = Unroll::rollout(inputs.len(), horizon)?;
    let pass = forward(weights, &unroll, inputs, masks)?;
    Ok(outs.into_iter().map(|t| pass.output(t).to_vec()).collect())
}
