//! Independent oracles for the numeric kernel: a scalar, index-by-index
//! evaluation of the recurrent cell equations and central finite differences
//! of the Huber cost computed through that scalar path.

#![allow(dead_code)]

use npvo_core::nn::{
    compute_gradients, sample_dropout_mask, CellKind, DropoutMask, Masks, WeightSet, CANDIDATE,
    FORGET, INPUT, OUTPUT,
};
use npvo_core::rng::seeded;
use rand::Rng;

pub fn sig(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Pre-activation of gate `g`, unit `r`, computed entry by entry.
pub fn pre(ws: &WeightSet, g: usize, r: usize, x: &[f64], h: &[f64]) -> f64 {
    let gate = &ws.gates[g];
    let mut a = gate.b[r];
    for c in 0..x.len() {
        a += gate.w.get(r, c) * x[c];
    }
    for c in 0..h.len() {
        a += gate.u.get(r, c) * h[c];
    }
    a
}

/// Scalar evaluation of a closed-loop rollout: read `inputs`, then feed each
/// output back as the next input until `horizon` outputs are produced.
/// Returns every step's output.
pub fn scalar_rollout(
    ws: &WeightSet,
    inputs: &[Vec<f64>],
    horizon: usize,
    masks: &[DropoutMask],
) -> Vec<Vec<f64>> {
    let d = ws.dim();
    let hd = ws.hidden();
    let mut h = vec![0.0; hd];
    let mut c = vec![0.0; hd];
    let mut outputs: Vec<Vec<f64>> = Vec::new();
    let total = inputs.len() + horizon - 1;
    for t in 0..total {
        let raw = if t < inputs.len() {
            inputs[t].clone()
        } else {
            outputs[t - 1].clone()
        };
        let m = &masks[t.min(masks.len() - 1)];
        let x: Vec<f64> = (0..d).map(|k| m.x[k] * raw[k]).collect();
        let hp: Vec<f64> = (0..hd).map(|k| m.h[k] * h[k]).collect();
        let mut nh = vec![0.0; hd];
        let mut nc = vec![0.0; hd];
        for r in 0..hd {
            match ws.kind() {
                CellKind::Lstm => {
                    let f = sig(pre(ws, FORGET, r, &x, &hp));
                    let i = sig(pre(ws, INPUT, r, &x, &hp));
                    let o = sig(pre(ws, OUTPUT, r, &x, &hp));
                    let ct = pre(ws, CANDIDATE, r, &x, &hp).tanh();
                    nc[r] = f * c[r] + i * ct;
                    nh[r] = o * nc[r].tanh();
                }
                CellKind::Rnn => {
                    nh[r] = pre(ws, 0, r, &x, &hp).tanh();
                }
            }
        }
        h = nh;
        c = nc;
        let mut y = vec![0.0; d];
        for k in 0..d {
            y[k] = ws.b_y[k];
            for r in 0..hd {
                y[k] += ws.w_y.get(k, r) * h[r];
            }
        }
        outputs.push(y);
    }
    outputs
}

pub fn scalar_huber_cost(
    ws: &WeightSet,
    inputs: &[Vec<f64>],
    targets: &[Vec<f64>],
    masks: &[DropoutMask],
    delta: f64,
) -> f64 {
    let outs = scalar_rollout(ws, inputs, targets.len(), masks);
    let first = inputs.len() - 1;
    let mut cost = 0.0;
    for (j, target) in targets.iter().enumerate() {
        for (yk, tk) in outs[first + j].iter().zip(target) {
            let r = tk - yk;
            cost += if r.abs() <= delta {
                0.5 * r * r
            } else {
                delta * (r.abs() - 0.5 * delta)
            };
        }
    }
    cost
}

pub fn random_seq(rng: &mut impl Rng, len: usize, d: usize, scale: f64) -> Vec<Vec<f64>> {
    (0..len)
        .map(|_| (0..d).map(|_| rng.random_range(-scale..scale)).collect())
        .collect()
}

/// Weights spread a bit wider than the default init so every gate is
/// exercised away from its linear regime.
pub fn random_weights(kind: CellKind, d: usize, h: usize, rng: &mut impl Rng) -> WeightSet {
    let mut ws = WeightSet::zeros(kind, d, h);
    for t in ws.tensors_mut() {
        for v in t {
            *v = rng.random_range(-0.8..0.8);
        }
    }
    ws
}

pub fn per_step_masks(rng: &mut impl Rng, steps: usize, h: usize) -> Vec<DropoutMask> {
    (0..steps)
        .map(|_| sample_dropout_mask(0.8, (2, h), rng).unwrap())
        .collect()
}

/// Largest relative error between the analytic gradient and central
/// differences (step 1e-5) on d = 2, h = 4, input length 5 with a 3-step
/// closed-loop horizon and fresh per-step masks. Infinite if the losses
/// disagree.
pub fn gradient_max_rel_error(kind: CellKind, seed: u64) -> f64 {
    let mut rng = seeded(seed);
    let (d, h, len, horizon) = (2, 4, 5, 3);
    let ws = random_weights(kind, d, h, &mut rng);
    let inputs = random_seq(&mut rng, len, d, 1.0);
    let targets = random_seq(&mut rng, horizon, d, 1.5);
    let masks = per_step_masks(&mut rng, len + horizon - 1, h);
    let delta = 0.5;

    let analytic = compute_gradients(
        &inputs,
        &targets,
        &ws,
        &Masks::PerStep(masks.clone()),
        delta,
    )
    .unwrap();
    let oracle_cost = scalar_huber_cost(&ws, &inputs, &targets, &masks, delta);
    if (analytic.loss - oracle_cost).abs() >= 1e-12 {
        return f64::INFINITY;
    }

    let eps = 1e-5;
    let grads = analytic.grads.flatten();
    let mut worst: f64 = 0.0;
    for (idx, &a) in grads.iter().enumerate() {
        let bump = |amount: f64| {
            let mut w = ws.clone();
            let mut seen = 0;
            for t in w.tensors_mut() {
                if idx < seen + t.len() {
                    t[idx - seen] += amount;
                    break;
                }
                seen += t.len();
            }
            scalar_huber_cost(&w, &inputs, &targets, &masks, delta)
        };
        let numeric = (bump(eps) - bump(-eps)) / (2.0 * eps);
        let denom = a.abs().max(numeric.abs()).max(1e-6);
        worst = worst.max((a - numeric).abs() / denom);
    }
    worst
}
