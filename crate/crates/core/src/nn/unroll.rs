//! Unrolled recurrent computation graphs.
//!
//! A pass is a list of steps in topological order. Each step continues the
//! recurrent state of its parent (or starts from zero state) and reads either
//! an external input vector or its parent's output (closed-loop feedback).
//! A plain sequence is a chain; a closed-loop rollout is a chain followed by
//! feedback steps; a training dataset whose inputs are prefixes of one
//! sequence is a chain with a feedback branch hanging off every prefix.

use super::mask::Masks;
use super::matrix::check_finite;
use super::weights::{CellKind, WeightSet, CANDIDATE, FORGET, INPUT, OUTPUT};
use crate::error::{invalid, shape, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepInput {
    External(usize),
    /// The parent step's output.
    Feedback,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Step {
    pub parent: Option<usize>,
    pub input: StepInput,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Unroll {
    steps: Vec<Step>,
}

impl Unroll {
    pub fn new() -> Self {
        Unroll::default()
    }

    pub fn push(&mut self, parent: Option<usize>, input: StepInput) -> Result<usize> {
        let idx = self.steps.len();
        if let Some(p) = parent {
            if p >= idx {
                return Err(invalid(format!(
                    "step {idx} has parent {p} that is not earlier"
                )));
            }
        } else if input == StepInput::Feedback {
            return Err(invalid("a feedback step needs a parent"));
        }
        self.steps.push(Step { parent, input });
        Ok(idx)
    }

    /// A chain reading external inputs `0..n`.
    pub fn chain(n: usize) -> Self {
        let mut u = Unroll::new();
        for i in 0..n {
            u.push(i.checked_sub(1), StepInput::External(i))
                .expect("valid chain");
        }
        u
    }

    /// A chain over `n_inputs` external inputs followed by `horizon - 1`
    /// feedback steps. Returns the graph and the `horizon` steps whose
    /// outputs form the prediction.
    pub fn rollout(n_inputs: usize, horizon: usize) -> Result<(Self, Vec<usize>)> {
        if n_inputs == 0 || horizon == 0 {
            return Err(invalid("rollout needs at least one input and one output"));
        }
        let mut u = Unroll::chain(n_inputs);
        let mut outs = vec![n_inputs - 1];
        for _ in 1..horizon {
            let prev = *outs.last().expect("non-empty");
            outs.push(u.push(Some(prev), StepInput::Feedback)?);
        }
        Ok((u, outs))
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }
}

#[derive(Clone, Debug)]
struct StepCache {
    x_hat: Vec<f64>,
    h_prev_hat: Vec<f64>,
    c_prev: Vec<f64>,
    /// LSTM: activated gates `f, i, o, c~` back to back; RNN: empty.
    gates: Vec<f64>,
    tanh_c: Vec<f64>,
    c: Vec<f64>,
    h: Vec<f64>,
    y: Vec<f64>,
}

/// Activations of one forward pass, kept for backpropagation.
#[derive(Clone, Debug)]
pub struct ForwardPass {
    unroll: Unroll,
    masks: Masks,
    cache: Vec<StepCache>,
}

impl ForwardPass {
    pub fn output(&self, step: usize) -> &[f64] {
        &self.cache[step].y
    }

    pub fn outputs(&self) -> Vec<Vec<f64>> {
        self.cache.iter().map(|c| c.y.clone()).collect()
    }

    pub fn hidden(&self, step: usize) -> &[f64] {
        &self.cache[step].h
    }

    pub fn cell(&self, step: usize) -> &[f64] {
        &self.cache[step].c
    }

    pub fn unroll(&self) -> &Unroll {
        &self.unroll
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn check_masks(weights: &WeightSet, masks: &Masks, steps: usize) -> Result<()> {
    let check = |m: &super::mask::DropoutMask| -> Result<()> {
        if m.x.len() != weights.dim() || m.h.len() != weights.hidden() {
            return Err(shape(format!(
                "mask dims ({}, {}) do not match network ({}, {})",
                m.x.len(),
                m.h.len(),
                weights.dim(),
                weights.hidden()
            )));
        }
        Ok(())
    };
    match masks {
        Masks::None => Ok(()),
        Masks::Fixed(m) => check(m),
        Masks::PerStep(ms) => {
            if ms.len() < steps {
                return Err(shape(format!(
                    "{} per-step masks for {steps} steps",
                    ms.len()
                )));
            }
            ms.iter().try_for_each(check)
        }
    }
}

/// Runs the unrolled graph. Root steps start from zero hidden and cell state.
pub fn forward(
    weights: &WeightSet,
    unroll: &Unroll,
    inputs: &[Vec<f64>],
    masks: &Masks,
) -> Result<ForwardPass> {
    let d = weights.dim();
    let h = weights.hidden();
    for (i, x) in inputs.iter().enumerate() {
        if x.len() != d {
            return Err(shape(format!(
                "input {i} has dimension {}, expected {d}",
                x.len()
            )));
        }
        check_finite(x)?;
    }
    check_masks(weights, masks, unroll.len())?;

    let zeros = vec![0.0; h];
    let mut cache: Vec<StepCache> = Vec::with_capacity(unroll.len());
    for (t, step) in unroll.steps().iter().enumerate() {
        let raw_x: &[f64] = match step.input {
            StepInput::External(i) => inputs
                .get(i)
                .ok_or_else(|| shape(format!("step {t} reads missing input {i}")))?,
            StepInput::Feedback => &cache[step.parent.expect("checked on push")].y,
        };
        let (h_prev, c_prev) = match step.parent {
            Some(p) => (&cache[p].h[..], &cache[p].c[..]),
            None => (&zeros[..], &zeros[..]),
        };
        let mask = masks.at(t);
        let x_hat: Vec<f64> = match mask {
            Some(m) => raw_x.iter().zip(&m.x).map(|(a, b)| a * b).collect(),
            None => raw_x.to_vec(),
        };
        let h_prev_hat: Vec<f64> = match mask {
            Some(m) => h_prev.iter().zip(&m.h).map(|(a, b)| a * b).collect(),
            None => h_prev.to_vec(),
        };

        let pre = |g: usize| -> Vec<f64> {
            let gate = &weights.gates[g];
            let mut a = gate.b.clone();
            gate.w.mul_vec_acc(&x_hat, &mut a);
            gate.u.mul_vec_acc(&h_prev_hat, &mut a);
            a
        };

        let entry = match weights.kind() {
            CellKind::Lstm => {
                let f: Vec<f64> = pre(FORGET).into_iter().map(sigmoid).collect();
                let i: Vec<f64> = pre(INPUT).into_iter().map(sigmoid).collect();
                let o: Vec<f64> = pre(OUTPUT).into_iter().map(sigmoid).collect();
                let g: Vec<f64> = pre(CANDIDATE).into_iter().map(f64::tanh).collect();
                let c: Vec<f64> = (0..h).map(|k| f[k] * c_prev[k] + i[k] * g[k]).collect();
                let tanh_c: Vec<f64> = c.iter().map(|v| v.tanh()).collect();
                let hs: Vec<f64> = (0..h).map(|k| o[k] * tanh_c[k]).collect();
                let mut gates = f;
                gates.extend_from_slice(&i);
                gates.extend_from_slice(&o);
                gates.extend_from_slice(&g);
                StepCache {
                    x_hat,
                    h_prev_hat,
                    c_prev: c_prev.to_vec(),
                    gates,
                    tanh_c,
                    c,
                    h: hs,
                    y: Vec::new(),
                }
            }
            CellKind::Rnn => {
                let hs: Vec<f64> = pre(0).into_iter().map(f64::tanh).collect();
                StepCache {
                    x_hat,
                    h_prev_hat,
                    c_prev: Vec::new(),
                    gates: Vec::new(),
                    tanh_c: Vec::new(),
                    c: zeros.clone(),
                    h: hs,
                    y: Vec::new(),
                }
            }
        };
        let mut y = weights.b_y.clone();
        weights.w_y.mul_vec_acc(&entry.h, &mut y);
        cache.push(StepCache { y, ..entry });
    }
    Ok(ForwardPass {
        unroll: unroll.clone(),
        masks: masks.clone(),
        cache,
    })
}

/// Backpropagates output gradients `dL/dy_t` (given for a subset of steps)
/// through the whole graph, including feedback edges.
pub fn backward(
    weights: &WeightSet,
    pass: &ForwardPass,
    output_grads: &[(usize, Vec<f64>)],
) -> Result<WeightSet> {
    let d = weights.dim();
    let h = weights.hidden();
    let n = pass.cache.len();
    let mut dy = vec![vec![0.0; d]; n];
    for (t, g) in output_grads {
        if *t >= n || g.len() != d {
            return Err(shape(format!(
                "output gradient for step {t} has wrong shape"
            )));
        }
        for (a, b) in dy[*t].iter_mut().zip(g) {
            *a += b;
        }
    }
    let mut dh_acc = vec![vec![0.0; h]; n];
    let mut dc_acc = vec![vec![0.0; h]; n];
    let mut grads = weights.zeros_like();
    let steps = pass.unroll.steps();

    for t in (0..n).rev() {
        let s = &pass.cache[t];
        let step = steps[t];
        let dy_t = std::mem::take(&mut dy[t]);

        grads.w_y.add_outer(&dy_t, &s.h);
        for (b, g) in grads.b_y.iter_mut().zip(&dy_t) {
            *b += g;
        }
        let mut dh = std::mem::take(&mut dh_acc[t]);
        weights.w_y.mul_t_vec_acc(&dy_t, &mut dh);

        let mut dx_hat = vec![0.0; d];
        let mut dh_prev_hat = vec![0.0; h];
        let mut dc_prev = Vec::new();

        let mut apply_gate = |g: usize, da: &[f64], grads: &mut WeightSet| {
            let gw = &weights.gates[g];
            let gg = &mut grads.gates[g];
            gg.w.add_outer(da, &s.x_hat);
            gg.u.add_outer(da, &s.h_prev_hat);
            for (b, v) in gg.b.iter_mut().zip(da) {
                *b += v;
            }
            gw.w.mul_t_vec_acc(da, &mut dx_hat);
            gw.u.mul_t_vec_acc(da, &mut dh_prev_hat);
        };

        match weights.kind() {
            CellKind::Lstm => {
                let (f, rest) = s.gates.split_at(h);
                let (i, rest) = rest.split_at(h);
                let (o, g) = rest.split_at(h);
                let dc_in = std::mem::take(&mut dc_acc[t]);
                let mut da_f = vec![0.0; h];
                let mut da_i = vec![0.0; h];
                let mut da_o = vec![0.0; h];
                let mut da_g = vec![0.0; h];
                dc_prev = vec![0.0; h];
                for k in 0..h {
                    let tc = s.tanh_c[k];
                    let d_o = dh[k] * tc;
                    let dc = dc_in[k] + dh[k] * o[k] * (1.0 - tc * tc);
                    da_f[k] = dc * s.c_prev[k] * f[k] * (1.0 - f[k]);
                    da_i[k] = dc * g[k] * i[k] * (1.0 - i[k]);
                    da_g[k] = dc * i[k] * (1.0 - g[k] * g[k]);
                    da_o[k] = d_o * o[k] * (1.0 - o[k]);
                    dc_prev[k] = dc * f[k];
                }
                apply_gate(FORGET, &da_f, &mut grads);
                apply_gate(INPUT, &da_i, &mut grads);
                apply_gate(OUTPUT, &da_o, &mut grads);
                apply_gate(CANDIDATE, &da_g, &mut grads);
            }
            CellKind::Rnn => {
                for (k, v) in dh.iter_mut().enumerate() {
                    *v *= 1.0 - s.h[k] * s.h[k];
                }
                apply_gate(0, &dh, &mut grads);
            }
        }

        let mask = pass.masks.at(t);
        if let Some(p) = step.parent {
            let dh_prev = &mut dh_acc[p];
            for k in 0..h {
                let z = mask.map_or(1.0, |m| m.h[k]);
                dh_prev[k] += z * dh_prev_hat[k];
            }
            if !dc_prev.is_empty() {
                for (a, b) in dc_acc[p].iter_mut().zip(&dc_prev) {
                    *a += b;
                }
            }
            if step.input == StepInput::Feedback {
                for k in 0..d {
                    let z = mask.map_or(1.0, |m| m.x[k]);
                    dy[p][k] += z * dx_hat[k];
                }
            }
        }
    }
    Ok(grads)
}

fn chain_forward(
    inputs: &[Vec<f64>],
    weights: &WeightSet,
    masks: &Masks,
    kind: CellKind,
) -> Result<ForwardPass> {
    if weights.kind() != kind {
        return Err(shape(format!(
            "expected {kind:?} weights, got {:?}",
            weights.kind()
        )));
    }
    weights.validate()?;
    forward(weights, &Unroll::chain(inputs.len()), inputs, masks)
}

/// LSTM over an input sequence, one output per step.
pub fn lstm_forward(
    inputs: &[Vec<f64>],
    weights: &WeightSet,
    masks: &Masks,
) -> Result<ForwardPass> {
    chain_forward(inputs, weights, masks, CellKind::Lstm)
}

/// Simple RNN (`tanh` hidden activation, linear output) over an input
/// sequence, one output per step.
pub fn rnn_forward(inputs: &[Vec<f64>], weights: &WeightSet, masks: &Masks) -> Result<ForwardPass> {
    chain_forward(inputs, weights, masks, CellKind::Rnn)
}
