use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Bernoulli dropout masks for the input (`x`) and the recurrent hidden
/// state (`h`). Entries are exactly 0.0 or 1.0.
#[derive(Clone, Debug, PartialEq)]
pub struct DropoutMask {
    pub x: Vec<f64>,
    pub h: Vec<f64>,
}

impl DropoutMask {
    pub fn ones(dim: usize, hidden: usize) -> Self {
        DropoutMask {
            x: vec![1.0; dim],
            h: vec![1.0; hidden],
        }
    }
}

/// Each entry is 1 with probability `keep_prob`, else 0.
pub fn sample_dropout_mask<R: Rng + ?Sized>(
    keep_prob: f64,
    dims: (usize, usize),
    rng: &mut R,
) -> Result<DropoutMask> {
    if !(0.0..=1.0).contains(&keep_prob) {
        return Err(invalid(format!(
            "keep probability {keep_prob} outside [0, 1]"
        )));
    }
    let mut draw = |n: usize| -> Vec<f64> {
        (0..n)
            .map(|_| {
                if rng.random::<f64>() < keep_prob {
                    1.0
                } else {
                    0.0
                }
            })
            .collect()
    };
    let x = draw(dims.0);
    let h = draw(dims.1);
    Ok(DropoutMask { x, h })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MaskPolicy {
    /// One mask pair held for every step of a forward pass (MC-dropout
    /// prediction).
    FixedPerSequence,
    /// A fresh mask pair for every step (training regularization).
    FreshPerStep,
    NoDropout,
}

/// The masks actually applied during one unrolled forward pass.
#[derive(Clone, Debug, PartialEq)]
pub enum Masks {
    None,
    Fixed(DropoutMask),
    PerStep(Vec<DropoutMask>),
}

impl Masks {
    /// Draws masks for a pass of `steps` steps according to `policy`.
    pub fn draw<R: Rng + ?Sized>(
        policy: MaskPolicy,
        keep_prob: f64,
        dims: (usize, usize),
        steps: usize,
        rng: &mut R,
    ) -> Result<Masks> {
        Ok(match policy {
            MaskPolicy::NoDropout => Masks::None,
            MaskPolicy::FixedPerSequence => {
                Masks::Fixed(sample_dropout_mask(keep_prob, dims, rng)?)
            }
            MaskPolicy::FreshPerStep => Masks::PerStep(
                (0..steps)
                    .map(|_| sample_dropout_mask(keep_prob, dims, rng))
                    .collect::<Result<_>>()?,
            ),
        })
    }

    pub fn at(&self, step: usize) -> Option<&DropoutMask> {
        match self {
            Masks::None => None,
            Masks::Fixed(m) => Some(m),
            Masks::PerStep(ms) => ms.get(step),
        }
    }
}
