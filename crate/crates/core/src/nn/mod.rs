//! Dense numeric kernel: recurrent cells, backpropagation through time,
//! Huber loss, Adam and dropout masks.

mod adam;
mod grad;
mod loss;
mod mask;
mod matrix;
mod unroll;
mod weights;

pub use adam::{adam_step, AdamState};
pub use grad::{compute_gradients, loss_and_gradients, rollout, Gradients};
pub use loss::huber_loss;
pub use mask::{sample_dropout_mask, DropoutMask, MaskPolicy, Masks};
pub use matrix::{check_finite, Matrix, Vector};
pub use unroll::{
    backward, forward, lstm_forward, rnn_forward, ForwardPass, Step, StepInput, Unroll,
};
pub use weights::{
    CellKind, Gate, WeightSet, CANDIDATE, FORGET, INPUT, OUTPUT, WEIGHTS_FORMAT_VERSION,
};
