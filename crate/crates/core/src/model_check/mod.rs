//! Statistical verification of prediction quality on grid random walks.

mod grid;
mod sprt;
mod verify;

pub use grid::{
    evaluate_trace, sample_markov_trace, GridMotionModel, GridOraclePredictor, PointPredictor,
    WholePlanePredictor,
};
pub use sprt::{run_sprt, Decision, SprtConfig, SprtOutcome};
pub use verify::{
    verify_prediction_system, SprtParams, VerifyCell, VerifyConfig, VerifyPredictor, VerifyReport,
    VERIFY_FORMAT_VERSION,
};
