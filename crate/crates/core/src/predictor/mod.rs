//! Online training on the observed delta history and Monte-Carlo dropout
//! prediction of future positions.

mod config;
mod dataset;
mod gaussian;
mod history;
mod online;
mod predict;
mod train;

pub use config::{PositionCovariance, PredictorConfig};
pub use dataset::{build_dataset, perturb, TrainingDataset, TrainingPair};
pub use gaussian::{
    chi2_2d_quantile, confidence_ellipsoid, fit_gaussian_mle, floor_covariance, COVARIANCE_FLOOR,
};
pub use history::{deltas_of, ObservationHistory};
pub use online::{ConstantVelocityPredictor, MotionPredictor, OnlinePredictor, StaticPredictor};
pub use predict::{
    predict_obstacle_motion, sample_predictions, PredictionDistribution, PredictionStep,
};
pub use train::{dataset_cost, train_network_online, TrainedNetwork};
