//! Online obstacle-motion prediction with recurrent networks and Monte-Carlo
//! dropout, nonlinear probabilistic velocity obstacles (NPVO) for single- and
//! multi-agent collision avoidance, and statistical verification of the
//! prediction system.

pub mod bounds;
pub mod error;
pub mod geom;
pub mod model_check;
pub mod nn;
pub mod npvo;
pub mod predictor;
pub mod rng;
pub mod runtime;
pub mod sim;

pub use error::{Error, Result};
pub use geom::{Sym2, Vec2};
