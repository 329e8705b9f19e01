use serde::{Deserialize, Serialize};

use super::policy::ObstaclePolicy;
use crate::error::{invalid, Result};
use crate::geom::Vec2;
use crate::npvo::SolverParams;
use crate::predictor::PredictorConfig;

/// Newest scenario file layout this build reads.
pub const SCENARIO_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictorChoice {
    Lstm,
    Rnn,
    /// Straight-line extrapolation of the last delta.
    #[serde(alias = "const", alias = "constant-velocity")]
    ConstantVelocity,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DesiredVelocity {
    /// Straight at the goal at `speed`, slowing down for the final step.
    Goal {
        speed: f64,
    },
    Constant {
        velocity: Vec2,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentSpec {
    pub start: Vec2,
    pub goal: Vec2,
    pub v_max: f64,
    pub desired: DesiredVelocity,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObstacleSpec {
    pub start: Vec2,
    pub policy: ObstaclePolicy,
}

/// Per-seed randomization of the scripted obstacles.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Jitter {
    /// Phase offsets drawn uniformly from `[0, phase)` periods.
    pub phase: f64,
    /// Start offsets drawn uniformly from a disk of this radius (m).
    pub start: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "format_one")]
    pub format_version: u32,
    #[serde(default)]
    pub name: String,
    /// Control period (s).
    pub dt: f64,
    /// Step budget after the warm-up.
    pub steps: usize,
    pub safe_radius: f64,
    /// Confidence of every prediction ellipse.
    pub gamma: f64,
    /// Steps the obstacles move, observed, before the agents start.
    #[serde(default)]
    pub warmup_steps: usize,
    /// Train the learned predictors on every warm-up observation, as if the
    /// obstacles had been watched online before the run.
    #[serde(default = "yes")]
    pub warmup_training: bool,
    #[serde(default = "default_goal_tolerance")]
    pub goal_tolerance: f64,
    pub predictor: PredictorChoice,
    #[serde(default)]
    pub predictor_config: PredictorConfig,
    /// Variance of the constant-velocity baseline's ellipses (m²).
    #[serde(default = "default_baseline_variance")]
    pub baseline_variance: f64,
    /// Variance of the stand-in prediction used while a learned predictor
    /// has too little history (m²).
    #[serde(default = "default_fallback_variance")]
    pub fallback_variance: f64,
    #[serde(default)]
    pub solver: SolverParams,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub jitter: Jitter,
    /// Agents also predict and avoid each other.
    #[serde(default)]
    pub reciprocal: bool,
    pub agents: Vec<AgentSpec>,
    #[serde(default)]
    pub obstacles: Vec<ObstacleSpec>,
}

fn format_one() -> u32 {
    1
}

fn yes() -> bool {
    true
}

fn default_goal_tolerance() -> f64 {
    0.2
}

fn default_baseline_variance() -> f64 {
    1e-4
}

fn default_fallback_variance() -> f64 {
    0.01
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!(
            "{name} must be positive and finite, got {v}"
        )))
    }
}

impl ScenarioConfig {
    pub fn horizon(&self) -> usize {
        self.predictor_config.horizon
    }

    pub fn validate(&self) -> Result<()> {
        if self.format_version == 0 || self.format_version > SCENARIO_FORMAT_VERSION {
            return Err(crate::error::Error::Format(format!(
                "format_version {} is not supported (newest is {SCENARIO_FORMAT_VERSION})",
                self.format_version
            )));
        }
        positive("dt", self.dt)?;
        positive("safe_radius", self.safe_radius)?;
        positive("goal_tolerance", self.goal_tolerance)?;
        positive("baseline_variance", self.baseline_variance)?;
        positive("fallback_variance", self.fallback_variance)?;
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(invalid(format!(
                "gamma must lie in (0, 1), got {}",
                self.gamma
            )));
        }
        if self.steps == 0 {
            return Err(invalid("steps must be at least 1"));
        }
        if self.agents.is_empty() {
            return Err(invalid("at least one agent is required"));
        }
        if !(self.jitter.phase >= 0.0 && self.jitter.start >= 0.0) {
            return Err(invalid("jitter must be non-negative"));
        }
        self.predictor_config.validate()?;
        self.solver.validate()?;
        for (i, a) in self.agents.iter().enumerate() {
            positive(&format!("agents[{i}].v_max"), a.v_max)?;
            if !a.start.is_finite() || !a.goal.is_finite() {
                return Err(invalid(format!("agents[{i}] positions must be finite")));
            }
            match &a.desired {
                DesiredVelocity::Goal { speed } => {
                    positive(&format!("agents[{i}].desired.speed"), *speed)?
                }
                DesiredVelocity::Constant { velocity } => {
                    if !velocity.is_finite() {
                        return Err(invalid(format!(
                            "agents[{i}].desired.velocity must be finite"
                        )));
                    }
                }
            }
        }
        for (i, o) in self.obstacles.iter().enumerate() {
            if !o.start.is_finite() {
                return Err(invalid(format!("obstacles[{i}].start must be finite")));
            }
            o.policy
                .validate()
                .map_err(|e| invalid(format!("obstacles[{i}].policy: {e}")))?;
        }
        Ok(())
    }
}
