//! Discrete-time world with single-integrator agents, scripted obstacles and
//! the predict / avoid control loop.

mod config;
mod policy;
mod run;
mod trace;
mod world;

pub use config::{
    AgentSpec, DesiredVelocity, Jitter, ObstacleSpec, PredictorChoice, ScenarioConfig,
    SCENARIO_FORMAT_VERSION,
};
pub use policy::{BehaviorPhase, ObstaclePolicy};
pub use run::{run_scenario, RunOutput, SafetyAudit};
pub use trace::{
    check_version_line, collision_check, CollisionEvent, EntityKind, EntityRow, RunMetrics,
    TraceRecord, TRACE_FORMAT_VERSION,
};
pub use world::{step_world, AgentState, ObstacleState, World};
