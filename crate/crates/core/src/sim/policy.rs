use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::geom::Vec2;
use crate::rng::Rng;

/// Scripted obstacle motion. Every policy is expressed as the displacement
/// over step `k -> k + 1`, so policies can be switched mid-run without jumps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObstaclePolicy {
    Static {},
    ConstantVelocity {
        velocity: Vec2,
    },
    /// Triangle-wave motion along `direction` (peak offset `amplitude`,
    /// `period` seconds, phase as a fraction of the period) on top of a
    /// constant drift.
    Oscillating {
        direction: Vec2,
        amplitude: f64,
        period: f64,
        #[serde(default)]
        drift: Vec2,
        #[serde(default)]
        phase: f64,
    },
    Circular {
        radius: f64,
        /// Radians per second; negative turns clockwise.
        angular_rate: f64,
        #[serde(default)]
        phase: f64,
    },
    BehaviorSwitch {
        phases: Vec<BehaviorPhase>,
    },
    /// Uniform steps from `{-1, 0, 1}² · cell`.
    GridRandomWalk {
        cell: f64,
        #[serde(default)]
        seed: u64,
    },
    Replay {
        deltas: Vec<Vec2>,
        #[serde(default)]
        repeat: bool,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BehaviorPhase {
    pub from_step: usize,
    pub policy: ObstaclePolicy,
}

/// Triangle wave with period 1, range `[-1, 1]` and `tri(0) = 0`.
fn triangle(x: f64) -> f64 {
    let f = x - x.floor();
    if f < 0.25 {
        4.0 * f
    } else if f < 0.75 {
        2.0 - 4.0 * f
    } else {
        4.0 * f - 4.0
    }
}

impl ObstaclePolicy {
    pub fn validate(&self) -> Result<()> {
        match self {
            ObstaclePolicy::Static {} => Ok(()),
            ObstaclePolicy::ConstantVelocity { velocity } => finite(&[velocity.x, velocity.y]),
            ObstaclePolicy::Oscillating {
                direction,
                amplitude,
                period,
                drift,
                phase,
            } => {
                finite(&[
                    direction.x,
                    direction.y,
                    *amplitude,
                    *period,
                    drift.x,
                    drift.y,
                    *phase,
                ])?;
                if direction.norm() == 0.0 {
                    return Err(invalid("oscillation direction must be non-zero"));
                }
                if !(*period > 0.0) {
                    return Err(invalid("oscillation period must be positive"));
                }
                Ok(())
            }
            ObstaclePolicy::Circular {
                radius,
                angular_rate,
                phase,
            } => finite(&[*radius, *angular_rate, *phase]),
            ObstaclePolicy::BehaviorSwitch { phases } => {
                if phases.is_empty() || phases[0].from_step != 0 {
                    return Err(invalid("behavior switch needs a phase starting at step 0"));
                }
                if phases.windows(2).any(|w| w[1].from_step <= w[0].from_step) {
                    return Err(invalid(
                        "behavior switch phases must start at increasing steps",
                    ));
                }
                phases.iter().try_for_each(|p| p.policy.validate())
            }
            ObstaclePolicy::GridRandomWalk { cell, .. } => {
                finite(&[*cell])?;
                if !(*cell > 0.0) {
                    return Err(invalid("random walk cell must be positive"));
                }
                Ok(())
            }
            ObstaclePolicy::Replay { deltas, .. } => {
                if deltas.is_empty() {
                    return Err(invalid("replay needs at least one delta"));
                }
                finite(&deltas.iter().flat_map(|d| [d.x, d.y]).collect::<Vec<_>>())
            }
        }
    }

    /// Displacement over step `k -> k + 1`. `rng` is the obstacle's own
    /// stream and is used only by random policies.
    pub fn delta(&self, k: usize, dt: f64, rng: &mut Rng) -> Vec2 {
        let t0 = k as f64 * dt;
        let t1 = (k + 1) as f64 * dt;
        match self {
            ObstaclePolicy::Static {} => Vec2::ZERO,
            ObstaclePolicy::ConstantVelocity { velocity } => *velocity * dt,
            ObstaclePolicy::Oscillating {
                direction,
                amplitude,
                period,
                drift,
                phase,
            } => {
                let u = *direction * (1.0 / direction.norm());
                let wave = triangle(t1 / period + phase) - triangle(t0 / period + phase);
                *drift * dt + u * (amplitude * wave)
            }
            ObstaclePolicy::Circular {
                radius,
                angular_rate,
                phase,
            } => {
                let a0 = angular_rate * t0 + phase;
                let a1 = angular_rate * t1 + phase;
                Vec2::new(a1.cos() - a0.cos(), a1.sin() - a0.sin()) * *radius
            }
            ObstaclePolicy::BehaviorSwitch { phases } => {
                let active = phases
                    .iter()
                    .rev()
                    .find(|p| p.from_step <= k)
                    .expect("validated: first phase starts at 0");
                active.policy.delta(k, dt, rng)
            }
            ObstaclePolicy::GridRandomWalk { cell, .. } => Vec2::new(
                rng.random_range(-1i32..=1) as f64 * cell,
                rng.random_range(-1i32..=1) as f64 * cell,
            ),
            ObstaclePolicy::Replay { deltas, repeat } => {
                if *repeat {
                    deltas[k % deltas.len()]
                } else {
                    deltas.get(k).copied().unwrap_or(Vec2::ZERO)
                }
            }
        }
    }

    /// Adds `offset` (a fraction of a period, or radians for circular
    /// motion) to every periodic phase.
    pub fn shifted_phase(&self, offset: f64) -> ObstaclePolicy {
        match self {
            ObstaclePolicy::Oscillating {
                direction,
                amplitude,
                period,
                drift,
                phase,
            } => ObstaclePolicy::Oscillating {
                direction: *direction,
                amplitude: *amplitude,
                period: *period,
                drift: *drift,
                phase: phase + offset,
            },
            ObstaclePolicy::Circular {
                radius,
                angular_rate,
                phase,
            } => ObstaclePolicy::Circular {
                radius: *radius,
                angular_rate: *angular_rate,
                phase: phase + offset * std::f64::consts::TAU,
            },
            ObstaclePolicy::BehaviorSwitch { phases } => ObstaclePolicy::BehaviorSwitch {
                phases: phases
                    .iter()
                    .map(|p| BehaviorPhase {
                        from_step: p.from_step,
                        policy: p.policy.shifted_phase(offset),
                    })
                    .collect(),
            },
            other => other.clone(),
        }
    }

    pub(crate) fn walk_seed(&self) -> u64 {
        match self {
            ObstaclePolicy::GridRandomWalk { seed, .. } => *seed,
            ObstaclePolicy::BehaviorSwitch { phases } => {
                phases.iter().map(|p| p.policy.walk_seed()).sum()
            }
            _ => 0,
        }
    }
}

fn finite(values: &[f64]) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(invalid("obstacle policy parameters must be finite"))
    }
}
