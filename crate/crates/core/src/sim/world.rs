use super::config::{AgentSpec, DesiredVelocity, ObstacleSpec};
use super::policy::ObstaclePolicy;
use crate::geom::Vec2;
use crate::rng::Rng;

#[derive(Clone, Debug)]
pub struct AgentState {
    pub position: Vec2,
    /// Velocity applied over the next step.
    pub velocity: Vec2,
    pub goal: Vec2,
    pub v_max: f64,
    pub desired: DesiredVelocity,
}

impl AgentState {
    pub fn from_spec(spec: &AgentSpec) -> Self {
        AgentState {
            position: spec.start,
            velocity: Vec2::ZERO,
            goal: spec.goal,
            v_max: spec.v_max,
            desired: spec.desired.clone(),
        }
    }

    /// Preferred velocity: towards the goal without overshooting it, or the
    /// configured constant.
    pub fn desired_velocity(&self, dt: f64, tolerance: f64) -> Vec2 {
        match &self.desired {
            DesiredVelocity::Constant { velocity } => velocity.clamp_norm(self.v_max),
            DesiredVelocity::Goal { speed } => {
                let to = self.goal - self.position;
                let dist = to.norm();
                if dist <= tolerance {
                    return Vec2::ZERO;
                }
                to * (speed.min(dist / dt).min(self.v_max) / dist)
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct ObstacleState {
    pub position: Vec2,
    pub policy: ObstaclePolicy,
    /// Index of the obstacle's next policy step.
    pub policy_step: usize,
    pub rng: Rng,
}

impl ObstacleState {
    pub fn from_spec(spec: &ObstacleSpec, rng: Rng) -> Self {
        ObstacleState {
            position: spec.start,
            policy: spec.policy.clone(),
            policy_step: 0,
            rng,
        }
    }

    fn next_delta(&mut self, dt: f64) -> Vec2 {
        self.policy.delta(self.policy_step, dt, &mut self.rng)
    }
}

#[derive(Clone, Debug)]
pub struct World {
    pub step: usize,
    pub dt: f64,
    pub agents: Vec<AgentState>,
    pub obstacles: Vec<ObstacleState>,
}

impl World {
    /// Entity positions, agents first.
    pub fn positions(&self) -> Vec<Vec2> {
        self.agents
            .iter()
            .map(|a| a.position)
            .chain(self.obstacles.iter().map(|o| o.position))
            .collect()
    }

    /// Advances every obstacle by its policy and every agent by its applied
    /// velocity. Returns the obstacles' displacements.
    pub fn advance(&mut self) -> Vec<Vec2> {
        let dt = self.dt;
        let deltas: Vec<Vec2> = self
            .obstacles
            .iter_mut()
            .map(|o| o.next_delta(dt))
            .collect();
        for (o, d) in self.obstacles.iter_mut().zip(&deltas) {
            o.position += *d;
            o.policy_step += 1;
        }
        for a in &mut self.agents {
            a.position = a.position + a.velocity * dt;
        }
        self.step += 1;
        deltas
    }

    /// Advances only the obstacles; agents hold position.
    pub fn advance_obstacles(&mut self) -> Vec<Vec2> {
        let saved: Vec<Vec2> = self.agents.iter().map(|a| a.velocity).collect();
        for a in &mut self.agents {
            a.velocity = Vec2::ZERO;
        }
        let d = self.advance();
        for (a, v) in self.agents.iter_mut().zip(saved) {
            a.velocity = v;
        }
        self.step -= 1;
        d
    }
}

/// One synchronous world update.
pub fn step_world(world: &World) -> World {
    let mut next = world.clone();
    next.advance();
    next
}
