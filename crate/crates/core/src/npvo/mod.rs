//! Nonlinear probabilistic velocity obstacles and safe-velocity selection.

mod ellipse;
mod solver;

pub use ellipse::Ellipsoid;
pub use solver::{find_safe_velocity, Feasibility, SafeVelocity, SolverParams, VelocityQuery};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::geom::Vec2;
use crate::predictor::PredictionDistribution;

/// The set of agent velocities that bring the agent's safety disk into
/// contact with some obstacle's predicted ellipse at some lookahead step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Npvo {
    position: Vec2,
    safe_radius: f64,
    dt: f64,
    horizon: Option<usize>,
    obstacles: Vec<Vec<Ellipsoid>>,
}

impl Npvo {
    /// An NPVO with no obstacles yet.
    pub fn new(position: Vec2, safe_radius: f64, dt: f64) -> Result<Self> {
        if !position.is_finite() {
            return Err(invalid("agent position must be finite"));
        }
        if !(safe_radius > 0.0) || !safe_radius.is_finite() {
            return Err(invalid(format!(
                "safe radius must be positive, got {safe_radius}"
            )));
        }
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(invalid(format!("timestep must be positive, got {dt}")));
        }
        Ok(Npvo {
            position,
            safe_radius,
            dt,
            horizon: None,
            obstacles: Vec::new(),
        })
    }

    /// Adds one obstacle's ellipses for lookahead steps `1..=m`.
    pub fn add_obstacle(&mut self, ellipses: Vec<Ellipsoid>) -> Result<()> {
        if ellipses.is_empty() {
            return Err(invalid("obstacle needs at least one predicted ellipse"));
        }
        match self.horizon {
            Some(m) if m != ellipses.len() => {
                return Err(invalid(format!(
                    "obstacle horizon {} differs from {m}",
                    ellipses.len()
                )))
            }
            _ => self.horizon = Some(ellipses.len()),
        }
        self.obstacles.push(ellipses);
        Ok(())
    }

    pub fn position(&self) -> Vec2 {
        self.position
    }

    pub fn safe_radius(&self) -> f64 {
        self.safe_radius
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn horizon(&self) -> usize {
        self.horizon.unwrap_or(0)
    }

    pub fn obstacles(&self) -> &[Vec<Ellipsoid>] {
        &self.obstacles
    }

    pub fn is_empty(&self) -> bool {
        self.obstacles.is_empty()
    }

    /// Agent position after `k` steps at velocity `v`.
    pub fn agent_at(&self, v: Vec2, k: usize) -> Vec2 {
        self.position + v * (k as f64 * self.dt)
    }

    /// Closed-set membership test.
    pub fn contains(&self, v: Vec2) -> bool {
        self.obstacles.iter().any(|es| {
            es.iter()
                .enumerate()
                .any(|(i, e)| e.intersects_disk(self.agent_at(v, i + 1), self.safe_radius))
        })
    }

    /// Smallest signed clearance between the agent's predicted positions and
    /// any ellipse, minus the safe radius. Negative for members;
    /// `f64::INFINITY` without obstacles.
    pub fn margin(&self, v: Vec2) -> f64 {
        let mut worst = f64::INFINITY;
        for es in &self.obstacles {
            for (i, e) in es.iter().enumerate() {
                worst = worst.min(e.clearance(self.agent_at(v, i + 1)) - self.safe_radius);
            }
        }
        worst
    }

    /// Same obstacles with a different safe radius.
    pub fn with_safe_radius(&self, safe_radius: f64) -> Result<Self> {
        let mut n = Npvo::new(self.position, safe_radius, self.dt)?;
        n.horizon = self.horizon;
        n.obstacles = self.obstacles.clone();
        Ok(n)
    }

    /// Same obstacles with every ellipse threshold multiplied by `factor`.
    pub fn with_threshold_scale(&self, factor: f64) -> Result<Self> {
        let mut n = self.clone();
        for es in &mut n.obstacles {
            for e in es.iter_mut() {
                *e = e.with_threshold(e.threshold() * factor)?;
            }
        }
        Ok(n)
    }

    /// Membership over a square velocity grid of `resolution` points per
    /// axis spanning `[-v_max, v_max]²`, one `vx vy member` record per line.
    pub fn dump(&self, v_max: f64, resolution: usize) -> String {
        let mut out = String::from("# vx vy member\n");
        let n = resolution.max(2);
        for i in 0..n {
            for j in 0..n {
                let v = Vec2::new(
                    -v_max + 2.0 * v_max * i as f64 / (n - 1) as f64,
                    -v_max + 2.0 * v_max * j as f64 / (n - 1) as f64,
                );
                out.push_str(&format!("{} {} {}\n", v.x, v.y, self.contains(v) as u8));
            }
        }
        out
    }
}

/// Membership of `v` in `npvo`.
pub fn npvo_membership(v: Vec2, npvo: &Npvo) -> bool {
    npvo.contains(v)
}

/// Union of the per-obstacle NPVOs of all `predictions`.
pub fn build_multi_agent_npvo(
    predictions: &[PredictionDistribution],
    position: Vec2,
    safe_radius: f64,
    dt: f64,
) -> Result<Npvo> {
    let mut npvo = Npvo::new(position, safe_radius, dt)?;
    for p in predictions {
        npvo.add_obstacle(p.ellipses().cloned().collect())?;
    }
    Ok(npvo)
}
