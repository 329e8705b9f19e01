use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Vec2;

/// Version of the trace CSV and metrics JSON layouts.
pub const TRACE_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntityKind {
    Agent,
    Obstacle,
}

impl EntityKind {
    fn as_str(self) -> &'static str {
        match self {
            EntityKind::Agent => "agent",
            EntityKind::Obstacle => "obstacle",
        }
    }
}

/// State of one entity at one step. `velocity` is what moves it to the
/// next step; `desired` is the agent's preferred velocity (zero for
/// obstacles).
#[derive(Clone, Debug, PartialEq)]
pub struct EntityRow {
    pub step: usize,
    pub id: usize,
    pub kind: EntityKind,
    pub position: Vec2,
    pub velocity: Vec2,
    pub desired: Vec2,
    pub feasible: bool,
    pub min_dist: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceRecord {
    pub dt: f64,
    pub safe_radius: f64,
    /// Agent goals, indexed like the agent ids.
    pub goals: Vec<Vec2>,
    pub goal_tolerance: f64,
    pub rows: Vec<EntityRow>,
}

/// A step at which an agent is closer than the safe radius to another
/// entity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CollisionEvent {
    pub step: usize,
    pub agent: usize,
    pub other: usize,
    pub distance: f64,
}

impl TraceRecord {
    pub fn steps(&self) -> usize {
        self.rows.last().map_or(0, |r| r.step + 1)
    }

    pub fn at_step(&self, step: usize) -> impl Iterator<Item = &EntityRow> {
        self.rows.iter().filter(move |r| r.step == step)
    }

    /// Trace as CSV: a version line, a header line, then one row per
    /// (step, entity).
    pub fn to_csv(&self) -> String {
        let mut out = format!("# npvo-trace v{TRACE_FORMAT_VERSION}\n");
        out.push_str(
            "step,entity_id,kind,x,y,vx,vy,feasible,min_dist_so_far,desired_vx,desired_vy\n",
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{}",
                r.step,
                r.id,
                r.kind.as_str(),
                r.position.x,
                r.position.y,
                r.velocity.x,
                r.velocity.y,
                r.feasible as u8,
                r.min_dist,
                r.desired.x,
                r.desired.y
            );
        }
        out
    }

    /// Parses rows written by [`TraceRecord::to_csv`]; the metadata that the
    /// CSV does not carry comes from the arguments.
    pub fn from_csv(
        text: &str,
        dt: f64,
        safe_radius: f64,
        goals: Vec<Vec2>,
        goal_tolerance: f64,
    ) -> Result<Self> {
        let mut lines = text.lines();
        check_version_line(lines.next(), "npvo-trace", TRACE_FORMAT_VERSION)?;
        lines.next();
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            let f: Vec<&str> = line.split(',').collect();
            let bad = || Error::Format(format!("trace row {}: {line:?}", i + 1));
            if f.len() != 11 {
                return Err(bad());
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad());
            rows.push(EntityRow {
                step: f[0].parse().map_err(|_| bad())?,
                id: f[1].parse().map_err(|_| bad())?,
                kind: match f[2] {
                    "agent" => EntityKind::Agent,
                    "obstacle" => EntityKind::Obstacle,
                    _ => return Err(bad()),
                },
                position: Vec2::new(num(f[3])?, num(f[4])?),
                velocity: Vec2::new(num(f[5])?, num(f[6])?),
                feasible: f[7] == "1",
                min_dist: num(f[8])?,
                desired: Vec2::new(num(f[9])?, num(f[10])?),
            });
        }
        Ok(TraceRecord {
            dt,
            safe_radius,
            goals,
            goal_tolerance,
            rows,
        })
    }
}

/// Rejects files whose version line is missing or newer than `supported`.
pub fn check_version_line(line: Option<&str>, tag: &str, supported: u32) -> Result<u32> {
    let line = line.ok_or_else(|| Error::Format("empty file".into()))?;
    let version = line
        .strip_prefix("# ")
        .and_then(|s| s.strip_prefix(tag))
        .and_then(|s| s.trim().strip_prefix('v'))
        .and_then(|v| v.parse::<u32>().ok())
        .ok_or_else(|| Error::Format(format!("missing {tag} version header")))?;
    if version > supported {
        return Err(Error::Format(format!(
            "{tag} version {version} is newer than supported version {supported}"
        )));
    }
    Ok(version)
}

/// Every (step, agent, other entity) with distance strictly below `r_s`.
pub fn collision_check(trace: &TraceRecord, safe_radius: f64) -> Vec<CollisionEvent> {
    let mut events = Vec::new();
    let mut start = 0;
    while start < trace.rows.len() {
        let step = trace.rows[start].step;
        let end = trace.rows[start..]
            .iter()
            .position(|r| r.step != step)
            .map_or(trace.rows.len(), |p| start + p);
        let rows = &trace.rows[start..end];
        for (i, a) in rows.iter().enumerate() {
            if a.kind != EntityKind::Agent {
                continue;
            }
            for (j, b) in rows.iter().enumerate() {
                // Agent pairs are reported once.
                if i == j || (b.kind == EntityKind::Agent && j < i) {
                    continue;
                }
                let d = a.position.distance(b.position);
                if d < safe_radius {
                    events.push(CollisionEvent {
                        step,
                        agent: a.id,
                        other: b.id,
                        distance: d,
                    });
                }
            }
        }
        start = end;
    }
    events
}

/// Aggregates of one run, all recomputable from the trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub format_version: u32,
    pub steps: usize,
    pub min_distance: f64,
    pub collisions: usize,
    /// First step at which each agent was within the goal tolerance.
    pub goal_steps: Vec<Option<usize>>,
    /// Sum over agents of the integral of |v_applied - v_desired| dt.
    pub path_deviation: f64,
    pub infeasible_ticks: usize,
}

impl RunMetrics {
    pub fn from_trace(trace: &TraceRecord) -> Self {
        let agents = trace.rows.iter().filter(|r| r.kind == EntityKind::Agent);
        let mut min_distance = f64::INFINITY;
        let mut path_deviation = 0.0;
        let mut infeasible_ticks = 0;
        let mut goal_steps = vec![None; trace.goals.len()];
        let last = trace.steps().saturating_sub(1);
        for r in agents {
            min_distance = min_distance.min(r.min_dist);
            if r.step < last {
                path_deviation += (r.velocity - r.desired).norm() * trace.dt;
                infeasible_ticks += (!r.feasible) as usize;
            }
            if let Some(g) = goal_steps.get_mut(r.id) {
                if g.is_none() && r.position.distance(trace.goals[r.id]) <= trace.goal_tolerance {
                    *g = Some(r.step);
                }
            }
        }
        RunMetrics {
            format_version: TRACE_FORMAT_VERSION,
            steps: trace.steps(),
            min_distance,
            collisions: collision_check(trace, trace.safe_radius).len(),
            goal_steps,
            path_deviation,
            infeasible_ticks,
        }
    }
}
