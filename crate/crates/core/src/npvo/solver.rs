use serde::{Deserialize, Serialize};

use super::Npvo;
use crate::error::{invalid, Result};
use crate::geom::Vec2;

/// Resolution of the coarse-to-fine velocity search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverParams {
    pub angles: usize,
    pub speeds: usize,
    /// Step halvings of the local pattern search.
    pub refinements: usize,
    /// Bisection steps towards the desired velocity.
    pub bisections: usize,
    /// Best coarse cells refined independently.
    pub starts: usize,
    /// Extra angular subdivision of the full-speed circle.
    pub rim_factor: usize,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            angles: 64,
            speeds: 16,
            refinements: 10,
            bisections: 30,
            starts: 8,
            rim_factor: 8,
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<()> {
        if self.angles < 4 || self.speeds < 1 || self.rim_factor < 1 {
            return Err(invalid(
                "solver grid needs at least 4 angles, 1 speed and rim factor 1",
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VelocityQuery {
    pub desired: Vec2,
    pub v_max: f64,
    pub params: SolverParams,
}

impl VelocityQuery {
    pub fn new(desired: Vec2, v_max: f64) -> Result<Self> {
        if !(v_max > 0.0) || !v_max.is_finite() {
            return Err(invalid(format!("v_max must be positive, got {v_max}")));
        }
        if !desired.is_finite() {
            return Err(invalid("desired velocity must be finite"));
        }
        Ok(VelocityQuery {
            desired: desired.clamp_norm(v_max),
            v_max,
            params: SolverParams::default(),
        })
    }

    pub fn with_params(mut self, params: SolverParams) -> Self {
        self.params = params;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Feasibility {
    Feasible,
    Infeasible,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SafeVelocity {
    pub velocity: Vec2,
    pub feasibility: Feasibility,
}

impl SafeVelocity {
    pub fn is_feasible(&self) -> bool {
        self.feasibility == Feasibility::Feasible
    }
}

/// Velocity closest to the desired one outside the NPVO, or the
/// least-penetrating sampled velocity, flagged infeasible, when every
/// velocity within `v_max` is inside.
///
/// Search: polar grid over the speed disk, pattern search with step
/// halving around the best feasible point, then bisection along the segment
/// towards the desired velocity.
pub fn find_safe_velocity(query: &VelocityQuery, npvo: &Npvo) -> SafeVelocity {
    let desired = query.desired;
    let v_max = query.v_max;
    if npvo.is_empty() || !npvo.contains(desired) {
        return SafeVelocity {
            velocity: desired,
            feasibility: Feasibility::Feasible,
        };
    }
    let p = &query.params;
    let cost = |v: Vec2| (v - desired).norm_sq();
    let mut feasible_cells: Vec<(f64, Vec2)> = Vec::new();
    let mut least_bad = (f64::NEG_INFINITY, f64::INFINITY, Vec2::ZERO);
    let mut consider = |v: Vec2| {
        if npvo.contains(v) {
            let m = npvo.margin(v);
            let c = cost(v);
            if m > least_bad.0 || (m == least_bad.0 && c < least_bad.1) {
                least_bad = (m, c, v);
            }
        } else {
            feasible_cells.push((cost(v), v));
        }
    };
    consider(Vec2::ZERO);
    for i in 1..=p.speeds {
        let speed = v_max * i as f64 / p.speeds as f64;
        for a in 0..p.angles {
            let angle = std::f64::consts::TAU * a as f64 / p.angles as f64;
            consider(Vec2::from_polar(speed, angle));
        }
    }
    // Escape gaps often open only at full speed.
    let rim = p.angles * p.rim_factor;
    for a in 0..rim {
        if a % p.rim_factor != 0 {
            consider(Vec2::from_polar(
                v_max,
                std::f64::consts::TAU * a as f64 / rim as f64,
            ));
        }
    }
    if feasible_cells.is_empty() {
        return SafeVelocity {
            velocity: least_bad.2,
            feasibility: Feasibility::Infeasible,
        };
    }
    feasible_cells.sort_by(|a, b| a.0.total_cmp(&b.0));
    let feasible = |q: Vec2| q.norm() <= v_max && !npvo.contains(q);
    let mut best = feasible_cells[0];
    for &(c, v) in feasible_cells.iter().take(p.starts.max(1)) {
        let refined = refine(v, c, desired, v_max / p.speeds as f64, p, &feasible);
        if refined.0 < best.0 {
            best = refined;
        }
    }
    SafeVelocity {
        velocity: best.1,
        feasibility: Feasibility::Feasible,
    }
}

/// Pattern search with step halving from the feasible `v`, interleaved with
/// bisection towards `desired`.
fn refine(
    mut v: Vec2,
    mut best_cost: f64,
    desired: Vec2,
    mut step: f64,
    p: &SolverParams,
    feasible: &impl Fn(Vec2) -> bool,
) -> (f64, Vec2) {
    let cost = |v: Vec2| (v - desired).norm_sq();
    let dirs: Vec<Vec2> = (0..8)
        .map(|i| Vec2::from_polar(1.0, std::f64::consts::FRAC_PI_4 * i as f64))
        .collect();
    let mut halvings = 0;
    while halvings <= p.refinements {
        let mut moved = false;
        for d in &dirs {
            let q = v + *d * step;
            if cost(q) < best_cost && feasible(q) {
                best_cost = cost(q);
                v = q;
                moved = true;
            }
        }
        let pulled = bisect_towards(v, desired, p.bisections, feasible);
        if cost(pulled) < best_cost {
            best_cost = cost(pulled);
            v = pulled;
            moved = true;
        }
        if !moved {
            step *= 0.5;
            halvings += 1;
        }
    }
    (best_cost, v)
}

/// Last feasible point found by bisection on the segment from the feasible
/// `from` to `to`.
fn bisect_towards(from: Vec2, to: Vec2, steps: usize, feasible: &impl Fn(Vec2) -> bool) -> Vec2 {
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..steps {
        let mid = 0.5 * (lo + hi);
        if feasible(from + (to - from) * mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if lo == 0.0 {
        from
    } else {
        from + (to - from) * lo
    }
}
