use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::config::{PredictorChoice, ScenarioConfig};
use super::trace::{EntityKind, EntityRow, RunMetrics, TraceRecord};
use super::world::{AgentState, ObstacleState, World};
use crate::error::Result;
use crate::geom::Vec2;
use crate::nn::CellKind;
use crate::npvo::{build_multi_agent_npvo, find_safe_velocity, Ellipsoid, VelocityQuery};
use crate::predictor::{
    ConstantVelocityPredictor, MotionPredictor, ObservationHistory, OnlinePredictor,
    PredictionDistribution, StaticPredictor,
};
use crate::rng::{rng_from, stream, Rng};

/// Prediction-quality bookkeeping that needs the ellipses, which the trace
/// does not store.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SafetyAudit {
    /// Agent ticks whose predictions could be checked over the full horizon.
    pub checked_ticks: usize,
    /// Checked ticks where every target stayed inside its ellipses for the
    /// whole horizon and the solver reported a feasible velocity.
    pub premise_ticks: usize,
    /// Collisions at the step following a premise tick.
    pub premise_collisions: usize,
    /// Fraction of checked (agent, target) predictions fully contained.
    pub containment_rate: f64,
    /// Mean distance between the predicted and realized next position.
    pub mean_one_step_error: f64,
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub trace: TraceRecord,
    pub metrics: RunMetrics,
    pub audit: SafetyAudit,
}

enum PairPredictor {
    Learned(OnlinePredictor),
    Baseline(ConstantVelocityPredictor),
}

struct Pair {
    predictor: PairPredictor,
    /// Entity id of the predicted target.
    target: usize,
    rng: Rng,
}

impl Pair {
    fn predict(
        &mut self,
        history: &ObservationHistory,
        cfg: &ScenarioConfig,
    ) -> Result<PredictionDistribution> {
        let p = match &mut self.predictor {
            PairPredictor::Learned(p) => p.predict(history, cfg.gamma, &mut self.rng)?,
            PairPredictor::Baseline(p) => p.predict(history, cfg.gamma, &mut self.rng)?,
        };
        match p {
            Some(p) => Ok(p),
            None => {
                let mut fallback = StaticPredictor {
                    horizon: cfg.horizon(),
                    variance: cfg.fallback_variance,
                };
                Ok(fallback
                    .predict(history, cfg.gamma, &mut self.rng)?
                    .expect("static prediction always exists"))
            }
        }
    }

    fn observe(&mut self, history: &ObservationHistory) -> Result<()> {
        if let PairPredictor::Learned(p) = &mut self.predictor {
            p.train(history, &mut self.rng)?;
        }
        Ok(())
    }
}

struct Pending {
    step: usize,
    agent: usize,
    target: usize,
    ellipses: Vec<Ellipsoid>,
    next_center: Vec2,
}

/// Obstacle specs with this seed's phase and start jitter applied.
fn jittered(cfg: &ScenarioConfig) -> Vec<super::config::ObstacleSpec> {
    cfg.obstacles
        .iter()
        .enumerate()
        .map(|(j, o)| {
            let mut rng = rng_from(cfg.seed, &[stream::SCENARIO_JITTER, j as u64]);
            let mut o = o.clone();
            if cfg.jitter.phase > 0.0 {
                o.policy = o
                    .policy
                    .shifted_phase(rng.random_range(0.0..cfg.jitter.phase));
            }
            if cfg.jitter.start > 0.0 {
                let r = cfg.jitter.start * rng.random::<f64>().sqrt();
                o.start += Vec2::from_polar(r, rng.random_range(0.0..std::f64::consts::TAU));
            }
            o
        })
        .collect()
}

/// Runs the predict / build NPVO / solve / apply loop until every agent is
/// at its goal or the step budget is spent.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let n_agents = cfg.agents.len();
    let obstacles = jittered(cfg);
    let mut world = World {
        step: 0,
        dt: cfg.dt,
        agents: cfg.agents.iter().map(AgentState::from_spec).collect(),
        obstacles: obstacles
            .iter()
            .enumerate()
            .map(|(j, o)| {
                let rng = rng_from(
                    cfg.seed,
                    &[stream::OBSTACLE, j as u64, o.policy.walk_seed()],
                );
                ObstacleState::from_spec(o, rng)
            })
            .collect(),
    };
    let n_entities = n_agents + world.obstacles.len();
    let mut histories: Vec<ObservationHistory> = world
        .positions()
        .into_iter()
        .map(|p| ObservationHistory::new(vec![p], cfg.dt))
        .collect::<Result<_>>()?;

    let mut pairs: Vec<Vec<Pair>> = Vec::with_capacity(n_agents);
    for a in 0..n_agents {
        let targets =
            (n_agents..n_entities).chain((0..n_agents).filter(|&b| cfg.reciprocal && b != a));
        let mut row = Vec::new();
        for t in targets {
            let predictor = match cfg.predictor {
                PredictorChoice::ConstantVelocity => PairPredictor::Baseline(
                    ConstantVelocityPredictor::new(cfg.horizon(), cfg.baseline_variance)?,
                ),
                choice => {
                    let cell = if choice == PredictorChoice::Lstm {
                        CellKind::Lstm
                    } else {
                        CellKind::Rnn
                    };
                    let pc = crate::predictor::PredictorConfig {
                        cell,
                        ..cfg.predictor_config.clone()
                    };
                    PairPredictor::Learned(OnlinePredictor::new(pc)?)
                }
            };
            row.push(Pair {
                predictor,
                target: t,
                rng: rng_from(cfg.seed, &[stream::PREDICTOR, a as u64, t as u64]),
            });
        }
        pairs.push(row);
    }

    for _ in 0..cfg.warmup_steps {
        world.advance_obstacles();
        for (h, p) in histories.iter_mut().zip(world.positions()) {
            h.push(p);
        }
        if cfg.warmup_training {
            for row in &mut pairs {
                for pair in row.iter_mut() {
                    pair.observe(&histories[pair.target])?;
                }
            }
        }
    }

    let mut rows = Vec::new();
    let mut positions: Vec<Vec<Vec2>> = Vec::new();
    let mut feasible_at: Vec<Vec<bool>> = Vec::new();
    let mut pending = Vec::new();
    let mut min_dist = vec![f64::INFINITY; n_entities];
    let kind = |id: usize| {
        if id < n_agents {
            EntityKind::Agent
        } else {
            EntityKind::Obstacle
        }
    };

    for step in 0..=cfg.steps {
        let pos = world.positions();
        for a in 0..n_agents {
            for b in 0..n_entities {
                if a != b {
                    let d = pos[a].distance(pos[b]);
                    min_dist[a] = min_dist[a].min(d);
                    min_dist[b] = min_dist[b].min(d);
                }
            }
        }
        let done = world
            .agents
            .iter()
            .all(|ag| ag.position.distance(ag.goal) <= cfg.goal_tolerance);
        let last = step == cfg.steps || done;

        let mut desired = vec![Vec2::ZERO; n_agents];
        let mut feasible = vec![true; n_agents];
        if !last {
            for a in 0..n_agents {
                let agent = &world.agents[a];
                desired[a] = agent.desired_velocity(cfg.dt, cfg.goal_tolerance);
                let mut predictions = Vec::with_capacity(pairs[a].len());
                for pair in pairs[a].iter_mut() {
                    let p = pair.predict(&histories[pair.target], cfg)?;
                    pending.push(Pending {
                        step,
                        agent: a,
                        target: pair.target,
                        ellipses: p.ellipses().cloned().collect(),
                        next_center: p.steps[0].position,
                    });
                    predictions.push(p);
                }
                let npvo =
                    build_multi_agent_npvo(&predictions, agent.position, cfg.safe_radius, cfg.dt)?;
                let query =
                    VelocityQuery::new(desired[a], agent.v_max)?.with_params(cfg.solver.clone());
                let sol = find_safe_velocity(&query, &npvo);
                feasible[a] = sol.is_feasible();
                world.agents[a].velocity = sol.velocity;
            }
        } else {
            for ag in &mut world.agents {
                ag.velocity = Vec2::ZERO;
            }
        }

        let obstacle_vel: Vec<Vec2> = if last {
            vec![Vec2::ZERO; world.obstacles.len()]
        } else {
            let mut probe = world.clone();
            probe
                .advance()
                .into_iter()
                .map(|d| d * (1.0 / cfg.dt))
                .collect()
        };
        for id in 0..n_entities {
            let (velocity, des, feas) = if id < n_agents {
                (world.agents[id].velocity, desired[id], feasible[id])
            } else {
                (obstacle_vel[id - n_agents], Vec2::ZERO, true)
            };
            rows.push(EntityRow {
                step,
                id,
                kind: kind(id),
                position: pos[id],
                velocity,
                desired: des,
                feasible: feas,
                min_dist: min_dist[id],
            });
        }
        positions.push(pos);
        feasible_at.push(feasible);
        if last {
            break;
        }
        world.advance();
        for (h, p) in histories.iter_mut().zip(world.positions()) {
            h.push(p);
        }
    }

    let trace = TraceRecord {
        dt: cfg.dt,
        safe_radius: cfg.safe_radius,
        goals: cfg.agents.iter().map(|a| a.goal).collect(),
        goal_tolerance: cfg.goal_tolerance,
        rows,
    };
    let audit = audit(
        &pending,
        &positions,
        &feasible_at,
        cfg.safe_radius,
        cfg.horizon(),
    );
    let metrics = RunMetrics::from_trace(&trace);
    Ok(RunOutput {
        trace,
        metrics,
        audit,
    })
}

fn audit(
    pending: &[Pending],
    positions: &[Vec<Vec2>],
    feasible: &[Vec<bool>],
    safe_radius: f64,
    horizon: usize,
) -> SafetyAudit {
    let last = positions.len() - 1;
    let mut out = SafetyAudit::default();
    let mut err_sum = 0.0;
    let mut err_n = 0usize;
    let mut checked_pairs = 0usize;
    let mut contained_pairs = 0usize;
    let mut i = 0;
    while i < pending.len() {
        let (step, agent) = (pending[i].step, pending[i].agent);
        let group_end = pending[i..]
            .iter()
            .position(|p| p.step != step || p.agent != agent)
            .map_or(pending.len(), |e| i + e);
        let group = &pending[i..group_end];
        i = group_end;
        for p in group {
            if step < last {
                err_sum += p.next_center.distance(positions[step + 1][p.target]);
                err_n += 1;
            }
        }
        if step + horizon > last {
            continue;
        }
        out.checked_ticks += 1;
        let mut all_inside = true;
        for p in group {
            let inside =
                p.ellipses.iter().enumerate().all(|(k, e)| {
                    e.mahalanobis_sq(positions[step + k + 1][p.target]) <= e.threshold()
                });
            checked_pairs += 1;
            contained_pairs += inside as usize;
            all_inside &= inside;
        }
        if all_inside && feasible[step][agent] {
            out.premise_ticks += 1;
            let next = &positions[step + 1];
            out.premise_collisions += group
                .iter()
                .filter(|p| next[agent].distance(next[p.target]) < safe_radius)
                .count();
        }
    }
    out.containment_rate = if checked_pairs > 0 {
        contained_pairs as f64 / checked_pairs as f64
    } else {
        0.0
    };
    out.mean_one_step_error = if err_n > 0 {
        err_sum / err_n as f64
    } else {
        0.0
    };
    out
}
