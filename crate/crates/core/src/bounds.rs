//! Closed-form collision-probability bounds and a Monte-Carlo check of them
//! against the independent prediction-failure model they assume.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::rng::{rng_from, stream, Rng};

pub const BOUNDS_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    /// One agent, one obstacle.
    #[serde(alias = "single")]
    SingleAgent,
    /// Two agents predicting each other.
    #[serde(alias = "dual")]
    DualReciprocal,
    /// One agent, `n` obstacles.
    #[serde(alias = "multi")]
    MultiObstacle,
    /// `n` agents, each predicting all others.
    #[serde(alias = "reciprocal")]
    NReciprocal,
}

impl BoundKind {
    pub const ALL: [BoundKind; 4] = [
        BoundKind::SingleAgent,
        BoundKind::DualReciprocal,
        BoundKind::MultiObstacle,
        BoundKind::NReciprocal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BoundKind::SingleAgent => "single_agent",
            BoundKind::DualReciprocal => "dual_reciprocal",
            BoundKind::MultiObstacle => "multi_obstacle",
            BoundKind::NReciprocal => "n_reciprocal",
        }
    }

    fn min_n(self) -> usize {
        match self {
            BoundKind::SingleAgent | BoundKind::MultiObstacle => 1,
            BoundKind::DualReciprocal | BoundKind::NReciprocal => 2,
        }
    }

    /// Entity counts worth tabulating; the fixed-size kinds ignore `n`.
    pub fn table_ns(self, max_n: usize) -> Vec<usize> {
        match self {
            BoundKind::SingleAgent => vec![1],
            BoundKind::DualReciprocal => vec![2],
            _ => (self.min_n()..=max_n).collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundQuery {
    pub kind: BoundKind,
    /// Probability that one prediction contains the true motion.
    pub theta: f64,
    /// Obstacle count or agent count, depending on `kind`.
    pub n: usize,
}

impl BoundQuery {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return Err(invalid(format!(
                "theta must lie in (0, 1), got {}",
                self.theta
            )));
        }
        if self.n < self.kind.min_n() {
            return Err(invalid(format!(
                "n must be at least {} for {}, got {}",
                self.kind.min_n(),
                self.kind.name(),
                self.n
            )));
        }
        Ok(())
    }
}

pub fn collision_bound(q: &BoundQuery) -> Result<f64> {
    q.validate()?;
    let t = q.theta;
    Ok(match q.kind {
        BoundKind::SingleAgent => 1.0 - t,
        BoundKind::DualReciprocal => (1.0 - t) * (1.0 - t),
        BoundKind::MultiObstacle => 1.0 - t.powi(q.n as i32),
        BoundKind::NReciprocal => {
            // 1 - (2t - t²)^pairs, with the one-pair case kept identical to
            // the two-agent bound.
            let pair = (1.0 - t) * (1.0 - t);
            match q.n * (q.n - 1) / 2 {
                1 => pair,
                pairs => 1.0 - (1.0 - pair).powi(pairs as i32),
            }
        }
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalRate {
    pub trials: usize,
    pub collisions: usize,
    pub rate: f64,
    pub std_error: f64,
    /// 95% Wilson score interval.
    pub ci_low: f64,
    pub ci_high: f64,
}

fn wilson(k: usize, n: usize) -> (f64, f64) {
    let z = 1.959_963_984_540_054;
    let (k, n) = (k as f64, n as f64);
    let p = k / n;
    let denom = 1.0 + z * z / n;
    let center = (p + z * z / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Simulates the failure model behind the bounds: every directed prediction
/// fails independently with probability `1 - theta_true`, and a horizon ends
/// in collision exactly when the triggering failures occur.
pub fn empirical_collision_rate(
    kind: BoundKind,
    theta_true: f64,
    n: usize,
    trials: usize,
    rng: &mut Rng,
) -> Result<EmpiricalRate> {
    if !(0.0..=1.0).contains(&theta_true) {
        return Err(invalid(format!(
            "theta_true must lie in [0, 1], got {theta_true}"
        )));
    }
    if trials == 0 {
        return Err(invalid("trials must be at least 1"));
    }
    if n < kind.min_n() {
        return Err(invalid(format!(
            "n must be at least {} for {}",
            kind.min_n(),
            kind.name()
        )));
    }
    let fail_p = 1.0 - theta_true;
    let mut fails = || rng.random::<f64>() < fail_p;
    let mut collisions = 0;
    for _ in 0..trials {
        let hit = match kind {
            BoundKind::SingleAgent => fails(),
            BoundKind::DualReciprocal => {
                let (a, b) = (fails(), fails());
                a && b
            }
            BoundKind::MultiObstacle => (0..n).fold(false, |acc, _| fails() | acc),
            BoundKind::NReciprocal => (0..n * (n - 1) / 2).fold(false, |acc, _| {
                let (a, b) = (fails(), fails());
                (a && b) | acc
            }),
        };
        collisions += hit as usize;
    }
    let rate = collisions as f64 / trials as f64;
    let (ci_low, ci_high) = wilson(collisions, trials);
    Ok(EmpiricalRate {
        trials,
        collisions,
        rate,
        std_error: (rate * (1.0 - rate) / trials as f64).sqrt(),
        ci_low,
        ci_high,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub kind: BoundKind,
    pub theta: f64,
    pub n: usize,
    pub bound: f64,
    pub empirical: Option<EmpiricalRate>,
}

impl BoundRow {
    /// Empirical rate at most the bound plus three standard errors of the
    /// bound itself; rows without a simulation pass trivially.
    pub fn dominated(&self) -> bool {
        self.empirical.as_ref().is_none_or(|e| {
            let se = (self.bound * (1.0 - self.bound) / e.trials as f64).sqrt();
            e.rate <= self.bound + 3.0 * se
        })
    }
}

/// One table row; the simulated rate uses `theta_true = theta` and a stream
/// derived from `seed` and the query.
pub fn bound_row(q: &BoundQuery, trials: Option<usize>, seed: u64) -> Result<BoundRow> {
    let bound = collision_bound(q)?;
    let empirical = match trials {
        Some(t) => {
            let kind_id = BoundKind::ALL
                .iter()
                .position(|k| *k == q.kind)
                .unwrap_or(0) as u64;
            let mut rng = rng_from(
                seed,
                &[stream::BOUNDS, kind_id, q.theta.to_bits(), q.n as u64],
            );
            Some(empirical_collision_rate(q.kind, q.theta, q.n, t, &mut rng)?)
        }
        None => None,
    };
    Ok(BoundRow {
        kind: q.kind,
        theta: q.theta,
        n: q.n,
        bound,
        empirical,
    })
}

/// Bound for every kind, theta and applicable `n`.
pub fn bound_table(
    thetas: &[f64],
    max_n: usize,
    trials: Option<usize>,
    seed: u64,
) -> Result<Vec<BoundRow>> {
    let mut rows = Vec::new();
    for kind in BoundKind::ALL {
        for &theta in thetas {
            for n in kind.table_ns(max_n) {
                rows.push(bound_row(&BoundQuery { kind, theta, n }, trials, seed)?);
            }
        }
    }
    Ok(rows)
}

pub fn bound_table_csv(rows: &[BoundRow]) -> String {
    let mut out = format!("# npvo-bounds v{BOUNDS_FORMAT_VERSION}\nkind,theta,n,bound,empirical,ci_low,ci_high,trials\n");
    for r in rows {
        out += &format!("{},{},{},{}", r.kind.name(), r.theta, r.n, r.bound);
        match &r.empirical {
            Some(e) => out += &format!(",{},{},{},{}\n", e.rate, e.ci_low, e.ci_high, e.trials),
            None => out += ",,,,\n",
        }
    }
    out
}
