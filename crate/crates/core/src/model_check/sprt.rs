use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SprtConfig {
    pub theta: f64,
    /// Half-width of the indifference region around `theta`.
    pub delta: f64,
    pub alpha: f64,
    pub beta: f64,
    pub max_samples: usize,
}

impl SprtConfig {
    pub fn new(theta: f64) -> Self {
        SprtConfig {
            theta,
            delta: 0.05,
            alpha: 0.1,
            beta: 0.1,
            max_samples: 10_000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (p1, p0) = (self.theta - self.delta, self.theta + self.delta);
        if !(self.delta > 0.0 && p1 > 0.0 && p0 < 1.0) {
            return Err(invalid(format!(
                "need 0 < theta - delta < theta + delta < 1, got theta {} delta {}",
                self.theta, self.delta
            )));
        }
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta)] {
            if !(v > 0.0 && v < 0.5) {
                return Err(invalid(format!("{name} must lie in (0, 0.5), got {v}")));
            }
        }
        if self.max_samples == 0 {
            return Err(invalid("max_samples must be at least 1"));
        }
        Ok(())
    }

    /// Per-sample log-likelihood-ratio increments for a success and a failure.
    fn steps(&self) -> (f64, f64) {
        let (p1, p0) = (self.theta - self.delta, self.theta + self.delta);
        ((p1 / p0).ln(), ((1.0 - p1) / (1.0 - p0)).ln())
    }

    pub fn upper_bound(&self) -> f64 {
        ((1.0 - self.beta) / self.alpha).ln()
    }

    pub fn lower_bound(&self) -> f64 {
        (self.beta / (1.0 - self.alpha)).ln()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Decision {
    /// Probability at least `theta + delta` accepted.
    Sat,
    /// Probability below `theta - delta` accepted.
    Unsat,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SprtOutcome {
    pub decision: Decision,
    pub samples: usize,
    pub llr: f64,
}

/// Wald's sequential test of `p >= theta + delta` against `p < theta - delta`.
pub fn run_sprt(mut oracle: impl FnMut() -> Result<bool>, cfg: &SprtConfig) -> Result<SprtOutcome> {
    cfg.validate()?;
    let (up, down) = (cfg.upper_bound(), cfg.lower_bound());
    let (on_success, on_failure) = cfg.steps();
    let mut llr = 0.0;
    for n in 1..=cfg.max_samples {
        llr += if oracle()? { on_success } else { on_failure };
        if llr >= up {
            return Ok(SprtOutcome {
                decision: Decision::Unsat,
                samples: n,
                llr,
            });
        }
        if llr <= down {
            return Ok(SprtOutcome {
                decision: Decision::Sat,
                samples: n,
                llr,
            });
        }
    }
    Ok(SprtOutcome {
        decision: Decision::Inconclusive,
        samples: cfg.max_samples,
        llr,
    })
}
