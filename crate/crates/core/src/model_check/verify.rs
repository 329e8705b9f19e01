use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::grid::{
    evaluate_trace, sample_markov_trace, GridMotionModel, GridOraclePredictor, WholePlanePredictor,
};
use super::sprt::{run_sprt, Decision, SprtConfig};
use crate::error::{invalid, Error, Result};
use crate::nn::CellKind;
use crate::predictor::{
    ConstantVelocityPredictor, MotionPredictor, OnlinePredictor, PredictorConfig,
};
use crate::rng::{rng_from, stream};

/// Newest verification config and report layout this build understands.
pub const VERIFY_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerifyPredictor {
    Lstm,
    Rnn,
    #[serde(alias = "const", alias = "constant-velocity")]
    ConstantVelocity,
    /// Accepts everything; useful as a sanity check of the harness.
    WholePlane,
    /// The exact distribution of the grid walk.
    GridOracle,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SprtParams {
    pub delta: f64,
    pub alpha: f64,
    pub beta: f64,
    pub max_samples: usize,
}

impl Default for SprtParams {
    fn default() -> Self {
        SprtParams {
            delta: 0.05,
            alpha: 0.1,
            beta: 0.1,
            max_samples: 10_000,
        }
    }
}

impl SprtParams {
    pub fn at(&self, theta: f64) -> SprtConfig {
        SprtConfig {
            theta,
            delta: self.delta,
            alpha: self.alpha,
            beta: self.beta,
            max_samples: self.max_samples,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyConfig {
    pub format_version: u32,
    /// Input-noise variances, one table row each.
    pub variances: Vec<f64>,
    pub thetas: Vec<f64>,
    /// Labeled steps per execution. Each sampled trace also carries the
    /// `2m` warm-up deltas needed before the first label.
    pub trace_length: usize,
    pub cell: f64,
    pub gamma: f64,
    pub seed: u64,
    pub predictor: VerifyPredictor,
    pub predictor_config: PredictorConfig,
    pub sprt: SprtParams,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            format_version: VERIFY_FORMAT_VERSION,
            variances: vec![0.0, 0.001, 0.01, 0.05],
            thetas: vec![0.75, 0.8, 0.85, 0.9],
            trace_length: 20,
            cell: 1.0,
            gamma: 0.95,
            seed: 0,
            predictor: VerifyPredictor::Lstm,
            predictor_config: PredictorConfig::default(),
            sprt: SprtParams::default(),
        }
    }
}

impl VerifyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.format_version == 0 || self.format_version > VERIFY_FORMAT_VERSION {
            return Err(Error::Format(format!(
                "format_version {} is not supported (newest is {VERIFY_FORMAT_VERSION})",
                self.format_version
            )));
        }
        if self.variances.is_empty() || self.thetas.is_empty() {
            return Err(invalid("variances and thetas must be non-empty"));
        }
        if let Some(v) = self
            .variances
            .iter()
            .find(|v| !(**v >= 0.0 && v.is_finite()))
        {
            return Err(invalid(format!("variances must be non-negative, got {v}")));
        }
        if self.trace_length == 0 {
            return Err(invalid("trace_length must be at least 1"));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(invalid(format!(
                "gamma must lie in (0, 1), got {}",
                self.gamma
            )));
        }
        GridMotionModel::new(self.cell, 0)?;
        self.predictor_config.validate()?;
        for &t in &self.thetas {
            self.sprt
                .at(t)
                .validate()
                .map_err(|e| invalid(format!("theta {t}: {e}")))?;
        }
        Ok(())
    }

    fn predictor(&self, variance: f64) -> Result<Box<dyn MotionPredictor>> {
        let m = self.predictor_config.horizon;
        let learned = |cell| -> Result<Box<dyn MotionPredictor>> {
            Ok(Box::new(OnlinePredictor::new(PredictorConfig {
                cell,
                noise_variance: variance,
                ..self.predictor_config.clone()
            })?))
        };
        match self.predictor {
            VerifyPredictor::Lstm => learned(CellKind::Lstm),
            VerifyPredictor::Rnn => learned(CellKind::Rnn),
            VerifyPredictor::ConstantVelocity => Ok(Box::new(ConstantVelocityPredictor::new(
                m,
                variance.max(ConstantVelocityPredictor::DEFAULT_VARIANCE),
            )?)),
            VerifyPredictor::WholePlane => Ok(Box::new(WholePlanePredictor { horizon: m })),
            VerifyPredictor::GridOracle => Ok(Box::new(GridOraclePredictor {
                horizon: m,
                cell: self.cell,
            })),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyCell {
    pub variance: f64,
    pub theta: f64,
    pub decision: Decision,
    pub samples: usize,
    pub llr: f64,
    pub wall_time_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub format_version: u32,
    pub seed: u64,
    pub horizon: usize,
    pub trace_length: usize,
    pub cells: Vec<VerifyCell>,
}

impl VerifyReport {
    pub fn cell(&self, variance: f64, theta: f64) -> Option<&VerifyCell> {
        self.cells
            .iter()
            .find(|c| c.variance == variance && c.theta == theta)
    }

    /// Largest theta decided SAT in the row, if any.
    pub fn max_sat_theta(&self, variance: f64) -> Option<f64> {
        self.cells
            .iter()
            .filter(|c| c.variance == variance && c.decision == Decision::Sat)
            .map(|c| c.theta)
            .max_by(f64::total_cmp)
    }

    /// True when, in every row, no SAT cell sits above an UNSAT one.
    pub fn rows_monotone(&self) -> bool {
        let mut rows: Vec<f64> = self.cells.iter().map(|c| c.variance).collect();
        rows.dedup();
        rows.iter().all(|&v| {
            let mut row: Vec<&VerifyCell> = self.cells.iter().filter(|c| c.variance == v).collect();
            row.sort_by(|a, b| a.theta.total_cmp(&b.theta));
            let first_unsat = row.iter().position(|c| c.decision == Decision::Unsat);
            first_unsat.is_none_or(|i| row[i..].iter().all(|c| c.decision != Decision::Sat))
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "# npvo-verify v{}\nvariance,theta,decision,samples,llr,wall_time_s\n",
            self.format_version
        );
        for c in &self.cells {
            let d = serde_json::to_value(c.decision).expect("plain enum");
            out += &format!(
                "{},{},{},{},{},{:.3}\n",
                c.variance,
                c.theta,
                d.as_str().unwrap_or_default(),
                c.samples,
                c.llr,
                c.wall_time_s
            );
        }
        out
    }
}

/// Runs one sequential test per (variance, theta) cell.
///
/// Trace `i` and its predictor stream are the same in every cell, and each
/// row evaluates a trace at most once, so all thetas in a row read the same
/// sample sequence.
pub fn verify_prediction_system(cfg: &VerifyConfig) -> Result<VerifyReport> {
    cfg.validate()?;
    let m = cfg.predictor_config.horizon;
    let model = GridMotionModel::new(cfg.cell, 2 * m + cfg.trace_length)?;
    let mut thetas = cfg.thetas.clone();
    thetas.sort_by(f64::total_cmp);
    let mut cells = Vec::new();
    for &variance in &cfg.variances {
        let mut samples: Vec<bool> = Vec::new();
        for &theta in &thetas {
            let started = Instant::now();
            let mut next = 0;
            let out = run_sprt(
                || {
                    while samples.len() <= next {
                        let i = samples.len() as u64;
                        let trace = sample_markov_trace(
                            &model,
                            &mut rng_from(cfg.seed, &[stream::TRACE, i]),
                        );
                        let mut predictor = cfg.predictor(variance)?;
                        let mut rng = rng_from(cfg.seed, &[stream::PREDICTOR, i]);
                        samples.push(evaluate_trace(
                            &trace,
                            predictor.as_mut(),
                            cfg.gamma,
                            &mut rng,
                        )?);
                    }
                    next += 1;
                    Ok(samples[next - 1])
                },
                &cfg.sprt.at(theta),
            )?;
            cells.push(VerifyCell {
                variance,
                theta,
                decision: out.decision,
                samples: out.samples,
                llr: out.llr,
                wall_time_s: started.elapsed().as_secs_f64(),
            });
        }
    }
    Ok(VerifyReport {
        format_version: VERIFY_FORMAT_VERSION,
        seed: cfg.seed,
        horizon: m,
        trace_length: cfg.trace_length,
        cells,
    })
}
