use std::path::{Path, PathBuf};

use npvo_core::bounds::{bound_row, bound_table, bound_table_csv, BoundKind, BoundQuery, BoundRow};
use npvo_core::model_check::{verify_prediction_system, VerifyPredictor, VerifyReport};
use npvo_core::nn::CellKind;
use npvo_core::predictor::{
    ConstantVelocityPredictor, MotionPredictor, ObservationHistory, OnlinePredictor,
    PredictorConfig,
};
use npvo_core::rng::seeded;
use npvo_core::sim::{run_scenario, PredictorChoice, RunMetrics, SafetyAudit, ScenarioConfig};
use npvo_core::Vec2;
use serde::Serialize;

use crate::args::{
    BoundsArgs, KindArg, PredictArgs, PredictorArg, SimulateArgs, VerifyArgs, VerifyPredictorArg,
};
use crate::config::{bundled, parse_scenario, parse_verify, read};
use crate::output::{default_out, write_file, RunManifest, StagedDir, MANIFEST_FORMAT_VERSION};
use crate::{CliError, EXIT_COLLISION, EXIT_INFEASIBLE, EXIT_OK};

pub const PREDICTION_FORMAT_VERSION: u32 = 1;
pub const DELTAS_FORMAT_VERSION: u32 = 1;

fn to_toml<T: Serialize>(value: &T) -> Result<String, CliError> {
    toml::to_string(value).map_err(|e| CliError::Io(format!("serializing config: {e}")))
}

fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(|e| CliError::Io(format!("serializing report: {e}")))
}

fn tool_version() -> String {
    env!("CARGO_PKG_VERSION").to_string()
}

#[derive(Serialize)]
struct MetricsFile<'a> {
    format_version: u32,
    scenario: &'a str,
    seed: u64,
    metrics: &'a RunMetrics,
    audit: &'a SafetyAudit,
}

#[derive(Debug)]
pub struct SimulateOutcome {
    pub out_dir: PathBuf,
    pub metrics: RunMetrics,
    pub audit: SafetyAudit,
    pub exit_code: i32,
}

/// Resolves the scenario a simulate call refers to, with CLI overrides
/// applied. Returns the config, where it came from and the manifest, if any.
fn resolve_scenario(
    args: &SimulateArgs,
) -> Result<(ScenarioConfig, String, Option<RunManifest>), CliError> {
    let (mut cfg, source, manifest) = if let Some(path) = &args.manifest {
        let manifest = RunManifest::load(path)?;
        if manifest.subcommand != "simulate" {
            return Err(CliError::Invalid(format!(
                "{} records a `{}` run, not `simulate`",
                path.display(),
                manifest.subcommand
            )));
        }
        let dir = path.parent().unwrap_or(Path::new("."));
        let config_path = dir.join(&manifest.config_file);
        let mut cfg = parse_scenario(&read(&config_path)?, &config_path.display().to_string())?;
        cfg.seed = manifest.seed;
        (cfg, manifest.source.clone(), Some(manifest))
    } else if let Some(path) = &args.config {
        let origin = path.display().to_string();
        (parse_scenario(&read(path)?, &origin)?, origin, None)
    } else if let Some(name) = &args.scenario {
        (parse_scenario(bundled(name)?, name)?, name.clone(), None)
    } else {
        return Err(CliError::Invalid(
            "one of --config, --scenario or --manifest is required".into(),
        ));
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(p) = args.predictor {
        cfg.predictor = match p {
            PredictorArg::Lstm => PredictorChoice::Lstm,
            PredictorArg::Rnn => PredictorChoice::Rnn,
            PredictorArg::Const => PredictorChoice::ConstantVelocity,
        };
    }
    Ok((cfg, source, manifest))
}

fn predictor_name(p: PredictorChoice) -> &'static str {
    match p {
        PredictorChoice::Lstm => "lstm",
        PredictorChoice::Rnn => "rnn",
        PredictorChoice::ConstantVelocity => "const",
    }
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<SimulateOutcome, CliError> {
    let (cfg, source, manifest) = resolve_scenario(args)?;
    let strict = args.strict || manifest.as_ref().is_some_and(|m| m.strict);
    let name = if cfg.name.is_empty() {
        "scenario"
    } else {
        cfg.name.as_str()
    };
    let target = args.output.out.clone().unwrap_or_else(|| {
        default_out(&format!(
            "simulate-{name}-{}-seed{}",
            predictor_name(cfg.predictor),
            cfg.seed
        ))
    });
    let staged = StagedDir::new(target, args.output.force)?;

    let out = run_scenario(&cfg)?;
    staged.write("scenario.toml", &to_toml(&cfg)?)?;
    staged.write("trace.csv", &out.trace.to_csv())?;
    staged.write(
        "metrics.json",
        &to_json(&MetricsFile {
            format_version: out.metrics.format_version,
            scenario: name,
            seed: cfg.seed,
            metrics: &out.metrics,
            audit: &out.audit,
        })?,
    )?;
    let record = RunManifest {
        format_version: MANIFEST_FORMAT_VERSION,
        subcommand: "simulate".into(),
        source,
        config_file: "scenario.toml".into(),
        output_dir: staged.target().to_path_buf(),
        seed: cfg.seed,
        predictor: Some(predictor_name(cfg.predictor).into()),
        strict,
        tool_version: tool_version(),
    };
    staged.write("manifest.json", &to_json(&record)?)?;
    let out_dir = staged.commit()?;

    let exit_code = if out.metrics.collisions > 0 {
        EXIT_COLLISION
    } else if strict && out.metrics.infeasible_ticks > 0 {
        EXIT_INFEASIBLE
    } else {
        EXIT_OK
    };
    println!(
        "{name}: seed {} predictor {} collisions {} min distance {:.3} infeasible ticks {} -> {}",
        cfg.seed,
        predictor_name(cfg.predictor),
        out.metrics.collisions,
        out.metrics.min_distance,
        out.metrics.infeasible_ticks,
        out_dir.display()
    );
    Ok(SimulateOutcome {
        out_dir,
        metrics: out.metrics,
        audit: out.audit,
        exit_code,
    })
}

pub fn cmd_verify(args: &VerifyArgs) -> Result<(PathBuf, VerifyReport), CliError> {
    let (mut cfg, source) = match &args.config {
        Some(path) => {
            let origin = path.display().to_string();
            (parse_verify(&read(path)?, &origin)?, origin)
        }
        None => (
            parse_verify(bundled("verify_default")?, "verify_default")?,
            "verify_default".to_string(),
        ),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(p) = args.predictor {
        cfg.predictor = match p {
            VerifyPredictorArg::Lstm => VerifyPredictor::Lstm,
            VerifyPredictorArg::Rnn => VerifyPredictor::Rnn,
            VerifyPredictorArg::Const => VerifyPredictor::ConstantVelocity,
            VerifyPredictorArg::WholePlane => VerifyPredictor::WholePlane,
            VerifyPredictorArg::GridOracle => VerifyPredictor::GridOracle,
        };
    }
    let target = args
        .output
        .out
        .clone()
        .unwrap_or_else(|| default_out(&format!("verify-seed{}", cfg.seed)));
    let staged = StagedDir::new(target, args.output.force)?;
    let report = verify_prediction_system(&cfg)?;
    staged.write("verify.toml", &to_toml(&cfg)?)?;
    staged.write("report.json", &to_json(&report)?)?;
    staged.write("report.csv", &report.to_csv())?;
    let predictor = serde_json::to_value(cfg.predictor)
        .ok()
        .and_then(|v| v.as_str().map(String::from));
    staged.write(
        "manifest.json",
        &to_json(&RunManifest {
            format_version: MANIFEST_FORMAT_VERSION,
            subcommand: "verify".into(),
            source,
            config_file: "verify.toml".into(),
            output_dir: staged.target().to_path_buf(),
            seed: cfg.seed,
            predictor,
            strict: false,
            tool_version: tool_version(),
        })?,
    )?;
    let out_dir = staged.commit()?;
    print!("{}", render_table(&report));
    println!("report -> {}", out_dir.display());
    Ok((out_dir, report))
}

/// Variances down, thetas across.
pub fn render_table(report: &VerifyReport) -> String {
    let mut variances: Vec<f64> = report.cells.iter().map(|c| c.variance).collect();
    variances.dedup();
    let mut thetas: Vec<f64> = report.cells.iter().map(|c| c.theta).collect();
    thetas.sort_by(f64::total_cmp);
    thetas.dedup();
    let mut out = format!("{:>10}", "variance");
    for t in &thetas {
        out += &format!(" {:>14}", format!("theta={t}"));
    }
    out += "\n";
    for v in variances {
        out += &format!("{v:>10}");
        for &t in &thetas {
            let cell = report
                .cell(v, t)
                .map(|c| format!("{:?}({})", c.decision, c.samples))
                .unwrap_or_default();
            out += &format!(" {cell:>14}");
        }
        out += "\n";
    }
    out
}

fn kind_of(k: KindArg) -> BoundKind {
    match k {
        KindArg::Single => BoundKind::SingleAgent,
        KindArg::Dual => BoundKind::DualReciprocal,
        KindArg::Multi => BoundKind::MultiObstacle,
        KindArg::Reciprocal => BoundKind::NReciprocal,
    }
}

/// Twelve decimals, trailing zeros dropped.
fn short(x: f64) -> String {
    let s = format!("{x:.12}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

pub const DEFAULT_THETAS: [f64; 6] = [0.5, 0.7, 0.8, 0.9, 0.95, 0.99];

pub fn cmd_bounds(args: &BoundsArgs) -> Result<Vec<BoundRow>, CliError> {
    let trials = args.validate.then_some(args.trials);
    let rows = match (args.kind, args.theta) {
        (Some(kind), Some(theta)) => {
            let q = BoundQuery {
                kind: kind_of(kind),
                theta,
                n: args.n,
            };
            vec![bound_row(&q, trials, args.seed)?]
        }
        (None, None) if args.validate => {
            bound_table(&DEFAULT_THETAS, args.max_n, trials, args.seed)?
        }
        _ => {
            return Err(CliError::Invalid(
                "give --kind and --theta, or --validate alone for the full table".into(),
            ))
        }
    };
    if rows.len() == 1 && !args.validate && args.out.is_none() {
        println!("{}", short(rows[0].bound));
        return Ok(rows);
    }
    let csv = bound_table_csv(&rows);
    match &args.out {
        Some(path) => write_file(path, &csv, args.force)?,
        None => print!("{csv}"),
    }
    if args.validate {
        let failed = rows.iter().filter(|r| !r.dominated()).count();
        eprintln!("{} rows, {failed} above bound + 3 SE", rows.len());
    }
    Ok(rows)
}

fn parse_deltas(text: &str, origin: &str) -> Result<Vec<Vec2>, CliError> {
    let mut deltas = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if let Some(rest) = line.strip_prefix("# npvo-deltas v") {
            let v: u32 = rest
                .trim()
                .parse()
                .map_err(|_| CliError::Invalid(format!("{origin}:{}: bad version line", i + 1)))?;
            if v > DELTAS_FORMAT_VERSION {
                return Err(CliError::Invalid(format!(
                    "{origin}: deltas format v{v} is newer than v{DELTAS_FORMAT_VERSION}"
                )));
            }
            continue;
        }
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed: Option<Vec<f64>> = fields.iter().map(|f| f.parse().ok()).collect();
        match parsed {
            Some(v) if v.len() == 2 && v.iter().all(|x| x.is_finite()) => {
                deltas.push(Vec2::new(v[0], v[1]))
            }
            // A header such as `dx,dy`.
            None if deltas.is_empty() && fields.len() == 2 => {}
            _ => {
                return Err(CliError::Invalid(format!(
                    "{origin}:{}: expected `dx,dy`, got `{line}`",
                    i + 1
                )))
            }
        }
    }
    Ok(deltas)
}

pub fn cmd_predict(args: &PredictArgs) -> Result<String, CliError> {
    let origin = args.input.display().to_string();
    let deltas = parse_deltas(&read(&args.input)?, &origin)?;
    let history = ObservationHistory::from_deltas(Vec2::ZERO, &deltas, args.dt)?;
    let base = PredictorConfig::default();
    let horizon = args.horizon.unwrap_or(base.horizon);
    let mut predictor: Box<dyn MotionPredictor> = match args.predictor {
        PredictorArg::Const => Box::new(ConstantVelocityPredictor::new(
            horizon,
            ConstantVelocityPredictor::DEFAULT_VARIANCE,
        )?),
        p => Box::new(OnlinePredictor::new(PredictorConfig {
            cell: if p == PredictorArg::Rnn {
                CellKind::Rnn
            } else {
                CellKind::Lstm
            },
            horizon,
            ..base
        })?),
    };
    let prediction = predictor
        .predict(&history, args.gamma, &mut seeded(args.seed))?
        .ok_or_else(|| {
            CliError::Invalid(format!(
                "{origin}: {} deltas; need more than {horizon}",
                deltas.len()
            ))
        })?;
    let mut out = format!("# npvo-prediction v{PREDICTION_FORMAT_VERSION}\n# k mu_x mu_y s_xx s_xy s_yx s_yy p_x p_y c\n");
    for line in prediction.records() {
        out += &line;
        out += "\n";
    }
    match &args.out {
        Some(path) => write_file(path, &out, args.force)?,
        None => print!("{out}"),
    }
    Ok(out)
}
