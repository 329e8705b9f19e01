use std::path::Path;

use npvo_core::model_check::{VerifyConfig, VERIFY_FORMAT_VERSION};
use npvo_core::sim::{ScenarioConfig, SCENARIO_FORMAT_VERSION};
use serde::de::DeserializeOwned;

use crate::CliError;

pub const BUNDLED: &[(&str, &str)] = &[
    (
        "figure1_oscillating_drift",
        include_str!("../scenarios/figure1_oscillating_drift.toml"),
    ),
    ("corridor", include_str!("../scenarios/corridor.toml")),
    (
        "reciprocal_swap",
        include_str!("../scenarios/reciprocal_swap.toml"),
    ),
    (
        "sharp_corners",
        include_str!("../scenarios/sharp_corners.toml"),
    ),
    (
        "behavior_switch",
        include_str!("../scenarios/behavior_switch.toml"),
    ),
    (
        "verify_default",
        include_str!("../scenarios/verify_default.toml"),
    ),
];

pub fn bundled(name: &str) -> Result<&'static str, CliError> {
    BUNDLED
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| *text)
        .ok_or_else(|| {
            let names: Vec<_> = BUNDLED.iter().map(|(n, _)| *n).collect();
            CliError::Invalid(format!(
                "unknown scenario `{name}`; bundled: {}",
                names.join(", ")
            ))
        })
}

/// Parses a versioned TOML document, refusing layouts newer than `newest`
/// before any field is interpreted.
fn parse_versioned<T: DeserializeOwned>(
    text: &str,
    origin: &str,
    newest: u32,
) -> Result<T, CliError> {
    let value: toml::Table = text
        .parse()
        .map_err(|e| CliError::Invalid(format!("{origin}: {e}")))?;
    match value.get("format_version") {
        Some(toml::Value::Integer(v)) if *v >= 1 && *v <= newest as i64 => {}
        Some(v) => {
            return Err(CliError::Invalid(format!(
                "{origin}: format_version {v} is not supported (newest is {newest})"
            )))
        }
        None => {
            return Err(CliError::Invalid(format!(
                "{origin}: missing format_version"
            )));
        }
    }
    toml::from_str(text).map_err(|e| CliError::Invalid(format!("{origin}: {e}")))
}

pub fn parse_scenario(text: &str, origin: &str) -> Result<ScenarioConfig, CliError> {
    let cfg: ScenarioConfig = parse_versioned(text, origin, SCENARIO_FORMAT_VERSION)?;
    cfg.validate()
        .map_err(|e| CliError::Invalid(format!("{origin}: {e}")))?;
    Ok(cfg)
}

pub fn parse_verify(text: &str, origin: &str) -> Result<VerifyConfig, CliError> {
    let cfg: VerifyConfig = parse_versioned(text, origin, VERIFY_FORMAT_VERSION)?;
    cfg.validate()
        .map_err(|e| CliError::Invalid(format!("{origin}: {e}")))?;
    Ok(cfg)
}

pub fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}
