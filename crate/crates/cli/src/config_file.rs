//! `key = value` scenario files.

use std::collections::HashMap;
use std::path::Path;

use wpcs_core::{Error, ScenarioConfig};

use crate::error::CliError;

/// Parses a scenario file. Unset keys keep their defaults; the result is
/// validated as a whole before it is returned.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, CliError> {
    parse_named(text, "<config>")
}

pub fn read_config(path: &Path) -> Result<ScenarioConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_named(&text, &path.display().to_string())
}

fn parse_named(text: &str, name: &str) -> Result<ScenarioConfig, CliError> {
    let mut config = ScenarioConfig::default();
    let mut seen: HashMap<String, usize> = HashMap::new();
    let line_err = |line: usize, reason: String| CliError::ConfigLine {
        path: name.to_string(),
        line,
        reason,
    };

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(line_err(line, format!("expected `key = value`, got `{content}`")));
        };
        let (key, value) = (key.trim(), value.trim());
        if !ScenarioConfig::is_key(key) {
            return Err(line_err(line, format!("unknown key `{key}`")));
        }
        if let Some(first) = seen.insert(key.to_string(), line) {
            return Err(line_err(line, format!("`{key}` already set on line {first}")));
        }
        config
            .set(key, value)
            .map_err(|e| line_err(line, e.to_string()))?;
    }

    config.validate().map_err(|e| match &e {
        Error::Param { name: key, .. } if seen.contains_key(*key) => line_err(seen[*key], e.to_string()),
        _ => CliError::Config {
            path: name.to_string(),
            reason: e.to_string(),
        },
    })?;
    Ok(config)
}
