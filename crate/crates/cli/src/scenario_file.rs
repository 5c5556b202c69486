//! Scenario files: TOML documents mirroring [`Scenario`].

use std::collections::BTreeSet;
use std::path::Path;

use macromodule::fleet::Scenario;

use crate::error::{CliError, Result};

/// A validated scenario plus the keys that were filled in from defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedScenario {
    pub scenario: Scenario,
    /// Dotted key paths present in the resolved scenario but absent from the file.
    pub defaults_applied: Vec<String>,
}

pub fn parse_scenario(path: &Path) -> Result<LoadedScenario> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_scenario_str(&text, &path.display().to_string())
}

/// Parses and validates; `origin` names the source in syntax errors.
pub fn parse_scenario_str(text: &str, origin: &str) -> Result<LoadedScenario> {
    let de = toml::Deserializer::parse(text).map_err(|e| syntax_error(text, origin, &e))?;
    let scenario: Scenario = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        CliError::Invalid {
            field: error_field(&path, inner.message()),
            reason: inner.message().to_string(),
            location: inner.span().map(|s| {
                let (line, column) = line_column(text, s.start);
                format!("{line}:{column}")
            }),
        }
    })?;
    scenario.validate().map_err(CliError::validation)?;

    let given: toml::Table = text.parse().map_err(|e| syntax_error(text, origin, &e))?;
    let resolved = toml::Table::try_from(&scenario).map_err(|e| CliError::Runtime(e.to_string()))?;
    let mut have = BTreeSet::new();
    leaf_paths(&toml::Value::Table(given), String::new(), &mut have);
    let mut all = BTreeSet::new();
    leaf_paths(&toml::Value::Table(resolved), String::new(), &mut all);
    Ok(LoadedScenario {
        scenario,
        defaults_applied: all.difference(&have).cloned().collect(),
    })
}

/// The resolved scenario as TOML; parsing it back gives the same scenario.
pub fn echo(scenario: &Scenario) -> String {
    toml::to_string(scenario).expect("scenarios always serialize")
}

fn syntax_error(text: &str, origin: &str, e: &toml::de::Error) -> CliError {
    let (line, column) = e.span().map_or((1, 1), |s| line_column(text, s.start));
    CliError::Syntax {
        path: origin.to_string(),
        line,
        column,
        message: e.message().to_string(),
    }
}

/// Serde reports a missing key against its parent; name the key itself.
fn error_field(path: &str, message: &str) -> String {
    let parent = if path == "." { "" } else { path };
    let missing = message
        .strip_prefix("missing field `")
        .and_then(|rest| rest.split_once('`'))
        .map(|(name, _)| name);
    match (parent, missing) {
        ("", Some(name)) => name.to_string(),
        ("", None) => "scenario".to_string(),
        (p, Some(name)) => format!("{p}.{name}"),
        (p, None) => p.to_string(),
    }
}

/// 1-based line and column (in characters) of a byte offset.
fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let offset = offset.min(text.len());
    let before = &text[..offset];
    let line = before.matches('\n').count() + 1;
    let line_start = before.rfind('\n').map_or(0, |i| i + 1);
    (line, text[line_start..offset].chars().count() + 1)
}

fn leaf_paths(v: &toml::Value, prefix: String, out: &mut BTreeSet<String>) {
    match v {
        toml::Value::Table(t) => {
            for (k, v) in t {
                let p = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                leaf_paths(v, p, out);
            }
        }
        toml::Value::Array(items) if items.iter().any(|i| i.is_table()) => {
            for (i, v) in items.iter().enumerate() {
                leaf_paths(v, format!("{prefix}[{i}]"), out);
            }
        }
        _ => {
            out.insert(prefix);
        }
    }
}
