//! `alp.toml` plus `ALP_*` environment overrides.
//!
//! An override names a key path with `__` between levels, so
//! `ALP_OAI__PAGE_SIZE=50` sets `oai.page_size` and
//! `ALP_PROVIDERS__GALLICA__MODE=live` sets `providers.gallica.mode`.
//! Values are read as TOML scalars when they parse as one, else as strings.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use alp_core::matcher::MatchConfig;
use alp_core::oai::OaiConfig;
use alp_providers::ProviderSettings;
use serde::Deserialize;
use thiserror::Error;

pub const ENV_PREFIX: &str = "ALP_";
pub const DEFAULT_CONFIG_FILE: &str = "alp.toml";

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub store: PathBuf,
    pub server: ServerConfig,
    pub oai: OaiConfig,
    pub matcher: MatchConfig,
    pub matching: MatchingConfig,
    pub providers: BTreeMap<String, ProviderSettings>,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            store: PathBuf::from("store"),
            server: ServerConfig::default(),
            oai: OaiConfig::default(),
            matcher: MatchConfig::default(),
            matching: MatchingConfig::default(),
            providers: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServerConfig {
    pub bind: String,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig { bind: "127.0.0.1:8080".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MatchingConfig {
    /// Root of the replay fixtures; provider `x` reads `<fixtures_dir>/x/`.
    pub fixtures_dir: PathBuf,
    /// Candidates requested from each provider per record.
    pub max_results: usize,
    pub retry_attempts: u32,
    pub retry_base_delay_ms: u64,
}

impl Default for MatchingConfig {
    fn default() -> Self {
        MatchingConfig {
            fixtures_dir: PathBuf::from("fixtures/providers"),
            max_results: 10,
            retry_attempts: 3,
            retry_base_delay_ms: 500,
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{origin}: {message}")]
    Invalid { origin: String, message: String },
}

fn scalar(raw: &str) -> toml::Value {
    match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) => match t.remove("v") {
            Some(v @ (toml::Value::Integer(_) | toml::Value::Float(_) | toml::Value::Boolean(_))) => v,
            _ => toml::Value::String(raw.to_owned()),
        },
        Err(_) => toml::Value::String(raw.to_owned()),
    }
}

fn apply_override(table: &mut toml::Table, var: &str, raw: &str) -> Result<(), ConfigError> {
    let invalid = |message: String| ConfigError::Invalid { origin: var.to_owned(), message };
    let path: Vec<String> = var[ENV_PREFIX.len()..].split("__").map(str::to_ascii_lowercase).collect();
    if path.iter().any(String::is_empty) {
        return Err(invalid("empty key segment".into()));
    }
    let (last, parents) = path.split_last().expect("non-empty");
    let mut cur = table;
    for key in parents {
        let entry = cur.entry(key.clone()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry.as_table_mut().ok_or_else(|| invalid(format!("{key} is not a table")))?;
    }
    cur.insert(last.clone(), scalar(raw));
    Ok(())
}

/// Deserialize a config from TOML text and `(name, value)` environment pairs.
/// Variables outside the `ALP_` prefix, and `ALP_CONFIG` itself, are ignored.
pub fn from_parts(
    origin: &str,
    text: &str,
    env: impl IntoIterator<Item = (String, String)>,
) -> Result<Config, ConfigError> {
    let mut table: toml::Table =
        toml::from_str(text).map_err(|e| ConfigError::Invalid { origin: origin.to_owned(), message: e.to_string() })?;
    let mut vars: Vec<(String, String)> =
        env.into_iter().filter(|(k, _)| k.starts_with(ENV_PREFIX) && k != "ALP_CONFIG" && k != "ALP_LOG").collect();
    vars.sort();
    for (k, v) in &vars {
        apply_override(&mut table, k, v)?;
    }
    Config::deserialize(toml::Value::Table(table))
        .map_err(|e| ConfigError::Invalid { origin: origin.to_owned(), message: e.to_string() })
}

/// Load `path` (or `alp.toml` when present) and apply the process environment.
/// Relative paths in the file resolve against the file's directory.
pub fn load(path: Option<&Path>) -> Result<Config, ConfigError> {
    let path = path.map(Path::to_path_buf).or_else(|| {
        let default = PathBuf::from(DEFAULT_CONFIG_FILE);
        default.is_file().then_some(default)
    });
    let (origin, text, base) = match &path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|source| ConfigError::Read { path: p.clone(), source })?;
            (p.display().to_string(), text, p.parent().map(Path::to_path_buf))
        }
        None => ("defaults".to_owned(), String::new(), None),
    };
    let mut config = from_parts(&origin, &text, std::env::vars())?;
    if let Some(base) = base.filter(|b| !b.as_os_str().is_empty()) {
        for p in [&mut config.store, &mut config.matching.fixtures_dir] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }
    Ok(config)
}
