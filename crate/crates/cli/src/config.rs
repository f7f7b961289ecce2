//! Settings resolution: flags, then the `--config` file, then `RANKMED_TOL`,
//! then built-in defaults.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::CliError;

pub const TOL_ENV: &str = "RANKMED_TOL";

/// Keys a config file may set. Each matches a long flag name.
pub const KEYS: &[&str] = &[
    "label-column",
    "tol",
    "variance-floor",
    "standardize",
    "gamma",
    "no-compensation",
    "medoids-only",
    "drop-bottom",
    "folds",
    "max-depth",
    "min-leaf",
    "format",
    "tsv-dir",
    "features",
    "auto",
];

/// Parsed `key=value` file. Blank lines and lines starting with `#` are
/// skipped; `_` in keys is read as `-`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::input(format!("config line {}: expected key=value, got {line:?}", no + 1))
            })?;
            let key = key.trim().replace('_', "-");
            if !KEYS.contains(&key.as_str()) {
                return Err(CliError::input(format!("config line {}: unknown key {key:?}", no + 1)));
            }
            if values.insert(key.clone(), value.trim().to_owned()).is_some() {
                return Err(CliError::input(format!("config line {}: duplicate key {key:?}", no + 1)));
            }
        }
        Ok(Self { values })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::input(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        self.raw(key)
            .map(|v| {
                v.parse()
                    .map_err(|e| CliError::input(format!("config key {key}: invalid value {v:?}: {e}")))
            })
            .transpose()
    }
}

/// First of flag, config value and default.
pub fn pick<T: FromStr>(flag: Option<T>, config: &ConfigFile, key: &str, default: T) -> Result<T, CliError>
where
    T::Err: std::fmt::Display,
{
    match flag {
        Some(v) => Ok(v),
        None => Ok(config.get(key)?.unwrap_or(default)),
    }
}

/// Tolerance from flag, config, then `env_tol`; `0` means the built-in default.
pub fn pick_tol(flag: Option<f64>, config: &ConfigFile, env_tol: Option<&str>) -> Result<f64, CliError> {
    let tol = match (flag, config.get::<f64>("tol")?, env_tol) {
        (Some(v), _, _) | (None, Some(v), _) => v,
        (None, None, Some(raw)) => raw
            .trim()
            .parse()
            .map_err(|e| CliError::input(format!("{TOL_ENV}: invalid value {raw:?}: {e}")))?,
        (None, None, None) => 0.0,
    };
    if !(tol.is_finite() && (0.0..1.0).contains(&tol)) {
        return Err(CliError::input(format!("tol must lie in [0, 1), got {tol}")));
    }
    Ok(tol)
}
