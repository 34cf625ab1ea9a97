//! Config files are TOML with one table per core section: `[sim]`,
//! `[automation]`, `[perception]` (camera under `[perception.camera]`),
//! `[scenario]`, `[experiment]`, `[stats]` and `[session]`. Missing keys
//! take their defaults.

use std::path::{Path, PathBuf};

use l2hmi_core::Config;
use sha2::{Digest, Sha256};

use crate::{Error, Result};

/// Overrides `[session] log_dir`.
pub const LOG_DIR_ENV: &str = "L2HMI_LOG_DIR";

pub fn parse(text: &str) -> Result<Config> {
    let cfg: Config = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    cfg.validate().map_err(|e| Error::Config(e.to_string()))?;
    Ok(cfg)
}

pub fn load(path: &Path) -> Result<Config> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    parse(&text).map_err(|e| match e {
        Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}

/// `path` if given, otherwise the validated defaults.
pub fn load_or_default(path: Option<&Path>) -> Result<Config> {
    match path {
        Some(p) => load(p),
        None => Ok(Config::default()),
    }
}

pub fn to_toml(cfg: &Config) -> Result<String> {
    toml::to_string_pretty(cfg).map_err(|e| Error::Config(e.to_string()))
}

/// Hex SHA-256 of the canonical JSON form.
pub fn config_hash(cfg: &Config) -> String {
    let json = serde_json::to_string(cfg).expect("config serialises");
    hex::encode(Sha256::digest(json.as_bytes()))
}

pub fn log_dir(cfg: &Config) -> PathBuf {
    match std::env::var_os(LOG_DIR_ENV) {
        Some(dir) if !dir.is_empty() => PathBuf::from(dir),
        _ => PathBuf::from(&cfg.session.log_dir),
    }
}
