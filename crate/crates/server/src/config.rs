use std::path::{Path, PathBuf};

use forge_core::env::EnvConfig;
use forge_core::fold::ComplexityThresholds;
use forge_core::library::LibraryError;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error(transparent)]
    Library(#[from] LibraryError),
}

/// Service settings, read from one TOML file. Every field has a default.
///
/// ```toml
/// addr = "127.0.0.1:7878"
/// targets_dir = "crates/core/fixtures"
///
/// [env]
/// max_steps = 10
///
/// [env.solver]
/// time_limit_ms = 5000
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServerConfig {
    pub addr: String,
    pub targets_dir: Option<PathBuf>,
    /// Embedding sidecar; the `FORGE_SCORER_ADDR` variable takes precedence.
    pub scorer_addr: Option<String>,
    pub env: EnvConfig,
    pub complexity: ComplexityThresholds,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig {
            addr: "127.0.0.1:7878".to_owned(),
            targets_dir: None,
            scorer_addr: None,
            env: EnvConfig::default(),
            complexity: ComplexityThresholds::default(),
        }
    }
}

impl ServerConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    /// Reads a config file; relative `targets_dir` paths resolve against
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_owned(),
            source,
        })?;
        let mut config = Self::from_toml(&text)?;
        if let (Some(dir), Some(base)) = (&config.targets_dir, path.parent()) {
            if dir.is_relative() {
                config.targets_dir = Some(base.join(dir));
            }
        }
        Ok(config)
    }
}
