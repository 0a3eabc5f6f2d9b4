//! Run configuration shared by all subcommands.

use std::path::{Path, PathBuf};

use cic_core::cic::CicConfig;
use cic_core::embedding::EmbeddingConfig;
use serde::{Deserialize, Serialize};

/// Pairwise detector used by `scan`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Cic,
    Gc,
    Ccm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CcmSettings {
    /// Shadow-manifold dimension; `None` uses the embedding width `p + 1`.
    pub e: Option<usize>,
    pub tau: usize,
    /// Number of library sizes between `library_min` and the maximum.
    pub library_steps: usize,
    pub library_min: usize,
}

impl Default for CcmSettings {
    fn default() -> Self {
        Self {
            e: None,
            tau: 1,
            library_steps: 5,
            library_min: 50,
        }
    }
}

/// Everything that determines a run. The top-level `seed` replaces
/// `cic.seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub embedding: EmbeddingConfig,
    pub cic: CicConfig,
    pub method: Method,
    pub granger_order: usize,
    pub ccm: CcmSettings,
    pub seed: u64,
    pub jobs: usize,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            embedding: EmbeddingConfig::default(),
            cic: CicConfig::default(),
            method: Method::Cic,
            granger_order: 3,
            ccm: CcmSettings::default(),
            seed: 0,
            jobs: 1,
            out: PathBuf::from("."),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config {path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Invalid(#[from] cic_core::Error),
    #[error("{0}")]
    Other(String),
}

impl RunConfig {
    pub fn from_json(text: &str, path: &Path) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|source| ConfigError::Parse {
            path: path.to_owned(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_owned(),
            source,
        })?;
        Self::from_json(&text, path)
    }

    /// Propagates the master seed and checks every section.
    pub fn resolve(mut self) -> Result<Self, ConfigError> {
        self.cic.seed = self.seed;
        self.embedding.validate()?;
        self.cic.validate()?;
        if self.granger_order == 0 {
            return Err(ConfigError::Other("granger_order must be at least 1".into()));
        }
        if self.ccm.tau == 0 || self.ccm.e == Some(0) || self.ccm.library_steps == 0 {
            return Err(ConfigError::Other("ccm e, tau and library_steps must be at least 1".into()));
        }
        if self.jobs == 0 {
            return Err(ConfigError::Other("jobs must be at least 1".into()));
        }
        Ok(self)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}
