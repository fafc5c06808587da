use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fogsim::{EnvParams, FEATURE_DIM};
use crate::policy::{default_beta, Algorithm, GammaMode, ToofConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaModeName {
    Theoretical,
    Tuned,
}

/// Run configuration, read from JSON. Every key is optional; unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub arms: usize,
    pub features: usize,
    pub horizon: u64,
    pub seeds: Vec<u64>,
    pub algorithms: Vec<Algorithm>,
    pub lambda: f64,
    pub delta: f64,
    pub gamma_mode: GammaModeName,
    pub c: f64,
    pub env: EnvParams,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            arms: 10,
            features: FEATURE_DIM,
            horizon: 2000,
            seeds: (0..50).collect(),
            algorithms: Algorithm::ALL.to_vec(),
            lambda: 1.0,
            delta: 0.05,
            gamma_mode: GammaModeName::Tuned,
            c: 0.01,
            env: EnvParams::default(),
            output_dir: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.arms == 0 {
            return bad("arms must be at least 1".into());
        }
        if self.horizon < self.arms as u64 {
            return bad(format!(
                "horizon {} must be at least the number of arms {}",
                self.horizon, self.arms
            ));
        }
        if self.features != FEATURE_DIM {
            return bad(format!(
                "the fog environment produces {FEATURE_DIM} features, got features = {}",
                self.features
            ));
        }
        if self.seeds.is_empty() {
            return bad("at least one seed is required".into());
        }
        if self.algorithms.is_empty() {
            return bad("at least one algorithm is required".into());
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad(format!("delta must lie in (0, 1), got {}", self.delta));
        }
        self.toof_config()
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        self.env.validate()
    }

    pub fn toof_config(&self) -> ToofConfig {
        ToofConfig {
            lambda: self.lambda,
            beta: default_beta(),
            gamma_mode: match self.gamma_mode {
                GammaModeName::Theoretical => GammaMode::Theoretical { delta: self.delta },
                GammaModeName::Tuned => GammaMode::Tuned { c: self.c },
            },
        }
    }
}
