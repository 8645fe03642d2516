//! Settings shared by the evaluator, the reward and the miner, loadable from
//! a TOML file with `[normalize]`, `[matching]`, `[reward]` and `[mining]`
//! tables. Missing tables and keys keep their defaults.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matching::MatchConfig;
use crate::normalize::NormalizationConfig;
use crate::reward::{MiningConfig, RewardWeights};

/// Environment variable naming a settings file.
pub const CONFIG_ENV: &str = "LAYOUTMETRICS_CONFIG";

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EvalConfig {
    pub normalize: NormalizationConfig,
    pub matching: MatchConfig,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    pub normalize: NormalizationConfig,
    pub matching: MatchConfig,
    pub reward: RewardWeights,
    pub mining: MiningConfig,
}

impl Settings {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let settings: Settings = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        settings.validate()?;
        Ok(settings)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.matching
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        self.reward
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        self.mining
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("settings always serialize")
    }

    pub fn eval_config(&self) -> EvalConfig {
        EvalConfig {
            normalize: self.normalize.clone(),
            matching: self.matching.clone(),
        }
    }
}
