//! Run configuration read from TOML: training hyperparameters, the question
//! generator, the dialog turn cap and the synthetic corpus shape.
//!
//! ```toml
//! profile = "desk"          # base values, overridden by [train]
//! rephraser = "template"
//! max_turns = 8
//!
//! [train]
//! epochs = 10
//! seeds = [1, 2, 3]
//!
//! [train.model.encoder]
//! dim = 64
//!
//! [synthetic]
//! num_examples = 5000
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::SyntheticConfig;
use crate::service::DEFAULT_MAX_TURNS;
use crate::trainer::TrainConfig;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("config io: {0}")]
    Io(#[from] std::io::Error),
    #[error("config: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("unknown profile {0:?} (expected desk or paper)")]
    UnknownProfile(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub profile: String,
    pub rephraser: String,
    pub max_turns: usize,
    pub train: TrainConfig,
    pub synthetic: SyntheticConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            profile: "desk".into(),
            rephraser: "template".into(),
            max_turns: DEFAULT_MAX_TURNS,
            train: TrainConfig::desk(),
            synthetic: SyntheticConfig::standard(),
        }
    }
}

impl RunConfig {
    /// Parses TOML. Keys under `[train]` override the named profile.
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let raw: toml::Table = toml::from_str(text)?;
        let profile = raw
            .get("profile")
            .and_then(|p| p.as_str())
            .unwrap_or("desk")
            .to_string();
        let base = TrainConfig::profile(&profile)
            .ok_or_else(|| ConfigError::UnknownProfile(profile.clone()))?;
        let mut merged = toml::Table::try_from(RunConfig {
            profile,
            train: base,
            ..Default::default()
        })
        .expect("config serializes");
        merge(&mut merged, raw);
        Ok(merged.try_into()?)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }
}

fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}
