//! Run configuration: a flat TOML file whose keys can each be overridden by
//! a command-line flag (or its `DIALEVAL_` environment variable).

use std::path::Path;

use anyhow::{Context, Result};
use dialeval::serialize::WireFormatConfig;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub endpoint: Option<String>,
    pub scorer: Option<String>,
    pub scorer_metric: Option<String>,
    pub seed: Option<u64>,
    pub k: Option<usize>,
    pub beam_size: Option<u32>,
    pub max_new_tokens: Option<u32>,
    pub timeout_secs: Option<f64>,
    pub max_in_flight: Option<usize>,
    pub retries: Option<u32>,
    pub resamples: Option<usize>,
    pub env_marker: Option<String>,
    pub target_marker: Option<String>,
    pub user_prefix: Option<String>,
    pub system_prefix: Option<String>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

/// Flag value, else config-file value, else the default.
pub fn pick<T>(flag: Option<T>, file: &Option<T>, default: T) -> T
where
    T: Clone,
{
    flag.or_else(|| file.clone()).unwrap_or(default)
}

#[derive(Debug, Clone, Default, clap::Args)]
pub struct WireArgs {
    /// Marker that introduces the environment section.
    #[arg(long)]
    pub env_marker: Option<String>,
    /// Marker that introduces the target response.
    #[arg(long)]
    pub target_marker: Option<String>,
    #[arg(long)]
    pub user_prefix: Option<String>,
    #[arg(long)]
    pub system_prefix: Option<String>,
}

impl WireArgs {
    pub fn resolve(&self, file: &FileConfig) -> WireFormatConfig {
        let d = WireFormatConfig::default();
        WireFormatConfig {
            env_marker: pick(self.env_marker.clone(), &file.env_marker, d.env_marker),
            target_marker: pick(self.target_marker.clone(), &file.target_marker, d.target_marker),
            user_prefix: pick(self.user_prefix.clone(), &file.user_prefix, d.user_prefix),
            system_prefix: pick(self.system_prefix.clone(), &file.system_prefix, d.system_prefix),
            turn_separator: d.turn_separator,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flag_beats_file_beats_default() {
        let file: FileConfig = toml::from_str("seed = 7\nk = 10").unwrap();
        assert_eq!(pick(Some(1), &file.seed, 0), 1);
        assert_eq!(pick(None, &file.seed, 0), 7);
        assert_eq!(pick(None, &file.retries, 3), 3);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<FileConfig>("sede = 7").is_err());
    }
}
