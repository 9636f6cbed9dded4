//! `--config` files: TOML with one optional section per command.
//!
//! ```toml
//! [vocoder]
//! steps = 2000
//! pq_levels = 128
//!
//! [toygan]
//! steps = 1500
//!
//! [spiral]
//! sigma = 0.05
//!
//! [bench]
//! repeats = 10
//! ```

use std::path::Path;

use anyhow::{Context, Result};
use cvnn::bench::BenchConfig;
use cvnn::experiments::{MiniVocoderConfig, SpiralConfig, TrainSettings};
use serde::Deserialize;

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub vocoder: MiniVocoderConfig,
    pub toygan: TrainSettings,
    pub spiral: SpiralConfig,
    pub bench: BenchConfig,
}

impl FileConfig {
    pub fn parse(text: &str) -> std::result::Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    /// Defaults when `path` is `None`. Parse errors carry the line, column
    /// and offending field.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else { return Ok(Self::default()) };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))
    }
}
