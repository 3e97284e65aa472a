//! The run configuration file: one JSON object whose optional sections
//! override the defaults of each pipeline stage.
//!
//! ```json
//! {
//!   "world":   { "topology": "factory", "n_persons": 1000, "seed": 1 },
//!   "sttg":    { "frame_gap_s": 4.3 },
//!   "taskgen": { "alpha": 0.5, "window_s": 300, "margin": 2.0 },
//!   "env":     { "budget": 20, "witness": { "template_seed": 42 } }
//! }
//! ```
//!
//! Unknown keys are rejected so that typos do not silently fall back to
//! defaults.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::env::EnvConfig;
use crate::sttg::BuildConfig;
use crate::synth::WorldGenConfig;
use crate::taskgen::GenConfig;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub world: WorldGenConfig,
    pub sttg: BuildConfig,
    pub taskgen: GenConfig,
    pub env: EnvConfig,
}

impl Config {
    pub fn from_json(text: &str) -> Result<Config, String> {
        serde_json::from_str(text).map_err(|e| e.to_string())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Config, String> {
        crate::io::read_json(path)
    }
}
