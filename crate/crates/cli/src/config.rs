//! Pipeline configuration file: one JSON document that every subcommand
//! reads its defaults from. Flags override individual fields.

use std::path::{Path, PathBuf};

use musobench::corpus::GenConfig;
use musobench::harness::RunConfig;
use serde::{Deserialize, Serialize};

use crate::failure::Failure;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: Option<u64>,
    /// Where outputs go when `--out` is omitted.
    pub output_root: Option<PathBuf>,
    pub gen: Option<GenConfig>,
    pub run: Option<RunConfig>,
    /// Mock persona name or persona file; replaces the HTTP endpoint.
    pub mock: Option<String>,
}

impl PipelineConfig {
    /// Reads and validates a config file. Referenced files must exist.
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Failure::usage(format!("config {}: {e}", path.display())))?;
        let cfg: Self =
            serde_json::from_str(&text).map_err(|e| Failure::usage(format!("config {}: {e}", path.display())))?;
        if let Some(gen) = &cfg.gen {
            gen.validate()?;
        }
        if let Some(run) = &cfg.run {
            run.validate()?;
            if let Some(dir) = &run.templates_dir {
                if !dir.is_dir() {
                    return Err(Failure::usage(format!(
                        "templates_dir {} does not exist",
                        dir.display()
                    )));
                }
            }
        }
        Ok(cfg)
    }

    pub fn load_opt(path: Option<&Path>) -> Result<Self, Failure> {
        path.map_or_else(|| Ok(Self::default()), Self::load)
    }

    /// `explicit`, else `output_root/default_name`.
    pub fn output(&self, explicit: Option<PathBuf>, default_name: &str) -> Result<PathBuf, Failure> {
        explicit
            .or_else(|| self.output_root.as_ref().map(|r| r.join(default_name)))
            .ok_or_else(|| Failure::usage("--out is required when the config has no output_root"))
    }
}
