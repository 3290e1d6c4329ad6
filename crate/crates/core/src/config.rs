//! Pipeline configuration file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exit::ExitParams;
use crate::obstacles::ObstacleParams;
use crate::outliers::OutlierParams;
use crate::planner::PlannerParams;
use crate::sim::ExploreParams;

pub const CONFIG_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplorationConfig {
    pub max_iterations: usize,
    pub sector_radius_factor: f64,
}

impl Default for ExplorationConfig {
    fn default() -> Self {
        let d = ExploreParams::default();
        Self {
            max_iterations: d.max_iterations,
            sector_radius_factor: d.sector_radius_factor,
        }
    }
}

/// Every stage's parameters. Missing top-level sections take their
/// defaults; unknown keys anywhere are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub format_version: u32,
    pub outliers: OutlierParams,
    pub exit: ExitParams,
    pub obstacles: ObstacleParams,
    pub planner: PlannerParams,
    pub exploration: ExplorationConfig,
    pub sim_spec: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
}

impl Default for PipelineConfig {
    /// λ = 0.6, k = 4, β = 1, K = 1000.
    fn default() -> Self {
        Self {
            format_version: CONFIG_FORMAT_VERSION,
            outliers: OutlierParams::default(),
            exit: ExitParams::default(),
            obstacles: ObstacleParams::default(),
            planner: PlannerParams::default(),
            exploration: ExplorationConfig::default(),
            sim_spec: None,
            output_dir: None,
        }
    }
}

impl PipelineConfig {
    /// Defaults with the planted-outlier calibration and the obstacle margin
    /// used for exploration.
    pub fn calibrated() -> Self {
        let explore = ExploreParams::default();
        Self {
            outliers: OutlierParams::calibrated(),
            obstacles: explore.obstacles,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.format_version != CONFIG_FORMAT_VERSION {
            return Err(Error::InvalidConfig(format!(
                "unsupported format_version {}",
                self.format_version
            )));
        }
        self.explore_params().validate()
    }

    pub fn explore_params(&self) -> ExploreParams {
        ExploreParams {
            outliers: self.outliers,
            exit: self.exit,
            obstacles: self.obstacles,
            planner: self.planner,
            max_iterations: self.exploration.max_iterations,
            sector_radius_factor: self.exploration.sector_radius_factor,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Json(j) => Error::InvalidConfig(format!("{}: {j}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}
