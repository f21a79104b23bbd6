//! Run configuration: every tunable constant in one validated struct. JSON
//! configs may specify any subset of fields; the rest keep their defaults.

use crate::error::{Error, Result};
use crate::losses::LossWeights;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Learning schedule for one optimization stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageConfig {
    pub learning_rate: f64,
    pub iterations: usize,
    /// Number of azimuth restarts; 1 means a single run from the
    /// initialization.
    pub restarts: usize,
}

impl StageConfig {
    pub fn validate(&self, stage: &str) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::Configuration(format!(
                "{stage}.learning_rate must be > 0, got {}",
                self.learning_rate
            )));
        }
        if self.iterations == 0 {
            return Err(Error::Configuration(format!(
                "{stage}.iterations must be >= 1"
            )));
        }
        if self.restarts == 0 {
            return Err(Error::Configuration(format!(
                "{stage}.restarts must be >= 1"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Focal length in pixels used when synthesizing cameras and when
    /// converting weak-perspective placements.
    pub focal: f64,
    /// Translation-proximity damping for coincident instances, in (0, 1).
    pub delta: f64,
    /// Voxel grid resolution per axis.
    pub grid_resolution: usize,
    /// Grid padding as a fraction of the mesh bounding-box diagonal.
    pub padding_frac: f64,
    /// Soft silhouette transition width in pixels; 0 renders hard coverage.
    pub soft_width: f64,
    /// Central finite-difference step.
    pub fd_step: f64,
    /// Max-filter window for mask edge maps; odd, >= 3.
    pub edge_filter: usize,
    /// Cap on enumerated occluder subsets (the empty and full subsets are
    /// always kept).
    pub subset_cap: usize,
    /// Detection-box IOU above which an instance counts as an occluder.
    pub occluder_iou: f64,
    /// Add the mask-edges-to-rendered-edges direction to the chamfer term.
    pub symmetric_chamfer: bool,
    /// Term weights for the human-human objective.
    pub hhi_weights: LossWeights,
    /// Term weights for the human-object objective.
    pub hoi_weights: LossWeights,
    pub human_stage: StageConfig,
    pub object_stage: StageConfig,
    pub joint_stage: StageConfig,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> RunConfig {
        RunConfig {
            focal: 1000.0,
            delta: 0.5,
            grid_resolution: 64,
            padding_frac: 0.1,
            soft_width: 2.0,
            fd_step: 1e-3,
            edge_filter: 7,
            subset_cap: 16,
            occluder_iou: 0.3,
            symmetric_chamfer: false,
            hhi_weights: LossWeights::default(),
            hoi_weights: LossWeights::default(),
            human_stage: StageConfig {
                learning_rate: 2e-3,
                iterations: 100,
                restarts: 1,
            },
            object_stage: StageConfig {
                learning_rate: 2e-3,
                iterations: 200,
                restarts: 8,
            },
            joint_stage: StageConfig {
                learning_rate: 3e-4,
                iterations: 500,
                restarts: 1,
            },
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.focal.is_finite() && self.focal > 0.0) {
            return Err(Error::Configuration(format!(
                "focal must be > 0, got {}",
                self.focal
            )));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::Configuration(format!(
                "delta must lie in (0, 1), got {}",
                self.delta
            )));
        }
        if self.grid_resolution < 2 {
            return Err(Error::Configuration(format!(
                "grid_resolution must be >= 2, got {}",
                self.grid_resolution
            )));
        }
        if !(self.padding_frac.is_finite() && self.padding_frac > 0.0) {
            return Err(Error::Configuration(format!(
                "padding_frac must be > 0, got {}",
                self.padding_frac
            )));
        }
        if !(self.soft_width.is_finite() && self.soft_width >= 0.0) {
            return Err(Error::Configuration(format!(
                "soft_width must be >= 0, got {}",
                self.soft_width
            )));
        }
        if !(self.fd_step.is_finite() && self.fd_step > 0.0) {
            return Err(Error::Configuration(format!(
                "fd_step must be > 0, got {}",
                self.fd_step
            )));
        }
        if self.edge_filter < 3 || self.edge_filter % 2 == 0 {
            return Err(Error::Configuration(format!(
                "edge_filter must be odd and >= 3, got {}",
                self.edge_filter
            )));
        }
        if self.subset_cap < 1 {
            return Err(Error::Configuration("subset_cap must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.occluder_iou) {
            return Err(Error::Configuration(format!(
                "occluder_iou must lie in [0, 1], got {}",
                self.occluder_iou
            )));
        }
        self.hhi_weights.validate("hhi_weights")?;
        self.hoi_weights.validate("hoi_weights")?;
        self.human_stage.validate("human_stage")?;
        self.object_stage.validate("object_stage")?;
        self.joint_stage.validate("joint_stage")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: RunConfig = serde_json::from_str(&text).map_err(|e| Error::Json {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("config serializes");
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}
