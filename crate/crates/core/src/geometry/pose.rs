use super::{canonicalize_axis_angle, Mat3, Vec3};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Similarity transform `v -> s * (R v + t)` with the rotation stored as an
/// axis-angle vector. The uniform scale applies to the translated point, so
/// the world position of the local origin is `s * t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigidPose {
    pub rotation: Vec3,
    pub translation: Vec3,
    #[serde(default = "default_scale")]
    pub scale: f64,
}

fn default_scale() -> f64 {
    1.0
}

impl RigidPose {
    pub fn identity() -> RigidPose {
        RigidPose {
            rotation: Vec3::ZERO,
            translation: Vec3::ZERO,
            scale: 1.0,
        }
    }

    pub fn new(rotation: Vec3, translation: Vec3, scale: f64) -> Result<RigidPose> {
        let pose = RigidPose {
            rotation: canonicalize_axis_angle(rotation),
            translation,
            scale,
        };
        pose.validate()?;
        Ok(pose)
    }

    pub fn from_translation(translation: Vec3) -> RigidPose {
        RigidPose {
            rotation: Vec3::ZERO,
            translation,
            scale: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.rotation.is_finite() || !self.translation.is_finite() {
            return Err(Error::Configuration("pose components must be finite".into()));
        }
        if !(self.scale.is_finite() && self.scale > 0.0) {
            return Err(Error::Configuration(format!(
                "pose scale must be > 0, got {}",
                self.scale
            )));
        }
        Ok(())
    }

    pub fn rotation_matrix(&self) -> Mat3 {
        Mat3::from_axis_angle(self.rotation)
    }

    /// World position of the local-frame origin, `s * t`.
    pub fn anchor(&self) -> Vec3 {
        self.translation * self.scale
    }

    pub fn map(&self) -> PoseMap {
        let r = self.rotation_matrix();
        PoseMap {
            r_inv: r.transpose(),
            r,
            t: self.translation,
            s: self.scale,
        }
    }

    pub fn transform_point(&self, p: Vec3) -> Vec3 {
        self.map().apply(p)
    }
}

/// Pose with the rotation matrix baked out, for transforming many points.
#[derive(Debug, Clone, Copy)]
pub struct PoseMap {
    pub r: Mat3,
    pub r_inv: Mat3,
    pub t: Vec3,
    pub s: f64,
}

impl PoseMap {
    pub fn apply(&self, p: Vec3) -> Vec3 {
        (self.r.mul_vec(p) + self.t) * self.s
    }

    /// Inverse transform, `R^T (w / s - t)`.
    pub fn invert(&self, w: Vec3) -> Vec3 {
        self.r_inv.mul_vec(w / self.s - self.t)
    }
}
