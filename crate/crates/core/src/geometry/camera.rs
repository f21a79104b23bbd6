use super::Vec3;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Pinhole camera with focal length and principal point in pixels. The camera
/// looks down +z; +x is right and +y is down, matching image row order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Camera {
    pub focal: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
}

impl Camera {
    pub fn new(focal: f64, cx: f64, cy: f64, width: u32, height: u32) -> Result<Camera> {
        let cam = Camera { focal, cx, cy, width, height };
        cam.validate()?;
        Ok(cam)
    }

    /// Camera centered on a square-ish image, the usual synthetic setup.
    pub fn centered(focal: f64, width: u32, height: u32) -> Result<Camera> {
        Camera::new(focal, width as f64 / 2.0, height as f64 / 2.0, width, height)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.focal.is_finite() && self.focal > 0.0) {
            return Err(Error::InvalidCamera(format!(
                "focal must be finite and > 0, got {}",
                self.focal
            )));
        }
        if !(self.cx.is_finite() && self.cy.is_finite()) {
            return Err(Error::InvalidCamera("principal point must be finite".into()));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidCamera(format!(
                "image size must be positive, got {}x{}",
                self.width, self.height
            )));
        }
        Ok(())
    }

    /// Perspective projection of a camera-space point to pixel coordinates.
    pub fn project(&self, p: Vec3) -> Result<[f64; 2]> {
        if p.z <= 0.0 {
            return Err(Error::BehindCamera(format!(
                "point ({}, {}, {}) has non-positive depth",
                p.x, p.y, p.z
            )));
        }
        Ok([
            self.focal * p.x / p.z + self.cx,
            self.focal * p.y / p.z + self.cy,
        ])
    }
}

/// Weak-perspective placement: in-plane offset plus an overall scale factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeakPerspective {
    pub sigma: f64,
    pub tx: f64,
    pub ty: f64,
}

/// Converts a weak-perspective placement to a full-perspective translation
/// `(tx, ty, f / sigma)`: the scale factor becomes depth along the optical
/// axis.
pub fn weak_to_perspective(wp: &WeakPerspective, focal: f64) -> Result<Vec3> {
    if !(wp.sigma.is_finite() && wp.sigma > 0.0) {
        return Err(Error::InvalidCamera(format!(
            "weak-perspective sigma must be > 0, got {}",
            wp.sigma
        )));
    }
    if !(focal.is_finite() && focal > 0.0) {
        return Err(Error::InvalidCamera(format!(
            "focal must be > 0, got {focal}"
        )));
    }
    Ok(Vec3::new(wp.tx, wp.ty, focal / wp.sigma))
}

/// Axis-aligned pixel rectangle, `x0 <= x1` and `y0 <= y1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect2 {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect2 {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Rect2> {
        if !(x0.is_finite() && y0.is_finite() && x1.is_finite() && y1.is_finite()) {
            return Err(Error::Configuration("rectangle coordinates must be finite".into()));
        }
        if x1 < x0 || y1 < y0 {
            return Err(Error::Configuration(format!(
                "malformed rectangle [{x0}, {y0}, {x1}, {y1}]: max corner below min corner"
            )));
        }
        Ok(Rect2 { x0, y0, x1, y1 })
    }

    pub fn area(&self) -> f64 {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }

    /// Intersection-over-union; empty union yields 0.
    pub fn iou(&self, o: &Rect2) -> f64 {
        let ix = (self.x1.min(o.x1) - self.x0.max(o.x0)).max(0.0);
        let iy = (self.y1.min(o.y1) - self.y0.max(o.y0)).max(0.0);
        let inter = ix * iy;
        let union = self.area() + o.area() - inter;
        if union <= 0.0 {
            0.0
        } else {
            inter / union
        }
    }
}
