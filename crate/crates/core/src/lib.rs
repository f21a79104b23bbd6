//! Places independently estimated human and object meshes into a single
//! consistent 3D scene. Per-instance reconstructions from one image are
//! mutually inconsistent: bodies interpenetrate, depth ordering contradicts
//! the image, and occluded objects fit only their visible fragments. This
//! crate optimizes instance poses against collision, depth-ordering,
//! interaction and occlusion-aware silhouette terms, in three stages (humans,
//! then objects, then a joint refinement), using derivative-free Adam over a
//! packed parameter vector.
//!
//! Everything is deterministic: randomized steps take explicit seeds, and
//! parallel sections reduce in a fixed order.

pub mod config;
pub mod error;
pub mod geometry;
pub mod losses;
pub mod metrics;
pub mod occlusion;
pub mod optim;
pub mod raster;
pub mod scene;
pub mod sdf;

mod parallel;

pub use error::{Error, Result};
