//! Voxelized interior-depth fields. A grid stores the modified distance
//! phi = max(-sdf, 0): zero outside the surface, distance-to-surface inside.
//! Grids are built once per mesh in its local frame; world-space queries
//! inverse-transform through the instance pose and scale the result, so pose
//! optimization never rebuilds a grid.

mod grid;
pub mod oracle;

pub use grid::SdfGrid;
pub use oracle::mesh_penetration;

use crate::geometry::{RigidPose, Vec3};

/// Interior depth of a world-space point with respect to a posed instance:
/// `s * phi(R^T (v / s - t))`. Zero outside.
pub fn world_phi(grid: &SdfGrid, pose: &RigidPose, v: Vec3) -> f64 {
    let m = pose.map();
    grid.sample(m.invert(v)) * pose.scale
}

/// Penetration of a vertex set into a posed instance: the sum of interior
/// depths over all vertices. Vertices are in world space. Summation order is
/// fixed, so the result is deterministic.
pub fn penetration(grid: &SdfGrid, pose: &RigidPose, world_vertices: &[Vec3]) -> f64 {
    let m = pose.map();
    let mut total = 0.0;
    for &v in world_vertices {
        total += grid.sample(m.invert(v)) * pose.scale;
    }
    total
}
