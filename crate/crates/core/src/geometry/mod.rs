//! Geometric primitives shared by every other module: vectors, rotations,
//! triangle meshes, rigid poses, bounding volumes and the camera model.

mod aabb;
mod camera;
mod mat;
mod mesh;
mod pose;
pub mod shapes;
mod vec;

pub use aabb::Aabb;
pub use camera::{weak_to_perspective, Camera, Rect2, WeakPerspective};
pub use mat::Mat3;
pub use shapes::{box_mesh, icosphere, l_prism, wedge};
pub use mesh::TriMesh;
pub use pose::{PoseMap, RigidPose};
pub use vec::Vec3;

/// Canonicalizes an axis-angle vector so its magnitude lies in `[0, 2*pi)`.
///
/// Vectors already in range are returned unchanged (bit-exact), which keeps
/// pose round-trips through parameter packing lossless.
pub fn canonicalize_axis_angle(omega: Vec3) -> Vec3 {
    let theta = omega.norm();
    if theta < std::f64::consts::TAU {
        return omega;
    }
    let reduced = theta % std::f64::consts::TAU;
    omega * (reduced / theta)
}

/// Geodesic distance between two rotations in radians, in `[0, pi]`.
pub fn geodesic_angle(a: &Mat3, b: &Mat3) -> f64 {
    let rel = a.transpose().mul_mat(b);
    let c = ((rel.trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
    c.acos()
}
