use crate::geometry::{RigidPose, Vec3};
use crate::sdf::{penetration, SdfGrid};

/// One posed instance prepared for collision queries: its interior-depth
/// grid (local frame), current pose, and posed vertices.
#[derive(Debug, Clone)]
pub struct Collider<'a> {
    pub grid: &'a SdfGrid,
    pub pose: RigidPose,
    pub world_vertices: Vec<Vec3>,
}

impl<'a> Collider<'a> {
    /// World position of the instance's local origin, the translation
    /// proximity anchor.
    pub fn anchor(&self) -> Vec3 {
        self.pose.anchor()
    }
}

/// Damped penetration of one ordered pair: heavy when two instances claim
/// the same spot in space, discounted as their anchors separate. Anchors at
/// exactly the same point use the fixed damping `delta` instead of distance.
pub fn collision_pair_loss(pen: f64, anchor_i: Vec3, anchor_j: Vec3, delta: f64) -> f64 {
    let d = if anchor_i == anchor_j {
        delta
    } else {
        anchor_i.distance(anchor_j)
    };
    pen / d.exp()
}

/// Sum of pair losses over all ordered pairs (i, j), i != j, where the pair
/// penetration samples instance i's depth field at instance j's vertices.
pub fn collision_total(colliders: &[Collider], delta: f64) -> f64 {
    let mut total = 0.0;
    for (i, ci) in colliders.iter().enumerate() {
        for (j, cj) in colliders.iter().enumerate() {
            if i == j {
                continue;
            }
            let pen = penetration(ci.grid, &ci.pose, &cj.world_vertices);
            total += collision_pair_loss(pen, ci.anchor(), cj.anchor(), delta);
        }
    }
    total
}
