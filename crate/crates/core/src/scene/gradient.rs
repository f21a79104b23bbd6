//! Closed-form gradient of the interaction losses with respect to packed
//! pose parameters. Centroids are affine in translation and scale and pass
//! through the rotation via the Rodrigues derivative, so this term never
//! needs finite differences. Fine-pair gates are evaluated at the current
//! poses and held fixed, exactly as a finite-difference probe of the loss
//! sees them away from a gate boundary.

use crate::error::{Error, Result};
use crate::geometry::{Mat3, RigidPose, Vec3};
use crate::optim::{ParamBlock, ParamVector};
use crate::scene::{InteractionGraph, Scene, SceneInstance};

fn local_mean(vertices: &[Vec3]) -> Vec3 {
    let mut sum = Vec3::ZERO;
    for v in vertices {
        sum += *v;
    }
    sum * (1.0 / vertices.len() as f64)
}

fn region_local_mean(inst: &SceneInstance, region: &str) -> Result<Vec3> {
    let indices = inst.regions.get(region).ok_or_else(|| {
        Error::Configuration(format!(
            "instance {} has no region named {region:?}",
            inst.id
        ))
    })?;
    let mut sum = Vec3::ZERO;
    for &i in indices {
        sum += inst.mesh.vertices[i as usize];
    }
    Ok(sum * (1.0 / indices.len() as f64))
}

/// One side of a centroid-distance term: d|C_a - C_b| / d(params of this
/// instance), where C = s (R c + t) for the local mean c, so translation
/// enters scaled and log-scale rescales the whole centroid. `direction` is
/// the unit vector from the other centroid toward this one; `world` is this
/// side's centroid.
fn accumulate(
    grad: &mut [f64],
    layout: &[(u32, ParamBlock, usize)],
    pose: &RigidPose,
    local: Vec3,
    world: Vec3,
    direction: Vec3,
) {
    for &(_, block, offset) in layout {
        match block {
            ParamBlock::Translation => {
                grad[offset] += direction.x * pose.scale;
                grad[offset + 1] += direction.y * pose.scale;
                grad[offset + 2] += direction.z * pose.scale;
            }
            ParamBlock::LogScale => {
                // C is linear in s, so dC/d(log s) = C.
                grad[offset] += direction.dot(world);
            }
            ParamBlock::AxisAngle => {
                let dr = Mat3::rotation_gradient(pose.rotation);
                for k in 0..3 {
                    let dc = dr[k].mul_vec(local) * pose.scale;
                    grad[offset + k] += direction.dot(dc);
                }
            }
        }
    }
}

/// Gradient of interaction_hh + interaction_ho at the parameter vector's
/// current values, aligned with its layout. Pair distances of exactly zero
/// are skipped: the norm has no gradient there and the loss contributes
/// nothing to first order.
pub fn interaction_gradient(
    scene: &Scene,
    graph: &InteractionGraph,
    pv: &ParamVector,
) -> Result<Vec<f64>> {
    let posed = scene.with_poses(&pv.unpack());
    let mut grad = vec![0.0; pv.len()];
    let layout: Vec<(u32, ParamBlock, usize)> = pv.layout().collect();
    let of = |id: u32| -> Vec<(u32, ParamBlock, usize)> {
        layout.iter().copied().filter(|(i, _, _)| *i == id).collect()
    };
    let instance = |id: u32| {
        posed.instance(id).ok_or_else(|| {
            Error::Configuration(format!("interaction graph references unknown instance {id}"))
        })
    };

    let mut pull = |a: &SceneInstance, b: &SceneInstance, ca: Vec3, cb: Vec3, la: Vec3, lb: Vec3| {
        let diff = ca - cb;
        let dist = diff.norm();
        if dist == 0.0 {
            return;
        }
        let u = diff * (1.0 / dist);
        accumulate(&mut grad, &of(a.id), &a.pose, la, ca, u);
        accumulate(&mut grad, &of(b.id), &b.pose, lb, cb, -u);
    };

    for &(i, j) in &graph.human_pairs {
        let (a, b) = (instance(i)?, instance(j)?);
        pull(
            a,
            b,
            a.world_summary().centroid,
            b.world_summary().centroid,
            local_mean(&a.mesh.vertices),
            local_mean(&b.mesh.vertices),
        );
    }
    for &(h, o) in &graph.human_object_pairs {
        let (a, b) = (instance(h)?, instance(o)?);
        pull(
            a,
            b,
            a.world_summary().centroid,
            b.world_summary().centroid,
            local_mean(&a.mesh.vertices),
            local_mean(&b.mesh.vertices),
        );
    }
    for (&(h, o), pairs) in &graph.fine_pairs {
        let (a, b) = (instance(h)?, instance(o)?);
        for (hr, or) in pairs {
            let sh = a.region_summary(hr)?;
            let so = b.region_summary(or)?;
            if sh.interacts(&so) {
                pull(
                    a,
                    b,
                    sh.centroid,
                    so.centroid,
                    region_local_mean(a, hr)?,
                    region_local_mean(b, or)?,
                );
            }
        }
    }
    Ok(grad)
}
