//! Brute-force signed distances, independent of the voxel grid. This is the
//! reference the grid is validated against: exact point-triangle distances
//! and sign by ray-crossing parity. Far too slow for optimization loops.

use super::grid::{point_triangle_distance, unsigned_distance};
use crate::error::{Error, Result};
use crate::geometry::{TriMesh, Vec3};

/// Fixed, roughly isotropic ray directions tried in order when a cast
/// grazes an edge or vertex. Deterministic across runs.
const RAY_DIRECTIONS: [[f64; 3]; 8] = [
    [0.0, 0.0, 1.0],
    [0.57735, 0.57735, 0.57735],
    [-0.30151, 0.90453, 0.30151],
    [0.80178, -0.26726, 0.53452],
    [-0.66667, -0.33333, 0.66667],
    [0.40825, 0.81650, -0.40825],
    [-0.53452, 0.26726, -0.80178],
    [0.70711, 0.0, -0.70711],
];

/// Signed distance to a watertight mesh: negative inside, positive outside,
/// zero on the surface. Sign is decided by ray parity; all candidate ray
/// directions grazing the surface is reported as an error.
pub fn signed_distance(mesh: &TriMesh, p: Vec3) -> Result<f64> {
    if !mesh.is_watertight() {
        return Err(Error::InvalidMesh(
            "signed distance requires a watertight mesh".into(),
        ));
    }
    let d = unsigned_distance(mesh, p);
    if inside(mesh, p)? {
        Ok(-d)
    } else {
        Ok(d)
    }
}

/// Interior depth max(-sdf, 0), the quantity the voxel grid stores.
pub fn interior_depth(mesh: &TriMesh, p: Vec3) -> Result<f64> {
    Ok((-signed_distance(mesh, p)?).max(0.0))
}

/// Symmetric vertex-sampled penetration of two world-space meshes: the sum
/// of each mesh's vertex interior depths inside the other. Zero iff no
/// vertex of either mesh lies strictly inside the other; a vertex whose
/// sign no ray can decide is on the surface, where the depth is zero.
pub fn mesh_penetration(a: &TriMesh, b: &TriMesh) -> Result<f64> {
    let mut total = 0.0;
    for (host, guest) in [(a, b), (b, a)] {
        for v in &guest.vertices {
            match interior_depth(host, *v) {
                Ok(d) => total += d,
                Err(Error::SignUndecidable(_)) => {}
                Err(e) => return Err(e),
            }
        }
    }
    Ok(total)
}

fn inside(mesh: &TriMesh, p: Vec3) -> Result<bool> {
    'dir: for dir in RAY_DIRECTIONS {
        let d = Vec3::new(dir[0], dir[1], dir[2]);
        let mut hits = 0usize;
        for fi in 0..mesh.faces.len() {
            let [a, b, c] = mesh.face_vertices(fi);
            match ray_triangle(p, d, a, b, c) {
                RayHit::Miss => {}
                RayHit::Cross => hits += 1,
                RayHit::Grazing => continue 'dir,
            }
        }
        return Ok(hits % 2 == 1);
    }
    Err(Error::SignUndecidable(format!(
        "every candidate ray from point ({}, {}, {}) grazed the surface",
        p.x, p.y, p.z
    )))
}

enum RayHit {
    Miss,
    Cross,
    Grazing,
}

/// Moller-Trumbore with a conservative grazing band: hits within `band` of
/// an edge, or with t within `band` of zero, are not trusted.
fn ray_triangle(orig: Vec3, dir: Vec3, a: Vec3, b: Vec3, c: Vec3) -> RayHit {
    let e1 = b - a;
    let e2 = c - a;
    let pvec = dir.cross(e2);
    let det = e1.dot(pvec);
    let scale = e1.norm() * e2.norm();
    if det.abs() <= 1e-12 * scale {
        // Ray parallel to the triangle plane. Trust the miss unless the ray
        // origin lies essentially in the plane near the triangle.
        let n = e1.cross(e2);
        let dist = (orig - a).dot(n.normalized());
        if dist.abs() <= 1e-9 && point_triangle_distance(orig, a, b, c) <= 1e-9 {
            return RayHit::Grazing;
        }
        return RayHit::Miss;
    }
    let inv_det = 1.0 / det;
    let tvec = orig - a;
    let u = tvec.dot(pvec) * inv_det;
    let qvec = tvec.cross(e1);
    let v = dir.dot(qvec) * inv_det;
    let t = e2.dot(qvec) * inv_det;
    let band = 1e-10;
    if u < -band || v < -band || u + v > 1.0 + band {
        return RayHit::Miss;
    }
    if t < -band {
        return RayHit::Miss;
    }
    if u < band || v < band || u + v > 1.0 - band || t < band {
        return RayHit::Grazing;
    }
    RayHit::Cross
}
