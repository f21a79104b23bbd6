use super::buffers::Silhouette;
use super::render::{render_scene, NEAR_PLANE};
use crate::error::{Error, Result};
use crate::geometry::{Camera, TriMesh};
use crate::parallel::map_indexed;
use std::collections::HashMap;

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Projected outline of a mesh: the 2D segments of edges whose adjacent
/// faces change facing (projected signed areas differ in sign), plus edges
/// whose neighbor was clipped away by the near plane, plus open-mesh border
/// edges. Faces with any vertex at or behind the near plane are excluded.
pub fn silhouette_segments(mesh: &TriMesh, camera: &Camera) -> Result<Vec<[[f64; 2]; 2]>> {
    camera.validate()?;
    let n_faces = mesh.faces.len();
    // Per face: Some(front?) if projectable, None if clipped.
    let mut facing: Vec<Option<bool>> = Vec::with_capacity(n_faces);
    let mut projected: Vec<[f64; 2]> = vec![[0.0, 0.0]; mesh.vertices.len()];
    let mut vertex_ok = vec![false; mesh.vertices.len()];
    for (vi, v) in mesh.vertices.iter().enumerate() {
        if v.z > NEAR_PLANE {
            let uv = camera.project(*v).expect("depth checked");
            projected[vi] = uv;
            vertex_ok[vi] = true;
        }
    }
    for f in &mesh.faces {
        let ok = f.iter().all(|&vi| vertex_ok[vi as usize]);
        if !ok {
            facing.push(None);
            continue;
        }
        let [a, b, c] = [
            projected[f[0] as usize],
            projected[f[1] as usize],
            projected[f[2] as usize],
        ];
        let area2 = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
        facing.push(Some(area2 > 0.0));
    }
    if facing.iter().all(|f| f.is_none()) {
        return Err(Error::BehindCamera(
            "no face of the mesh is entirely in front of the near plane".into(),
        ));
    }

    let mut edge_faces: HashMap<(u32, u32), Vec<usize>> = HashMap::new();
    for (fi, f) in mesh.faces.iter().enumerate() {
        for (a, b) in [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])] {
            edge_faces.entry((a.min(b), a.max(b))).or_default().push(fi);
        }
    }
    let mut segments = Vec::new();
    // Deterministic order: walk faces, emit an edge when this face is its
    // lowest-indexed owner.
    for (fi, f) in mesh.faces.iter().enumerate() {
        for (a, b) in [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])] {
            let key = (a.min(b), a.max(b));
            let owners = &edge_faces[&key];
            if owners[0] != fi {
                continue;
            }
            let here = facing[fi];
            let outline = match (here, owners.len()) {
                (None, _) => false,
                (Some(_), 1) => true, // open-mesh border
                (Some(front), _) => owners[1..].iter().any(|&of| match facing[of] {
                    None => true, // neighbor clipped away
                    Some(other_front) => other_front != front,
                }),
            };
            if outline && vertex_ok[a as usize] && vertex_ok[b as usize] {
                segments.push([projected[a as usize], projected[b as usize]]);
            }
        }
    }
    Ok(segments)
}

fn dist_point_segment(px: f64, py: f64, s: &[[f64; 2]; 2]) -> f64 {
    let (ax, ay) = (s[0][0], s[0][1]);
    let (ex, ey) = (s[1][0] - ax, s[1][1] - ay);
    let (dx, dy) = (px - ax, py - ay);
    let len2 = ex * ex + ey * ey;
    let t = if len2 > 0.0 {
        ((dx * ex + dy * ey) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let (rx, ry) = (dx - t * ex, dy - t * ey);
    (rx * rx + ry * ry).sqrt()
}

/// Renders a soft silhouette. Each pixel's value is a sigmoid of its signed
/// distance to the projected outline, positive inside the hard coverage:
/// `sigmoid(2 d / soft_width)`. The value crosses 0.5 exactly on the outline
/// and varies smoothly as the mesh moves, because hard coverage flips exactly
/// where the outline distance reaches zero. `soft_width = 0` returns the hard
/// 0/1 coverage.
pub fn render_silhouette(mesh: &TriMesh, camera: &Camera, soft_width: f64) -> Result<Silhouette> {
    camera.validate()?;
    if !(soft_width.is_finite() && soft_width >= 0.0) {
        return Err(Error::Configuration(format!(
            "soft_width must be finite and >= 0, got {soft_width}"
        )));
    }
    if mesh.vertices.iter().all(|v| v.z <= NEAR_PLANE) {
        return Err(Error::BehindCamera(
            "every vertex is at or behind the near plane".into(),
        ));
    }
    let hard = render_scene(&[(1, mesh)], camera)?.index;
    let (w, h) = (camera.width, camera.height);
    if soft_width == 0.0 {
        let mut s = Silhouette::new(w, h);
        for y in 0..h {
            for x in 0..w {
                s.set(x, y, if hard.get(x, y) != 0 { 1.0 } else { 0.0 });
            }
        }
        return Ok(s);
    }
    let segments = silhouette_segments(mesh, camera)?;
    if segments.is_empty() {
        // Projectively degenerate (e.g. an edge-on sheet): soft values would
        // need an outline; fall back to hard coverage.
        return render_silhouette(mesh, camera, 0.0);
    }
    let rows = map_indexed(h as usize, |y| {
        let py = y as f64 + 0.5;
        let mut row = Vec::with_capacity(w as usize);
        for x in 0..w {
            let px = x as f64 + 0.5;
            let mut d = f64::INFINITY;
            for s in &segments {
                let ds = dist_point_segment(px, py, s);
                if ds < d {
                    d = ds;
                }
            }
            let signed = if hard.get(x, y as u32) != 0 { d } else { -d };
            row.push(sigmoid(2.0 * signed / soft_width));
        }
        row
    });
    Ok(Silhouette::from_rows(w, h, rows))
}
