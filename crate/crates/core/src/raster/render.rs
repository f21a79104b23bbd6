use super::buffers::{DepthMap, IndexMap};
use crate::error::{Error, Result};
use crate::geometry::{Camera, TriMesh, Vec3};

/// Geometry closer than this is clipped before projection.
pub const NEAR_PLANE: f64 = 1e-4;

/// Depth and instance-id images from one rasterization pass.
#[derive(Debug, Clone)]
pub struct RenderOutput {
    pub depth: DepthMap,
    pub index: IndexMap,
}

/// Rasterizes world-space meshes into a shared z-buffer. Pixel centers sit at
/// (x + 0.5, y + 0.5); coverage follows the top-left fill rule so meshes
/// sharing an edge never double-cover or drop a pixel. Depth is interpolated
/// perspective-correctly (linear in 1/z). Exact depth ties resolve to the
/// lower instance id, making the pass independent of mesh order.
pub fn render_scene(meshes: &[(u32, &TriMesh)], camera: &Camera) -> Result<RenderOutput> {
    camera.validate()?;
    if meshes.is_empty() {
        return Err(Error::Configuration("render needs at least one mesh".into()));
    }
    let mut seen = std::collections::HashSet::new();
    for &(id, _) in meshes {
        if id == 0 {
            return Err(Error::Configuration(
                "instance id 0 is reserved for the background".into(),
            ));
        }
        if !seen.insert(id) {
            return Err(Error::Configuration(format!("duplicate instance id {id}")));
        }
    }

    let mut out = RenderOutput {
        depth: DepthMap::new(camera.width, camera.height),
        index: IndexMap::new(camera.width, camera.height),
    };
    for &(id, mesh) in meshes {
        for fi in 0..mesh.faces.len() {
            let tri = mesh.face_vertices(fi);
            for clipped in clip_near(tri) {
                raster_triangle(&clipped, camera, id, &mut out);
            }
        }
    }
    Ok(out)
}

/// Depth image of a single instance rendered alone.
pub fn render_depth(mesh: &TriMesh, camera: &Camera) -> Result<DepthMap> {
    Ok(render_scene(&[(1, mesh)], camera)?.depth)
}

/// Clips a camera-space triangle against z = NEAR_PLANE. Yields 0, 1 or 2
/// triangles.
fn clip_near(tri: [Vec3; 3]) -> Vec<[Vec3; 3]> {
    let inside: Vec<bool> = tri.iter().map(|v| v.z > NEAR_PLANE).collect();
    let n_in = inside.iter().filter(|&&b| b).count();
    let lerp_to_plane = |a: Vec3, b: Vec3| -> Vec3 {
        let t = (NEAR_PLANE - a.z) / (b.z - a.z);
        a + (b - a) * t
    };
    match n_in {
        3 => vec![tri],
        0 => vec![],
        1 => {
            let i = inside.iter().position(|&b| b).unwrap();
            let a = tri[i];
            let b = tri[(i + 1) % 3];
            let c = tri[(i + 2) % 3];
            vec![[a, lerp_to_plane(a, b), lerp_to_plane(a, c)]]
        }
        2 => {
            let i = inside.iter().position(|&b| !b).unwrap();
            let c = tri[i]; // the outside vertex
            let a = tri[(i + 1) % 3];
            let b = tri[(i + 2) % 3];
            let bc = lerp_to_plane(b, c);
            let ca = lerp_to_plane(a, c);
            vec![[a, b, bc], [a, bc, ca]]
        }
        _ => unreachable!(),
    }
}

fn edge_raw(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
}

/// Edge function evaluated with a canonical anchor, so the two triangles
/// sharing edge (a, b) compute exactly opposite values and a pixel on the
/// edge lands in exactly one of them.
fn edge(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> f64 {
    let ordered = a[0] < b[0] || (a[0] == b[0] && a[1] <= b[1]);
    if ordered {
        edge_raw(a, b, p)
    } else {
        -edge_raw(b, a, p)
    }
}

/// Is a->b a top or left edge of a triangle whose interior has positive edge
/// values? With y growing downward: left edges rise (dy < 0), the top edge is
/// horizontal heading right (dy == 0, dx > 0).
fn is_top_left(a: [f64; 2], b: [f64; 2]) -> bool {
    let dy = b[1] - a[1];
    dy < 0.0 || (dy == 0.0 && b[0] > a[0])
}

fn raster_triangle(tri: &[Vec3; 3], camera: &Camera, id: u32, out: &mut RenderOutput) {
    // Clipping guarantees positive depth.
    let mut uv = [[0.0f64; 2]; 3];
    let mut inv_z = [0.0f64; 3];
    for (k, v) in tri.iter().enumerate() {
        uv[k] = [
            camera.focal * v.x / v.z + camera.cx,
            camera.focal * v.y / v.z + camera.cy,
        ];
        inv_z[k] = 1.0 / v.z;
    }
    let mut area = edge(uv[0], uv[1], uv[2]);
    if area == 0.0 {
        return; // projects to a line
    }
    if area < 0.0 {
        uv.swap(1, 2);
        inv_z.swap(1, 2);
        area = -area;
    }

    let min_x = uv.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
    let max_x = uv.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
    let min_y = uv.iter().map(|p| p[1]).fold(f64::INFINITY, f64::min);
    let max_y = uv.iter().map(|p| p[1]).fold(f64::NEG_INFINITY, f64::max);
    let x0 = (min_x - 0.5).floor().max(0.0) as i64;
    let x1 = (max_x - 0.5).ceil().min(camera.width as f64 - 1.0) as i64;
    let y0 = (min_y - 0.5).floor().max(0.0) as i64;
    let y1 = (max_y - 0.5).ceil().min(camera.height as f64 - 1.0) as i64;
    if x1 < x0 || y1 < y0 {
        return;
    }

    let accept = |e: f64, a: [f64; 2], b: [f64; 2]| e > 0.0 || (e == 0.0 && is_top_left(a, b));
    for py in y0..=y1 {
        for px in x0..=x1 {
            let p = [px as f64 + 0.5, py as f64 + 0.5];
            let e0 = edge(uv[1], uv[2], p);
            let e1 = edge(uv[2], uv[0], p);
            let e2 = edge(uv[0], uv[1], p);
            if !(accept(e0, uv[1], uv[2]) && accept(e1, uv[2], uv[0]) && accept(e2, uv[0], uv[1]))
            {
                continue;
            }
            let w = (e0 * inv_z[0] + e1 * inv_z[1] + e2 * inv_z[2]) / area;
            let z = 1.0 / w;
            let (x, y) = (px as u32, py as u32);
            let cur = out.depth.get(x, y);
            let cur_id = out.index.get(x, y);
            if z < cur || (z == cur && (cur_id == 0 || id < cur_id)) {
                out.depth.set(x, y, z);
                out.index.set(x, y, id);
            }
        }
    }
}
