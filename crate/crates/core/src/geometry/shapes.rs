//! Watertight procedural meshes used by the synthetic scene generator, the
//! test suite and the demo. All shapes are centered on the origin and wind
//! counter-clockwise seen from outside.

use super::{TriMesh, Vec3};
use std::collections::HashMap;

struct Welder {
    vertices: Vec<Vec3>,
    faces: Vec<[u32; 3]>,
    index: HashMap<(u64, u64, u64), u32>,
}

impl Welder {
    fn new() -> Welder {
        Welder {
            vertices: Vec::new(),
            faces: Vec::new(),
            index: HashMap::new(),
        }
    }

    /// Vertices are deduplicated by exact bit pattern; callers must compute
    /// shared positions with identical arithmetic.
    fn vertex(&mut self, p: Vec3) -> u32 {
        let key = (p.x.to_bits(), p.y.to_bits(), p.z.to_bits());
        *self.index.entry(key).or_insert_with(|| {
            self.vertices.push(p);
            (self.vertices.len() - 1) as u32
        })
    }

    fn tri(&mut self, a: Vec3, b: Vec3, c: Vec3) {
        let f = [self.vertex(a), self.vertex(b), self.vertex(c)];
        self.faces.push(f);
    }

    fn quad(&mut self, a: Vec3, b: Vec3, c: Vec3, d: Vec3) {
        self.tri(a, b, c);
        self.tri(a, c, d);
    }

    fn finish(self) -> TriMesh {
        TriMesh::new(self.vertices, self.faces).expect("generated shape is valid")
    }
}

fn grid_coord(h: f64, n: usize, i: usize) -> f64 {
    -h + 2.0 * h * (i as f64 / n as f64)
}

/// Axis-aligned box with half extents `half` and `subdivisions` quads per
/// edge. Subdivision puts vertices in face interiors, which matters for
/// vertex-sampled penetration measures.
pub fn box_mesh(half: Vec3, subdivisions: usize) -> TriMesh {
    let n = subdivisions.max(1);
    let (hx, hy, hz) = (half.x, half.y, half.z);
    let gx = |k| grid_coord(hx, n, k);
    let gy = |k| grid_coord(hy, n, k);
    let gz = |k| grid_coord(hz, n, k);
    let mut w = Welder::new();
    // Each face maps a (u, v) grid cell to 3D with u cross v = outward
    // normal, so the shared quad emitter keeps windings consistent.
    let faces: [&dyn Fn(usize, usize) -> Vec3; 6] = [
        &|u, v| Vec3::new(hx, gy(u), gz(v)),  // +x: u=y, v=z
        &|u, v| Vec3::new(-hx, gy(v), gz(u)), // -x: u=z, v=y
        &|u, v| Vec3::new(gx(v), hy, gz(u)),  // +y: u=z, v=x
        &|u, v| Vec3::new(gx(u), -hy, gz(v)), // -y: u=x, v=z
        &|u, v| Vec3::new(gx(u), gy(v), hz),  // +z: u=x, v=y
        &|u, v| Vec3::new(gx(v), gy(u), -hz), // -z: u=y, v=x
    ];
    for face in faces {
        for i in 0..n {
            for j in 0..n {
                w.quad(
                    face(i, j),
                    face(i + 1, j),
                    face(i + 1, j + 1),
                    face(i, j + 1),
                );
            }
        }
    }
    w.finish()
}

/// Icosphere: subdivided icosahedron projected onto a sphere of `radius`.
pub fn icosphere(radius: f64, levels: usize) -> TriMesh {
    let phi = (1.0 + 5.0f64.sqrt()) / 2.0;
    let base: Vec<Vec3> = vec![
        Vec3::new(-1.0, phi, 0.0),
        Vec3::new(1.0, phi, 0.0),
        Vec3::new(-1.0, -phi, 0.0),
        Vec3::new(1.0, -phi, 0.0),
        Vec3::new(0.0, -1.0, phi),
        Vec3::new(0.0, 1.0, phi),
        Vec3::new(0.0, -1.0, -phi),
        Vec3::new(0.0, 1.0, -phi),
        Vec3::new(phi, 0.0, -1.0),
        Vec3::new(phi, 0.0, 1.0),
        Vec3::new(-phi, 0.0, -1.0),
        Vec3::new(-phi, 0.0, 1.0),
    ];
    let mut vertices: Vec<Vec3> = base.iter().map(|v| v.normalized() * radius).collect();
    let mut faces: Vec<[u32; 3]> = vec![
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ];
    for _ in 0..levels {
        let mut midpoints: HashMap<(u32, u32), u32> = HashMap::new();
        let mut next = Vec::with_capacity(faces.len() * 4);
        for f in &faces {
            let mut mid = [0u32; 3];
            for (k, (a, b)) in [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])].into_iter().enumerate() {
                let key = (a.min(b), a.max(b));
                mid[k] = *midpoints.entry(key).or_insert_with(|| {
                    let p = ((vertices[a as usize] + vertices[b as usize]) * 0.5)
                        .normalized()
                        * radius;
                    vertices.push(p);
                    (vertices.len() - 1) as u32
                });
            }
            next.push([f[0], mid[0], mid[2]]);
            next.push([f[1], mid[1], mid[0]]);
            next.push([f[2], mid[2], mid[1]]);
            next.push([mid[0], mid[1], mid[2]]);
        }
        faces = next;
    }
    TriMesh::new(vertices, faces).expect("icosphere is valid")
}

/// L-shaped prism: two unit columns joined at a right angle, extruded along
/// z. `unit` is the arm thickness, `depth` the extrusion length. Note the
/// shape keeps a 2-fold rotation axis along x = y; prefer `wedge` where a
/// silhouette must pin orientation uniquely.
pub fn l_prism(unit: f64, depth: f64) -> TriMesh {
    let u = unit;
    let hz = depth / 2.0;
    // Outline, counter-clockwise seen from +z, with collinear points kept so
    // cap and wall tessellations share edges.
    let outline = [
        (0.0, 0.0), (u, 0.0), (2.0 * u, 0.0), (2.0 * u, u), (u, u),
        (u, 2.0 * u), (0.0, 2.0 * u), (0.0, u),
    ];
    let off = Vec3::new(-u, -u, 0.0);
    let at = |xy: (f64, f64), z: f64| Vec3::new(xy.0, xy.1, z) + off;
    let mut w = Welder::new();
    // Caps: three unit squares each.
    let squares = [
        [(0.0, 0.0), (u, 0.0), (u, u), (0.0, u)],
        [(u, 0.0), (2.0 * u, 0.0), (2.0 * u, u), (u, u)],
        [(0.0, u), (u, u), (u, 2.0 * u), (0.0, 2.0 * u)],
    ];
    for sq in squares {
        w.quad(at(sq[0], hz), at(sq[1], hz), at(sq[2], hz), at(sq[3], hz));
        w.quad(at(sq[3], -hz), at(sq[2], -hz), at(sq[1], -hz), at(sq[0], -hz));
    }
    // Walls, one quad per outline segment.
    for i in 0..outline.len() {
        let a = outline[i];
        let b = outline[(i + 1) % outline.len()];
        w.quad(at(a, -hz), at(b, -hz), at(b, hz), at(a, hz));
    }
    w.finish()
}

/// Right-triangle prism with unequal legs `a` and `b`, extruded along z by
/// `2 * hz`. Has no rotational symmetry, which makes silhouette-based pose
/// recovery unambiguous.
pub fn wedge(a: f64, b: f64, hz: f64) -> TriMesh {
    let tri = [(-a, -b), (a, -b), (-a, b)];
    let at = |xy: (f64, f64), z: f64| Vec3::new(xy.0, xy.1, z);
    let mut w = Welder::new();
    w.tri(at(tri[0], hz), at(tri[1], hz), at(tri[2], hz));
    w.tri(at(tri[2], -hz), at(tri[1], -hz), at(tri[0], -hz));
    for i in 0..3 {
        let p = tri[i];
        let q = tri[(i + 1) % 3];
        w.quad(at(p, -hz), at(q, -hz), at(q, hz), at(p, hz));
    }
    w.finish()
}
