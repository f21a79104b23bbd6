use crate::error::{Error, Result};
use crate::geometry::{TriMesh, Vec3};
use crate::parallel::map_indexed;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

/// Cubic voxel grid of interior depths, phi = max(-sdf, 0), sampled at voxel
/// centers. The grid volume is a cube: side = max padded extent of the mesh
/// bounding box, centered on the box center. Values are finite and >= 0.
#[derive(Debug, Clone, PartialEq)]
pub struct SdfGrid {
    origin: Vec3,
    cell: f64,
    n: usize,
    values: Vec<f64>,
}

impl SdfGrid {
    /// Voxelizes a watertight mesh at `resolution` cells per axis. The grid
    /// covers the mesh bounding box padded on every side by
    /// `padding_frac * diagonal`, so the zero-field boundary is inside the
    /// grid and trilinear samples fade to zero before leaving it.
    pub fn build(mesh: &TriMesh, resolution: usize, padding_frac: f64) -> Result<SdfGrid> {
        if resolution < 2 {
            return Err(Error::Configuration(format!(
                "grid resolution must be >= 2, got {resolution}"
            )));
        }
        if !(padding_frac.is_finite() && padding_frac > 0.0) {
            return Err(Error::Configuration(format!(
                "grid padding fraction must be > 0, got {padding_frac}"
            )));
        }
        if !mesh.is_watertight() {
            return Err(Error::InvalidMesh(
                "signed distance requires a watertight mesh".into(),
            ));
        }

        let bbox = mesh.aabb();
        let padded = bbox.expanded(padding_frac * bbox.diagonal());
        let extent = padded.max - padded.min;
        let side = extent.x.max(extent.y).max(extent.z);
        let cell = side / resolution as f64;
        let origin = padded.center() - Vec3::splat(side / 2.0);
        let n = resolution;

        let columns = map_indexed(n * n, |col| -> Result<Vec<f64>> {
            let ix = col / n;
            let iy = col % n;
            let cx = origin.x + (ix as f64 + 0.5) * cell;
            let cy = origin.y + (iy as f64 + 0.5) * cell;
            let crossings = column_crossings(mesh, cx, cy, cell, (ix, iy))?;
            let mut out = vec![0.0; n];
            if crossings.is_empty() {
                return Ok(out);
            }
            for (iz, slot) in out.iter_mut().enumerate() {
                let cz = origin.z + (iz as f64 + 0.5) * cell;
                let above = crossings.len() - crossings.partition_point(|&z| z <= cz);
                if above % 2 == 1 {
                    let p = Vec3::new(cx, cy, cz);
                    *slot = unsigned_distance(mesh, p);
                }
            }
            Ok(out)
        });

        let mut values = vec![0.0; n * n * n];
        for (col, res) in columns.into_iter().enumerate() {
            let col_values = res?;
            values[col * n..(col + 1) * n].copy_from_slice(&col_values);
        }
        Ok(SdfGrid { origin, cell, n, values })
    }

    pub fn resolution(&self) -> usize {
        self.n
    }

    pub fn origin(&self) -> Vec3 {
        self.origin
    }

    pub fn cell_size(&self) -> f64 {
        self.cell
    }

    pub fn cell_diagonal(&self) -> f64 {
        self.cell * 3.0f64.sqrt()
    }

    pub fn value(&self, ix: usize, iy: usize, iz: usize) -> f64 {
        self.values[(ix * self.n + iy) * self.n + iz]
    }

    fn value_or_zero(&self, ix: i64, iy: i64, iz: i64) -> f64 {
        let n = self.n as i64;
        if ix < 0 || iy < 0 || iz < 0 || ix >= n || iy >= n || iz >= n {
            0.0
        } else {
            self.values[((ix * n + iy) * n + iz) as usize]
        }
    }

    /// Trilinear interpolation between voxel centers, extended by zero
    /// outside the grid. Continuous everywhere and exact at voxel centers.
    pub fn sample(&self, p: Vec3) -> f64 {
        let u = (p - self.origin) / self.cell - Vec3::splat(0.5);
        let (fx, fy, fz) = (u.x.floor(), u.y.floor(), u.z.floor());
        let (ix, iy, iz) = (fx as i64, fy as i64, fz as i64);
        let (tx, ty, tz) = (u.x - fx, u.y - fy, u.z - fz);
        // Outside by more than one cell: all eight corners are zero.
        let n = self.n as i64;
        if ix < -1 || iy < -1 || iz < -1 || ix >= n || iy >= n || iz >= n {
            return 0.0;
        }
        let mut acc = 0.0;
        for dx in 0..2i64 {
            let wx = if dx == 0 { 1.0 - tx } else { tx };
            for dy in 0..2i64 {
                let wy = if dy == 0 { 1.0 - ty } else { ty };
                for dz in 0..2i64 {
                    let wz = if dz == 0 { 1.0 - tz } else { tz };
                    acc += wx * wy * wz * self.value_or_zero(ix + dx, iy + dy, iz + dz);
                }
            }
        }
        acc
    }

    /// Writes the grid in its dump format: four ASCII header lines
    /// (`phigrid 1`, `origin <x> <y> <z>`, `cell <size>`, `res <n>`, each
    /// terminated by `\n`, floats formatted shortest round-trip) followed by
    /// `n^3` little-endian f64 values, z-index fastest, then y, then x.
    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "phigrid 1")?;
        writeln!(w, "origin {} {} {}", self.origin.x, self.origin.y, self.origin.z)?;
        writeln!(w, "cell {}", self.cell)?;
        writeln!(w, "res {}", self.n)?;
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(r: R) -> Result<SdfGrid> {
        let mut r = BufReader::new(r);
        let mut line = String::new();
        let bad = |msg: &str, line_no| Error::Parse {
            path: "<phigrid stream>".into(),
            line: line_no,
            message: msg.to_string(),
        };
        r.read_line(&mut line).map_err(|e| Error::io("<phigrid stream>", e))?;
        if line.trim_end() != "phigrid 1" {
            return Err(bad("expected header `phigrid 1`", 1));
        }
        line.clear();
        r.read_line(&mut line).map_err(|e| Error::io("<phigrid stream>", e))?;
        let origin = {
            let rest = line
                .trim_end()
                .strip_prefix("origin ")
                .ok_or_else(|| bad("expected `origin x y z`", 2))?;
            let parts: Vec<f64> = rest
                .split(' ')
                .map(|s| s.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| bad("origin components must be floats", 2))?;
            if parts.len() != 3 {
                return Err(bad("origin needs three components", 2));
            }
            Vec3::new(parts[0], parts[1], parts[2])
        };
        line.clear();
        r.read_line(&mut line).map_err(|e| Error::io("<phigrid stream>", e))?;
        let cell: f64 = line
            .trim_end()
            .strip_prefix("cell ")
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("expected `cell <size>`", 3))?;
        line.clear();
        r.read_line(&mut line).map_err(|e| Error::io("<phigrid stream>", e))?;
        let n: usize = line
            .trim_end()
            .strip_prefix("res ")
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("expected `res <n>`", 4))?;
        let mut values = vec![0.0f64; n * n * n];
        let mut buf = [0u8; 8];
        for v in values.iter_mut() {
            r.read_exact(&mut buf).map_err(|e| Error::io("<phigrid stream>", e))?;
            *v = f64::from_le_bytes(buf);
        }
        Ok(SdfGrid { origin, cell, n, values })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_to(BufWriter::new(f)).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<SdfGrid> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        SdfGrid::read_from(f)
    }
}

/// Sorted z-values where the vertical line through (cx, cy) crosses the mesh
/// surface. Grazing configurations (line through an edge or vertex, or in the
/// plane of a vertical triangle) retry with a deterministic in-plane jitter;
/// the jitter is far smaller than a cell, so at most near-surface voxels
/// whose depth is ~0 can flip sign.
fn column_crossings(
    mesh: &TriMesh,
    cx: f64,
    cy: f64,
    cell: f64,
    col: (usize, usize),
) -> Result<Vec<f64>> {
    'attempt: for attempt in 0..16u32 {
        let r = cell * 1e-4 * attempt as f64;
        let ang = 2.399963229728653 * attempt as f64; // golden angle
        let px = cx + r * ang.cos();
        let py = cy + r * ang.sin();
        let mut crossings = Vec::new();
        for fi in 0..mesh.faces.len() {
            let [a, b, c] = mesh.face_vertices(fi);
            match line_triangle_z(px, py, a, b, c) {
                Hit::Miss => {}
                Hit::Cross(z) => crossings.push(z),
                Hit::Grazing => continue 'attempt,
            }
        }
        if crossings.len() % 2 != 0 {
            // Odd parity means a crossing was double-counted or missed.
            continue 'attempt;
        }
        crossings.sort_by(|a, b| a.partial_cmp(b).unwrap());
        return Ok(crossings);
    }
    Err(Error::SignUndecidable(format!(
        "column ({}, {}) kept grazing the surface after jitter",
        col.0, col.1
    )))
}

enum Hit {
    Miss,
    Cross(f64),
    Grazing,
}

/// Intersection of the vertical line x=px, y=py with one triangle, reported
/// as the z of the crossing. Edges and vertical triangles report `Grazing`.
fn line_triangle_z(px: f64, py: f64, a: Vec3, b: Vec3, c: Vec3) -> Hit {
    let (abx, aby) = (b.x - a.x, b.y - a.y);
    let (acx, acy) = (c.x - a.x, c.y - a.y);
    let area2 = abx * acy - aby * acx;
    let scale = (abx.abs() + aby.abs() + acx.abs() + acy.abs()).max(1e-300);
    if area2.abs() <= 1e-14 * scale * scale {
        // Vertical (edge-on) triangle: grazing only if the line touches its
        // 2D footprint, otherwise it cannot cross here.
        let near = |p: (f64, f64), q: (f64, f64)| {
            dist2_point_segment(px, py, p, q) <= (1e-12 * scale) * (1e-12 * scale)
        };
        if near((a.x, a.y), (b.x, b.y)) || near((b.x, b.y), (c.x, c.y)) || near((c.x, c.y), (a.x, a.y)) {
            return Hit::Grazing;
        }
        return Hit::Miss;
    }
    let (apx, apy) = (px - a.x, py - a.y);
    // Barycentric coordinates of (px, py).
    let v = (apx * acy - apy * acx) / area2;
    let w = (abx * apy - aby * apx) / area2;
    let u = 1.0 - v - w;
    let band = 1e-10;
    if u > band && v > band && w > band {
        return Hit::Cross(u * a.z + v * b.z + w * c.z);
    }
    if u < -band || v < -band || w < -band {
        return Hit::Miss;
    }
    Hit::Grazing
}

fn dist2_point_segment(px: f64, py: f64, a: (f64, f64), b: (f64, f64)) -> f64 {
    let (ex, ey) = (b.0 - a.0, b.1 - a.1);
    let (dx, dy) = (px - a.0, py - a.1);
    let len2 = ex * ex + ey * ey;
    let t = if len2 > 0.0 { ((dx * ex + dy * ey) / len2).clamp(0.0, 1.0) } else { 0.0 };
    let (qx, qy) = (a.0 + t * ex, a.1 + t * ey);
    let (rx, ry) = (px - qx, py - qy);
    rx * rx + ry * ry
}

/// Distance from a point to the closest point on any triangle of the mesh.
pub(crate) fn unsigned_distance(mesh: &TriMesh, p: Vec3) -> f64 {
    let mut best = f64::INFINITY;
    for fi in 0..mesh.faces.len() {
        let [a, b, c] = mesh.face_vertices(fi);
        let d = point_triangle_distance(p, a, b, c);
        if d < best {
            best = d;
        }
    }
    best
}

/// Closest distance from point to triangle, by Voronoi-region
/// classification.
pub fn point_triangle_distance(p: Vec3, a: Vec3, b: Vec3, c: Vec3) -> f64 {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(ap);
    let d2 = ac.dot(ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return ap.norm();
    }
    let bp = p - b;
    let d3 = ab.dot(bp);
    let d4 = ac.dot(bp);
    if d3 >= 0.0 && d4 <= d3 {
        return bp.norm();
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return (ap - ab * v).norm();
    }
    let cp = p - c;
    let d5 = ab.dot(cp);
    let d6 = ac.dot(cp);
    if d6 >= 0.0 && d5 <= d6 {
        return cp.norm();
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return (ap - ac * w).norm();
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return (bp + (c - b) * w).norm();
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    let closest = a + ab * v + ac * w;
    (p - closest).norm()
}
