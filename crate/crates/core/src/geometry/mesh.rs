use super::{Aabb, RigidPose, Vec3};
use crate::error::{Error, Result};
use std::collections::HashMap;

/// Indexed triangle mesh. Faces are counter-clockwise when viewed from
/// outside, so `signed_volume` is positive for outward-oriented solids.
#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    pub vertices: Vec<Vec3>,
    pub faces: Vec<[u32; 3]>,
}

impl TriMesh {
    /// Builds a mesh and rejects out-of-range indices, repeated indices
    /// within a face, and exactly zero-area faces.
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[u32; 3]>) -> Result<TriMesh> {
        if vertices.is_empty() {
            return Err(Error::InvalidMesh("mesh has no vertices".into()));
        }
        if faces.is_empty() {
            return Err(Error::InvalidMesh("mesh has no faces".into()));
        }
        let n = vertices.len() as u32;
        for (fi, f) in faces.iter().enumerate() {
            if f[0] >= n || f[1] >= n || f[2] >= n {
                return Err(Error::InvalidMesh(format!(
                    "face {fi} references vertex out of range (mesh has {n} vertices)"
                )));
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(Error::InvalidMesh(format!(
                    "face {fi} repeats a vertex index"
                )));
            }
        }
        let mesh = TriMesh { vertices, faces };
        for (fi, _) in mesh.faces.iter().enumerate() {
            if mesh.face_area(fi) == 0.0 {
                return Err(Error::InvalidMesh(format!("face {fi} has zero area")));
            }
        }
        Ok(mesh)
    }

    pub fn face_vertices(&self, fi: usize) -> [Vec3; 3] {
        let f = self.faces[fi];
        [
            self.vertices[f[0] as usize],
            self.vertices[f[1] as usize],
            self.vertices[f[2] as usize],
        ]
    }

    pub fn face_area(&self, fi: usize) -> f64 {
        let [a, b, c] = self.face_vertices(fi);
        (b - a).cross(c - a).norm() * 0.5
    }

    /// Mean of the vertex positions.
    pub fn centroid(&self) -> Vec3 {
        let mut sum = Vec3::ZERO;
        for v in &self.vertices {
            sum += *v;
        }
        sum / self.vertices.len() as f64
    }

    pub fn aabb(&self) -> Aabb {
        Aabb::from_points(self.vertices.iter().copied())
            .expect("validated mesh has vertices")
    }

    /// Volume by the divergence theorem; positive when faces wind outward.
    pub fn signed_volume(&self) -> f64 {
        let mut six_v = 0.0;
        for fi in 0..self.faces.len() {
            let [a, b, c] = self.face_vertices(fi);
            six_v += a.dot(b.cross(c));
        }
        six_v / 6.0
    }

    /// A mesh is watertight when every undirected edge is shared by exactly
    /// two faces, once in each direction.
    pub fn is_watertight(&self) -> bool {
        // (count, direction balance) per undirected edge.
        let mut edges: HashMap<(u32, u32), (u32, i64)> = HashMap::new();
        for f in &self.faces {
            for (a, b) in [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])] {
                let key = (a.min(b), a.max(b));
                let dir = if a < b { 1 } else { -1 };
                let e = edges.entry(key).or_insert((0, 0));
                e.0 += 1;
                e.1 += dir;
            }
        }
        edges.values().all(|&(count, balance)| count == 2 && balance == 0)
    }

    pub fn transformed(&self, pose: &RigidPose) -> TriMesh {
        let m = pose.map();
        TriMesh {
            vertices: self.vertices.iter().map(|&v| m.apply(v)).collect(),
            faces: self.faces.clone(),
        }
    }
}
