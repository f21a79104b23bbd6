//! Scene runtime: posed instances, interaction graphs, staged objectives.
//!
//! A [`Scene`] owns humans and objects as posed instances over shared
//! (reference-counted) meshes and distance grids, so snapshots for parallel
//! objective evaluation are cheap. Grids live in each instance's local frame
//! and stay valid under any pose change.

mod doc;
mod obj;
mod gradient;
mod objective;
mod stages;
pub mod synthetic;

pub use doc::{
    load_scene, save_scene, FinePairDecl, LoadedScene, SceneDocument, SceneHuman, SceneObject,
    WeakPerspectiveInit, SCHEMA_VERSION,
};
pub use gradient::interaction_gradient;
pub use obj::{read_obj, read_obj_from, write_obj, write_obj_to};
pub use objective::{
    collision_total_hh, collision_total_ho, hhi_loss, hoi_loss, interaction_hh, interaction_ho,
    joint_loss, scene_depth_loss, LossBreakdown, ObjectiveContext,
};
pub use stages::{
    fit_object_pose, optimize_humans, optimize_joint, ObjectFit, StageResult, StageTraceRow,
    write_stage_trace_csv,
};

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{Aabb, Camera, RigidPose, TriMesh, Vec3};
use crate::losses::BodySummary;
use crate::sdf::SdfGrid;

/// One posed mesh in the scene. `grid` is the instance's local-frame
/// distance grid, built lazily by [`Scene::prepare_grids`].
#[derive(Debug, Clone)]
pub struct SceneInstance {
    pub id: u32,
    pub category: String,
    pub mesh: Arc<TriMesh>,
    pub pose: RigidPose,
    pub grid: Option<Arc<SdfGrid>>,
    /// Named vertex subsets used as fine interaction regions.
    pub regions: BTreeMap<String, Vec<u32>>,
}

impl SceneInstance {
    pub fn new(id: u32, category: impl Into<String>, mesh: Arc<TriMesh>, pose: RigidPose) -> Self {
        SceneInstance {
            id,
            category: category.into(),
            mesh,
            pose,
            grid: None,
            regions: BTreeMap::new(),
        }
    }

    /// Mesh with the pose applied to every vertex.
    pub fn world_mesh(&self) -> TriMesh {
        self.mesh.transformed(&self.pose)
    }

    /// Centroid and bounds of the posed mesh.
    pub fn world_summary(&self) -> BodySummary {
        let map = self.pose.map();
        let mut sum = Vec3::ZERO;
        let mut min = Vec3::splat(f64::INFINITY);
        let mut max = Vec3::splat(f64::NEG_INFINITY);
        for v in &self.mesh.vertices {
            let w = map.apply(*v);
            sum += w;
            min = min.min_components(w);
            max = max.max_components(w);
        }
        BodySummary {
            centroid: sum * (1.0 / self.mesh.vertices.len() as f64),
            aabb: Aabb { min, max },
        }
    }

    /// Centroid and bounds of one named region's posed vertices.
    pub fn region_summary(&self, region: &str) -> Result<BodySummary> {
        let indices = self.regions.get(region).ok_or_else(|| {
            Error::Configuration(format!(
                "instance {} has no region named {region:?}",
                self.id
            ))
        })?;
        let map = self.pose.map();
        let mut sum = Vec3::ZERO;
        let mut min = Vec3::splat(f64::INFINITY);
        let mut max = Vec3::splat(f64::NEG_INFINITY);
        for &i in indices {
            let w = map.apply(self.mesh.vertices[i as usize]);
            sum += w;
            min = min.min_components(w);
            max = max.max_components(w);
        }
        Ok(BodySummary {
            centroid: sum * (1.0 / indices.len() as f64),
            aabb: Aabb { min, max },
        })
    }
}

/// Camera plus every posed instance, humans and objects kept apart because
/// the stages train different parameter sets for each.
#[derive(Debug, Clone)]
pub struct Scene {
    pub camera: Camera,
    pub humans: Vec<SceneInstance>,
    pub objects: Vec<SceneInstance>,
}

impl Scene {
    pub fn new(camera: Camera) -> Self {
        Scene {
            camera,
            humans: Vec::new(),
            objects: Vec::new(),
        }
    }

    pub fn instances(&self) -> impl Iterator<Item = &SceneInstance> {
        self.humans.iter().chain(self.objects.iter())
    }

    pub fn instance(&self, id: u32) -> Option<&SceneInstance> {
        self.instances().find(|inst| inst.id == id)
    }

    pub fn human_ids(&self) -> BTreeSet<u32> {
        self.humans.iter().map(|h| h.id).collect()
    }

    pub fn object_ids(&self) -> BTreeSet<u32> {
        self.objects.iter().map(|o| o.id).collect()
    }

    /// All ids must be unique and nonzero (zero is the background label in
    /// index maps).
    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for inst in self.instances() {
            if inst.id == 0 {
                return Err(Error::Configuration(
                    "instance id 0 is reserved for background".into(),
                ));
            }
            if !seen.insert(inst.id) {
                return Err(Error::Configuration(format!(
                    "duplicate instance id {}",
                    inst.id
                )));
            }
            for (name, indices) in &inst.regions {
                if indices.is_empty() {
                    return Err(Error::Configuration(format!(
                        "region {name:?} of instance {} is empty",
                        inst.id
                    )));
                }
                if let Some(&bad) = indices
                    .iter()
                    .find(|&&i| i as usize >= inst.mesh.vertices.len())
                {
                    return Err(Error::Configuration(format!(
                        "region {name:?} of instance {} references vertex {bad} out of {}",
                        inst.id,
                        inst.mesh.vertices.len()
                    )));
                }
            }
        }
        Ok(())
    }

    /// Builds any missing local-frame distance grid. Grids depend only on
    /// the mesh, so repeated calls and pose changes are free.
    pub fn prepare_grids(&mut self, resolution: usize, padding_frac: f64) -> Result<()> {
        for inst in self.humans.iter_mut().chain(self.objects.iter_mut()) {
            if inst.grid.is_none() {
                let grid = SdfGrid::build(&inst.mesh, resolution, padding_frac)?;
                inst.grid = Some(Arc::new(grid));
            }
        }
        Ok(())
    }

    pub fn poses(&self) -> BTreeMap<u32, RigidPose> {
        self.instances().map(|i| (i.id, i.pose.clone())).collect()
    }

    /// Cheap snapshot with poses replaced where `poses` has an entry.
    /// Meshes and grids are shared, not copied.
    pub fn with_poses(&self, poses: &BTreeMap<u32, RigidPose>) -> Scene {
        let swap = |inst: &SceneInstance| {
            let mut out = inst.clone();
            if let Some(pose) = poses.get(&inst.id) {
                out.pose = pose.clone();
            }
            out
        };
        Scene {
            camera: self.camera.clone(),
            humans: self.humans.iter().map(swap).collect(),
            objects: self.objects.iter().map(swap).collect(),
        }
    }
}

/// Which instance pairs the interaction losses may pull together. Instance
/// level edges are frozen when the graph is built (once per stage); fine
/// region pairs are re-gated by region overlap at every evaluation.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct InteractionGraph {
    /// Unordered human pairs, stored with the smaller id first.
    pub human_pairs: BTreeSet<(u32, u32)>,
    /// (human id, object id) pairs.
    pub human_object_pairs: BTreeSet<(u32, u32)>,
    /// Declared fine region pairs per (human id, object id).
    pub fine_pairs: BTreeMap<(u32, u32), Vec<(String, String)>>,
}

/// Gates instance pairs by world-bounds overlap at the scene's current
/// poses and records the declared fine pairs verbatim.
pub fn build_interaction_graph(scene: &Scene, fine: &[FinePairDecl]) -> InteractionGraph {
    let human_boxes: Vec<(u32, Aabb)> = scene
        .humans
        .iter()
        .map(|h| (h.id, h.world_summary().aabb))
        .collect();
    let object_boxes: Vec<(u32, Aabb)> = scene
        .objects
        .iter()
        .map(|o| (o.id, o.world_summary().aabb))
        .collect();

    let mut graph = InteractionGraph::default();
    for (a, (ia, ba)) in human_boxes.iter().enumerate() {
        for (ib, bb) in human_boxes.iter().skip(a + 1).map(|x| (&x.0, &x.1)) {
            if ba.overlaps(bb) {
                let pair = if ia < ib { (*ia, *ib) } else { (*ib, *ia) };
                graph.human_pairs.insert(pair);
            }
        }
    }
    for (ih, bh) in &human_boxes {
        for (io, bo) in &object_boxes {
            if bh.overlaps(bo) {
                graph.human_object_pairs.insert((*ih, *io));
            }
        }
    }
    for decl in fine {
        graph
            .fine_pairs
            .entry((decl.human, decl.object))
            .or_default()
            .push((decl.human_region.clone(), decl.object_region.clone()));
    }
    graph
}
