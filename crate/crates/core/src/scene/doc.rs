//! Scene bundles on disk: one versioned JSON document referencing sibling
//! mesh (OBJ) and mask (PNG) files by relative path.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::geometry::{weak_to_perspective, Camera, RigidPose, Vec3, WeakPerspective};
use crate::occlusion::{Detection, DetectionRecord};
use crate::raster::io::{read_index_png, read_mask_png};
use crate::raster::{BinaryMask, IndexMap};
use crate::scene::{read_obj, Scene, SceneInstance};

pub const SCHEMA_VERSION: u32 = 1;

/// Weak-perspective placement: image-plane translation plus scale, which
/// the loader converts to a perspective translation at depth f / sigma.
pub type WeakPerspectiveInit = WeakPerspective;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneHuman {
    pub id: u32,
    /// OBJ path relative to the document.
    pub mesh: String,
    /// Exactly one of `gamma` and `pose` must be present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<WeakPerspectiveInit>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pose: Option<RigidPose>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub regions: BTreeMap<String, Vec<u32>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneObject {
    pub id: u32,
    pub category: String,
    /// Candidate mesh paths; fitting may select any of them.
    pub exemplars: Vec<String>,
    /// Which exemplar the pose refers to (default 0).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exemplar_index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pose: Option<RigidPose>,
    /// Mask PNG the object is fit against.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask: Option<String>,
    /// Occlusion-indicator PNG; absent means nothing is forgiven unless a
    /// detection set is available to derive it from.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub regions: BTreeMap<String, Vec<u32>>,
}

/// Declares a fine interaction pair: named regions on a human and an
/// object whose centroids are pulled together while their bounds overlap.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FinePairDecl {
    pub human: u32,
    pub object: u32,
    pub human_region: String,
    pub object_region: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneDocument {
    pub schema_version: u32,
    pub camera: Camera,
    /// Source image (PNG), only needed by remote mask providers.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub humans: Vec<SceneHuman>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub objects: Vec<SceneObject>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub fine_pairs: Vec<FinePairDecl>,
    /// Ground-truth instance index map (PNG), pixel value = instance id.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gt_index_map: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub detections: Vec<DetectionRecord>,
    /// Root of the file-oracle provider layout.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle_dir: Option<String>,
    /// Bundle-specific configuration; missing fields take defaults.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<RunConfig>,
}

/// A document plus everything it references, resolved and validated.
pub struct LoadedScene {
    pub doc: SceneDocument,
    /// Directory the document's relative paths resolve against.
    pub root: PathBuf,
    pub scene: Scene,
    /// Per object id, the mask named in the document.
    pub masks: BTreeMap<u32, BinaryMask>,
    /// Per object id, the explicit occlusion indicator if one was given.
    pub etas: BTreeMap<u32, BinaryMask>,
    pub gt_index: Option<IndexMap>,
    pub detections: Vec<Detection>,
    pub config: RunConfig,
}

impl LoadedScene {
    pub fn image_path(&self) -> Option<PathBuf> {
        self.doc.image.as_ref().map(|p| self.root.join(p))
    }

    pub fn oracle_root(&self) -> Option<PathBuf> {
        self.doc.oracle_dir.as_ref().map(|p| self.root.join(p))
    }
}

fn check_mask_dims(mask: &BinaryMask, camera: &Camera, what: &str) -> Result<()> {
    if mask.dims() != (camera.width, camera.height) {
        return Err(Error::DimensionMismatch {
            what: what.into(),
            expected_w: camera.width,
            expected_h: camera.height,
            actual_w: mask.dims().0,
            actual_h: mask.dims().1,
        });
    }
    Ok(())
}

pub fn load_scene(path: &Path) -> Result<LoadedScene> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let doc: SceneDocument =
        serde_json::from_reader(BufReader::new(file)).map_err(|e| Error::Json {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
    let root = path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    resolve_scene(doc, &root)
}

/// Turns a parsed document into a runtime scene, loading and validating
/// every referenced file. Exposed separately so generators can resolve
/// in-memory documents they just wrote.
pub fn resolve_scene(doc: SceneDocument, root: &Path) -> Result<LoadedScene> {
    if doc.schema_version != SCHEMA_VERSION {
        return Err(Error::Configuration(format!(
            "unsupported schema_version {} (expected {SCHEMA_VERSION})",
            doc.schema_version
        )));
    }
    doc.camera.validate()?;
    let config = doc.config.clone().unwrap_or_default();
    config.validate()?;

    let mut scene = Scene::new(doc.camera.clone());
    for h in &doc.humans {
        let mesh = Arc::new(read_obj(&root.join(&h.mesh))?);
        let pose = match (&h.gamma, &h.pose) {
            (Some(_), Some(_)) => {
                return Err(Error::Configuration(format!(
                    "human {} declares both gamma and pose; pick one",
                    h.id
                )))
            }
            (None, None) => {
                return Err(Error::Configuration(format!(
                    "human {} needs either gamma or pose",
                    h.id
                )))
            }
            (Some(gamma), None) => {
                let t = weak_to_perspective(gamma, doc.camera.focal)?;
                RigidPose::from_translation(t)
            }
            (None, Some(pose)) => {
                pose.validate()?;
                pose.clone()
            }
        };
        let mut inst = SceneInstance::new(h.id, "human", mesh, pose);
        inst.regions = h.regions.clone();
        scene.humans.push(inst);
    }

    let mut masks = BTreeMap::new();
    let mut etas = BTreeMap::new();
    for o in &doc.objects {
        if o.exemplars.is_empty() {
            return Err(Error::Configuration(format!(
                "object {} lists no exemplar meshes",
                o.id
            )));
        }
        let index = o.exemplar_index.unwrap_or(0);
        if index >= o.exemplars.len() {
            return Err(Error::Configuration(format!(
                "object {} exemplar_index {index} out of {} exemplars",
                o.id,
                o.exemplars.len()
            )));
        }
        let mesh = Arc::new(read_obj(&root.join(&o.exemplars[index]))?);
        // Objects without a pose sit at an identity placeholder until a
        // fitting stage assigns one.
        let pose = match &o.pose {
            Some(p) => {
                p.validate()?;
                p.clone()
            }
            None => RigidPose::from_translation(Vec3::ZERO),
        };
        let mut inst = SceneInstance::new(o.id, o.category.clone(), mesh, pose);
        inst.regions = o.regions.clone();
        scene.objects.push(inst);

        if let Some(mask_path) = &o.mask {
            let mask = read_mask_png(&root.join(mask_path))?;
            check_mask_dims(&mask, &doc.camera, &format!("mask of object {}", o.id))?;
            masks.insert(o.id, mask);
        }
        if let Some(eta_path) = &o.eta {
            let eta = read_mask_png(&root.join(eta_path))?;
            check_mask_dims(&eta, &doc.camera, &format!("eta of object {}", o.id))?;
            etas.insert(o.id, eta);
        }
    }
    scene.validate()?;

    let gt_index = match &doc.gt_index_map {
        Some(p) => {
            let map = read_index_png(&root.join(p))?;
            if map.dims() != (doc.camera.width, doc.camera.height) {
                return Err(Error::DimensionMismatch {
                    what: "ground-truth index map".into(),
                    expected_w: doc.camera.width,
                    expected_h: doc.camera.height,
                    actual_w: map.dims().0,
                    actual_h: map.dims().1,
                });
            }
            Some(map)
        }
        None => None,
    };

    let detections = doc
        .detections
        .iter()
        .map(|r| {
            let d = r.resolve(root)?;
            check_mask_dims(&d.mask, &doc.camera, &format!("mask of detection {}", d.id))?;
            Ok(d)
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(LoadedScene {
        doc,
        root: root.to_path_buf(),
        scene,
        masks,
        etas,
        gt_index,
        detections,
        config,
    })
}

pub fn save_scene(doc: &SceneDocument, path: &Path) -> Result<()> {
    let json = serde_json::to_string_pretty(doc).map_err(|e| Error::Json {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    std::fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
}
