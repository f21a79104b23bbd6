//! Seeded synthetic scene bundles: small, fully self-describing test
//! fixtures with known ground truth. Each generator writes a complete
//! on-disk bundle (scene.json, OBJ meshes, PNG masks, gt.json) and is
//! byte-deterministic for a given seed.
//!
//! The five kinds cover the behaviors the optimization stages must show:
//! interpenetrating humans, a wrong depth ordering, a partially occluded
//! object with a clean oracle mask, render-and-recover pose fitting with a
//! decoy exemplar, and a combined scene for the joint stage.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::geometry::shapes::{box_mesh, icosphere, l_prism, wedge};
use crate::geometry::{Camera, RigidPose, TriMesh, Vec3};
use crate::losses::LossWeights;
use crate::occlusion::{DetectionRecord, FileOracleProvider};
use crate::raster::io::{write_index_png, write_mask_png};
use crate::raster::{render_scene, BinaryMask};
use crate::scene::{save_scene, write_obj, SceneDocument, SceneHuman, SceneObject, SCHEMA_VERSION};

pub const KINDS: &[&str] = &[
    "two-humans",
    "depth-swap",
    "occluded-cube",
    "pose-recovery",
    "joint-scene",
];

/// Sidecar written next to every generated scene: the poses the bundle was
/// built from plus bundle-specific expectations.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct GroundTruth {
    pub poses: BTreeMap<u32, RigidPose>,
    /// Occluder detection ids the ideal removal subset drops.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub expected_removed: Vec<u32>,
    /// Index of the exemplar that rendered the target mask.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generating_exemplar: Option<usize>,
}

pub fn save_ground_truth(gt: &GroundTruth, path: &Path) -> Result<()> {
    let json = serde_json::to_string_pretty(gt).map_err(|e| Error::Json {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    std::fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
}

pub fn load_ground_truth(path: &Path) -> Result<GroundTruth> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Json {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Dispatches on bundle kind; `overlap` is the interpenetration depth used
/// by the kinds that stage a collision. Returns the scene document path.
pub fn generate(kind: &str, dir: &Path, seed: u64, overlap: f64) -> Result<PathBuf> {
    match kind {
        "two-humans" => two_humans(dir, seed, overlap),
        "depth-swap" => depth_swap(dir, seed),
        "occluded-cube" => occluded_cube(dir, seed),
        "pose-recovery" => pose_recovery(dir, seed),
        "joint-scene" => joint_scene(dir, seed, overlap),
        other => Err(Error::Configuration(format!(
            "unknown bundle kind {other:?}; expected one of {KINDS:?}"
        ))),
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn camera_96() -> Camera {
    Camera::centered(120.0, 96, 96).expect("valid synthetic camera")
}

fn jitter(rng: &mut ChaCha12Rng, amplitude: f64) -> f64 {
    rng.random_range(-amplitude..=amplitude)
}

fn pose(rotation: Vec3, translation: Vec3, scale: f64) -> RigidPose {
    RigidPose::new(rotation, translation, scale).expect("generated pose is finite")
}

/// Binary silhouette of a single posed mesh.
fn render_alone(mesh: &TriMesh, p: &RigidPose, camera: &Camera) -> Result<BinaryMask> {
    let world = mesh.transformed(p);
    Ok(render_scene(&[(1, &world)], camera)?.index.mask_of(1))
}

/// Chebyshev dilation: grows the foreground by `radius` pixels.
fn dilate(mask: &BinaryMask, radius: i64) -> BinaryMask {
    let (w, h) = mask.dims();
    BinaryMask::from_fn(w, h, |x, y| {
        for dy in -radius..=radius {
            for dx in -radius..=radius {
                let nx = x as i64 + dx;
                let ny = y as i64 + dy;
                if nx >= 0
                    && ny >= 0
                    && nx < w as i64
                    && ny < h as i64
                    && mask.get(nx as u32, ny as u32)
                {
                    return true;
                }
            }
        }
        false
    })
}

fn mask_bbox(mask: &BinaryMask, what: &str) -> Result<[f64; 4]> {
    let (x0, y0, x1, y1) = mask
        .bounding_box()
        .ok_or_else(|| Error::MissingData(format!("{what} rendered to an empty mask")))?;
    Ok([x0 as f64, y0 as f64, x1 as f64, y1 as f64])
}

fn empty_doc(camera: Camera) -> SceneDocument {
    SceneDocument {
        schema_version: SCHEMA_VERSION,
        camera,
        image: None,
        humans: Vec::new(),
        objects: Vec::new(),
        fine_pairs: Vec::new(),
        gt_index_map: None,
        detections: Vec::new(),
        oracle_dir: None,
        config: None,
    }
}

fn human_entry(id: u32, mesh: &str, p: RigidPose) -> SceneHuman {
    SceneHuman {
        id,
        mesh: mesh.into(),
        gamma: None,
        pose: Some(p),
        regions: BTreeMap::new(),
    }
}

fn weights(silhouette: f64, collision: f64, depth: f64, interaction: f64) -> LossWeights {
    LossWeights {
        silhouette,
        collision,
        depth,
        interaction,
    }
}

/// Two interlocked humans: an L-shaped prism and a block sunk `overlap`
/// deep into its lower arm. Resolvable by moving both apart along y while
/// their bounds keep overlapping; ground truth parks the block inside the
/// notch, contact-free.
pub fn two_humans(dir: &Path, seed: u64, overlap: f64) -> Result<PathBuf> {
    if !(overlap > 0.0 && overlap < 0.45) {
        return Err(Error::Configuration(format!(
            "two-humans overlap must lie in (0, 0.45), got {overlap}"
        )));
    }
    ensure_dir(dir)?;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let camera = camera_96();

    let prism = l_prism(0.5, 0.6);
    let block = box_mesh(Vec3::new(0.2, 0.2, 0.25), 4);
    write_obj(&prism, &dir.join("prism.obj"))?;
    write_obj(&block, &dir.join("block.obj"))?;

    // The prism sits at depth f/sigma = 5 via its weak-perspective init.
    let prism_pose = pose(Vec3::ZERO, Vec3::new(0.0, 0.0, 5.0), 1.0);
    let block_init = pose(
        Vec3::ZERO,
        Vec3::new(
            0.25 + jitter(&mut rng, 0.03),
            0.2 - overlap,
            5.0 + jitter(&mut rng, 0.03),
        ),
        1.0,
    );
    // Lifted into the notch: clear of the arm by a margin, still inside the
    // prism's bounds.
    let block_gt = pose(
        Vec3::ZERO,
        Vec3::new(
            block_init.translation.x,
            0.25,
            block_init.translation.z,
        ),
        1.0,
    );

    let mut doc = empty_doc(camera);
    doc.humans.push(SceneHuman {
        id: 1,
        mesh: "prism.obj".into(),
        gamma: Some(crate::geometry::WeakPerspective {
            sigma: 24.0,
            tx: 0.0,
            ty: 0.0,
        }),
        pose: None,
        regions: BTreeMap::new(),
    });
    doc.humans.push(human_entry(2, "block.obj", block_init));

    let mut cfg = RunConfig::default();
    cfg.focal = camera.focal;
    // No index map ships with this bundle, so the depth term stays off.
    cfg.hhi_weights = weights(0.0, 1.0, 0.0, 0.05);
    cfg.seed = seed;
    doc.config = Some(cfg);

    let scene_path = dir.join("scene.json");
    save_scene(&doc, &scene_path)?;
    save_ground_truth(
        &GroundTruth {
            poses: [(1, prism_pose), (2, block_gt)].into(),
            ..GroundTruth::default()
        },
        &dir.join("gt.json"),
    )?;
    Ok(scene_path)
}

/// Two spheres whose depths are swapped relative to the ground-truth index
/// map: the image overlap region renders the wrong instance in front until
/// the depths cross back.
pub fn depth_swap(dir: &Path, seed: u64) -> Result<PathBuf> {
    ensure_dir(dir)?;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let camera = camera_96();

    let sphere = icosphere(0.5, 2);
    write_obj(&sphere, &dir.join("sphere.obj"))?;

    let (ax, ay) = (jitter(&mut rng, 0.04), jitter(&mut rng, 0.04));
    let (bx, by) = (0.22 + jitter(&mut rng, 0.04), jitter(&mut rng, 0.04));
    let (z_near, z_far) = (4.0, 4.35);
    let a_gt = pose(Vec3::ZERO, Vec3::new(ax, ay, z_near), 1.0);
    let b_gt = pose(Vec3::ZERO, Vec3::new(bx, by, z_far), 1.0);
    let a_init = pose(Vec3::ZERO, Vec3::new(ax, ay, z_far), 1.0);
    let b_init = pose(Vec3::ZERO, Vec3::new(bx, by, z_near), 1.0);

    let gt_render = render_scene(
        &[
            (1, &sphere.transformed(&a_gt)),
            (2, &sphere.transformed(&b_gt)),
        ],
        &camera,
    )?;
    write_index_png(&dir.join("gt_index.png"), &gt_render.index)?;

    let mut doc = empty_doc(camera);
    doc.humans.push(human_entry(1, "sphere.obj", a_init));
    doc.humans.push(human_entry(2, "sphere.obj", b_init));
    doc.gt_index_map = Some("gt_index.png".into());

    let mut cfg = RunConfig::default();
    cfg.focal = doc.camera.focal;
    cfg.hhi_weights = weights(0.0, 0.0, 1.0, 0.0);
    cfg.grid_resolution = 16;
    cfg.seed = seed;
    doc.config = Some(cfg);

    let scene_path = dir.join("scene.json");
    save_scene(&doc, &scene_path)?;
    save_ground_truth(
        &GroundTruth {
            poses: [(1, a_gt), (2, b_gt)].into(),
            ..GroundTruth::default()
        },
        &dir.join("gt.json"),
    )?;
    Ok(scene_path)
}

/// A rotated cube whose detection mask is censored by a board in front of
/// it: the visible mask additionally loses a dilation fringe around the
/// board, so only the oracle's deoccluded mask supports the true pose. The
/// file oracle holds the clean full-cube detection for the subset that
/// removes the board.
pub fn occluded_cube(dir: &Path, seed: u64) -> Result<PathBuf> {
    ensure_dir(dir)?;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let camera = camera_96();

    let cube = box_mesh(Vec3::splat(0.35), 2);
    write_obj(&cube, &dir.join("cube.obj"))?;

    let theta = 0.35 + jitter(&mut rng, 0.1);
    let t = Vec3::new(
        0.05 + jitter(&mut rng, 0.03),
        0.02 + jitter(&mut rng, 0.02),
        3.2,
    );
    let cube_gt = pose(Vec3::new(0.0, theta, 0.0), t, 1.0);
    let full = render_alone(&cube, &cube_gt, &camera)?;

    // Vertical board in front, centered on the cube's projected center so
    // the censored mask keeps slivers on both sides.
    let board = box_mesh(Vec3::new(0.15, 0.35, 0.1), 1);
    let board_pose = pose(
        Vec3::ZERO,
        Vec3::new(2.4 * t.x / t.z, 2.4 * t.y / t.z, 2.4),
        1.0,
    );
    let board_mask = render_alone(&board, &board_pose, &camera)?;

    let censored = {
        let blocked = dilate(&board_mask, 3);
        BinaryMask::from_fn(96, 96, |x, y| full.get(x, y) && !blocked.get(x, y))
    };
    write_mask_png(&dir.join("cube_mask.png"), &censored)?;
    write_mask_png(&dir.join("board_mask.png"), &board_mask)?;

    let oracle_root = dir.join("oracle");
    let removed: BTreeSet<u32> = [2].into();
    let entry_dir = FileOracleProvider::write_entry(
        &oracle_root,
        &removed,
        &[DetectionRecord {
            id: 1,
            category: "crate".into(),
            bbox: mask_bbox(&full, "full cube")?,
            mask: "full_mask.png".into(),
            rigid: true,
        }],
    )?;
    write_mask_png(&entry_dir.join("full_mask.png"), &full)?;

    let mut doc = empty_doc(camera);
    doc.objects.push(SceneObject {
        id: 1,
        category: "crate".into(),
        exemplars: vec!["cube.obj".into()],
        exemplar_index: None,
        pose: None,
        mask: Some("cube_mask.png".into()),
        eta: None,
        regions: BTreeMap::new(),
    });
    doc.detections = vec![
        DetectionRecord {
            id: 1,
            category: "crate".into(),
            bbox: mask_bbox(&censored, "censored cube")?,
            mask: "cube_mask.png".into(),
            rigid: true,
        },
        DetectionRecord {
            id: 2,
            category: "board".into(),
            bbox: mask_bbox(&board_mask, "board")?,
            mask: "board_mask.png".into(),
            rigid: false,
        },
    ];
    doc.oracle_dir = Some("oracle".into());

    let mut cfg = RunConfig::default();
    cfg.focal = doc.camera.focal;
    cfg.seed = seed;
    doc.config = Some(cfg);

    let scene_path = dir.join("scene.json");
    save_scene(&doc, &scene_path)?;
    save_ground_truth(
        &GroundTruth {
            poses: [(1, cube_gt)].into(),
            expected_removed: vec![2],
            ..GroundTruth::default()
        },
        &dir.join("gt.json"),
    )?;
    Ok(scene_path)
}

/// Render-and-recover fixture: a wedge silhouette from a known pose near
/// the restart azimuth grid, a cube decoy exemplar, and an initialization
/// 30 degrees and 20 percent of the translation off.
pub fn pose_recovery(dir: &Path, seed: u64) -> Result<PathBuf> {
    ensure_dir(dir)?;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    // Smaller frame than the other bundles: the wedge still spans ~28 px,
    // and silhouette evaluations dominate the 8-restart fit's runtime.
    let camera = Camera::centered(80.0, 64, 64).expect("valid synthetic camera");

    let decoy = box_mesh(Vec3::splat(0.3), 2);
    let target = wedge(0.42, 0.26, 0.22);
    write_obj(&decoy, &dir.join("cube.obj"))?;
    write_obj(&target, &dir.join("wedge.obj"))?;

    let spoke = rng.random_range(0..8) as f64;
    let theta = spoke * std::f64::consts::FRAC_PI_4 + jitter(&mut rng, 0.15);
    let t = Vec3::new(
        jitter(&mut rng, 0.06),
        jitter(&mut rng, 0.05),
        2.5 + jitter(&mut rng, 0.12),
    );
    let gt = pose(Vec3::new(0.0, theta, 0.0), t, 1.0);

    let mask = render_alone(&target, &gt, &camera)?;
    write_mask_png(&dir.join("mask.png"), &mask)?;

    // Translation offset: fixed norm, direction resampled until no single
    // component dominates (keeps every coordinate within the optimizer's
    // per-coordinate travel budget).
    let offset = loop {
        let v = Vec3::new(
            jitter(&mut rng, 1.0),
            jitter(&mut rng, 1.0),
            jitter(&mut rng, 1.0),
        );
        let n = v.norm();
        if n > 0.3 && v.x.abs().max(v.y.abs()).max(v.z.abs()) <= 0.75 * n {
            break v * (0.2 * t.norm() / n);
        }
    };
    let swing = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    let init = pose(
        Vec3::new(0.0, theta + swing * 30f64.to_radians(), 0.0),
        t + offset,
        1.0,
    );

    let mut doc = empty_doc(camera);
    doc.objects.push(SceneObject {
        id: 1,
        category: "wedge".into(),
        exemplars: vec!["cube.obj".into(), "wedge.obj".into()],
        exemplar_index: None,
        pose: Some(init),
        mask: Some("mask.png".into()),
        eta: None,
        regions: BTreeMap::new(),
    });

    let mut cfg = RunConfig::default();
    cfg.focal = doc.camera.focal;
    cfg.seed = seed;
    doc.config = Some(cfg);

    let scene_path = dir.join("scene.json");
    save_scene(&doc, &scene_path)?;
    save_ground_truth(
        &GroundTruth {
            poses: [(1, gt)].into(),
            generating_exemplar: Some(1),
            ..GroundTruth::default()
        },
        &dir.join("gt.json"),
    )?;
    Ok(scene_path)
}

fn face_region(mesh: &TriMesh, pick: impl Fn(Vec3) -> bool) -> Vec<u32> {
    mesh.vertices
        .iter()
        .enumerate()
        .filter(|(_, v)| pick(**v))
        .map(|(i, _)| i as u32)
        .collect()
}

/// Joint-stage fixture: two humans pinched together by `overlap`, a crate
/// grazing the first human's back, and a ground-truth index map that says
/// the crate belongs in front. The collision escapes are short; the depth
/// disagreement is held far out of reach so its loss must merely stay flat.
pub fn joint_scene(dir: &Path, seed: u64, overlap: f64) -> Result<PathBuf> {
    if !(overlap > 0.0 && overlap < 0.25) {
        return Err(Error::Configuration(format!(
            "joint-scene overlap must lie in (0, 0.25), got {overlap}"
        )));
    }
    ensure_dir(dir)?;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let camera = camera_96();

    let human = box_mesh(Vec3::splat(0.4), 3);
    let crate_mesh = box_mesh(Vec3::splat(0.3), 2);
    write_obj(&human, &dir.join("human.obj"))?;
    write_obj(&crate_mesh, &dir.join("crate.obj"))?;

    let pinch = (0.3 + overlap) / 2.0;
    let h1_init = pose(
        Vec3::ZERO,
        Vec3::new(-0.55 + pinch + jitter(&mut rng, 0.015), 0.0, 5.0),
        1.0,
    );
    let h2_init = pose(
        Vec3::ZERO,
        Vec3::new(0.55 - pinch + jitter(&mut rng, 0.015), 0.0, 5.0),
        1.0,
    );
    let h1_gt = pose(Vec3::ZERO, Vec3::new(-0.55, 0.0, 5.0), 1.0);
    let h2_gt = pose(Vec3::ZERO, Vec3::new(0.55, 0.0, 5.0), 1.0);

    // The crate starts with its near face sunk into the first human's back
    // and escapes backward; its mask is rendered at the escaped pose.
    let crate_x = -0.5 + jitter(&mut rng, 0.02);
    let crate_init = pose(Vec3::ZERO, Vec3::new(crate_x, 0.15, 5.67), 1.0);
    let crate_gt = pose(Vec3::ZERO, Vec3::new(crate_x, 0.15, 5.74), 1.0);
    // The annotation says the crate sits in front of that human, which the
    // step budget cannot reach: the depth term must hold steady, not win.
    let crate_annotated = pose(Vec3::ZERO, Vec3::new(crate_x, 0.15, 4.2), 1.0);

    let gt_render = render_scene(
        &[
            (1, &human.transformed(&h1_gt)),
            (2, &human.transformed(&h2_gt)),
            (3, &crate_mesh.transformed(&crate_annotated)),
        ],
        &camera,
    )?;
    write_index_png(&dir.join("gt_index.png"), &gt_render.index)?;

    let crate_mask = render_alone(&crate_mesh, &crate_gt, &camera)?;
    write_mask_png(&dir.join("crate_mask.png"), &crate_mask)?;

    let mut doc = empty_doc(camera);
    let mut h1 = human_entry(1, "human.obj", h1_init);
    h1.regions
        .insert("back".into(), face_region(&human, |v| v.z > 0.39));
    doc.humans.push(h1);
    doc.humans.push(human_entry(2, "human.obj", h2_init));
    let mut crate_obj = SceneObject {
        id: 3,
        category: "crate".into(),
        exemplars: vec!["crate.obj".into()],
        exemplar_index: None,
        pose: Some(crate_init),
        mask: Some("crate_mask.png".into()),
        eta: None,
        regions: BTreeMap::new(),
    };
    crate_obj
        .regions
        .insert("near".into(), face_region(&crate_mesh, |v| v.z < -0.29));
    doc.objects.push(crate_obj);
    doc.fine_pairs = vec![crate::scene::FinePairDecl {
        human: 1,
        object: 3,
        human_region: "back".into(),
        object_region: "near".into(),
    }];
    doc.gt_index_map = Some("gt_index.png".into());

    let mut cfg = RunConfig::default();
    cfg.focal = doc.camera.focal;
    cfg.hhi_weights = weights(0.0, 1.0, 0.02, 0.05);
    cfg.hoi_weights = weights(1.0, 1.0, 0.02, 0.05);
    cfg.grid_resolution = 48;
    cfg.seed = seed;
    doc.config = Some(cfg);

    let scene_path = dir.join("scene.json");
    save_scene(&doc, &scene_path)?;
    save_ground_truth(
        &GroundTruth {
            poses: [(1, h1_gt), (2, h2_gt), (3, crate_gt)].into(),
            ..GroundTruth::default()
        },
        &dir.join("gt.json"),
    )?;
    Ok(scene_path)
}
