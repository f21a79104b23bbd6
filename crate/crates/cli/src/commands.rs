//! Command bodies. Each loads its inputs, drives the library, and writes
//! the output document, loss traces, and buffers next to `--out`. Errors
//! carry the stage that produced them so the JSON on stderr says where a
//! pipeline died.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;

use scenefit::config::RunConfig;
use scenefit::geometry::TriMesh;
use scenefit::losses::MaskTarget;
use scenefit::metrics::{evaluate_corpus, write_report_csv, write_report_json, EvalCase};
use scenefit::occlusion::{build_eta, deoccluded_fit, FileOracleProvider, MaskProvider};
use scenefit::raster::io::{write_depth_bin, write_index_png, write_mask_png};
use scenefit::raster::{render_scene, render_silhouette, BinaryMask, DepthMap};
use scenefit::scene::{
    build_interaction_graph, fit_object_pose, load_scene, optimize_humans as run_human_stage,
    optimize_joint as run_joint_stage, save_scene, synthetic, write_stage_trace_csv, LoadedScene,
    Scene, SceneDocument, StageTraceRow,
};
use scenefit::{Error, Result};

use crate::{EvalArgs, FitArgs, GenArgs, ProviderKind, RenderArgs, StageArgs};

pub struct CmdError {
    stage: String,
    kind: &'static str,
    message: String,
}

impl CmdError {
    pub fn usage(message: String) -> CmdError {
        CmdError {
            stage: "usage".into(),
            kind: "usage",
            message,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({
            "error": { "kind": self.kind, "message": self.message, "stage": self.stage }
        })
        .to_string()
    }
}

fn kind_of(e: &Error) -> &'static str {
    match e {
        Error::InvalidMesh(_) => "invalid-mesh",
        Error::InvalidCamera(_) => "invalid-camera",
        Error::BehindCamera(_) => "behind-camera",
        Error::DimensionMismatch { .. } => "dimension-mismatch",
        Error::Configuration(_) => "configuration",
        Error::MissingData(_) => "missing-data",
        Error::SignUndecidable(_) => "sign-undecidable",
        Error::NonFiniteObjective { .. } => "non-finite-objective",
        Error::NoMatch(_) => "no-match",
        Error::Provider(_) => "provider",
        Error::Parse { .. } => "parse",
        Error::Io { .. } => "io",
        Error::Image { .. } => "image",
        Error::Json { .. } => "json",
    }
}

type CmdResult = std::result::Result<(), CmdError>;

trait StageExt<T> {
    fn stage(self, stage: &str) -> std::result::Result<T, CmdError>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &str) -> std::result::Result<T, CmdError> {
        self.map_err(|e| CmdError {
            stage: stage.into(),
            kind: kind_of(&e),
            message: e.to_string(),
        })
    }
}

// ---------------------------------------------------------------- helpers

/// Inserts a tag before the extension: `scene.trace.csv` + "human" becomes
/// `scene.trace.human.csv`.
fn tagged(path: &Path, tag: &str) -> PathBuf {
    match path.extension().and_then(|e| e.to_str()) {
        Some(ext) => path.with_extension(format!("{tag}.{ext}")),
        None => path.with_extension(tag),
    }
}

/// Relative path from `base` to `target`; both must be canonical.
fn relative_from(base: &Path, target: &Path) -> String {
    let b: Vec<_> = base.components().collect();
    let t: Vec<_> = target.components().collect();
    let common = b.iter().zip(t.iter()).take_while(|(x, y)| x == y).count();
    let mut parts: Vec<String> = vec!["..".into(); b.len() - common];
    parts.extend(
        t[common..]
            .iter()
            .map(|c| c.as_os_str().to_string_lossy().into_owned()),
    );
    if parts.is_empty() {
        ".".into()
    } else {
        parts.join("/")
    }
}

/// Rewrites every file reference so the document still resolves when saved
/// into `out_dir`. A no-op when the output stays in the bundle directory,
/// which keeps those documents byte-comparable with their inputs.
fn rebase_doc(doc: &mut SceneDocument, root: &Path, out_dir: &Path) -> Result<()> {
    let root = std::fs::canonicalize(root).map_err(|e| Error::io(root, e))?;
    let out = std::fs::canonicalize(out_dir).map_err(|e| Error::io(out_dir, e))?;
    if root == out {
        return Ok(());
    }
    let fix = |p: &mut String| *p = relative_from(&out, &root.join(&*p));
    for h in &mut doc.humans {
        fix(&mut h.mesh);
    }
    for o in &mut doc.objects {
        for e in &mut o.exemplars {
            fix(e);
        }
        if let Some(m) = &mut o.mask {
            fix(m);
        }
        if let Some(m) = &mut o.eta {
            fix(m);
        }
    }
    if let Some(p) = &mut doc.image {
        fix(p);
    }
    if let Some(p) = &mut doc.gt_index_map {
        fix(p);
    }
    if let Some(p) = &mut doc.oracle_dir {
        fix(p);
    }
    for d in &mut doc.detections {
        fix(&mut d.mask);
    }
    Ok(())
}

fn apply_poses(doc: &mut SceneDocument, scene: &Scene) {
    for h in &mut doc.humans {
        if let Some(inst) = scene.instance(h.id) {
            h.gamma = None;
            h.pose = Some(inst.pose.clone());
        }
    }
    for o in &mut doc.objects {
        if let Some(inst) = scene.instance(o.id) {
            o.pose = Some(inst.pose.clone());
        }
    }
}

fn write_trace(rows: &[StageTraceRow], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_stage_trace_csv(rows, BufWriter::new(file))
}

fn save_out(doc: &mut SceneDocument, cfg: &RunConfig, scene: &Scene, out: &Path) -> Result<()> {
    apply_poses(doc, scene);
    doc.config = Some(cfg.clone());
    save_scene(doc, out)
}

/// A stage command's resolved inputs: the loaded bundle, the effective
/// configuration (--config beats the embedded one, --seed beats both), and
/// an output-ready copy of the document.
struct Job {
    loaded: LoadedScene,
    cfg: RunConfig,
    out: PathBuf,
    out_dir: PathBuf,
    trace: PathBuf,
    doc: SceneDocument,
}

fn open_job(args: &StageArgs, stage: &str) -> std::result::Result<Job, CmdError> {
    let loaded = load_scene(&args.scene).stage(stage)?;
    let mut cfg = match &args.config {
        Some(path) => RunConfig::load(path).stage(stage)?,
        None => loaded.config.clone(),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    cfg.validate().stage(stage)?;

    let out = args.out.clone();
    let out_dir = out
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&out_dir)
        .map_err(|e| Error::io(&out_dir, e))
        .stage(stage)?;
    let trace = args
        .trace
        .clone()
        .unwrap_or_else(|| out.with_extension("trace.csv"));

    let mut doc = loaded.doc.clone();
    rebase_doc(&mut doc, &loaded.root, &out_dir).stage(stage)?;
    Ok(Job {
        loaded,
        cfg,
        out,
        out_dir,
        trace,
        doc,
    })
}

/// Occlusion indicator for an object: the explicit one if the bundle has
/// it, otherwise derived from the detection set, otherwise all-ones.
fn resolve_eta(id: u32, loaded: &LoadedScene) -> Result<BinaryMask> {
    if let Some(eta) = loaded.etas.get(&id) {
        return Ok(eta.clone());
    }
    let (w, h) = (loaded.scene.camera.width, loaded.scene.camera.height);
    if !loaded.detections.is_empty() {
        return build_eta(id, &loaded.detections, w, h);
    }
    Ok(BinaryMask::from_fn(w, h, |_, _| true))
}

fn sil_targets_from_loaded(
    loaded: &LoadedScene,
    cfg: &RunConfig,
) -> Result<BTreeMap<u32, MaskTarget>> {
    let mut out = BTreeMap::new();
    for (&id, mask) in &loaded.masks {
        let eta = resolve_eta(id, loaded)?;
        out.insert(id, MaskTarget::new(mask.clone(), eta, cfg.edge_filter)?);
    }
    Ok(out)
}

fn opt_map(m: &BTreeMap<u32, MaskTarget>) -> Option<&BTreeMap<u32, MaskTarget>> {
    if m.is_empty() {
        None
    } else {
        Some(m)
    }
}

fn warn_missing_depth(job: &Job) {
    if job.loaded.gt_index.is_none()
        && (job.cfg.hhi_weights.depth > 0.0 || job.cfg.hoi_weights.depth > 0.0)
    {
        log::warn!("no ground-truth index map; the depth-ordering term contributes nothing");
    }
}

fn make_provider(
    kind: ProviderKind,
    endpoint: Option<&str>,
    loaded: &LoadedScene,
) -> Result<Option<Box<dyn MaskProvider>>> {
    match kind {
        ProviderKind::None => Ok(None),
        ProviderKind::Oracle => match loaded.oracle_root() {
            Some(root) => Ok(Some(Box::new(FileOracleProvider::new(root)))),
            None if loaded.detections.is_empty() => Ok(None),
            None => Err(Error::Configuration(
                "scene has detections but no oracle_dir; pass --provider none or remote".into(),
            )),
        },
        ProviderKind::Remote => {
            let endpoint = endpoint.ok_or_else(|| {
                Error::Configuration("--provider remote needs --endpoint".into())
            })?;
            make_remote(endpoint)
        }
    }
}

#[cfg(feature = "remote-provider")]
fn make_remote(endpoint: &str) -> Result<Option<Box<dyn MaskProvider>>> {
    Ok(Some(Box::new(scenefit::occlusion::RemoteProvider::new(
        endpoint,
    )?)))
}

#[cfg(not(feature = "remote-provider"))]
fn make_remote(_endpoint: &str) -> Result<Option<Box<dyn MaskProvider>>> {
    Err(Error::Configuration(
        "this build has no remote provider; rebuild with --features remote-provider".into(),
    ))
}

// ---------------------------------------------------------------- commands

pub fn gen_synthetic(args: &GenArgs) -> CmdResult {
    const STAGE: &str = "gen-synthetic";
    let (kind, overlap) = parse_genspec(&args.spec).stage(STAGE)?;
    let path = synthetic::generate(&kind, &args.out, args.seed, overlap).stage(STAGE)?;
    println!("{STAGE}: wrote {}", path.display());
    Ok(())
}

/// "kind [overlap <frac>]". Kinds that do not take an overlap ignore it.
fn parse_genspec(spec: &str) -> Result<(String, f64)> {
    let tokens: Vec<&str> = spec.split_whitespace().collect();
    let kind = tokens
        .first()
        .ok_or_else(|| Error::Configuration("empty generator spec".into()))?
        .to_string();
    let mut overlap = match kind.as_str() {
        "joint-scene" => 0.08,
        _ => 0.3,
    };
    let mut i = 1;
    while i < tokens.len() {
        match tokens[i] {
            "overlap" => {
                let v = tokens.get(i + 1).ok_or_else(|| {
                    Error::Configuration("generator parameter overlap needs a value".into())
                })?;
                overlap = v.parse().map_err(|_| {
                    Error::Configuration(format!("overlap value {v:?} is not a number"))
                })?;
                i += 2;
            }
            other => {
                return Err(Error::Configuration(format!(
                    "unknown generator parameter {other:?} (expected: overlap <frac>)"
                )))
            }
        }
    }
    Ok((kind, overlap))
}

pub fn optimize_humans(args: &StageArgs) -> CmdResult {
    const STAGE: &str = "optimize-humans";
    let mut job = open_job(args, STAGE)?;
    warn_missing_depth(&job);
    job.loaded
        .scene
        .prepare_grids(job.cfg.grid_resolution, job.cfg.padding_frac)
        .stage(STAGE)?;
    let graph = build_interaction_graph(&job.loaded.scene, &job.loaded.doc.fine_pairs);
    let result = run_human_stage(
        &job.loaded.scene,
        &graph,
        job.loaded.gt_index.as_ref(),
        &job.cfg.hhi_weights,
        &job.cfg,
    )
    .stage(STAGE)?;
    write_trace(&result.trace, &job.trace).stage(STAGE)?;
    save_out(&mut job.doc, &job.cfg, &result.scene, &job.out).stage(STAGE)?;
    println!(
        "{STAGE}: loss {:.6e} -> {:.6e}; wrote {}",
        result.initial_loss,
        result.final_loss,
        job.out.display()
    );
    Ok(())
}

pub fn optimize_joint(args: &StageArgs) -> CmdResult {
    const STAGE: &str = "optimize-joint";
    let mut job = open_job(args, STAGE)?;
    warn_missing_depth(&job);
    job.loaded
        .scene
        .prepare_grids(job.cfg.grid_resolution, job.cfg.padding_frac)
        .stage(STAGE)?;
    let targets = sil_targets_from_loaded(&job.loaded, &job.cfg).stage(STAGE)?;
    let graph = build_interaction_graph(&job.loaded.scene, &job.loaded.doc.fine_pairs);
    let result = run_joint_stage(
        &job.loaded.scene,
        &graph,
        job.loaded.gt_index.as_ref(),
        opt_map(&targets),
        &job.cfg,
    )
    .stage(STAGE)?;
    write_trace(&result.trace, &job.trace).stage(STAGE)?;
    save_out(&mut job.doc, &job.cfg, &result.scene, &job.out).stage(STAGE)?;
    println!(
        "{STAGE}: loss {:.6e} -> {:.6e}; wrote {}",
        result.initial_loss,
        result.final_loss,
        job.out.display()
    );
    Ok(())
}

/// One fitted object, with the mask and occlusion indicator the winning fit
/// was scored against (candidates from removal search may differ from the
/// bundle's originals).
struct FittedObject {
    id: u32,
    category: String,
    exemplar_index: usize,
    loss: f64,
    removed: Vec<u32>,
    mask: BinaryMask,
    eta: BinaryMask,
}

/// Fits every object that has a mask or a rigid detection; updates the
/// scene (mesh, pose, stale grid dropped) and the output document in place.
fn fit_stage(job: &mut Job, provider: Option<&dyn MaskProvider>) -> Result<Vec<FittedObject>> {
    let image = job.loaded.image_path();
    let camera = job.loaded.scene.camera.clone();
    let mut fitted = Vec::new();
    for i in 0..job.doc.objects.len() {
        let src = &job.loaded.doc.objects[i];
        let id = src.id;
        let detection = job
            .loaded
            .detections
            .iter()
            .find(|d| d.id == id && d.rigid);
        if detection.is_none() && !job.loaded.masks.contains_key(&id) {
            log::info!("object {id} has neither a mask nor a rigid detection; not fit");
            continue;
        }
        let exemplars: Vec<TriMesh> = src
            .exemplars
            .iter()
            .map(|p| scenefit::scene::read_obj(&job.loaded.root.join(p)))
            .collect::<Result<Vec<_>>>()?;
        let init = src
            .pose
            .as_ref()
            .and_then(|_| job.loaded.scene.instance(id))
            .map(|inst| inst.pose.clone());

        let (pose, exemplar_index, loss, trace_rows, removed, mask_used, eta_used) =
            match detection {
                Some(det) => {
                    let cand = deoccluded_fit(
                        det,
                        &job.loaded.detections,
                        provider,
                        &exemplars,
                        &camera,
                        image.as_deref(),
                        init.as_ref(),
                        &job.cfg,
                    )?;
                    (
                        cand.pose,
                        cand.exemplar_index,
                        cand.loss,
                        cand.trace,
                        cand.removed,
                        cand.mask,
                        cand.eta,
                    )
                }
                None => {
                    let mask = &job.loaded.masks[&id];
                    let eta = resolve_eta(id, &job.loaded)?;
                    let fit = fit_object_pose(
                        &src.category,
                        &exemplars,
                        mask,
                        &eta,
                        &camera,
                        init.as_ref(),
                        &job.cfg,
                    )?;
                    (
                        fit.pose,
                        fit.exemplar_index,
                        fit.loss,
                        fit.trace,
                        Vec::new(),
                        mask.clone(),
                        eta,
                    )
                }
            };

        write_trace(&trace_rows, &tagged(&job.trace, &format!("object-{id}")))?;
        if !removed.is_empty() {
            let mask_name = format!("object-{id}-fit-mask.png");
            let eta_name = format!("object-{id}-fit-eta.png");
            write_mask_png(&job.out_dir.join(&mask_name), &mask_used)?;
            write_mask_png(&job.out_dir.join(&eta_name), &eta_used)?;
            job.doc.objects[i].mask = Some(mask_name);
            job.doc.objects[i].eta = Some(eta_name);
        }
        job.doc.objects[i].pose = Some(pose.clone());
        job.doc.objects[i].exemplar_index = Some(exemplar_index);
        if let Some(inst) = job.loaded.scene.objects.iter_mut().find(|o| o.id == id) {
            inst.mesh = Arc::new(exemplars[exemplar_index].clone());
            inst.pose = pose;
            inst.grid = None;
        }
        fitted.push(FittedObject {
            id,
            category: src.category.clone(),
            exemplar_index,
            loss,
            removed,
            mask: mask_used,
            eta: eta_used,
        });
    }
    Ok(fitted)
}

pub fn fit_objects(args: &FitArgs) -> CmdResult {
    const STAGE: &str = "fit-objects";
    let mut job = open_job(&args.stage, STAGE)?;
    let provider = make_provider(args.provider, args.endpoint.as_deref(), &job.loaded)
        .stage(STAGE)?;
    let fitted = fit_stage(&mut job, provider.as_deref()).stage(STAGE)?;
    save_out(&mut job.doc, &job.cfg, &job.loaded.scene, &job.out).stage(STAGE)?;
    for f in &fitted {
        println!(
            "{STAGE}: object {} ({}) exemplar {} loss {:.6e} removed {:?}",
            f.id, f.category, f.exemplar_index, f.loss, f.removed
        );
    }
    println!("{STAGE}: wrote {}", job.out.display());
    Ok(())
}

pub fn pipeline(args: &FitArgs) -> CmdResult {
    let mut job = open_job(&args.stage, "pipeline")?;
    warn_missing_depth(&job);
    let provider = make_provider(args.provider, args.endpoint.as_deref(), &job.loaded)
        .stage("pipeline")?;

    job.loaded
        .scene
        .prepare_grids(job.cfg.grid_resolution, job.cfg.padding_frac)
        .stage("optimize-humans")?;
    let graph = build_interaction_graph(&job.loaded.scene, &job.loaded.doc.fine_pairs);
    let human = run_human_stage(
        &job.loaded.scene,
        &graph,
        job.loaded.gt_index.as_ref(),
        &job.cfg.hhi_weights,
        &job.cfg,
    )
    .stage("optimize-humans")?;
    write_trace(&human.trace, &tagged(&job.trace, "human")).stage("optimize-humans")?;
    job.loaded.scene = human.scene;

    let fitted = fit_stage(&mut job, provider.as_deref()).stage("fit-objects")?;

    // Swapped exemplar meshes dropped their grids; rebuild before collisions.
    job.loaded
        .scene
        .prepare_grids(job.cfg.grid_resolution, job.cfg.padding_frac)
        .stage("optimize-joint")?;
    let mut targets = sil_targets_from_loaded(&job.loaded, &job.cfg).stage("optimize-joint")?;
    for f in &fitted {
        let target = MaskTarget::new(f.mask.clone(), f.eta.clone(), job.cfg.edge_filter)
            .stage("optimize-joint")?;
        targets.insert(f.id, target);
    }
    let graph = build_interaction_graph(&job.loaded.scene, &job.loaded.doc.fine_pairs);
    let joint = run_joint_stage(
        &job.loaded.scene,
        &graph,
        job.loaded.gt_index.as_ref(),
        opt_map(&targets),
        &job.cfg,
    )
    .stage("optimize-joint")?;
    write_trace(&joint.trace, &tagged(&job.trace, "joint")).stage("optimize-joint")?;
    job.loaded.scene = joint.scene;

    save_out(&mut job.doc, &job.cfg, &job.loaded.scene, &job.out).stage("pipeline")?;
    write_renders(&job.loaded.scene, &job.cfg, &job.out_dir).stage("render")?;
    println!(
        "pipeline: human {:.6e} -> {:.6e}; joint {:.6e} -> {:.6e}; wrote {}",
        human.initial_loss,
        human.final_loss,
        joint.initial_loss,
        joint.final_loss,
        job.out.display()
    );
    Ok(())
}

pub fn evaluate(args: &EvalArgs) -> CmdResult {
    const STAGE: &str = "evaluate";
    let cfg = match &args.config {
        Some(path) => RunConfig::load(path).stage(STAGE)?,
        None => RunConfig::default(),
    };
    cfg.validate().stage(STAGE)?;
    let cases: Vec<EvalCase> = args
        .scenes
        .par_iter()
        .map(|path| -> Result<EvalCase> {
            let mut loaded = load_scene(path)?;
            loaded
                .scene
                .prepare_grids(cfg.grid_resolution, cfg.padding_frac)?;
            Ok(EvalCase {
                name: path.display().to_string(),
                scene: loaded.scene,
                gt_index: loaded.gt_index,
            })
        })
        .collect::<Result<Vec<_>>>()
        .stage(STAGE)?;
    let report = evaluate_corpus(&cases, cfg.delta).stage(STAGE)?;

    std::fs::create_dir_all(&args.out)
        .map_err(|e| Error::io(&args.out, e))
        .stage(STAGE)?;
    let csv_path = args.out.join("report.csv");
    let json_path = args.out.join("report.json");
    let csv_file = File::create(&csv_path)
        .map_err(|e| Error::io(&csv_path, e))
        .stage(STAGE)?;
    write_report_csv(&report, BufWriter::new(csv_file)).stage(STAGE)?;
    let json_file = File::create(&json_path)
        .map_err(|e| Error::io(&json_path, e))
        .stage(STAGE)?;
    write_report_json(&report, BufWriter::new(json_file)).stage(STAGE)?;
    println!(
        "{STAGE}: {} scene(s); e_h_col {:.6e} e_ho_col {:.6e} e_h_depth {:.6e} e_ho_depth {:.6e}",
        report.scene_count, report.e_h_col, report.e_ho_col, report.e_h_depth, report.e_ho_depth
    );
    println!("{STAGE}: wrote {} and {}", csv_path.display(), json_path.display());
    Ok(())
}

pub fn render(args: &RenderArgs) -> CmdResult {
    const STAGE: &str = "render";
    let loaded = load_scene(&args.scene).stage(STAGE)?;
    let mut cfg = match &args.config {
        Some(path) => RunConfig::load(path).stage(STAGE)?,
        None => loaded.config.clone(),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    cfg.validate().stage(STAGE)?;
    std::fs::create_dir_all(&args.out)
        .map_err(|e| Error::io(&args.out, e))
        .stage(STAGE)?;

    let mut doc = loaded.doc.clone();
    rebase_doc(&mut doc, &loaded.root, &args.out).stage(STAGE)?;
    doc.config = Some(cfg.clone());
    save_scene(&doc, &args.out.join("scene.json")).stage(STAGE)?;
    write_renders(&loaded.scene, &cfg, &args.out).stage(STAGE)?;
    println!(
        "{STAGE}: wrote index.png, depth.png, depth.bin, silhouette.png, scene.json in {}",
        args.out.display()
    );
    Ok(())
}

// ---------------------------------------------------------------- buffers

/// Instance-index, exact and visualized depth, and a soft union silhouette
/// at the scene's current poses.
fn write_renders(scene: &Scene, cfg: &RunConfig, dir: &Path) -> Result<()> {
    let world: Vec<(u32, TriMesh)> = scene
        .instances()
        .map(|inst| (inst.id, inst.world_mesh()))
        .collect();
    let refs: Vec<(u32, &TriMesh)> = world.iter().map(|(id, m)| (*id, m)).collect();
    let out = render_scene(&refs, &scene.camera)?;
    write_index_png(&dir.join("index.png"), &out.index)?;
    write_depth_bin(&dir.join("depth.bin"), &out.depth)?;
    save_png(&depth_image(&out.depth), &dir.join("depth.png"))?;

    let (w, h) = out.index.dims();
    let mut union = vec![0f64; (w * h) as usize];
    for (_, mesh) in &world {
        match render_silhouette(mesh, &scene.camera, cfg.soft_width) {
            Ok(sil) => {
                for y in 0..h {
                    for x in 0..w {
                        let i = (y * w + x) as usize;
                        union[i] = union[i].max(sil.get(x, y));
                    }
                }
            }
            Err(Error::BehindCamera(_)) => {
                log::warn!("instance behind the camera; omitted from silhouette.png")
            }
            Err(e) => return Err(e),
        }
    }
    let img = image::GrayImage::from_fn(w, h, |x, y| {
        image::Luma([(union[(y * w + x) as usize] * 255.0).round() as u8])
    });
    save_png(&img, &dir.join("silhouette.png"))
}

/// Near surfaces bright, far surfaces dim, background black. Uses a floor
/// of 35 so the farthest surface stays distinguishable from empty pixels.
fn depth_image(depth: &DepthMap) -> image::GrayImage {
    let (w, h) = depth.dims();
    let (lo, hi) = depth
        .data()
        .iter()
        .filter(|d| d.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &d| {
            (lo.min(d), hi.max(d))
        });
    image::GrayImage::from_fn(w, h, |x, y| {
        let d = depth.get(x, y);
        if !d.is_finite() {
            return image::Luma([0]);
        }
        let v = if hi > lo { 1.0 - (d - lo) / (hi - lo) } else { 1.0 };
        image::Luma([(35.0 + 220.0 * v).round() as u8])
    })
}

fn save_png(img: &image::GrayImage, path: &Path) -> Result<()> {
    img.save(path).map_err(|e| Error::Image {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}
