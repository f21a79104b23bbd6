//! The three optimization stages: humans, per-object silhouette fitting,
//! and joint refinement.
//!
//! Each stage freezes an interaction graph, packs the stage's trainable
//! pose blocks into a flat vector, and runs Adam on finite-difference
//! gradients. The best-seen iterate is returned, so a stage can never hand
//! back something worse than its initialization.

use std::collections::BTreeMap;

use crate::config::{RunConfig, StageConfig};
use crate::error::{Error, Result};
use crate::geometry::{Camera, RigidPose, TriMesh, Vec3};
use crate::losses::{occ_sil_loss, LossWeights, MaskTarget};
use crate::optim::{numerical_gradient, AdamState, Objective, ParamBlock, ParamVector};
use crate::raster::{render_silhouette, BinaryMask, IndexMap};
use crate::scene::{InteractionGraph, LossBreakdown, ObjectiveContext, Scene};

/// Loss composition before the step at `iteration`; the last row is the
/// final state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageTraceRow {
    pub iteration: usize,
    pub collision: f64,
    pub depth: f64,
    pub interaction: f64,
    pub silhouette: f64,
    pub total: f64,
}

impl StageTraceRow {
    fn from_breakdown(iteration: usize, b: &LossBreakdown) -> StageTraceRow {
        StageTraceRow {
            iteration,
            collision: b.collision,
            depth: b.depth,
            interaction: b.interaction,
            silhouette: b.silhouette,
            total: b.total,
        }
    }
}

/// CSV with one row per trace entry, loss terms spelled out per column.
pub fn write_stage_trace_csv<W: std::io::Write>(rows: &[StageTraceRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let fail = |e: csv::Error| Error::Configuration(format!("stage trace csv: {e}"));
    w.write_record(["iteration", "collision", "depth", "interaction", "silhouette", "total"])
        .map_err(fail)?;
    for r in rows {
        w.write_record([
            r.iteration.to_string(),
            format!("{:.17e}", r.collision),
            format!("{:.17e}", r.depth),
            format!("{:.17e}", r.interaction),
            format!("{:.17e}", r.silhouette),
            format!("{:.17e}", r.total),
        ])
        .map_err(fail)?;
    }
    w.flush().map_err(|e| Error::Configuration(format!("stage trace csv: {e}")))?;
    Ok(())
}

/// A finished stage: the scene at the best-seen parameters plus the loss
/// history that led there.
#[derive(Debug, Clone)]
pub struct StageResult {
    pub scene: Scene,
    pub trace: Vec<StageTraceRow>,
    pub initial_loss: f64,
    pub final_loss: f64,
}

/// Shared stage loop: packs `blocks`, evaluates `breakdown` for the trace,
/// uses its total as the optimization objective, and returns the best-seen
/// poses applied back onto the scene.
fn run_stage<F>(
    scene: &Scene,
    blocks: &[(u32, Vec<ParamBlock>)],
    schedule: &StageConfig,
    fd_step: f64,
    breakdown: F,
) -> Result<StageResult>
where
    F: Fn(&Scene) -> Result<LossBreakdown> + Sync,
{
    let poses = scene.poses();
    let pv = ParamVector::pack(&poses, blocks)?;
    let eval_at = |values: &[f64]| -> Result<Scene> {
        Ok(scene.with_poses(&pv.with_values(values.to_vec()).unpack()))
    };

    let mut x = pv.values().to_vec();
    let mut adam = AdamState::new(schedule.learning_rate, x.len());
    let mut trace = Vec::with_capacity(schedule.iterations + 1);

    let first = breakdown(&eval_at(&x)?)?;
    if !first.total.is_finite() {
        return Err(Error::NonFiniteObjective { coordinate: 0 });
    }
    let initial_loss = first.total;
    let mut best = (first.total, x.clone());
    let mut current = first;

    let objective: Objective<'_> = Box::new(|values: &[f64]| {
        breakdown(&eval_at(values)?).map(|b| b.total)
    });

    for iteration in 0..schedule.iterations {
        trace.push(StageTraceRow::from_breakdown(iteration, &current));
        if pv.is_empty() {
            break;
        }
        let grad = numerical_gradient(&objective, &x, fd_step)?;
        adam.step(&mut x, &grad);
        current = breakdown(&eval_at(&x)?)?;
        if !current.total.is_finite() {
            return Err(Error::NonFiniteObjective { coordinate: 0 });
        }
        if current.total < best.0 {
            best = (current.total, x.clone());
        }
    }
    trace.push(StageTraceRow::from_breakdown(schedule.iterations, &current));

    Ok(StageResult {
        scene: eval_at(&best.1)?,
        trace,
        initial_loss,
        final_loss: best.0,
    })
}

/// Stage one: translation and scale of every human against the human-human
/// objective. The graph must be built (and is kept frozen) by the caller.
pub fn optimize_humans(
    scene: &Scene,
    graph: &InteractionGraph,
    gt_index: Option<&IndexMap>,
    weights: &LossWeights,
    cfg: &RunConfig,
) -> Result<StageResult> {
    let blocks: Vec<(u32, Vec<ParamBlock>)> = scene
        .humans
        .iter()
        .map(|h| (h.id, vec![ParamBlock::Translation, ParamBlock::LogScale]))
        .collect();
    let ctx = ObjectiveContext {
        graph,
        gt_index,
        sil_targets: None,
        hhi_weights: weights.clone(),
        hoi_weights: LossWeights::default(),
        delta: cfg.delta,
        soft_width: cfg.soft_width,
        with_chamfer: false,
        symmetric_chamfer: cfg.symmetric_chamfer,
    };
    run_stage(scene, &blocks, &cfg.human_stage, cfg.fd_step, |s| ctx.hhi(s))
}

/// Stage three: joint refinement of human translation/scale and object
/// rotation/translation/scale under the combined objective, chamfer off.
pub fn optimize_joint(
    scene: &Scene,
    graph: &InteractionGraph,
    gt_index: Option<&IndexMap>,
    sil_targets: Option<&BTreeMap<u32, MaskTarget>>,
    cfg: &RunConfig,
) -> Result<StageResult> {
    let mut blocks: Vec<(u32, Vec<ParamBlock>)> = scene
        .humans
        .iter()
        .map(|h| (h.id, vec![ParamBlock::Translation, ParamBlock::LogScale]))
        .collect();
    blocks.extend(scene.objects.iter().map(|o| {
        (
            o.id,
            vec![
                ParamBlock::AxisAngle,
                ParamBlock::Translation,
                ParamBlock::LogScale,
            ],
        )
    }));
    let ctx = ObjectiveContext::from_config(cfg, graph, gt_index, sil_targets, false);
    run_stage(scene, &blocks, &cfg.joint_stage, cfg.fd_step, |s| {
        ctx.joint(s)
    })
}

/// Outcome of fitting one object: the winning pose, which exemplar produced
/// it, its final loss, and the winning run's loss history.
#[derive(Debug, Clone)]
pub struct ObjectFit {
    pub pose: RigidPose,
    pub exemplar_index: usize,
    pub loss: f64,
    pub trace: Vec<StageTraceRow>,
}

/// Translation guess that puts the exemplar's projected extent roughly on
/// the mask's bounding box. Depth matches the mesh AABB diagonal to the
/// pixel-box diagonal: both aggregate the two image axes, so the ratio is
/// far less pose-dependent than any single axis.
fn init_translation(mesh: &TriMesh, mask: &BinaryMask, camera: &Camera) -> Result<Vec3> {
    let (x0, y0, x1, y1) = mask
        .bounding_box()
        .ok_or_else(|| Error::MissingData("object mask has no foreground".into()))?;
    let (w, h) = ((x1 - x0) as f64, (y1 - y0) as f64);
    let extent_px = w.hypot(h).max(1.0);
    let d = mesh.aabb().diagonal();
    let z = camera.focal * d / extent_px;
    let u = (x0 + x1) as f64 / 2.0;
    let v = (y0 + y1) as f64 / 2.0;
    Ok(Vec3::new(
        (u - camera.cx) * z / camera.focal,
        (v - camera.cy) * z / camera.focal,
        z,
    ))
}

/// Stage two: fit one object's 6-DOF pose (plus log-scale) to its mask by
/// silhouette matching with the chamfer term on. Every exemplar is tried
/// from `restarts` evenly spaced azimuths about the camera's vertical axis;
/// the globally best run wins, ties to the earliest (exemplar, restart).
///
/// `init` seeds translation and scale (for example from an earlier estimate
/// or a detection); without it both derive from the mask and mesh extents.
/// Restart azimuths always replace the rotation.
pub fn fit_object_pose(
    category: &str,
    exemplars: &[TriMesh],
    mask: &BinaryMask,
    eta: &BinaryMask,
    camera: &Camera,
    init: Option<&RigidPose>,
    cfg: &RunConfig,
) -> Result<ObjectFit> {
    if exemplars.is_empty() {
        return Err(Error::Configuration(format!(
            "no exemplars to fit category {category:?}"
        )));
    }
    if !mask.any() {
        return Err(Error::MissingData(format!(
            "mask for category {category:?} has no foreground"
        )));
    }
    let target = MaskTarget::new(mask.clone(), eta.clone(), cfg.edge_filter)?;
    let schedule = &cfg.object_stage;
    schedule.validate("object_stage")?;

    let mut best: Option<(f64, usize, RigidPose, Vec<StageTraceRow>)> = None;
    for (exemplar_index, mesh) in exemplars.iter().enumerate() {
        let translation = match init {
            Some(p) => p.translation,
            None => init_translation(mesh, mask, camera)?,
        };
        let base_scale = init.map_or(1.0, |p| p.scale);
        for restart in 0..schedule.restarts {
            let azimuth =
                restart as f64 * std::f64::consts::TAU / schedule.restarts as f64;
            let pose = RigidPose::new(Vec3::new(0.0, azimuth, 0.0), translation, base_scale)?;
            let run = fit_single(mesh, &pose, &target, camera, cfg)?;
            let better = match &best {
                None => true,
                Some((loss, _, _, _)) => run.0 < *loss,
            };
            if better {
                best = Some((run.0, exemplar_index, run.1, run.2));
            }
        }
    }
    let (loss, exemplar_index, pose, trace) = best.expect("at least one run");
    Ok(ObjectFit {
        pose,
        exemplar_index,
        loss,
        trace,
    })
}

/// One Adam run of a single exemplar from a single starting pose. A probe
/// that pushes the mesh entirely behind the camera yields a large finite
/// loss instead of an error, so finite differences stay defined near the
/// near plane.
fn fit_single(
    mesh: &TriMesh,
    start: &RigidPose,
    target: &MaskTarget,
    camera: &Camera,
    cfg: &RunConfig,
) -> Result<(f64, RigidPose, Vec<StageTraceRow>)> {
    const OFFSCREEN_LOSS: f64 = 1e30;
    let mut poses = BTreeMap::new();
    poses.insert(1u32, start.clone());
    let pv = ParamVector::pack(
        &poses,
        &[(
            1,
            vec![
                ParamBlock::AxisAngle,
                ParamBlock::Translation,
                ParamBlock::LogScale,
            ],
        )],
    )?;

    let loss_at = |values: &[f64]| -> Result<f64> {
        let pose = pv.with_values(values.to_vec()).unpack().remove(&1).unwrap();
        match render_silhouette(&mesh.transformed(&pose), camera, cfg.soft_width) {
            Ok(sil) => occ_sil_loss(&sil, target, true, cfg.symmetric_chamfer),
            Err(Error::BehindCamera(_)) => Ok(OFFSCREEN_LOSS),
            Err(e) => Err(e),
        }
    };
    let objective: Objective<'_> = Box::new(loss_at);

    let schedule = &cfg.object_stage;
    let mut x = pv.values().to_vec();
    let mut adam = AdamState::new(schedule.learning_rate, x.len());
    let mut trace = Vec::with_capacity(schedule.iterations + 1);

    let mut current = objective(&x)?;
    let mut best = (current, x.clone());
    for iteration in 0..schedule.iterations {
        trace.push(StageTraceRow {
            iteration,
            collision: 0.0,
            depth: 0.0,
            interaction: 0.0,
            silhouette: current,
            total: current,
        });
        let grad = numerical_gradient(&objective, &x, cfg.fd_step)?;
        adam.step(&mut x, &grad);
        current = objective(&x)?;
        if current < best.0 {
            best = (current, x.clone());
        }
    }
    trace.push(StageTraceRow {
        iteration: schedule.iterations,
        collision: 0.0,
        depth: 0.0,
        interaction: 0.0,
        silhouette: current,
        total: current,
    });

    let pose = pv.with_values(best.1).unpack().remove(&1).unwrap();
    Ok((best.0, pose, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{box_mesh, geodesic_angle, wedge, Mat3};
    use crate::raster::render_scene;
    use crate::scene::{build_interaction_graph, SceneInstance};
    use std::sync::Arc;

    fn camera() -> Camera {
        Camera::centered(110.0, 96, 96).unwrap()
    }

    fn quick_cfg() -> RunConfig {
        let mut cfg = RunConfig::default();
        cfg.grid_resolution = 24;
        cfg.human_stage.iterations = 40;
        cfg.human_stage.learning_rate = 5e-3;
        cfg.object_stage.iterations = 60;
        cfg.object_stage.restarts = 4;
        cfg.joint_stage.iterations = 30;
        cfg.joint_stage.learning_rate = 2e-3;
        cfg
    }

    fn overlap_scene() -> Scene {
        let mut scene = Scene::new(camera());
        for (id, x) in [(1u32, -0.42), (2u32, 0.42)] {
            scene.humans.push(SceneInstance::new(
                id,
                "block",
                Arc::new(box_mesh(Vec3::splat(0.5), 3)),
                RigidPose::from_translation(Vec3::new(x, 0.0, 5.0)),
            ));
        }
        scene.prepare_grids(24, 0.1).unwrap();
        scene
    }

    #[test]
    fn human_stage_reduces_penetration() {
        let scene = overlap_scene();
        let graph = build_interaction_graph(&scene, &[]);
        let mut weights = LossWeights::default();
        weights.depth = 0.0;
        weights.interaction = 0.0;
        let cfg = quick_cfg();
        let out = optimize_humans(&scene, &graph, None, &weights, &cfg).unwrap();
        assert!(out.final_loss <= out.initial_loss);
        assert!(
            out.final_loss < 0.2 * out.initial_loss,
            "initial {} final {}",
            out.initial_loss,
            out.final_loss
        );
        assert_eq!(out.trace.len(), cfg.human_stage.iterations + 1);
    }

    #[test]
    fn zero_loss_scene_stays_put() {
        let mut scene = overlap_scene();
        scene.humans[1].pose.translation.x = 3.0;
        let graph = InteractionGraph::default();
        let mut weights = LossWeights::default();
        weights.depth = 0.0;
        let cfg = quick_cfg();
        let out = optimize_humans(&scene, &graph, None, &weights, &cfg).unwrap();
        assert_eq!(out.initial_loss, 0.0);
        assert_eq!(out.final_loss, 0.0);
        for (before, after) in scene.humans.iter().zip(out.scene.humans.iter()) {
            assert!((before.pose.translation - after.pose.translation).norm() < 1e-6);
            assert!((before.pose.scale - after.pose.scale).abs() < 1e-6);
        }
    }

    #[test]
    fn single_human_is_a_no_op() {
        let mut scene = Scene::new(camera());
        scene.humans.push(SceneInstance::new(
            1,
            "block",
            Arc::new(box_mesh(Vec3::splat(0.5), 2)),
            RigidPose::from_translation(Vec3::new(0.0, 0.0, 5.0)),
        ));
        scene.prepare_grids(16, 0.1).unwrap();
        let graph = build_interaction_graph(&scene, &[]);
        let mut weights = LossWeights::default();
        weights.depth = 0.0;
        let out = optimize_humans(&scene, &graph, None, &weights, &quick_cfg()).unwrap();
        assert_eq!(out.final_loss, 0.0);
        assert!(
            (out.scene.humans[0].pose.translation - scene.humans[0].pose.translation).norm()
                < 1e-6
        );
    }

    fn wedge_mask(pose: &RigidPose, camera: &Camera) -> BinaryMask {
        let mesh = wedge(0.8, 0.5, 0.3).transformed(pose);
        let out = render_scene(&[(1, &mesh)], camera).unwrap();
        out.index.mask_of(1)
    }

    #[test]
    fn object_fit_recovers_a_rendered_pose() {
        let cam = camera();
        let truth = RigidPose::new(
            Vec3::new(0.0, 0.7, 0.0),
            Vec3::new(0.1, -0.05, 4.5),
            1.0,
        )
        .unwrap();
        let mask = wedge_mask(&truth, &cam);
        let eta = BinaryMask::from_fn(96, 96, |_, _| true);
        let mut cfg = quick_cfg();
        cfg.object_stage.iterations = 150;
        cfg.object_stage.restarts = 8;
        let exemplar = wedge(0.8, 0.5, 0.3);
        let fit = fit_object_pose("wedge", &[exemplar], &mask, &eta, &cam, None, &cfg).unwrap();
        let t_err = (fit.pose.anchor() - truth.anchor()).norm() / truth.anchor().norm();
        let angle = geodesic_angle(
            &Mat3::from_axis_angle(fit.pose.rotation),
            &Mat3::from_axis_angle(truth.rotation),
        );
        assert!(t_err < 0.05, "translation error {t_err}");
        assert!(angle.to_degrees() < 10.0, "rotation error {}", angle.to_degrees());
    }

    #[test]
    fn object_fit_rejects_empty_mask_and_empty_exemplars() {
        let cam = camera();
        let empty = BinaryMask::new(96, 96);
        let eta = BinaryMask::from_fn(96, 96, |_, _| true);
        let exemplar = wedge(0.8, 0.5, 0.3);
        assert!(matches!(
            fit_object_pose("w", &[exemplar.clone()], &empty, &eta, &cam, None, &quick_cfg()),
            Err(Error::MissingData(_))
        ));
        let mask = BinaryMask::from_fn(96, 96, |x, y| x > 40 && x < 56 && y > 40 && y < 56);
        assert!(matches!(
            fit_object_pose("w", &[], &mask, &eta, &cam, None, &quick_cfg()),
            Err(Error::Configuration(_))
        ));
    }

    #[test]
    fn joint_stage_reduces_combined_penetration() {
        let mut scene = overlap_scene();
        scene.objects.push(SceneInstance::new(
            3,
            "crate",
            Arc::new(box_mesh(Vec3::splat(0.4), 3)),
            RigidPose::from_translation(Vec3::new(1.1, 0.0, 5.0)),
        ));
        scene.prepare_grids(24, 0.1).unwrap();
        let graph = build_interaction_graph(&scene, &[]);
        let mut cfg = quick_cfg();
        cfg.hhi_weights.depth = 0.0;
        cfg.hhi_weights.interaction = 0.0;
        cfg.hoi_weights.depth = 0.0;
        cfg.hoi_weights.interaction = 0.0;
        cfg.hoi_weights.silhouette = 0.0;
        cfg.joint_stage.iterations = 60;
        let out = optimize_joint(&scene, &graph, None, None, &cfg).unwrap();
        assert!(out.final_loss <= out.initial_loss);
        assert!(out.final_loss < 0.5 * out.initial_loss);
    }

    #[test]
    fn stage_trace_csv_has_term_columns() {
        let rows = vec![StageTraceRow {
            iteration: 0,
            collision: 1.0,
            depth: 0.5,
            interaction: 0.25,
            silhouette: 0.0,
            total: 1.75,
        }];
        let mut buf = Vec::new();
        write_stage_trace_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("iteration,collision,depth,interaction,silhouette,total"));
        assert_eq!(text.lines().count(), 2);
    }
}
