//! Release gates. Each test prints one `[acceptance] NN name: PASS|FAIL`
//! line (run with `--nocapture` to see them) and then asserts, so a failing
//! gate still reports its measured numbers. Gates with wall-clock budgets
//! measure them with `Instant` around the governed work only.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::{Arc, OnceLock};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use scenefit::config::RunConfig;
use scenefit::geometry::{
    box_mesh, geodesic_angle, icosphere, l_prism, Camera, Mat3, RigidPose, TriMesh, Vec3,
};
use scenefit::losses::{collision_pair_loss, DepthPairs, MaskTarget};
use scenefit::metrics::{evaluate_corpus, EvalCase};
use scenefit::occlusion::{deoccluded_fit, FileOracleProvider};
use scenefit::optim::{ParamBlock, ParamVector};
use scenefit::raster::{render_scene, BinaryMask, IndexMap};
use scenefit::scene::synthetic::{self, load_ground_truth};
use scenefit::scene::{
    build_interaction_graph, fit_object_pose, interaction_gradient, interaction_hh,
    interaction_ho, load_scene, optimize_humans, optimize_joint, read_obj, scene_depth_loss,
    InteractionGraph, Scene, SceneInstance,
};
use scenefit::sdf::{mesh_penetration, oracle, SdfGrid};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_scenefit")
}

fn work_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("scenefit-acc-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

fn verdict(label: &str, ok: bool, detail: &str) {
    println!(
        "[acceptance] {label}: {} ({detail})",
        if ok { "PASS" } else { "FAIL" }
    );
}

fn run_cli(args: &[&str]) -> std::process::Output {
    let out = Command::new(bin())
        .args(args)
        .output()
        .expect("spawn scenefit binary");
    assert!(
        out.status.success(),
        "scenefit {:?} failed:\n{}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn pair_penetration(scene: &Scene, a: u32, b: u32) -> f64 {
    let ma = scene.instance(a).unwrap().world_mesh();
    let mb = scene.instance(b).unwrap().world_mesh();
    mesh_penetration(&ma, &mb).unwrap()
}

fn disagreements(gt: &IndexMap, rendered: &IndexMap) -> usize {
    let mut n = 0;
    for y in 0..gt.height {
        for x in 0..gt.width {
            let (g, r) = (gt.get(x, y), rendered.get(x, y));
            if g != 0 && r != 0 && g != r {
                n += 1;
            }
        }
    }
    n
}

fn render_index(scene: &Scene) -> IndexMap {
    let world: Vec<(u32, TriMesh)> = scene
        .instances()
        .map(|i| (i.id, i.world_mesh()))
        .collect();
    let refs: Vec<(u32, &TriMesh)> = world.iter().map(|(i, m)| (*i, m)).collect();
    render_scene(&refs, &scene.camera).unwrap().index
}

#[test]
fn sdf_grid_tracks_brute_force_interior_depth() {
    let start = Instant::now();
    let meshes = [
        ("cube", box_mesh(Vec3::splat(0.5), 2)),
        ("icosphere", icosphere(0.6, 2)),
        ("l-prism", l_prism(0.5, 0.8)),
    ];
    let mut rng = ChaCha12Rng::seed_from_u64(61);
    let mut worst = 0.0f64;
    let mut bound = f64::INFINITY;
    let mut ok = true;
    for (_, mesh) in &meshes {
        let grid = SdfGrid::build(mesh, 64, 0.1).unwrap();
        let domain = mesh.aabb().expanded(0.1 * mesh.aabb().diagonal());
        for _ in 0..1000 {
            let p = Vec3::new(
                rng.random_range(domain.min.x..domain.max.x),
                rng.random_range(domain.min.y..domain.max.y),
                rng.random_range(domain.min.z..domain.max.z),
            );
            let expect = oracle::interior_depth(mesh, p).unwrap();
            let err = (grid.sample(p) - expect).abs();
            worst = worst.max(err);
            ok &= err <= grid.cell_diagonal();
        }
        bound = bound.min(grid.cell_diagonal());
    }
    let secs = start.elapsed().as_secs_f64();
    ok &= secs < 30.0;
    verdict(
        "01 sdf-fidelity",
        ok,
        &format!("max |grid - oracle| {worst:.3e} vs tightest cell diagonal {bound:.3e} over 3x1000 points, {secs:.1}s"),
    );
    assert!(ok);
}

#[test]
fn collision_pair_loss_closed_forms() {
    let t = Vec3::new(1.0, 2.0, 3.0);
    let coincident = collision_pair_loss(1.0, t, t, 0.5);
    let unit_apart = collision_pair_loss(
        2.0,
        Vec3::new(-0.5, 0.0, 4.0),
        Vec3::new(0.5, 0.0, 4.0),
        0.5,
    );
    let e1 = (coincident - (-0.5f64).exp()).abs();
    let e2 = (unit_apart - 2.0 * (-1.0f64).exp()).abs();
    let ok = e1 <= 1e-9 && e2 <= 1e-9;
    verdict(
        "02 collision-closed-forms",
        ok,
        &format!("|{coincident:.12} - e^-0.5| = {e1:.2e}, |{unit_apart:.12} - 2e^-1| = {e2:.2e}"),
    );
    assert!(ok);
}

#[test]
fn human_stage_resolves_interpenetration_via_cli() {
    let dir = work_dir("humans");
    let dir_s = dir.to_str().unwrap().to_string();
    run_cli(&["gen-synthetic", "two-humans", "--out", &dir_s, "--seed", "3"]);

    let scene_json = dir.join("scene.json");
    let input = load_scene(&scene_json).unwrap();
    assert_eq!(input.config.human_stage.learning_rate, 2e-3);
    assert_eq!(input.config.human_stage.iterations, 100);
    let pen0 = pair_penetration(&input.scene, 1, 2);
    assert!(pen0 > 0.0, "fixture must start interpenetrating");

    let out_json = dir.join("opt").join("scene.json");
    let start = Instant::now();
    run_cli(&[
        "optimize-humans",
        "--scene",
        scene_json.to_str().unwrap(),
        "--out",
        out_json.to_str().unwrap(),
    ]);
    let secs = start.elapsed().as_secs_f64();

    let result = load_scene(&out_json).unwrap();
    let pen1 = pair_penetration(&result.scene, 1, 2);
    let a = result.scene.humans[0].world_summary().aabb;
    let b = result.scene.humans[1].world_summary().aabb;
    let ok = pen1 <= 0.1 * pen0 && a.overlaps(&b) && secs < 120.0;
    verdict(
        "03 human-stage-efficacy",
        ok,
        &format!(
            "penetration {pen0:.3e} -> {pen1:.3e} ({:.1}% left), bounds still overlap: {}, {secs:.1}s",
            100.0 * pen1 / pen0,
            a.overlaps(&b)
        ),
    );
    assert!(ok);
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn depth_only_stage_recovers_swapped_ordering() {
    let dir = work_dir("swap");
    synthetic::depth_swap(&dir, 11).unwrap();
    let loaded = load_scene(&dir.join("scene.json")).unwrap();
    let cfg = loaded.config.clone();
    let w = &cfg.hhi_weights;
    assert!(
        w.depth == 1.0 && w.collision == 0.0 && w.silhouette == 0.0 && w.interaction == 0.0,
        "fixture must run with depth-only weights"
    );

    let mut scene = loaded.scene;
    scene
        .prepare_grids(cfg.grid_resolution, cfg.padding_frac)
        .unwrap();
    let gt = loaded.gt_index.as_ref().unwrap();
    let swapped = disagreements(gt, &render_index(&scene));
    let initial = scene_depth_loss(&scene, gt, DepthPairs::HumanHuman).unwrap();

    let graph = build_interaction_graph(&scene, &loaded.doc.fine_pairs);
    let result = optimize_humans(&scene, &graph, Some(gt), w, &cfg).unwrap();
    let after = scene_depth_loss(&result.scene, gt, DepthPairs::HumanHuman).unwrap();

    let ok = swapped >= 100 && after < 0.01 * initial;
    verdict(
        "04 depth-order-recovery",
        ok,
        &format!("{swapped} swapped px, depth loss {initial:.3e} -> {after:.3e}"),
    );
    assert!(ok);
    let _ = std::fs::remove_dir_all(&dir);
}

struct PoseTrial {
    translation_frac: f64,
    rotation_deg: f64,
    exemplar: usize,
    generating: usize,
}

/// The ten render-and-recover fits shared by the pose and exemplar gates,
/// plus their total wall time.
fn pose_trials() -> &'static (Vec<PoseTrial>, f64) {
    static TRIALS: OnceLock<(Vec<PoseTrial>, f64)> = OnceLock::new();
    TRIALS.get_or_init(|| {
        let mut out = Vec::new();
        let mut fit_secs = 0.0;
        for seed in 0..10u64 {
            let dir = work_dir(&format!("fit-{seed}"));
            synthetic::pose_recovery(&dir, seed).unwrap();
            let loaded = load_scene(&dir.join("scene.json")).unwrap();
            let gt = load_ground_truth(&dir.join("gt.json")).unwrap();
            let cfg = loaded.config.clone();
            assert_eq!(cfg.object_stage.learning_rate, 2e-3);
            assert_eq!(cfg.object_stage.iterations, 200);
            assert_eq!(cfg.object_stage.restarts, 8);

            let obj = &loaded.doc.objects[0];
            let exemplars: Vec<TriMesh> = obj
                .exemplars
                .iter()
                .map(|p| read_obj(&loaded.root.join(p)).unwrap())
                .collect();
            let mask = &loaded.masks[&1];
            let (mw, mh) = mask.dims();
            let eta = BinaryMask::from_fn(mw, mh, |_, _| true);
            let init = obj.pose.unwrap();

            let t0 = Instant::now();
            let fit = fit_object_pose(
                &obj.category,
                &exemplars,
                mask,
                &eta,
                &loaded.scene.camera,
                Some(&init),
                &cfg,
            )
            .unwrap();
            fit_secs += t0.elapsed().as_secs_f64();

            let truth = gt.poses[&1];
            out.push(PoseTrial {
                translation_frac: (fit.pose.translation - truth.translation).norm()
                    / truth.translation.norm(),
                rotation_deg: geodesic_angle(
                    &Mat3::from_axis_angle(fit.pose.rotation),
                    &Mat3::from_axis_angle(truth.rotation),
                )
                .to_degrees(),
                exemplar: fit.exemplar_index,
                generating: gt.generating_exemplar.unwrap(),
            });
            let _ = std::fs::remove_dir_all(&dir);
        }
        (out, fit_secs)
    })
}

#[test]
fn object_fit_recovers_perturbed_poses_across_seeds() {
    let (trials, secs) = pose_trials();
    let hits = trials
        .iter()
        .filter(|t| t.translation_frac <= 0.02 && t.rotation_deg < 5.0)
        .count();
    let worst_t = trials
        .iter()
        .map(|t| t.translation_frac)
        .fold(0.0f64, f64::max);
    let worst_r = trials.iter().map(|t| t.rotation_deg).fold(0.0f64, f64::max);
    let ok = hits >= 9 && *secs < 300.0;
    verdict(
        "05 pose-recovery",
        ok,
        &format!(
            "{hits}/10 trials within 2% translation and 5 deg (worst {:.2}%, {worst_r:.2} deg), fits took {secs:.0}s",
            100.0 * worst_t
        ),
    );
    assert!(ok);
}

#[test]
fn oracle_removal_beats_the_baseline_fit() {
    let dir = work_dir("occ");
    synthetic::occluded_cube(&dir, 0).unwrap();
    let loaded = load_scene(&dir.join("scene.json")).unwrap();
    let gt = load_ground_truth(&dir.join("gt.json")).unwrap();
    let cfg = loaded.config.clone();
    let exemplars: Vec<TriMesh> = loaded.doc.objects[0]
        .exemplars
        .iter()
        .map(|p| read_obj(&loaded.root.join(p)).unwrap())
        .collect();
    let target = loaded.detections.iter().find(|d| d.id == 1).unwrap();

    let baseline = deoccluded_fit(
        target,
        &loaded.detections,
        None,
        &exemplars,
        &loaded.scene.camera,
        None,
        None,
        &cfg,
    )
    .unwrap();
    assert!(baseline.removed.is_empty());

    let provider = FileOracleProvider::new(loaded.oracle_root().unwrap());
    let selected = deoccluded_fit(
        target,
        &loaded.detections,
        Some(&provider),
        &exemplars,
        &loaded.scene.camera,
        None,
        None,
        &cfg,
    )
    .unwrap();

    // The cube's symmetries make rotation comparisons ambiguous, so pose
    // error here is the translation distance to the generating pose.
    let t_gt = gt.poses[&1].translation;
    let base_err = (baseline.pose.translation - t_gt).norm();
    let sel_err = (selected.pose.translation - t_gt).norm();
    let ok =
        !selected.removed.is_empty() && selected.loss < baseline.loss && sel_err < base_err;
    verdict(
        "06 occlusion-pipeline",
        ok,
        &format!(
            "removal {:?}, loss {:.4e} < baseline {:.4e}: {}, pose error {sel_err:.4} < baseline {base_err:.4}: {}",
            selected.removed,
            selected.loss,
            baseline.loss,
            selected.loss < baseline.loss,
            sel_err < base_err
        ),
    );
    assert!(ok);
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn object_fit_selects_the_generating_exemplar() {
    let (trials, _) = pose_trials();
    let hits = trials.iter().filter(|t| t.exemplar == t.generating).count();
    let ok = hits >= 9;
    verdict(
        "07 exemplar-selection",
        ok,
        &format!("{hits}/10 trials picked the generating exemplar"),
    );
    assert!(ok);
}

#[test]
fn joint_stage_resolves_collisions_without_depth_regression() {
    let dir = work_dir("joint");
    synthetic::joint_scene(&dir, 9, 0.08).unwrap();
    let loaded = load_scene(&dir.join("scene.json")).unwrap();
    let cfg = loaded.config.clone();
    assert_eq!(cfg.joint_stage.learning_rate, 3e-4);
    assert_eq!(cfg.joint_stage.iterations, 500);

    let mut scene = loaded.scene;
    scene
        .prepare_grids(cfg.grid_resolution, cfg.padding_frac)
        .unwrap();
    let hh0 = pair_penetration(&scene, 1, 2);
    let ho0 = pair_penetration(&scene, 1, 3);
    assert!(hh0 > 0.0 && ho0 > 0.0, "fixture must start colliding");
    let gt = loaded.gt_index.as_ref().unwrap();
    let depth0 = scene_depth_loss(&scene, gt, DepthPairs::All).unwrap();

    let graph = build_interaction_graph(&scene, &loaded.doc.fine_pairs);
    let targets: BTreeMap<u32, MaskTarget> = loaded
        .masks
        .iter()
        .map(|(&id, mask)| {
            let (mw, mh) = mask.dims();
            let eta = BinaryMask::from_fn(mw, mh, |_, _| true);
            (
                id,
                MaskTarget::new(mask.clone(), eta, cfg.edge_filter).unwrap(),
            )
        })
        .collect();

    let start = Instant::now();
    let result = optimize_joint(&scene, &graph, Some(gt), Some(&targets), &cfg).unwrap();
    let secs = start.elapsed().as_secs_f64();

    let hh1 = pair_penetration(&result.scene, 1, 2);
    let ho1 = pair_penetration(&result.scene, 1, 3);
    let depth1 = scene_depth_loss(&result.scene, gt, DepthPairs::All).unwrap();

    // The traced depth column is the weighted human plus union term; with
    // fixed weights its ratio to the first row bounds drift along the way.
    let d0 = result.trace[0].depth;
    let d_max = result
        .trace
        .iter()
        .map(|r| r.depth)
        .fold(f64::NEG_INFINITY, f64::max);
    let never_rose = d0 > 0.0 && d_max <= 1.1 * d0;

    let ok = hh1 <= 0.1 * hh0
        && ho1 <= 0.1 * ho0
        && never_rose
        && depth1 <= 1.1 * depth0
        && secs < 600.0;
    verdict(
        "08 joint-stage",
        ok,
        &format!(
            "penetrations hh {hh0:.3e}->{hh1:.3e}, ho {ho0:.3e}->{ho1:.3e}; depth {depth0:.3e}->{depth1:.3e}, trace peak {:.2}x start; {secs:.0}s",
            d_max / d0
        ),
    );
    assert!(ok);
    let _ = std::fs::remove_dir_all(&dir);
}

/// Random posed instance: rotation magnitude in [0.3, 2.5], scale in
/// [0.6, 1.7], translation inside a +-0.6 cube around the anchor point.
fn random_instance(
    rng: &mut ChaCha12Rng,
    id: u32,
    category: &str,
    mesh: Arc<TriMesh>,
    anchor: Vec3,
) -> SceneInstance {
    let dir = loop {
        let v = Vec3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        if v.norm() > 0.1 {
            break v * (1.0 / v.norm());
        }
    };
    let rotation = dir * rng.random_range(0.3..2.5);
    let translation = anchor
        + Vec3::new(
            rng.random_range(-0.6..0.6),
            rng.random_range(-0.6..0.6),
            rng.random_range(-0.6..0.6),
        );
    let scale = rng.random_range(0.6..1.7);
    SceneInstance::new(
        id,
        category,
        mesh,
        RigidPose::new(rotation, translation, scale).unwrap(),
    )
}

#[test]
fn interaction_gradient_matches_central_differences() {
    let camera = Camera::centered(100.0, 64, 64).unwrap();
    let mut rng = ChaCha12Rng::seed_from_u64(90);
    let mut checked = 0usize;
    let mut max_rel = 0.0f64;

    for round in 0..50usize {
        let mesh: Arc<TriMesh> = if round % 2 == 0 {
            Arc::new(box_mesh(
                Vec3::new(
                    rng.random_range(0.3..0.7),
                    rng.random_range(0.3..0.7),
                    rng.random_range(0.3..0.7),
                ),
                2,
            ))
        } else {
            Arc::new(icosphere(rng.random_range(0.35..0.55), 1))
        };
        let n_h = 2 + round % 2;
        let n_o = 1 + (round / 2) % 2;
        let base = Vec3::new(0.0, 0.0, 6.0);

        let mut scene = Scene::new(camera);
        for id in 1..=n_h as u32 {
            let mut inst = random_instance(&mut rng, id, "human", mesh.clone(), base);
            if id == 1 {
                inst.regions
                    .insert("all".into(), (0..mesh.vertices.len() as u32).collect());
            }
            scene.humans.push(inst);
        }
        for k in 0..n_o as u32 {
            let mut inst = random_instance(&mut rng, 10 + k, "thing", mesh.clone(), base);
            if k == 0 {
                // Parked on the first human so the fine-pair gate is deep
                // inside its on state; probes never cross the boundary.
                inst.pose.translation = scene.humans[0].pose.translation
                    + Vec3::new(0.1, 0.08, 0.12);
                inst.regions
                    .insert("all".into(), (0..mesh.vertices.len() as u32).collect());
            }
            scene.objects.push(inst);
        }

        let mut graph = InteractionGraph::default();
        for i in 0..n_h {
            for j in (i + 1)..n_h {
                graph.human_pairs.insert((1 + i as u32, 1 + j as u32));
            }
            for k in 0..n_o {
                graph
                    .human_object_pairs
                    .insert((1 + i as u32, 10 + k as u32));
            }
        }
        graph
            .fine_pairs
            .insert((1, 10), vec![("all".into(), "all".into())]);

        let blocks: Vec<(u32, Vec<ParamBlock>)> = scene
            .humans
            .iter()
            .map(|h| (h.id, vec![ParamBlock::Translation, ParamBlock::LogScale]))
            .chain(scene.objects.iter().map(|o| {
                (
                    o.id,
                    vec![
                        ParamBlock::AxisAngle,
                        ParamBlock::Translation,
                        ParamBlock::LogScale,
                    ],
                )
            }))
            .collect();
        let pv = ParamVector::pack(&scene.poses(), &blocks).unwrap();
        let analytic = interaction_gradient(&scene, &graph, &pv).unwrap();

        let loss = |values: Vec<f64>| {
            let posed = scene.with_poses(&pv.with_values(values).unpack());
            interaction_hh(&posed, &graph).unwrap() + interaction_ho(&posed, &graph).unwrap()
        };
        let h = 1e-5;
        for k in 0..pv.len() {
            let mut hi = pv.values().to_vec();
            let mut lo = hi.clone();
            hi[k] += h;
            lo[k] -= h;
            let fd = (loss(hi) - loss(lo)) / (2.0 * h);
            let denom = analytic[k].abs().max(fd.abs());
            if denom < 1e-6 {
                continue;
            }
            checked += 1;
            max_rel = max_rel.max((analytic[k] - fd).abs() / denom);
        }
    }

    let ok = max_rel < 1e-4 && checked > 500;
    verdict(
        "09 gradient-contract",
        ok,
        &format!("max relative error {max_rel:.3e} over {checked} non-vanishing components in 50 scenes"),
    );
    assert!(ok);
}

/// 3-scene metrics fixture with independently recomputable values: unit
/// cubes with corner-only vertices for the collision terms, and thin
/// front-parallel boxes with painted index rectangles for the depth terms.
fn metric_fixture() -> Vec<EvalCase> {
    let camera = Camera::centered(100.0, 64, 64).unwrap();
    let cube = Arc::new(box_mesh(Vec3::splat(0.5), 1));
    let place = |id: u32, cat: &str, mesh: &Arc<TriMesh>, t: Vec3| {
        SceneInstance::new(id, cat, mesh.clone(), RigidPose::from_translation(t))
    };

    let mut s1 = Scene::new(camera);
    s1.humans
        .push(place(1, "block", &cube, Vec3::new(-0.3, 0.0, 6.0)));
    s1.humans
        .push(place(2, "block", &cube, Vec3::new(0.3, 0.0, 6.0)));
    s1.prepare_grids(8, 0.1).unwrap();
    let gt1 = render_index(&s1);

    let mut s2 = Scene::new(camera);
    s2.humans
        .push(place(1, "block", &cube, Vec3::new(-0.3, 0.2, 6.0)));
    s2.objects
        .push(place(2, "box", &cube, Vec3::new(0.3, 0.1, 6.25)));
    s2.prepare_grids(8, 0.1).unwrap();
    let gt2 = render_index(&s2);

    let thin = |h: f64| Arc::new(box_mesh(Vec3::new(h, h, 0.01), 1));
    let mut s3 = Scene::new(camera);
    s3.humans
        .push(place(1, "slab", &thin(0.4), Vec3::new(0.0, 0.0, 4.0)));
    s3.humans
        .push(place(2, "slab", &thin(0.6), Vec3::new(0.0, 0.0, 5.0)));
    s3.objects
        .push(place(3, "slab", &thin(0.2), Vec3::new(0.0, 0.0, 6.0)));
    s3.prepare_grids(8, 0.1).unwrap();
    let mut gt3 = render_index(&s3);
    // Two painted disagreement rectangles, both inside every involved solo
    // silhouette: the nearest slab renders in front there, the labels say
    // otherwise.
    for y in 24..=27u32 {
        for x in 24..=27u32 {
            assert_eq!(gt3.get(x, y), 1, "fixture expects slab 1 in front");
            gt3.set(x, y, 2);
        }
    }
    for y in 30..=33u32 {
        for x in 30..=33u32 {
            assert_eq!(gt3.get(x, y), 1, "fixture expects slab 1 in front");
            gt3.set(x, y, 3);
        }
    }

    vec![
        EvalCase {
            name: "cubes-colliding".into(),
            scene: s1,
            gt_index: Some(gt1),
        },
        EvalCase {
            name: "cube-on-box".into(),
            scene: s2,
            gt_index: Some(gt2),
        },
        EvalCase {
            name: "painted-depth".into(),
            scene: s3,
            gt_index: Some(gt3),
        },
    ]
}

#[test]
fn corpus_metrics_match_independent_goldens() {
    // Recomputed outside this codebase from the closed-form node depths,
    // trilinear weights, damped vertex sums and softplus pixel counts the
    // fixture was designed around.
    const GOLD_H_COL: f64 = 3.24720968672099555e-2;
    const GOLD_HO_COL: f64 = 3.45379167227363518e-2;
    const GOLD_H_DEPTH: f64 = 7.00406233343052165e0;
    const GOLD_HO_DEPTH: f64 = 1.83476783923263760e1;
    const TOL: f64 = 1e-9;

    let report = evaluate_corpus(&metric_fixture(), 0.5).unwrap();
    let errs = [
        (report.e_h_col - GOLD_H_COL).abs(),
        (report.e_ho_col - GOLD_HO_COL).abs(),
        (report.e_h_depth - GOLD_H_DEPTH).abs(),
        (report.e_ho_depth - GOLD_HO_DEPTH).abs(),
    ];
    let matched = errs.iter().all(|e| *e <= TOL);

    let mut doubled_cases = metric_fixture();
    doubled_cases.extend(metric_fixture());
    let doubled = evaluate_corpus(&doubled_cases, 0.5).unwrap();
    let invariant = doubled.e_h_col.to_bits() == report.e_h_col.to_bits()
        && doubled.e_ho_col.to_bits() == report.e_ho_col.to_bits()
        && doubled.e_h_depth.to_bits() == report.e_h_depth.to_bits()
        && doubled.e_ho_depth.to_bits() == report.e_ho_depth.to_bits();

    let ok = matched && invariant;
    verdict(
        "10 metric-algebra",
        ok,
        &format!(
            "golden gaps {:.2e}/{:.2e}/{:.2e}/{:.2e} (tol 1e-9), duplication bit-exact: {invariant}",
            errs[0], errs[1], errs[2], errs[3]
        ),
    );
    assert!(ok);
}

fn collect_files(dir: &Path, base: &Path, out: &mut Vec<(PathBuf, Vec<u8>)>) {
    let mut entries: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    entries.sort();
    for p in entries {
        if p.is_dir() {
            collect_files(&p, base, out);
        } else {
            out.push((
                p.strip_prefix(base).unwrap().to_path_buf(),
                std::fs::read(&p).unwrap(),
            ));
        }
    }
}

#[test]
fn pipeline_runs_are_byte_identical() {
    let dir = work_dir("determinism");
    let dir_s = dir.to_str().unwrap().to_string();
    run_cli(&[
        "gen-synthetic",
        "occluded-cube",
        "--out",
        &dir_s,
        "--seed",
        "0",
    ]);
    let scene_json = dir.join("scene.json");
    for run in ["run1", "run2"] {
        run_cli(&[
            "pipeline",
            "--scene",
            scene_json.to_str().unwrap(),
            "--out",
            dir.join(run).join("scene.json").to_str().unwrap(),
            "--seed",
            "7",
            "--provider",
            "oracle",
        ]);
    }
    let (mut f1, mut f2) = (Vec::new(), Vec::new());
    collect_files(&dir.join("run1"), &dir.join("run1"), &mut f1);
    collect_files(&dir.join("run2"), &dir.join("run2"), &mut f2);

    let names_match = f1.iter().map(|(p, _)| p).eq(f2.iter().map(|(p, _)| p));
    let bytes_match = names_match && f1 == f2;
    let ok = bytes_match && !f1.is_empty();
    verdict(
        "11 determinism",
        ok,
        &format!(
            "{} files per run, identical paths: {names_match}, identical bytes: {bytes_match}",
            f1.len()
        ),
    );
    assert!(ok);
    let _ = std::fs::remove_dir_all(&dir);
}
