//! Scene-level loss terms and their weighted stage compositions.
//!
//! Instance-level interaction edges come from a graph frozen at stage start;
//! everything else (collisions, depth ordering, silhouettes, fine-region
//! gating) is recomputed from the scene's current poses on every call, so
//! these functions are safe to evaluate on perturbed snapshots in parallel.

use std::collections::BTreeMap;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::losses::{
    collision_pair_loss, depth_order_loss, occ_sil_loss, DepthPairs, LossWeights, MaskTarget,
};
use crate::raster::{render_depth, render_scene, IndexMap};
use crate::scene::{InteractionGraph, Scene, SceneInstance};
use crate::sdf::penetration;

/// Weighted contributions of one evaluation, as the optimizer sees them.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LossBreakdown {
    pub collision: f64,
    pub depth: f64,
    pub interaction: f64,
    pub silhouette: f64,
    pub total: f64,
}

impl LossBreakdown {
    fn close(collision: f64, depth: f64, interaction: f64, silhouette: f64) -> LossBreakdown {
        LossBreakdown {
            collision,
            depth,
            interaction,
            silhouette,
            total: collision + depth + interaction + silhouette,
        }
    }

    fn plus(&self, o: &LossBreakdown) -> LossBreakdown {
        LossBreakdown::close(
            self.collision + o.collision,
            self.depth + o.depth,
            self.interaction + o.interaction,
            self.silhouette + o.silhouette,
        )
    }
}

/// Everything an objective evaluation needs besides the poses themselves.
/// Zero-weighted terms are skipped entirely, so e.g. a depth weight of zero
/// never demands a ground-truth index map.
pub struct ObjectiveContext<'a> {
    pub graph: &'a InteractionGraph,
    pub gt_index: Option<&'a IndexMap>,
    /// Per object id: the mask (and occlusion indicator) it is fit against.
    /// Objects without an entry contribute no silhouette term.
    pub sil_targets: Option<&'a BTreeMap<u32, MaskTarget>>,
    pub hhi_weights: LossWeights,
    pub hoi_weights: LossWeights,
    pub delta: f64,
    pub soft_width: f64,
    pub with_chamfer: bool,
    pub symmetric_chamfer: bool,
}

impl<'a> ObjectiveContext<'a> {
    /// Context from a run configuration; `with_chamfer` stays configurable
    /// because the joint stage drops the chamfer term.
    pub fn from_config(
        cfg: &RunConfig,
        graph: &'a InteractionGraph,
        gt_index: Option<&'a IndexMap>,
        sil_targets: Option<&'a BTreeMap<u32, MaskTarget>>,
        with_chamfer: bool,
    ) -> Self {
        ObjectiveContext {
            graph,
            gt_index,
            sil_targets,
            hhi_weights: cfg.hhi_weights.clone(),
            hoi_weights: cfg.hoi_weights.clone(),
            delta: cfg.delta,
            soft_width: cfg.soft_width,
            with_chamfer,
            symmetric_chamfer: cfg.symmetric_chamfer,
        }
    }

    fn depth_term(&self, scene: &Scene, weight: f64, pairs: DepthPairs) -> Result<f64> {
        if weight == 0.0 {
            return Ok(0.0);
        }
        // Without an index map there is no depth supervision; the term
        // drops out instead of making the whole scene unoptimizable.
        let Some(gt) = self.gt_index else {
            return Ok(0.0);
        };
        Ok(weight * scene_depth_loss(scene, gt, pairs)?)
    }

    /// Human-human objective: collision + depth ordering (human pixels) +
    /// instance-level interaction.
    pub fn hhi(&self, scene: &Scene) -> Result<LossBreakdown> {
        let w = &self.hhi_weights;
        let collision = if w.collision == 0.0 {
            0.0
        } else {
            w.collision * collision_total_hh(scene, self.delta)?
        };
        let depth = self.depth_term(scene, w.depth, DepthPairs::HumanHuman)?;
        let interaction = if w.interaction == 0.0 {
            0.0
        } else {
            w.interaction * interaction_hh(scene, self.graph)?
        };
        Ok(LossBreakdown::close(collision, depth, interaction, 0.0))
    }

    /// Human-object objective: both-direction collisions + depth ordering
    /// over all instances + coarse/fine interaction + occlusion-aware
    /// silhouettes of the objects.
    pub fn hoi(&self, scene: &Scene) -> Result<LossBreakdown> {
        let w = &self.hoi_weights;
        let collision = if w.collision == 0.0 {
            0.0
        } else {
            w.collision * collision_total_ho(scene, self.delta)?
        };
        let depth = self.depth_term(scene, w.depth, DepthPairs::All)?;
        let interaction = if w.interaction == 0.0 {
            0.0
        } else {
            w.interaction * interaction_ho(scene, self.graph)?
        };
        let silhouette = if w.silhouette == 0.0 {
            0.0
        } else {
            let mut sum = 0.0;
            if let Some(targets) = self.sil_targets {
                for obj in &scene.objects {
                    if let Some(target) = targets.get(&obj.id) {
                        let sil = crate::raster::render_silhouette(
                            &obj.world_mesh(),
                            &scene.camera,
                            self.soft_width,
                        )?;
                        sum += occ_sil_loss(&sil, target, self.with_chamfer, self.symmetric_chamfer)?;
                    }
                }
            }
            w.silhouette * sum
        };
        Ok(LossBreakdown::close(collision, depth, interaction, silhouette))
    }

    /// Full objective: the human-human and human-object parts added
    /// together, each with its own weights.
    pub fn joint(&self, scene: &Scene) -> Result<LossBreakdown> {
        Ok(self.hhi(scene)?.plus(&self.hoi(scene)?))
    }
}

pub fn hhi_loss(scene: &Scene, ctx: &ObjectiveContext) -> Result<f64> {
    Ok(ctx.hhi(scene)?.total)
}

pub fn hoi_loss(scene: &Scene, ctx: &ObjectiveContext) -> Result<f64> {
    Ok(ctx.hoi(scene)?.total)
}

pub fn joint_loss(scene: &Scene, ctx: &ObjectiveContext) -> Result<f64> {
    Ok(ctx.joint(scene)?.total)
}

struct PreparedInstance<'a> {
    inst: &'a SceneInstance,
    world_vertices: Vec<crate::geometry::Vec3>,
}

fn prepare(inst: &SceneInstance) -> Result<PreparedInstance<'_>> {
    if inst.grid.is_none() {
        return Err(Error::MissingData(format!(
            "instance {} has no distance grid; call prepare_grids first",
            inst.id
        )));
    }
    let map = inst.pose.map();
    Ok(PreparedInstance {
        inst,
        world_vertices: inst.mesh.vertices.iter().map(|v| map.apply(*v)).collect(),
    })
}

fn pair_term(a: &PreparedInstance, b: &PreparedInstance, delta: f64) -> f64 {
    let pen = penetration(
        a.inst.grid.as_ref().expect("checked in prepare"),
        &a.inst.pose,
        &b.world_vertices,
    );
    collision_pair_loss(pen, a.inst.pose.anchor(), b.inst.pose.anchor(), delta)
}

/// Sum over ordered human pairs (i, j), i != j, of i's interior depth
/// sampled at j's posed vertices, distance-damped.
pub fn collision_total_hh(scene: &Scene, delta: f64) -> Result<f64> {
    let prepared: Vec<PreparedInstance> = scene
        .humans
        .iter()
        .map(prepare)
        .collect::<Result<Vec<_>>>()?;
    let mut total = 0.0;
    for (i, a) in prepared.iter().enumerate() {
        for (j, b) in prepared.iter().enumerate() {
            if i != j {
                total += pair_term(a, b, delta);
            }
        }
    }
    Ok(total)
}

/// Both directions of every human-object pair: the human's field sampled at
/// the object's vertices and vice versa.
pub fn collision_total_ho(scene: &Scene, delta: f64) -> Result<f64> {
    let humans: Vec<PreparedInstance> = scene
        .humans
        .iter()
        .map(prepare)
        .collect::<Result<Vec<_>>>()?;
    let objects: Vec<PreparedInstance> = scene
        .objects
        .iter()
        .map(prepare)
        .collect::<Result<Vec<_>>>()?;
    let mut total = 0.0;
    for h in &humans {
        for o in &objects {
            total += pair_term(h, o, delta);
            total += pair_term(o, h, delta);
        }
    }
    Ok(total)
}

fn summary_of(scene: &Scene, id: u32) -> Result<crate::losses::BodySummary> {
    scene
        .instance(id)
        .map(|inst| inst.world_summary())
        .ok_or_else(|| Error::Configuration(format!("interaction graph references unknown instance {id}")))
}

/// Centroid-distance pull over the graph's frozen human pairs.
pub fn interaction_hh(scene: &Scene, graph: &InteractionGraph) -> Result<f64> {
    let mut total = 0.0;
    for &(i, j) in &graph.human_pairs {
        total += summary_of(scene, i)?
            .centroid
            .distance(summary_of(scene, j)?.centroid);
    }
    Ok(total)
}

/// Coarse centroid pull over frozen human-object pairs, plus fine pulls
/// between declared region pairs whose posed bounds currently overlap;
/// the fine gate is live while the coarse edges are not.
pub fn interaction_ho(scene: &Scene, graph: &InteractionGraph) -> Result<f64> {
    let mut total = 0.0;
    for &(h, o) in &graph.human_object_pairs {
        total += summary_of(scene, h)?
            .centroid
            .distance(summary_of(scene, o)?.centroid);
    }
    for (&(h, o), pairs) in &graph.fine_pairs {
        let human = scene
            .instance(h)
            .ok_or_else(|| Error::Configuration(format!("fine pair references unknown human {h}")))?;
        let object = scene
            .instance(o)
            .ok_or_else(|| Error::Configuration(format!("fine pair references unknown object {o}")))?;
        for (hr, or) in pairs {
            let sh = human.region_summary(hr)?;
            let so = object.region_summary(or)?;
            if sh.interacts(&so) {
                total += sh.centroid.distance(so.centroid);
            }
        }
    }
    Ok(total)
}

/// Depth-ordering loss at the scene's current poses: the full scene render
/// decides the front instance per pixel; per-instance solo renders supply
/// the depths being compared.
pub fn scene_depth_loss(scene: &Scene, gt_index: &IndexMap, pairs: DepthPairs) -> Result<f64> {
    let world: Vec<(u32, crate::geometry::TriMesh)> = scene
        .instances()
        .map(|inst| (inst.id, inst.world_mesh()))
        .collect();
    let refs: Vec<(u32, &crate::geometry::TriMesh)> =
        world.iter().map(|(id, m)| (*id, m)).collect();
    let rendered = render_scene(&refs, &scene.camera)?;
    let mut solo = BTreeMap::new();
    for (id, mesh) in &world {
        solo.insert(*id, render_depth(mesh, &scene.camera)?);
    }
    depth_order_loss(gt_index, &rendered.index, &solo, &scene.human_ids(), pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{box_mesh, Camera, RigidPose, Vec3};
    use crate::scene::build_interaction_graph;
    use crate::scene::FinePairDecl;
    use std::sync::Arc;

    fn camera() -> Camera {
        Camera::centered(110.0, 96, 96).unwrap()
    }

    fn instance(id: u32, center: Vec3, half: f64, sub: usize) -> SceneInstance {
        SceneInstance::new(
            id,
            "block",
            Arc::new(box_mesh(Vec3::splat(half), sub)),
            RigidPose::from_translation(center),
        )
    }

    fn two_human_scene(separation: f64) -> Scene {
        let mut scene = Scene::new(camera());
        scene
            .humans
            .push(instance(1, Vec3::new(-separation / 2.0, 0.0, 5.0), 0.5, 2));
        scene
            .humans
            .push(instance(2, Vec3::new(separation / 2.0, 0.0, 5.0), 0.5, 2));
        scene.prepare_grids(24, 0.1).unwrap();
        scene
    }

    #[test]
    fn hh_collision_matches_hand_assembly() {
        let scene = two_human_scene(0.8);
        let total = collision_total_hh(&scene, 0.5).unwrap();
        assert!(total > 0.0);

        let mut expected = 0.0;
        let prepared: Vec<_> = scene.humans.iter().map(|h| prepare(h).unwrap()).collect();
        for (i, a) in prepared.iter().enumerate() {
            for (j, b) in prepared.iter().enumerate() {
                if i != j {
                    let pen = penetration(
                        a.inst.grid.as_ref().unwrap(),
                        &a.inst.pose,
                        &b.world_vertices,
                    );
                    expected += collision_pair_loss(
                        pen,
                        a.inst.pose.anchor(),
                        b.inst.pose.anchor(),
                        0.5,
                    );
                }
            }
        }
        assert_eq!(total, expected);
    }

    #[test]
    fn disjoint_humans_have_zero_collision() {
        let scene = two_human_scene(3.0);
        assert_eq!(collision_total_hh(&scene, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn missing_grid_is_reported() {
        let mut scene = Scene::new(camera());
        scene.humans.push(instance(1, Vec3::new(0.0, 0.0, 5.0), 0.5, 1));
        assert!(matches!(
            collision_total_hh(&scene, 0.5),
            Err(Error::MissingData(_))
        ));
    }

    #[test]
    fn ho_collision_counts_both_directions() {
        let mut scene = Scene::new(camera());
        scene.humans.push(instance(1, Vec3::new(0.0, 0.0, 5.0), 0.5, 2));
        scene
            .objects
            .push(instance(2, Vec3::new(0.8, 0.0, 5.0), 0.5, 2));
        scene.prepare_grids(24, 0.1).unwrap();
        let total = collision_total_ho(&scene, 0.5).unwrap();
        assert!(total > 0.0);

        let h = prepare(&scene.humans[0]).unwrap();
        let o = prepare(&scene.objects[0]).unwrap();
        let expected = pair_term(&h, &o, 0.5) + pair_term(&o, &h, 0.5);
        assert_eq!(total, expected);
    }

    #[test]
    fn interaction_hh_is_graph_gated_centroid_distance() {
        let mut scene = Scene::new(camera());
        scene.humans.push(instance(1, Vec3::new(0.0, 0.0, 5.0), 0.5, 1));
        scene.humans.push(instance(2, Vec3::new(3.0, 4.0, 5.0), 0.5, 1));
        let empty = InteractionGraph::default();
        assert_eq!(interaction_hh(&scene, &empty).unwrap(), 0.0);

        let mut graph = InteractionGraph::default();
        graph.human_pairs.insert((1, 2));
        let d = interaction_hh(&scene, &graph).unwrap();
        assert!((d - 5.0).abs() < 1e-12);
    }

    #[test]
    fn fine_interaction_gates_by_live_region_overlap() {
        let mut scene = Scene::new(camera());
        let mut human = instance(1, Vec3::new(0.0, 0.0, 5.0), 1.0, 1);
        let mut object = instance(2, Vec3::new(0.9, 0.0, 5.0), 1.0, 2);
        // Regions: the +x face corners of the human (centroid (1, 0, 5)),
        // the -x half of the subdivided object (box spans [t-1, t]).
        let plus_x: Vec<u32> = human
            .mesh
            .vertices
            .iter()
            .enumerate()
            .filter(|(_, v)| v.x > 0.5)
            .map(|(i, _)| i as u32)
            .collect();
        let minus_half: Vec<u32> = object
            .mesh
            .vertices
            .iter()
            .enumerate()
            .filter(|(_, v)| v.x < 0.5)
            .map(|(i, _)| i as u32)
            .collect();
        human.regions.insert("hand".into(), plus_x);
        object.regions.insert("handle".into(), minus_half);
        scene.humans.push(human);
        scene.objects.push(object);

        let decls = vec![FinePairDecl {
            human: 1,
            object: 2,
            human_region: "hand".into(),
            object_region: "handle".into(),
        }];
        let graph = build_interaction_graph(&scene, &decls);
        // Bodies overlap, so the pair is in the graph, but the hand plane
        // x=1 misses the handle box [-0.1, 0.9]: coarse term only.
        let coarse_only = interaction_ho(&scene, &graph).unwrap();
        assert!((coarse_only - 0.9).abs() < 1e-12, "{coarse_only}");

        // Move the object so the region boxes overlap; fine term activates.
        let mut poses = scene.poses();
        poses.get_mut(&2).unwrap().translation.x = 1.2;
        let near = scene.with_poses(&poses);
        let both = interaction_ho(&near, &graph).unwrap();
        // Handle centroid: 9 verts at local x=-1, 8 at x=0, so the fine
        // distance is |1 - (1.2 - 9/17)|; coarse is 1.2.
        let fine = (1.0f64 - (1.2 - 9.0 / 17.0)).abs();
        assert!((both - (1.2 + fine)).abs() < 1e-12, "{both}");
    }

    #[test]
    fn undefined_region_errors() {
        let mut scene = Scene::new(camera());
        scene.humans.push(instance(1, Vec3::new(0.0, 0.0, 5.0), 0.5, 1));
        scene.objects.push(instance(2, Vec3::new(0.5, 0.0, 5.0), 0.5, 1));
        let decls = vec![FinePairDecl {
            human: 1,
            object: 2,
            human_region: "nope".into(),
            object_region: "nada".into(),
        }];
        let graph = build_interaction_graph(&scene, &decls);
        assert!(matches!(
            interaction_ho(&scene, &graph),
            Err(Error::Configuration(_))
        ));
    }

    #[test]
    fn depth_loss_zero_when_render_matches_gt() {
        let scene = two_human_scene(1.6);
        let world: Vec<_> = scene
            .instances()
            .map(|i| (i.id, i.world_mesh()))
            .collect();
        let refs: Vec<_> = world.iter().map(|(id, m)| (*id, m)).collect();
        let gt = render_scene(&refs, &scene.camera).unwrap().index;
        assert_eq!(
            scene_depth_loss(&scene, &gt, DepthPairs::HumanHuman).unwrap(),
            0.0
        );
    }

    #[test]
    fn depth_loss_positive_on_swapped_order() {
        // Two overlapping boxes at different depths; GT index rendered with
        // depths swapped.
        let mut scene = Scene::new(camera());
        scene.humans.push(instance(1, Vec3::new(0.0, 0.0, 4.5), 0.5, 1));
        scene.humans.push(instance(2, Vec3::new(0.2, 0.0, 5.5), 0.5, 1));
        let mut swapped = scene.poses();
        swapped.get_mut(&1).unwrap().translation.z = 5.5;
        swapped.get_mut(&2).unwrap().translation.z = 4.5;
        let gt_scene = scene.with_poses(&swapped);
        let world: Vec<_> = gt_scene
            .instances()
            .map(|i| (i.id, i.world_mesh()))
            .collect();
        let refs: Vec<_> = world.iter().map(|(id, m)| (*id, m)).collect();
        let gt = render_scene(&refs, &gt_scene.camera).unwrap().index;
        let loss = scene_depth_loss(&scene, &gt, DepthPairs::HumanHuman).unwrap();
        assert!(loss > 0.0);
    }

    #[test]
    fn weighted_sums_are_linear_in_weights() {
        let scene = two_human_scene(0.8);
        let world: Vec<_> = scene
            .instances()
            .map(|i| (i.id, i.world_mesh()))
            .collect();
        let refs: Vec<_> = world.iter().map(|(id, m)| (*id, m)).collect();
        let mut gt = render_scene(&refs, &scene.camera).unwrap().index;
        // Flip a strip to create a little disagreement so depth is nonzero.
        for y in 40..48 {
            for x in 40..56 {
                if gt.get(x, y) == 1 {
                    gt.set(x, y, 2);
                }
            }
        }
        let graph = build_interaction_graph(&scene, &[]);

        let eval = |w: LossWeights| {
            let ctx = ObjectiveContext {
                graph: &graph,
                gt_index: Some(&gt),
                sil_targets: None,
                hhi_weights: w,
                hoi_weights: LossWeights::default(),
                delta: 0.5,
                soft_width: 2.0,
                with_chamfer: true,
                symmetric_chamfer: false,
            };
            ctx.hhi(&scene).unwrap().total
        };

        let zero = LossWeights {
            silhouette: 0.0,
            collision: 0.0,
            depth: 0.0,
            interaction: 0.0,
        };
        let mut only_c = zero.clone();
        only_c.collision = 1.0;
        let mut only_d = zero.clone();
        only_d.depth = 1.0;
        let mut only_i = zero.clone();
        only_i.interaction = 1.0;
        let all = LossWeights {
            silhouette: 0.0,
            collision: 1.0,
            depth: 1.0,
            interaction: 1.0,
        };
        let parts = eval(only_c) + eval(only_d) + eval(only_i);
        let whole = eval(all);
        assert!((parts - whole).abs() < 1e-9, "{parts} vs {whole}");
        assert_eq!(eval(zero), 0.0);
    }

    #[test]
    fn joint_is_hhi_plus_hoi() {
        let mut scene = two_human_scene(0.8);
        scene
            .objects
            .push(instance(3, Vec3::new(0.0, 0.9, 5.0), 0.5, 2));
        scene.prepare_grids(24, 0.1).unwrap();
        let graph = build_interaction_graph(&scene, &[]);
        let ctx = ObjectiveContext {
            graph: &graph,
            gt_index: None,
            sil_targets: None,
            hhi_weights: LossWeights {
                depth: 0.0,
                ..LossWeights::default()
            },
            hoi_weights: LossWeights {
                depth: 0.0,
                ..LossWeights::default()
            },
            delta: 0.5,
            soft_width: 2.0,
            with_chamfer: false,
            symmetric_chamfer: false,
        };
        let joint = ctx.joint(&scene).unwrap();
        let sum = ctx.hhi(&scene).unwrap().total + ctx.hoi(&scene).unwrap().total;
        assert!((joint.total - sum).abs() < 1e-12);
        assert!(joint.total > 0.0);
    }

    #[test]
    fn isolated_instance_terms_stay_exactly_zero_under_small_moves() {
        let mut scene = two_human_scene(5.0);
        scene.humans[1].pose.translation = Vec3::new(20.0, 0.0, 9.0);
        let graph = build_interaction_graph(&scene, &[]);
        assert!(graph.human_pairs.is_empty());
        for step in 0..5 {
            let mut poses = scene.poses();
            poses.get_mut(&2).unwrap().translation.x += step as f64 * 1e-3;
            let s = scene.with_poses(&poses);
            assert_eq!(collision_total_hh(&s, 0.5).unwrap(), 0.0);
            assert_eq!(interaction_hh(&s, &graph).unwrap(), 0.0);
        }
    }
}
