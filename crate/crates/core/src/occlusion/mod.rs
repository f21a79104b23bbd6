//! Occlusion-aware object fitting: find which detections overlap the
//! target, enumerate occluder-removal subsets, obtain deoccluded masks from
//! a pluggable provider, re-match the target, and keep the pose with the
//! lowest silhouette loss. The empty subset is always evaluated without a
//! provider, so the result can never lose to the plain fit on the original
//! mask.

mod provider;

pub use provider::{subset_key, DetectionRecord, FileOracleProvider, MaskProvider, ProviderRequest};
#[cfg(feature = "remote-provider")]
pub use provider::RemoteProvider;

use std::collections::BTreeSet;
use std::path::Path;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::geometry::{Camera, Rect2, RigidPose, TriMesh};
use crate::raster::BinaryMask;
use crate::scene::fit_object_pose;

/// One detected instance: its 2D box, pixel mask, and whether it is a rigid
/// object (a fitting target) or not (humans and other deformables, which
/// participate only as occluders).
#[derive(Debug, Clone)]
pub struct Detection {
    pub id: u32,
    pub category: String,
    pub bbox: Rect2,
    pub mask: BinaryMask,
    pub rigid: bool,
}

/// Detections (other than the target itself) whose box IOU with the target
/// strictly exceeds `threshold`.
pub fn find_occluders(
    target: &Detection,
    all: &[Detection],
    threshold: f64,
) -> Result<Vec<Detection>> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::Configuration(format!(
            "occluder IOU threshold must lie in [0, 1], got {threshold}"
        )));
    }
    Ok(all
        .iter()
        .filter(|d| d.id != target.id && target.bbox.iou(&d.bbox) > threshold)
        .cloned()
        .collect())
}

/// Advances `c` to the next k-combination of `0..n` in lexicographic order.
fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if c[i] < n - (k - i) {
            c[i] += 1;
            for j in i + 1..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Index subsets of `0..count` in ascending-size, lexicographic order. All
/// 2^count subsets when they fit within `cap`; otherwise the list is
/// truncated at `cap` entries with the last slot reserved for the full
/// subset, and the empty subset always leads. The effective cap is never
/// below two once there is anything to remove.
pub fn enumerate_subsets(count: usize, cap: usize) -> Vec<Vec<usize>> {
    assert!(cap >= 1, "subset cap must be at least 1");
    let cap = if count == 0 { cap } else { cap.max(2) };
    let exhaustive = count < usize::BITS as usize && (1usize << count) <= cap;
    let full: Vec<usize> = (0..count).collect();

    let mut subsets: Vec<Vec<usize>> = Vec::new();
    'sizes: for size in 0..=count {
        let mut current: Vec<usize> = (0..size).collect();
        loop {
            if !exhaustive && subsets.len() + 1 >= cap && current != full {
                break 'sizes;
            }
            subsets.push(current.clone());
            if !next_combination(&mut current, count) {
                continue 'sizes;
            }
        }
    }
    if !subsets.contains(&full) {
        subsets.push(full);
    }
    subsets
}

/// Pixelwise union. The dimensions anchor the empty-list case and every
/// mask must match them.
pub fn combine_masks(width: u32, height: u32, masks: &[&BinaryMask]) -> Result<BinaryMask> {
    let mut out = BinaryMask::new(width, height);
    for m in masks {
        out = out.union(m)?;
    }
    Ok(out)
}

/// Index of the new detection whose box IOU with the original is highest.
/// Ties break to the lowest index; an all-zero row means the object was not
/// re-found and the candidate must be discarded.
pub fn rematch_object(original_box: &Rect2, new_detections: &[Detection]) -> Result<usize> {
    if new_detections.is_empty() {
        return Err(Error::Configuration(
            "cannot re-match against an empty detection list".into(),
        ));
    }
    let mut best = (0usize, 0.0f64);
    for (i, d) in new_detections.iter().enumerate() {
        let iou = original_box.iou(&d.bbox);
        if iou > best.1 {
            best = (i, iou);
        }
    }
    if best.1 == 0.0 {
        return Err(Error::NoMatch(
            "no new detection overlaps the original box".into(),
        ));
    }
    Ok(best.0)
}

/// Occlusion indicator for `target_id` over the given detection set: 0
/// exactly where some other instance's mask covers a pixel the target's own
/// mask does not, 1 everywhere else (own pixels and background).
pub fn build_eta(
    target_id: u32,
    detections: &[Detection],
    width: u32,
    height: u32,
) -> Result<BinaryMask> {
    let mut own = BinaryMask::new(width, height);
    let mut others = BinaryMask::new(width, height);
    for d in detections {
        if d.id == target_id {
            own = own.union(&d.mask)?;
        } else {
            others = others.union(&d.mask)?;
        }
    }
    Ok(BinaryMask::from_fn(width, height, |x, y| {
        !(others.get(x, y) && !own.get(x, y))
    }))
}

/// One evaluated removal subset: which occluders were removed, the matched
/// detection, and the pose fit against its mask. Carries the mask and
/// occlusion indicator the fit used so callers can persist them.
#[derive(Debug, Clone)]
pub struct FitCandidate {
    /// Ids of the removed occluder detections, ascending. Empty for the
    /// no-removal baseline.
    pub removed: Vec<u32>,
    /// Index of the matched detection within the set the fit used.
    pub matched_index: usize,
    pub exemplar_index: usize,
    pub pose: RigidPose,
    pub loss: f64,
    pub mask: BinaryMask,
    pub eta: BinaryMask,
    pub trace: Vec<crate::scene::StageTraceRow>,
}

/// Runs the full removal search for one rigid target and returns the
/// lowest-loss candidate. Subsets whose provider call, re-match, or fit
/// fails are skipped with a warning; the baseline (empty subset) needs no
/// provider, so a `None` provider degrades to the plain fit.
#[allow(clippy::too_many_arguments)]
pub fn deoccluded_fit(
    target: &Detection,
    all: &[Detection],
    provider: Option<&dyn MaskProvider>,
    exemplars: &[TriMesh],
    camera: &Camera,
    image: Option<&Path>,
    init: Option<&RigidPose>,
    cfg: &RunConfig,
) -> Result<FitCandidate> {
    let (w, h) = (camera.width, camera.height);
    let occluders = find_occluders(target, all, cfg.occluder_iou)?;
    if !occluders.is_empty() && provider.is_none() {
        log::warn!(
            "target {} has {} occluder(s) but no mask provider; only the baseline fit runs",
            target.id,
            occluders.len()
        );
    }
    let subsets = enumerate_subsets(occluders.len(), cfg.subset_cap);

    let mut best: Option<FitCandidate> = None;
    let mut last_failure = String::new();
    for subset in &subsets {
        let attempt = || -> Result<FitCandidate> {
            let (removed, matched_index, mask, eta) = if subset.is_empty() {
                let eta = build_eta(target.id, all, w, h)?;
                let matched = all
                    .iter()
                    .position(|d| d.id == target.id)
                    .ok_or_else(|| Error::NoMatch("target not in detection list".into()))?;
                (Vec::new(), matched, target.mask.clone(), eta)
            } else {
                let p = provider.ok_or_else(|| {
                    Error::Provider("no provider configured for occluder removal".into())
                })?;
                let removed_ids: BTreeSet<u32> = subset.iter().map(|&i| occluders[i].id).collect();
                let mask_refs: Vec<&BinaryMask> =
                    subset.iter().map(|&i| &occluders[i].mask).collect();
                let combined = combine_masks(w, h, &mask_refs)?;
                let request = ProviderRequest {
                    image,
                    occluder_mask: &combined,
                    removed_ids: &removed_ids,
                };
                let new_dets = p.deoccluded_detections(&request)?;
                for d in &new_dets {
                    if d.mask.dims() != (w, h) {
                        return Err(Error::Provider(format!(
                            "provider mask for detection {} is {}x{}, camera is {w}x{h}",
                            d.id,
                            d.mask.dims().0,
                            d.mask.dims().1
                        )));
                    }
                }
                let k = rematch_object(&target.bbox, &new_dets)?;
                let eta = build_eta(new_dets[k].id, &new_dets, w, h)?;
                (
                    removed_ids.into_iter().collect(),
                    k,
                    new_dets[k].mask.clone(),
                    eta,
                )
            };
            let fit = fit_object_pose(&target.category, exemplars, &mask, &eta, camera, init, cfg)?;
            Ok(FitCandidate {
                removed,
                matched_index,
                exemplar_index: fit.exemplar_index,
                pose: fit.pose,
                loss: fit.loss,
                mask,
                eta,
                trace: fit.trace,
            })
        };
        match attempt() {
            Ok(candidate) => {
                let better = best.as_ref().map_or(true, |b| candidate.loss < b.loss);
                if better {
                    best = Some(candidate);
                }
            }
            Err(e) => {
                last_failure = e.to_string();
                log::warn!("removal subset {subset:?} skipped: {e}");
            }
        }
    }
    best.ok_or_else(|| {
        Error::Provider(format!(
            "every removal candidate failed; last error: {last_failure}"
        ))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn det(id: u32, x0: f64, y0: f64, x1: f64, y1: f64) -> Detection {
        let mask = BinaryMask::from_fn(64, 64, |x, y| {
            (x as f64) >= x0 && (x as f64) < x1 && (y as f64) >= y0 && (y as f64) < y1
        });
        Detection {
            id,
            category: "thing".into(),
            bbox: Rect2::new(x0, y0, x1, y1).unwrap(),
            mask,
            rigid: true,
        }
    }

    #[test]
    fn occluders_use_strict_iou() {
        let target = det(1, 0.0, 0.0, 10.0, 10.0);
        // Candidates nest inside the target, so IOU = inter / 100.
        let strong = det(2, 0.0, 0.0, 10.0, 5.8); // iou 0.58
        let weak = det(3, 0.0, 0.0, 10.0, 2.0); // iou 0.20
        let exact = det(4, 0.0, 0.0, 10.0, 3.0); // iou 0.30 exactly
        assert!((target.bbox.iou(&exact.bbox) - 0.3).abs() < 1e-12);
        let all = vec![target.clone(), strong, weak, exact];
        let occ = find_occluders(&target, &all, 0.3).unwrap();
        assert_eq!(occ.iter().map(|d| d.id).collect::<Vec<_>>(), vec![2]);
        assert!(find_occluders(&target, &all, 1.5).is_err());
    }

    #[test]
    fn subsets_are_complete_when_small() {
        let s = enumerate_subsets(2, 16);
        assert_eq!(s, vec![vec![], vec![0], vec![1], vec![0, 1]]);
        assert_eq!(enumerate_subsets(0, 16), vec![Vec::<usize>::new()]);
    }

    #[test]
    fn capped_subsets_keep_empty_and_full() {
        let s = enumerate_subsets(5, 10);
        assert_eq!(s.len(), 10);
        assert_eq!(s[0], Vec::<usize>::new());
        assert!(s.contains(&vec![0, 1, 2, 3, 4]));
        // Ascending size, lexicographic within size.
        assert_eq!(s[1], vec![0]);
        assert_eq!(s[2], vec![1]);
        for w in s.windows(2).take(8) {
            assert!(w[0].len() <= w[1].len() || w[1] == vec![0, 1, 2, 3, 4]);
        }
    }

    #[test]
    fn subsets_are_duplicate_free() {
        for count in 0..6 {
            for cap in [1usize, 2, 3, 7, 64] {
                let s = enumerate_subsets(count, cap);
                let unique: std::collections::BTreeSet<_> = s.iter().cloned().collect();
                assert_eq!(unique.len(), s.len(), "count {count} cap {cap}");
                assert!(s.contains(&Vec::new()));
                assert!(s.contains(&(0..count).collect::<Vec<_>>()));
            }
        }
    }

    #[test]
    fn combine_is_union() {
        let a = det(1, 0.0, 0.0, 4.0, 4.0).mask;
        let b = det(2, 10.0, 10.0, 14.0, 14.0).mask;
        let empty = combine_masks(64, 64, &[]).unwrap();
        assert_eq!(empty.count(), 0);
        let ab = combine_masks(64, 64, &[&a, &b]).unwrap();
        assert_eq!(ab.count(), a.count() + b.count());
        let aa = combine_masks(64, 64, &[&a, &a]).unwrap();
        assert_eq!(aa.count(), a.count());
    }

    proptest! {
        #[test]
        fn combine_masks_is_commutative_and_associative(bits in proptest::collection::vec(0u8..=1, 48)) {
            let m = |offset: usize| {
                BinaryMask::from_fn(4, 4, |x, y| bits[offset + (y * 4 + x) as usize] == 1)
            };
            let (a, b, c) = (m(0), m(16), m(32));
            let ab_c = combine_masks(4, 4, &[&combine_masks(4, 4, &[&a, &b]).unwrap(), &c]).unwrap();
            let a_bc = combine_masks(4, 4, &[&a, &combine_masks(4, 4, &[&b, &c]).unwrap()]).unwrap();
            let ba = combine_masks(4, 4, &[&b, &a]).unwrap();
            let ab = combine_masks(4, 4, &[&a, &b]).unwrap();
            for y in 0..4 {
                for x in 0..4 {
                    prop_assert_eq!(ab_c.get(x, y), a_bc.get(x, y));
                    prop_assert_eq!(ab.get(x, y), ba.get(x, y));
                }
            }
        }
    }

    #[test]
    fn rematch_takes_argmax_with_low_index_ties() {
        let original = Rect2::new(0.0, 0.0, 10.0, 10.0).unwrap();
        let dets = vec![
            det(1, 7.0, 7.0, 17.0, 17.0),  // small overlap
            det(2, 1.0, 1.0, 11.0, 11.0),  // big overlap
            det(3, 2.0, 2.0, 12.0, 12.0),  // medium
        ];
        assert_eq!(rematch_object(&original, &dets).unwrap(), 1);

        let identical = vec![det(1, 0.0, 0.0, 10.0, 10.0), det(2, 0.0, 0.0, 10.0, 10.0)];
        assert_eq!(rematch_object(&original, &identical).unwrap(), 0);

        let disjoint = vec![det(1, 50.0, 50.0, 60.0, 60.0)];
        assert!(matches!(
            rematch_object(&original, &disjoint),
            Err(Error::NoMatch(_))
        ));
        assert!(rematch_object(&original, &[]).is_err());
    }

    #[test]
    fn eta_forgives_only_foreign_exclusive_pixels() {
        let target = det(1, 0.0, 0.0, 8.0, 8.0);
        let occluder = det(2, 4.0, 0.0, 12.0, 8.0);
        let eta = build_eta(1, &[target.clone(), occluder.clone()], 64, 64).unwrap();
        assert!(eta.get(2, 2)); // target-only pixel
        assert!(eta.get(6, 2)); // overlap pixel: target still owns it
        assert!(!eta.get(10, 2)); // occluder-only pixel
        assert!(eta.get(30, 30)); // background
    }
}
