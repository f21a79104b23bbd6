use super::softplus;
use crate::error::{Error, Result};
use crate::raster::{DepthMap, IndexMap};
use std::collections::{BTreeMap, BTreeSet};

/// Which front-instance disagreements contribute to the depth-ordering sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DepthPairs {
    /// Both the labeled and the rendered instance are humans.
    HumanHuman,
    /// Every disagreement, including those involving objects.
    All,
}

/// Depth-ordering loss. For each pixel where the ground-truth front instance
/// `y(p)` differs from the rendered front instance `yr(p)`, penalizes the
/// labeled instance being the farther one: `softplus(D_y(p) - D_yr(p))`,
/// with D taken from each instance's solo depth render. Pixels where either
/// instance is background, or where either solo depth is infinite (the
/// instance no longer covers that pixel alone), are skipped.
pub fn depth_order_loss(
    gt_index: &IndexMap,
    rendered_index: &IndexMap,
    solo_depth: &BTreeMap<u32, DepthMap>,
    human_ids: &BTreeSet<u32>,
    pairs: DepthPairs,
) -> Result<f64> {
    if gt_index.dims() != rendered_index.dims() {
        return Err(Error::DimensionMismatch {
            what: "depth-ordering index maps".into(),
            expected_w: gt_index.width,
            expected_h: gt_index.height,
            actual_w: rendered_index.width,
            actual_h: rendered_index.height,
        });
    }
    let mut total = 0.0;
    for y in 0..gt_index.height {
        for x in 0..gt_index.width {
            let g = gt_index.get(x, y);
            let r = rendered_index.get(x, y);
            if g == 0 || r == 0 || g == r {
                continue;
            }
            let include = match pairs {
                DepthPairs::HumanHuman => human_ids.contains(&g) && human_ids.contains(&r),
                DepthPairs::All => true,
            };
            if !include {
                continue;
            }
            let dg = solo_map(solo_depth, g)?.get(x, y);
            let dr = solo_map(solo_depth, r)?.get(x, y);
            if !dg.is_finite() || !dr.is_finite() {
                continue;
            }
            total += softplus(dg - dr);
        }
    }
    Ok(total)
}

fn solo_map(solo: &BTreeMap<u32, DepthMap>, id: u32) -> Result<&DepthMap> {
    solo.get(&id)
        .ok_or_else(|| Error::MissingData(format!("solo depth render for instance {id}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn idx(vals: &[[u32; 3]; 3]) -> IndexMap {
        let mut m = IndexMap::new(3, 3);
        for (y, row) in vals.iter().enumerate() {
            for (x, &v) in row.iter().enumerate() {
                m.set(x as u32, y as u32, v);
            }
        }
        m
    }

    fn depth(vals: &[[f64; 3]; 3]) -> DepthMap {
        let mut m = DepthMap::new(3, 3);
        for (y, row) in vals.iter().enumerate() {
            for (x, &v) in row.iter().enumerate() {
                m.set(x as u32, y as u32, v);
            }
        }
        m
    }

    fn humans(ids: &[u32]) -> BTreeSet<u32> {
        ids.iter().copied().collect()
    }

    #[test]
    fn agreement_contributes_nothing() {
        let gt = idx(&[[1, 1, 0], [2, 2, 0], [0, 0, 0]]);
        let solo: BTreeMap<u32, DepthMap> = [
            (1, depth(&[[1.0; 3]; 3])),
            (2, depth(&[[2.0; 3]; 3])),
        ]
        .into();
        let loss =
            depth_order_loss(&gt, &gt, &solo, &humans(&[1, 2]), DepthPairs::All).unwrap();
        assert_eq!(loss, 0.0);
    }

    #[test]
    fn single_disagreement_with_equal_depths_is_ln_two() {
        let gt = idx(&[[1, 0, 0], [0, 0, 0], [0, 0, 0]]);
        let rendered = idx(&[[2, 0, 0], [0, 0, 0], [0, 0, 0]]);
        let solo: BTreeMap<u32, DepthMap> = [
            (1, depth(&[[4.0; 3]; 3])),
            (2, depth(&[[4.0; 3]; 3])),
        ]
        .into();
        let loss =
            depth_order_loss(&gt, &rendered, &solo, &humans(&[1, 2]), DepthPairs::All).unwrap();
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn correct_ordering_is_cheap_and_wrong_ordering_expensive() {
        let gt = idx(&[[1, 0, 0], [0, 0, 0], [0, 0, 0]]);
        let rendered = idx(&[[2, 0, 0], [0, 0, 0], [0, 0, 0]]);
        let near_gt: BTreeMap<u32, DepthMap> = [
            (1, depth(&[[2.0; 3]; 3])),
            (2, depth(&[[6.0; 3]; 3])),
        ]
        .into();
        let cheap =
            depth_order_loss(&gt, &rendered, &near_gt, &humans(&[1, 2]), DepthPairs::All)
                .unwrap();
        let far_gt: BTreeMap<u32, DepthMap> = [
            (1, depth(&[[6.0; 3]; 3])),
            (2, depth(&[[2.0; 3]; 3])),
        ]
        .into();
        let expensive =
            depth_order_loss(&gt, &rendered, &far_gt, &humans(&[1, 2]), DepthPairs::All)
                .unwrap();
        assert!(cheap < expensive);
        assert!((expensive - softplus(4.0)).abs() < 1e-12);
        assert!((cheap - softplus(-4.0)).abs() < 1e-12);
    }

    #[test]
    fn human_filter_drops_object_pairs() {
        // Instance 9 is an object: pixel (0,0) disagrees human-vs-object,
        // pixel (1,0) human-vs-human.
        let gt = idx(&[[1, 1, 0], [0, 0, 0], [0, 0, 0]]);
        let rendered = idx(&[[9, 2, 0], [0, 0, 0], [0, 0, 0]]);
        let solo: BTreeMap<u32, DepthMap> = [
            (1, depth(&[[4.0; 3]; 3])),
            (2, depth(&[[4.0; 3]; 3])),
            (9, depth(&[[4.0; 3]; 3])),
        ]
        .into();
        let hh = depth_order_loss(&gt, &rendered, &solo, &humans(&[1, 2]), DepthPairs::HumanHuman)
            .unwrap();
        assert!((hh - std::f64::consts::LN_2).abs() < 1e-15);
        let all =
            depth_order_loss(&gt, &rendered, &solo, &humans(&[1, 2]), DepthPairs::All).unwrap();
        assert!((all - 2.0 * std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn pixels_without_solo_coverage_are_skipped() {
        let gt = idx(&[[1, 0, 0], [0, 0, 0], [0, 0, 0]]);
        let rendered = idx(&[[2, 0, 0], [0, 0, 0], [0, 0, 0]]);
        let mut d1 = depth(&[[4.0; 3]; 3]);
        d1.set(0, 0, f64::INFINITY);
        let solo: BTreeMap<u32, DepthMap> = [(1, d1), (2, depth(&[[4.0; 3]; 3]))].into();
        let loss =
            depth_order_loss(&gt, &rendered, &solo, &humans(&[1, 2]), DepthPairs::All).unwrap();
        assert_eq!(loss, 0.0);
    }

    #[test]
    fn missing_solo_map_is_an_error() {
        let gt = idx(&[[1, 0, 0], [0, 0, 0], [0, 0, 0]]);
        let rendered = idx(&[[2, 0, 0], [0, 0, 0], [0, 0, 0]]);
        let solo: BTreeMap<u32, DepthMap> = [(1, depth(&[[4.0; 3]; 3]))].into();
        assert!(matches!(
            depth_order_loss(&gt, &rendered, &solo, &humans(&[1, 2]), DepthPairs::All),
            Err(Error::MissingData(_))
        ));
    }
}
