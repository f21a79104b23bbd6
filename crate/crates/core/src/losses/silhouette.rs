use crate::error::{Error, Result};
use crate::raster::{chamfer_one_directional, edge_map, BinaryMask, DistanceField, Silhouette};

/// A selected mask with its occlusion indicator and precomputed edge
/// geometry. Building the edge distance field once per fit keeps the
/// optimizer's inner loop cheap.
#[derive(Debug, Clone)]
pub struct MaskTarget {
    pub mask: BinaryMask,
    /// False exactly where the pixel is covered only by other instances'
    /// masks; those pixels are forgiven in the coverage term.
    pub eta: BinaryMask,
    edge_filter: usize,
    mask_edges: BinaryMask,
    edge_field: DistanceField,
}

impl MaskTarget {
    pub fn new(mask: BinaryMask, eta: BinaryMask, edge_filter: usize) -> Result<MaskTarget> {
        if mask.dims() != eta.dims() {
            return Err(Error::DimensionMismatch {
                what: "occlusion indicator".into(),
                expected_w: mask.width,
                expected_h: mask.height,
                actual_w: eta.width,
                actual_h: eta.height,
            });
        }
        let mask_edges = edge_map(&mask, edge_filter)?;
        let edge_field = DistanceField::build(&mask_edges);
        Ok(MaskTarget {
            mask,
            eta,
            edge_filter,
            mask_edges,
            edge_field,
        })
    }

    /// Target with no occlusion anywhere (eta identically 1).
    pub fn unoccluded(mask: BinaryMask, edge_filter: usize) -> Result<MaskTarget> {
        let eta = BinaryMask::from_fn(mask.width, mask.height, |_, _| true);
        MaskTarget::new(mask, eta, edge_filter)
    }
}

/// Occlusion-aware silhouette loss: squared coverage error of the
/// occlusion-masked rendering against the target mask, plus (optionally) a
/// chamfer term from rendered edges to mask edges. With `symmetric_chamfer`
/// the reverse direction is added. The chamfer term is zero whenever either
/// edge set is empty.
pub fn occ_sil_loss(
    sil: &Silhouette,
    target: &MaskTarget,
    with_chamfer: bool,
    symmetric_chamfer: bool,
) -> Result<f64> {
    if sil.dims() != target.mask.dims() {
        return Err(Error::DimensionMismatch {
            what: "silhouette vs mask".into(),
            expected_w: target.mask.width,
            expected_h: target.mask.height,
            actual_w: sil.width,
            actual_h: sil.height,
        });
    }
    let (w, h) = sil.dims();
    let mut l2 = 0.0;
    for y in 0..h {
        for x in 0..w {
            let s = if target.eta.get(x, y) { sil.get(x, y) } else { 0.0 };
            let m = if target.mask.get(x, y) { 1.0 } else { 0.0 };
            let d = s - m;
            l2 += d * d;
        }
    }
    if !with_chamfer {
        return Ok(l2);
    }
    let masked = BinaryMask::from_fn(w, h, |x, y| target.eta.get(x, y) && sil.get(x, y) >= 0.5);
    let rendered_edges = edge_map(&masked, target.edge_filter)?;
    let mut chamfer = chamfer_one_directional(&rendered_edges, &target.edge_field)?;
    if symmetric_chamfer {
        let rendered_field = DistanceField::build(&rendered_edges);
        chamfer += chamfer_one_directional(&target.mask_edges, &rendered_field)?;
    }
    Ok(l2 + chamfer)
}
