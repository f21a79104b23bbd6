//! Deterministic software rasterization: z-buffered depth and instance-index
//! rendering, hard and soft silhouettes, morphological edge maps and exact
//! distance transforms. No GPU, no global state; identical inputs produce
//! identical buffers on every platform.

mod buffers;
mod edt;
pub mod io;
mod render;
mod silhouette;

pub use buffers::{BinaryMask, DepthMap, IndexMap, Silhouette};
pub use edt::DistanceField;
pub use render::{render_depth, render_scene, RenderOutput, NEAR_PLANE};
pub use silhouette::{render_silhouette, sigmoid, silhouette_segments};

use crate::error::{Error, Result};

/// Morphological outer edge: pixels within the max-filter window of the mask
/// but not in the mask itself. `filter` is the full window width and must be
/// odd and >= 3.
pub fn edge_map(mask: &BinaryMask, filter: usize) -> Result<BinaryMask> {
    if filter < 3 || filter % 2 == 0 {
        return Err(Error::Configuration(format!(
            "edge filter width must be odd and >= 3, got {filter}"
        )));
    }
    let r = (filter / 2) as i64;
    let (w, h) = (mask.width as i64, mask.height as i64);
    // Separable dilation: horizontal pass, then vertical.
    let mut horiz = BinaryMask::new(mask.width, mask.height);
    for y in 0..h {
        for x in 0..w {
            let mut any = false;
            for dx in -r..=r {
                let xx = x + dx;
                if xx >= 0 && xx < w && mask.get(xx as u32, y as u32) {
                    any = true;
                    break;
                }
            }
            horiz.set(x as u32, y as u32, any);
        }
    }
    let mut out = BinaryMask::new(mask.width, mask.height);
    for y in 0..h {
        for x in 0..w {
            let mut any = false;
            for dy in -r..=r {
                let yy = y + dy;
                if yy >= 0 && yy < h && horiz.get(x as u32, yy as u32) {
                    any = true;
                    break;
                }
            }
            out.set(x as u32, y as u32, any && !mask.get(x as u32, y as u32));
        }
    }
    Ok(out)
}

/// Sum over `from` pixels of the Euclidean distance to the nearest `to`
/// feature. Zero when either side is empty.
pub fn chamfer_one_directional(from: &BinaryMask, to: &DistanceField) -> Result<f64> {
    if (to.width, to.height) != (from.width, from.height) {
        return Err(Error::DimensionMismatch {
            what: "chamfer operands".into(),
            expected_w: from.width,
            expected_h: from.height,
            actual_w: to.width,
            actual_h: to.height,
        });
    }
    if !to.has_features() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for y in 0..from.height {
        for x in 0..from.width {
            if from.get(x, y) {
                total += to.get(x, y);
            }
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edge_map_rings_a_block() {
        let mask = BinaryMask::from_fn(16, 16, |x, y| (6..10).contains(&x) && (6..10).contains(&y));
        let e = edge_map(&mask, 3).unwrap();
        // Ring of width 1 around a 4x4 block: 6x6 - 4x4 = 20 pixels.
        assert_eq!(e.count(), 20);
        assert!(e.get(5, 5));
        assert!(!e.get(6, 6));
        assert!(!e.get(4, 4));

        let e7 = edge_map(&mask, 7).unwrap();
        // Width-3 ring: 10x10 - 4x4 = 84.
        assert_eq!(e7.count(), 84);
    }

    #[test]
    fn edge_map_validates_filter() {
        let mask = BinaryMask::new(4, 4);
        assert!(edge_map(&mask, 4).is_err());
        assert!(edge_map(&mask, 1).is_err());
        assert!(edge_map(&mask, 3).is_ok());
    }

    #[test]
    fn chamfer_sums_distances_and_handles_empty_sides() {
        let to = BinaryMask::from_fn(8, 8, |x, y| x == 0 && y == 0);
        let field = DistanceField::build(&to);
        let from = BinaryMask::from_fn(8, 8, |x, y| (x == 3 && y == 0) || (x == 0 && y == 4));
        assert_eq!(chamfer_one_directional(&from, &field).unwrap(), 7.0);
        // Empty `from`.
        assert_eq!(
            chamfer_one_directional(&BinaryMask::new(8, 8), &field).unwrap(),
            0.0
        );
        // Empty `to`.
        let empty_field = DistanceField::build(&BinaryMask::new(8, 8));
        assert_eq!(chamfer_one_directional(&from, &empty_field).unwrap(), 0.0);
    }
}
