//! Exact Euclidean distance transforms on the pixel grid, by the
//! lower-envelope-of-parabolas method. Distances are measured between pixel
//! centers; pixels with no feature anywhere stay at infinity.

use super::buffers::BinaryMask;

/// Euclidean distance from every pixel to the nearest true pixel.
#[derive(Debug, Clone)]
pub struct DistanceField {
    pub width: u32,
    pub height: u32,
    data: Vec<f64>,
    has_features: bool,
}

impl DistanceField {
    pub fn build(features: &BinaryMask) -> DistanceField {
        let (w, h) = (features.width as usize, features.height as usize);
        let mut grid = vec![f64::INFINITY; w * h];
        let mut has_features = false;
        for y in 0..h {
            for x in 0..w {
                if features.get(x as u32, y as u32) {
                    grid[y * w + x] = 0.0;
                    has_features = true;
                }
            }
        }
        if has_features {
            // Columns, then rows, on squared distances.
            let mut scratch = vec![0.0f64; w.max(h)];
            let mut col = vec![0.0f64; h];
            for x in 0..w {
                for y in 0..h {
                    col[y] = grid[y * w + x];
                }
                dt_1d(&col, &mut scratch[..h]);
                for y in 0..h {
                    grid[y * w + x] = scratch[y];
                }
            }
            for y in 0..h {
                let row: Vec<f64> = grid[y * w..(y + 1) * w].to_vec();
                dt_1d(&row, &mut scratch[..w]);
                grid[y * w..(y + 1) * w].copy_from_slice(&scratch[..w]);
            }
            for v in grid.iter_mut() {
                *v = v.sqrt();
            }
        }
        DistanceField {
            width: features.width,
            height: features.height,
            data: grid,
            has_features,
        }
    }

    pub fn get(&self, x: u32, y: u32) -> f64 {
        self.data[y as usize * self.width as usize + x as usize]
    }

    pub fn has_features(&self) -> bool {
        self.has_features
    }
}

/// One-dimensional squared distance transform of a sampled function `f`
/// (infinity where no feature), written into `out`.
fn dt_1d(f: &[f64], out: &mut [f64]) {
    let n = f.len();
    debug_assert_eq!(out.len(), n);
    let mut v = vec![0usize; n]; // locations of parabolas in the envelope
    let mut z = vec![0.0f64; n + 1]; // boundaries between parabolas
    let mut k = 0usize;
    v[0] = 0;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in 1..n {
        if f[q] == f64::INFINITY {
            continue;
        }
        loop {
            let p = v[k];
            let denom = 2.0 * (q as f64 - p as f64);
            let s = if f[p] == f64::INFINITY {
                // Any parabola beats one rooted at infinity everywhere.
                f64::NEG_INFINITY
            } else {
                ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / denom
            };
            if s <= z[k] {
                if k == 0 {
                    v[0] = q;
                    z[0] = f64::NEG_INFINITY;
                    z[1] = f64::INFINITY;
                    break;
                }
                k -= 1;
                continue;
            }
            k += 1;
            v[k] = q;
            z[k] = s;
            z[k + 1] = f64::INFINITY;
            break;
        }
    }
    let mut k = 0usize;
    for q in 0..n {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let p = v[k];
        let d = q as f64 - p as f64;
        out[q] = if f[p] == f64::INFINITY {
            f64::INFINITY
        } else {
            d * d + f[p]
        };
    }
}
