use crate::error::{Error, Result};

fn idx(width: u32, x: u32, y: u32) -> usize {
    y as usize * width as usize + x as usize
}

pub(crate) fn ensure_same_dims(
    what: &str,
    expected: (u32, u32),
    actual: (u32, u32),
) -> Result<()> {
    if expected != actual {
        return Err(Error::DimensionMismatch {
            what: what.to_string(),
            expected_w: expected.0,
            expected_h: expected.1,
            actual_w: actual.0,
            actual_h: actual.1,
        });
    }
    Ok(())
}

/// Per-pixel boolean image, row-major from the top-left.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryMask {
    pub width: u32,
    pub height: u32,
    data: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: u32, height: u32) -> BinaryMask {
        BinaryMask {
            width,
            height,
            data: vec![false; width as usize * height as usize],
        }
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> bool) -> BinaryMask {
        let mut m = BinaryMask::new(width, height);
        for y in 0..height {
            for x in 0..width {
                m.set(x, y, f(x, y));
            }
        }
        m
    }

    pub fn get(&self, x: u32, y: u32) -> bool {
        self.data[idx(self.width, x, y)]
    }

    pub fn set(&mut self, x: u32, y: u32, v: bool) {
        let i = idx(self.width, x, y);
        self.data[i] = v;
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn any(&self) -> bool {
        self.data.iter().any(|&b| b)
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    /// Pixelwise union; dimensions must match.
    pub fn union(&self, o: &BinaryMask) -> Result<BinaryMask> {
        ensure_same_dims("mask union", self.dims(), o.dims())?;
        let mut out = self.clone();
        for (d, s) in out.data.iter_mut().zip(&o.data) {
            *d = *d || *s;
        }
        Ok(out)
    }

    /// Intersection-over-union of two masks; both empty yields 0.
    pub fn iou(&self, o: &BinaryMask) -> Result<f64> {
        ensure_same_dims("mask iou", self.dims(), o.dims())?;
        let mut inter = 0usize;
        let mut union = 0usize;
        for (&a, &b) in self.data.iter().zip(&o.data) {
            inter += (a && b) as usize;
            union += (a || b) as usize;
        }
        if union == 0 {
            Ok(0.0)
        } else {
            Ok(inter as f64 / union as f64)
        }
    }

    /// Tight bounding rectangle of true pixels as (x0, y0, x1, y1) with
    /// exclusive max corner, or None for an empty mask.
    pub fn bounding_box(&self) -> Option<(u32, u32, u32, u32)> {
        let (mut x0, mut y0) = (u32::MAX, u32::MAX);
        let (mut x1, mut y1) = (0u32, 0u32);
        let mut any = false;
        for y in 0..self.height {
            for x in 0..self.width {
                if self.get(x, y) {
                    any = true;
                    x0 = x0.min(x);
                    y0 = y0.min(y);
                    x1 = x1.max(x + 1);
                    y1 = y1.max(y + 1);
                }
            }
        }
        any.then_some((x0, y0, x1, y1))
    }
}

/// Per-pixel depth in camera units; +inf marks background.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    pub width: u32,
    pub height: u32,
    data: Vec<f64>,
}

impl DepthMap {
    pub fn new(width: u32, height: u32) -> DepthMap {
        DepthMap {
            width,
            height,
            data: vec![f64::INFINITY; width as usize * height as usize],
        }
    }

    pub fn get(&self, x: u32, y: u32) -> f64 {
        self.data[idx(self.width, x, y)]
    }

    pub fn set(&mut self, x: u32, y: u32, v: f64) {
        let i = idx(self.width, x, y);
        self.data[i] = v;
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

/// Per-pixel instance id; 0 marks background.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexMap {
    pub width: u32,
    pub height: u32,
    data: Vec<u32>,
}

impl IndexMap {
    pub fn new(width: u32, height: u32) -> IndexMap {
        IndexMap {
            width,
            height,
            data: vec![0; width as usize * height as usize],
        }
    }

    pub fn get(&self, x: u32, y: u32) -> u32 {
        self.data[idx(self.width, x, y)]
    }

    pub fn set(&mut self, x: u32, y: u32, v: u32) {
        let i = idx(self.width, x, y);
        self.data[i] = v;
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[u32] {
        &self.data
    }

    /// Mask of pixels labeled with the given id.
    pub fn mask_of(&self, id: u32) -> BinaryMask {
        BinaryMask::from_fn(self.width, self.height, |x, y| self.get(x, y) == id)
    }
}

/// Soft coverage image with values in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct Silhouette {
    pub width: u32,
    pub height: u32,
    data: Vec<f64>,
}

impl Silhouette {
    pub fn new(width: u32, height: u32) -> Silhouette {
        Silhouette {
            width,
            height,
            data: vec![0.0; width as usize * height as usize],
        }
    }

    pub fn get(&self, x: u32, y: u32) -> f64 {
        self.data[idx(self.width, x, y)]
    }

    pub fn set(&mut self, x: u32, y: u32, v: f64) {
        let i = idx(self.width, x, y);
        self.data[i] = v;
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn from_rows(width: u32, height: u32, rows: Vec<Vec<f64>>) -> Silhouette {
        let mut data = Vec::with_capacity(width as usize * height as usize);
        for row in rows {
            debug_assert_eq!(row.len(), width as usize);
            data.extend(row);
        }
        Silhouette { width, height, data }
    }

    /// Binary mask of pixels at or above the threshold.
    pub fn threshold(&self, t: f64) -> BinaryMask {
        BinaryMask::from_fn(self.width, self.height, |x, y| self.get(x, y) >= t)
    }
}
