//! Flattening instance poses into an optimizer-friendly vector and back.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::geometry::{canonicalize_axis_angle, RigidPose, Vec3};

/// Which piece of a pose a contiguous run of parameters controls.
///
/// `LogScale` is a single multiplier exponent over the scale captured at
/// pack time: effective scale = base * exp(param). It starts at zero, so an
/// untouched vector reproduces the base pose exactly and any real value
/// keeps scale strictly positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamBlock {
    Translation,
    AxisAngle,
    LogScale,
}

impl ParamBlock {
    pub fn len(self) -> usize {
        match self {
            ParamBlock::Translation | ParamBlock::AxisAngle => 3,
            ParamBlock::LogScale => 1,
        }
    }
}

#[derive(Debug, Clone)]
struct Entry {
    id: u32,
    block: ParamBlock,
    offset: usize,
}

/// A snapshot of selected pose degrees of freedom as one flat `Vec<f64>`,
/// with enough layout to rebuild full poses from any later value of that
/// vector. Instances not mentioned in the layout pass through unchanged.
#[derive(Debug, Clone)]
pub struct ParamVector {
    values: Vec<f64>,
    entries: Vec<Entry>,
    base: BTreeMap<u32, RigidPose>,
}

impl ParamVector {
    /// Snapshots `poses` and lays out the requested blocks in the order
    /// given. Every referenced id must have a pose; repeating a block for
    /// the same id is rejected since the later copy would win silently.
    pub fn pack(poses: &BTreeMap<u32, RigidPose>, blocks: &[(u32, Vec<ParamBlock>)]) -> Result<ParamVector> {
        let mut entries = Vec::new();
        let mut values = Vec::new();
        for (id, kinds) in blocks {
            let pose = poses
                .get(id)
                .ok_or_else(|| Error::MissingData(format!("no pose for instance {id} to pack")))?;
            for &block in kinds {
                if entries
                    .iter()
                    .any(|e: &Entry| e.id == *id && e.block == block)
                {
                    return Err(Error::Configuration(format!(
                        "instance {id} packs {block:?} twice"
                    )));
                }
                let offset = values.len();
                match block {
                    ParamBlock::Translation => {
                        values.extend_from_slice(&[
                            pose.translation.x,
                            pose.translation.y,
                            pose.translation.z,
                        ]);
                    }
                    ParamBlock::AxisAngle => {
                        values.extend_from_slice(&[
                            pose.rotation.x,
                            pose.rotation.y,
                            pose.rotation.z,
                        ]);
                    }
                    ParamBlock::LogScale => values.push(0.0),
                }
                entries.push(Entry {
                    id: *id,
                    block,
                    offset,
                });
            }
        }
        Ok(ParamVector {
            values,
            entries,
            base: poses.clone(),
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Packed blocks in layout order as (instance id, kind, offset).
    pub fn layout(&self) -> impl Iterator<Item = (u32, ParamBlock, usize)> + '_ {
        self.entries.iter().map(|e| (e.id, e.block, e.offset))
    }

    /// Scale at pack time for one instance; log-scale parameters multiply it.
    pub fn base_scale(&self, id: u32) -> Option<f64> {
        self.base.get(&id).map(|p| p.scale)
    }

    /// Same layout and base poses, different coordinates.
    pub fn with_values(&self, values: Vec<f64>) -> ParamVector {
        assert_eq!(values.len(), self.values.len(), "layout mismatch");
        ParamVector {
            values,
            entries: self.entries.clone(),
            base: self.base.clone(),
        }
    }

    /// Rebuilds the full pose map: base poses with the packed blocks
    /// overwritten from the current values. Axis-angle is canonicalized the
    /// same way pose construction does, which is a no-op below a full turn.
    pub fn unpack(&self) -> BTreeMap<u32, RigidPose> {
        let mut poses = self.base.clone();
        for entry in &self.entries {
            let pose = poses.get_mut(&entry.id).expect("entry id packed from base");
            let v = &self.values[entry.offset..];
            match entry.block {
                ParamBlock::Translation => {
                    pose.translation = Vec3::new(v[0], v[1], v[2]);
                }
                ParamBlock::AxisAngle => {
                    pose.rotation = canonicalize_axis_angle(Vec3::new(v[0], v[1], v[2]));
                }
                ParamBlock::LogScale => {
                    let base_scale = self.base[&entry.id].scale;
                    pose.scale = base_scale * v[0].exp();
                }
            }
        }
        poses
    }
}
