use crate::geometry::{Aabb, Vec3};

/// Centroid and bounds of a posed body or region, the only geometry the
/// interaction terms look at.
#[derive(Debug, Clone, Copy)]
pub struct BodySummary {
    pub centroid: Vec3,
    pub aabb: Aabb,
}

impl BodySummary {
    /// Interaction gate: bodies interact while their bounds overlap
    /// (touching counts).
    pub fn interacts(&self, o: &BodySummary) -> bool {
        self.aabb.overlaps(&o.aabb)
    }
}

/// Human-human interaction: for each unordered pair whose bounds currently
/// overlap, the distance between centroids. Pulls interacting people
/// together so collision resolution cannot simply fling them apart.
pub fn interaction_hh_total(humans: &[BodySummary]) -> f64 {
    let mut total = 0.0;
    for i in 0..humans.len() {
        for j in i + 1..humans.len() {
            if humans[i].interacts(&humans[j]) {
                total += humans[i].centroid.distance(humans[j].centroid);
            }
        }
    }
    total
}

/// Human-object interaction: a coarse whole-body term plus fine terms for
/// declared region pairs (e.g. hand-handle), each gated by its own bounds
/// overlap at the current pose.
pub fn interaction_ho(
    human: &BodySummary,
    object: &BodySummary,
    fine_pairs: &[(BodySummary, BodySummary)],
) -> f64 {
    let mut total = 0.0;
    if human.interacts(object) {
        total += human.centroid.distance(object.centroid);
    }
    for (rh, ro) in fine_pairs {
        if rh.interacts(ro) {
            total += rh.centroid.distance(ro.centroid);
        }
    }
    total
}
