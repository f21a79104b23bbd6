//! Scene-consistency loss terms. Each term is a pure function of prepared
//! inputs (posed vertices, renders, masks); orchestration over a scene lives
//! in `scene::objective`.

mod collision;
mod depth;
mod interaction;
mod silhouette;

pub use collision::{collision_pair_loss, collision_total, Collider};
pub use depth::{depth_order_loss, DepthPairs};
pub use interaction::{interaction_hh_total, interaction_ho, BodySummary};
pub use silhouette::{occ_sil_loss, MaskTarget};

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Per-term weights of a composite objective. The silhouette weight is
/// ignored by objectives that have no silhouette term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossWeights {
    pub silhouette: f64,
    pub collision: f64,
    pub depth: f64,
    pub interaction: f64,
}

impl Default for LossWeights {
    fn default() -> LossWeights {
        LossWeights {
            silhouette: 1.0,
            collision: 1.0,
            depth: 1.0,
            interaction: 1.0,
        }
    }
}

impl LossWeights {
    pub fn validate(&self, what: &str) -> Result<()> {
        for (name, v) in [
            ("silhouette", self.silhouette),
            ("collision", self.collision),
            ("depth", self.depth),
            ("interaction", self.interaction),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Configuration(format!(
                    "{what}.{name} must be finite and >= 0, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Numerically stable log(1 + exp(x)).
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softplus_matches_naive_form_in_safe_range() {
        for x in [-5.0f64, -0.5, 0.0, 0.5, 5.0] {
            let naive = (1.0f64 + x.exp()).ln();
            assert!((softplus(x) - naive).abs() < 1e-12);
        }
        assert_eq!(softplus(0.0), std::f64::consts::LN_2);
    }

    #[test]
    fn softplus_is_stable_at_extremes() {
        assert_eq!(softplus(1000.0), 1000.0);
        assert_eq!(softplus(-1000.0), 0.0);
    }

    #[test]
    fn weights_validate_with_field_names() {
        let mut w = LossWeights::default();
        w.depth = -1.0;
        let msg = w.validate("hhi_weights").unwrap_err().to_string();
        assert!(msg.contains("hhi_weights.depth"), "message: {msg}");
    }
}
