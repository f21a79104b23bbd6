//! Central finite differences over an arbitrary scalar objective.

use crate::error::{Error, Result};
use crate::parallel::map_indexed;

/// Objectives are fallible: scene evaluation can hit genuine errors
/// (dimension mismatches, missing data) that must not be silently turned
/// into gradient zeros.
pub type Objective<'a> = Box<dyn Fn(&[f64]) -> Result<f64> + Sync + 'a>;

/// Two-sided difference (f(x + h e_i) - f(x - h e_i)) / 2h per coordinate.
/// Coordinates are evaluated independently (and in parallel when enabled);
/// a non-finite objective value reports which coordinate probed it.
pub fn numerical_gradient(f: &Objective<'_>, x: &[f64], h: f64) -> Result<Vec<f64>> {
    assert!(h > 0.0 && h.is_finite(), "finite-difference step must be positive");
    let results = map_indexed(x.len(), |i| {
        let mut probe = x.to_vec();
        probe[i] = x[i] + h;
        let plus = f(&probe)?;
        probe[i] = x[i] - h;
        let minus = f(&probe)?;
        if !plus.is_finite() || !minus.is_finite() {
            return Err(Error::NonFiniteObjective { coordinate: i });
        }
        Ok((plus - minus) / (2.0 * h))
    });
    results.into_iter().collect()
}
