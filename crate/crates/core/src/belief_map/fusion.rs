//! Recursive Bayesian fusion of blurred observations into the map.

use super::blur::BlurredField;
use super::BeliefMap;
use crate::error::{invalid, Result};

/// Fuses every cell of `blurred` into `map` with gain
/// `K = σ_t² / (σ̄² + σ_t²)`, applied independently to the fusion variance and
/// the search variance. Observation variances below `eps_var` are clamped.
/// Returns the number of cells touched.
pub fn bayesian_fuse(map: &mut BeliefMap, blurred: &BlurredField, eps_var: f64) -> Result<usize> {
    if !(eps_var > 0.0) {
        return Err(invalid("eps_var must be positive"));
    }
    let dims = map.dims();
    for b in &blurred.cells {
        if !dims.contains(b.cell) {
            return Err(invalid(format!("cell ({}, {}) outside the map", b.cell.x, b.cell.y)));
        }
        if b.feature.len() != map.feature_dim() {
            return Err(invalid("blurred feature dimension differs from the map"));
        }
    }
    for b in &blurred.cells {
        let v = (b.variance as f64).max(eps_var);
        map.fuse_index(dims.index(b.cell), &b.feature, v);
    }
    Ok(blurred.cells.len())
}
