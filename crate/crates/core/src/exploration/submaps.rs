//! The four binary sub-maps derived from the belief map.

use serde::{Deserialize, Serialize};

use crate::belief_map::BeliefMap;
use crate::error::{invalid, Result};
use crate::grid::{GridDims, Mask};

/// `observed` (O), `explored` (E: fusion variance below threshold),
/// `searched` (C: search variance below threshold) and `navigable` (N).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubMaps {
    pub observed: Mask,
    pub explored: Mask,
    pub searched: Mask,
    pub navigable: Mask,
}

impl SubMaps {
    pub fn dims(&self) -> GridDims {
        self.observed.dims()
    }

    /// O ∖ E: seen, but not with trusted features.
    pub fn unexplored(&self) -> Mask {
        self.observed.and_not(&self.explored)
    }
}

/// `navigable` is the obstacle-inflated free space computed by the caller.
pub fn derive_submaps(map: &BeliefMap, tau_e: f64, tau_c: f64, navigable: Mask) -> Result<SubMaps> {
    let prior = map.prior_variance() as f64;
    for (name, tau) in [("tau_e", tau_e), ("tau_c", tau_c)] {
        if !(tau > 0.0 && tau < prior) {
            return Err(invalid(format!("{name} = {tau} must lie in (0, {prior})")));
        }
    }
    if navigable.dims() != map.dims() {
        return Err(invalid("navigable raster does not match the map"));
    }
    let observed = map.observed_mask();
    let mut explored = observed.map(|_| false);
    let mut searched = observed.map(|_| false);
    let obs = map.observed_raw();
    let var = map.variances_raw();
    let svar = map.search_variances_raw();
    for i in 0..obs.len() {
        if obs[i] {
            explored.data_mut()[i] = var[i] as f64 <= tau_e;
            searched.data_mut()[i] = svar[i] as f64 <= tau_c;
        }
    }
    Ok(SubMaps {
        observed,
        explored,
        searched,
        navigable,
    })
}
