//! Consensus between detector output and the map: a detection is trusted only
//! when the map's similarity at its cell is in the top percentile of all
//! observed cells.

use serde::{Deserialize, Serialize};

use crate::grid::{Cell, Raster};

use super::submaps::SubMaps;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub label: String,
    pub cell: Cell,
    pub confidence: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConsensusOutcome {
    Accepted,
    Rejected,
    /// The detection's cell is outside the map or not yet observed.
    Unobserved,
}

impl ConsensusOutcome {
    pub fn accepted(self) -> bool {
        self == ConsensusOutcome::Accepted
    }
}

/// The `q`-th percentile (0–100) of `values` with linear interpolation between
/// closest ranks. `values` is reordered. Returns `None` for an empty slice.
pub fn percentile(values: &mut [f32], q: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let pos = (q / 100.0).clamp(0.0, 1.0) * (values.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let frac = pos - lo as f64;
    let (_, &mut a, rest) = values.select_nth_unstable_by(lo, f32::total_cmp);
    let a = a as f64;
    if frac == 0.0 || rest.is_empty() {
        return Some(a);
    }
    let b = rest.iter().copied().fold(f32::INFINITY, f32::min) as f64;
    Some(a + frac * (b - a))
}

/// Accepts `det` when the similarity at its cell is at least the
/// `(100 − top_percent)`-th percentile of similarity over observed cells.
pub fn consensus_filter(det: &Detection, similarity: &Raster<f32>, sub: &SubMaps, top_percent: f64) -> ConsensusOutcome {
    if !sub.dims().contains(det.cell) || !sub.observed[det.cell] {
        return ConsensusOutcome::Unobserved;
    }
    let mut values: Vec<f32> = similarity
        .data()
        .iter()
        .zip(sub.observed.data())
        .filter(|(_, &o)| o)
        .map(|(&s, _)| s)
        .collect();
    let threshold = percentile(&mut values, 100.0 - top_percent).expect("detection cell is observed");
    if similarity[det.cell] as f64 >= threshold {
        ConsensusOutcome::Accepted
    } else {
        ConsensusOutcome::Rejected
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridDims;

    fn all_observed(dims: GridDims) -> SubMaps {
        SubMaps {
            observed: Raster::filled(dims, true),
            explored: Raster::filled(dims, false),
            searched: Raster::filled(dims, false),
            navigable: Raster::filled(dims, false),
        }
    }

    fn det(x: usize, y: usize) -> Detection {
        Detection {
            label: "chair".into(),
            cell: Cell::new(x, y),
            confidence: 1.0,
        }
    }

    #[test]
    fn percentile_interpolates() {
        let mut v = vec![4.0, 1.0, 3.0, 2.0];
        assert_eq!(percentile(&mut v, 0.0), Some(1.0));
        assert_eq!(percentile(&mut v, 100.0), Some(4.0));
        assert_eq!(percentile(&mut v, 50.0), Some(2.5));
        assert_eq!(percentile(&mut [], 50.0), None);
    }

    #[test]
    fn ranked_similarities() {
        // Cell k (row-major) has similarity 0.01 · (k + 1).
        let dims = GridDims::new(10, 10);
        let sim = Raster::from_vec(dims, (1..=100).map(|r| 0.01 * r as f32).collect());
        let sub = all_observed(dims);
        let at_rank = |r: usize| det((r - 1) % 10, (r - 1) / 10);
        assert!(consensus_filter(&at_rank(100), &sim, &sub, 5.0).accepted());
        assert!(consensus_filter(&at_rank(96), &sim, &sub, 5.0).accepted());
        assert_eq!(consensus_filter(&at_rank(94), &sim, &sub, 5.0), ConsensusOutcome::Rejected);
    }

    #[test]
    fn uniform_similarity_accepts_everything() {
        let dims = GridDims::new(5, 5);
        let sim = Raster::filled(dims, 0.2);
        let sub = all_observed(dims);
        assert!(dims.cells().all(|c| consensus_filter(&det(c.x, c.y), &sim, &sub, 5.0).accepted()));
    }

    #[test]
    fn unobserved_cells_get_their_own_outcome() {
        let dims = GridDims::new(3, 3);
        let sim = Raster::filled(dims, 0.2);
        let mut sub = all_observed(dims);
        sub.observed[Cell::new(1, 1)] = false;
        assert_eq!(consensus_filter(&det(1, 1), &sim, &sub, 5.0), ConsensusOutcome::Unobserved);
        assert_eq!(consensus_filter(&det(7, 1), &sim, &sub, 5.0), ConsensusOutcome::Unobserved);
    }
}
