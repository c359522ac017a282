use crate::grid::{components8, Raster};

use super::goal::{GoalKind, NavGoal};
use super::submaps::SubMaps;

/// Connected regions of explored-but-not-searched cells (E ∖ C) whose
/// similarity is at least `tau_sim`. Each becomes a goal at its most similar
/// cell.
pub fn cluster_high_similarity(similarity: &Raster<f32>, sub: &SubMaps, tau_sim: f32) -> Vec<NavGoal> {
    let mut mask = sub.explored.and_not(&sub.searched);
    for (m, &s) in mask.data_mut().iter_mut().zip(similarity.data()) {
        *m &= s >= tau_sim;
    }
    components8(&mask)
        .into_iter()
        .map(|support| {
            // Cells are row-major sorted, so a strict comparison keeps the
            // lowest index among equal maxima.
            let mut target = support[0];
            for &c in &support[1..] {
                if similarity[c] > similarity[target] {
                    target = c;
                }
            }
            NavGoal {
                kind: GoalKind::Cluster,
                target,
                score: similarity[target],
                support,
            }
        })
        .collect()
}
