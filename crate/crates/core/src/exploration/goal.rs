use serde::{Deserialize, Serialize};

use crate::grid::Cell;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GoalKind {
    Frontier,
    Cluster,
}

/// A scored navigation goal. `support` is the frontier chain or the cluster's
/// cells; `score` is the maximum similarity over the goal's scoring region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NavGoal {
    pub kind: GoalKind,
    pub target: Cell,
    pub score: f32,
    pub support: Vec<Cell>,
}

/// Highest score wins; ties go to frontiers, then the lowest row-major target.
pub fn select_goal<'a>(frontiers: &'a [NavGoal], clusters: &'a [NavGoal]) -> Option<&'a NavGoal> {
    frontiers.iter().chain(clusters).reduce(|best, g| {
        let better = g
            .score
            .total_cmp(&best.score)
            .then_with(|| kind_rank(best.kind).cmp(&kind_rank(g.kind)))
            .then_with(|| best.target.cmp(&g.target));
        if better.is_gt() {
            g
        } else {
            best
        }
    })
}

fn kind_rank(kind: GoalKind) -> u8 {
    match kind {
        GoalKind::Frontier => 0,
        GoalKind::Cluster => 1,
    }
}
