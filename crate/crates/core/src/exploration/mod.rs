//! Goal generation for object search: sub-maps derived from the belief map,
//! frontier and cluster goals, greedy selection and consensus filtering of
//! detections.

pub mod cluster;
pub mod consensus;
pub mod frontier;
pub mod goal;
pub mod occupancy;
pub mod submaps;
pub mod trace;

pub use cluster::cluster_high_similarity;
pub use consensus::{consensus_filter, percentile, ConsensusOutcome, Detection};
pub use frontier::{
    boundary_cells, extract_frontiers, frontier_goals, frontier_target, score_frontier, FrontierParams,
    FrontierScore,
};
pub use goal::{select_goal, GoalKind, NavGoal};
pub use occupancy::{OccupancyGrid, OccupancyParams, OccupancyState};
pub use submaps::{derive_submaps, SubMaps};
pub use trace::{GoalSummary, GoalTraceRecord, GoalTraceWriter};
