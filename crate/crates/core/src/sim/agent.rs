use serde::{Deserialize, Serialize};

use crate::observation::Pose2;
use crate::planning::Path;

use super::world::World;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub pose: Pose2,
    pub steps_taken: usize,
    /// Meters travelled.
    pub path_length: f64,
}

impl AgentState {
    pub fn new(pose: Pose2) -> Self {
        Self {
            pose,
            steps_taken: 0,
            path_length: 0.0,
        }
    }
}

/// Advances up to `step_size` meters along `path`, counting one step.
///
/// The agent heads for the center of the path cell after the one it stands
/// in, then the next, and so on; when it is not on the path it heads for the
/// first cell. Heading follows the last motion. The path must lie in the
/// world's free space.
pub fn step_agent(world: &World, state: &AgentState, path: &Path, step_size: f64) -> AgentState {
    let grid = world.grid();
    let here = grid.cell_at(state.pose.x, state.pose.y);
    let from = here
        .and_then(|c| path.cells.iter().rposition(|&p| p == c))
        .map_or(0, |k| k + 1);
    let mut pose = state.pose;
    let mut budget = step_size;
    let mut moved = 0.0;
    for &cell in &path.cells[from.min(path.cells.len())..] {
        let (tx, ty) = grid.center(cell);
        let (dx, dy) = (tx - pose.x, ty - pose.y);
        let d = dx.hypot(dy);
        if d <= 1e-12 {
            continue;
        }
        let heading = dy.atan2(dx);
        if d <= budget {
            pose = Pose2::new(tx, ty, heading);
            budget -= d;
            moved += d;
        } else {
            let f = budget / d;
            pose = Pose2::new(pose.x + dx * f, pose.y + dy * f, heading);
            moved += budget;
            break;
        }
    }
    debug_assert!(grid.cell_at(pose.x, pose.y).is_some_and(|c| !world.is_opaque(c)));
    AgentState {
        pose,
        steps_taken: state.steps_taken + 1,
        path_length: state.path_length + moved,
    }
}

/// Rotates in place by `angle` radians, counting one step.
pub fn turn_agent(state: &AgentState, angle: f64) -> AgentState {
    let h = (state.pose.heading + angle).rem_euclid(std::f64::consts::TAU);
    AgentState {
        pose: Pose2::new(state.pose.x, state.pose.y, h),
        steps_taken: state.steps_taken + 1,
        path_length: state.path_length,
    }
}
