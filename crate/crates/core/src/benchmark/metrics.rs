//! Success rate (SR), success weighted by path length (SPL), progress (PR)
//! and progress weighted by path length (PPL).

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Success,
    /// A detection was acted on but the agent stopped too far from every instance.
    Misdetection,
    /// The step budget ran out.
    Budget,
    /// No goal was left to pursue.
    Exhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectResult {
    pub object_index: usize,
    pub category: String,
    pub found: bool,
    pub outcome: Outcome,
    /// Meters.
    pub agent_path_length: f64,
    /// Meters.
    pub oracle_path_length: f64,
    pub steps: usize,
}

/// Per-object outcomes up to and including the first failure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub episode_id: u64,
    pub world: usize,
    /// Number of goals in the episode's sequence.
    pub goal_count: usize,
    pub objects: Vec<ObjectResult>,
}

impl EpisodeResult {
    pub fn found_count(&self) -> usize {
        self.objects.iter().take_while(|o| o.found).count()
    }

    pub fn success(&self) -> bool {
        self.goal_count > 0 && self.found_count() == self.goal_count
    }

    pub fn terminated_reason(&self) -> Outcome {
        self.objects
            .iter()
            .find(|o| !o.found)
            .map_or(Outcome::Success, |o| o.outcome)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub episodes: usize,
    pub sr: f64,
    pub spl: f64,
    pub pr: f64,
    pub ppl: f64,
}

/// `oracle / max(agent, oracle)`, and 1 when both are zero.
pub fn path_ratio(oracle: f64, agent: f64) -> f64 {
    let denom = agent.max(oracle);
    if denom > 0.0 {
        oracle / denom
    } else {
        1.0
    }
}

/// Means over episodes of the per-episode SR, SPL, PR and PPL.
pub fn compute_metrics(results: &[EpisodeResult]) -> Result<Metrics> {
    if results.is_empty() {
        return Err(invalid("metrics need at least one episode"));
    }
    let (mut sr, mut spl, mut pr, mut ppl) = (0.0, 0.0, 0.0, 0.0);
    for r in results {
        if r.goal_count == 0 {
            return Err(invalid(format!("episode {} has no goals", r.episode_id)));
        }
        let found = r.found_count();
        let prefix = &r.objects[..found];
        let oracle: f64 = prefix.iter().map(|o| o.oracle_path_length).sum();
        let agent: f64 = prefix.iter().map(|o| o.agent_path_length).sum();
        let progress = found as f64 / r.goal_count as f64;
        if r.success() {
            sr += 1.0;
            spl += path_ratio(oracle, agent);
        }
        pr += progress;
        if found > 0 {
            ppl += progress * path_ratio(oracle, agent);
        }
    }
    let n = results.len() as f64;
    Ok(Metrics {
        episodes: results.len(),
        sr: sr / n,
        spl: spl / n,
        pr: pr / n,
        ppl: ppl / n,
    })
}

/// SPL of the `index`-th goal over episodes that reached it (every earlier
/// goal found).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectBreakdown {
    pub object_index: usize,
    pub attempted: usize,
    pub found: usize,
    pub success_rate: f64,
    pub spl: f64,
}

pub fn per_object_breakdown(results: &[EpisodeResult]) -> Vec<ObjectBreakdown> {
    let max_goals = results.iter().map(|r| r.goal_count).max().unwrap_or(0);
    (0..max_goals)
        .map(|i| {
            let legs: Vec<_> = results.iter().filter_map(|r| r.objects.get(i)).collect();
            let found = legs.iter().filter(|o| o.found).count();
            let spl_sum: f64 = legs
                .iter()
                .filter(|o| o.found)
                .map(|o| path_ratio(o.oracle_path_length, o.agent_path_length))
                .sum();
            let n = legs.len();
            ObjectBreakdown {
                object_index: i,
                attempted: n,
                found,
                success_rate: if n > 0 { found as f64 / n as f64 } else { 0.0 },
                spl: if n > 0 { spl_sum / n as f64 } else { 0.0 },
            }
        })
        .collect()
}
