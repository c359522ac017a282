//! Line-delimited result log: one JSON record per (episode, object).

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::metrics::{EpisodeResult, ObjectResult, Outcome};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultRecord {
    pub episode_id: u64,
    pub world: usize,
    pub goal_count: usize,
    pub object_index: usize,
    pub category: String,
    pub found: bool,
    pub outcome: Outcome,
    pub agent_path_length: f64,
    pub oracle_path_length: f64,
    pub steps: usize,
}

impl ResultRecord {
    fn flatten(r: &EpisodeResult) -> impl Iterator<Item = ResultRecord> + '_ {
        r.objects.iter().map(move |o| ResultRecord {
            episode_id: r.episode_id,
            world: r.world,
            goal_count: r.goal_count,
            object_index: o.object_index,
            category: o.category.clone(),
            found: o.found,
            outcome: o.outcome,
            agent_path_length: o.agent_path_length,
            oracle_path_length: o.oracle_path_length,
            steps: o.steps,
        })
    }
}

/// Writes results in the given order, one line per attempted object.
pub fn write_result_log<W: Write>(mut out: W, results: &[EpisodeResult]) -> Result<()> {
    for r in results {
        for rec in ResultRecord::flatten(r) {
            serde_json::to_writer(&mut out, &rec)?;
            out.write_all(b"\n")?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Reads a result log back into per-episode results. Records of one episode
/// must be contiguous and in object order.
pub fn read_result_log<R: BufRead>(input: R) -> Result<Vec<EpisodeResult>> {
    let mut results: Vec<EpisodeResult> = Vec::new();
    for (k, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: ResultRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            record: k + 1,
            message: e.to_string(),
        })?;
        let schema = |message: String| Error::Schema { record: k + 1, message };
        let object = ObjectResult {
            object_index: rec.object_index,
            category: rec.category,
            found: rec.found,
            outcome: rec.outcome,
            agent_path_length: rec.agent_path_length,
            oracle_path_length: rec.oracle_path_length,
            steps: rec.steps,
        };
        match results.last_mut() {
            Some(last) if last.episode_id == rec.episode_id => {
                if object.object_index != last.objects.len() {
                    return Err(schema(format!("object {} out of order", object.object_index)));
                }
                if last.objects.last().is_some_and(|o| !o.found) {
                    return Err(schema("record after the episode's first failure".into()));
                }
                last.objects.push(object);
            }
            _ => {
                if object.object_index != 0 {
                    return Err(schema(format!("episode {} does not start at object 0", rec.episode_id)));
                }
                results.push(EpisodeResult {
                    episode_id: rec.episode_id,
                    world: rec.world,
                    goal_count: rec.goal_count,
                    objects: vec![object],
                });
            }
        }
        let last = results.last().expect("just pushed");
        if last.objects.len() > last.goal_count {
            return Err(schema("more records than goals".into()));
        }
    }
    Ok(results)
}
