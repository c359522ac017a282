//! Line-delimited JSON log of the goals considered at each step.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;

use super::goal::{GoalKind, NavGoal};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoalSummary {
    pub kind: GoalKind,
    pub target: [usize; 2],
    pub score: f32,
    pub support: usize,
}

impl From<&NavGoal> for GoalSummary {
    fn from(g: &NavGoal) -> Self {
        Self {
            kind: g.kind,
            target: [g.target.x, g.target.y],
            score: g.score,
            support: g.support.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoalTraceRecord {
    pub episode_id: u64,
    pub object_index: usize,
    pub step: usize,
    pub goals: Vec<GoalSummary>,
    /// Index into `goals` of the selected goal.
    pub selected: Option<usize>,
}

pub struct GoalTraceWriter<W: Write> {
    out: W,
}

impl<W: Write> GoalTraceWriter<W> {
    pub fn new(out: W) -> Self {
        Self { out }
    }

    pub fn write(&mut self, record: &GoalTraceRecord) -> Result<()> {
        serde_json::to_writer(&mut self.out, record)?;
        self.out.write_all(b"\n")?;
        Ok(())
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}
