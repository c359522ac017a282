//! Simulated object detector with configurable true- and false-positive rates.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exploration::Detection;
use crate::observation::PosedObservation;

use super::world::{CellKind, World};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectorParams {
    /// Probability of reporting a visible target within range.
    pub tp_rate: f64,
    /// Per-frame probability of a spurious detection.
    pub fp_rate: f64,
    /// Targets farther than this (planar meters) are never reported.
    pub tp_range: f64,
    pub seed: u64,
}

impl Default for DetectorParams {
    fn default() -> Self {
        Self {
            tp_rate: 1.0,
            fp_rate: 0.0,
            tp_range: 4.0,
            seed: 0,
        }
    }
}

impl DetectorParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.tp_rate) || !(0.0..=1.0).contains(&self.fp_rate) {
            return Err(Error::Config("detector rates must lie in [0, 1]".into()));
        }
        if !(self.tp_range > 0.0) {
            return Err(Error::Config("detector tp_range must be positive".into()));
        }
        Ok(())
    }
}

/// Runs the detector on one frame. A visible target instance within range is
/// reported with probability `tp_rate` at its nearest struck cell;
/// independently, with probability `fp_rate`, a uniformly chosen struck
/// non-target cell is reported. When both fire the higher-confidence report
/// wins. Randomness depends only on `(params.seed, frame_index)`.
pub fn simulate_detection(
    world: &World,
    obs: &PosedObservation,
    target: &str,
    params: &DetectorParams,
    frame_index: u64,
) -> Option<Detection> {
    let mut rng = ChaCha8Rng::seed_from_u64(super::sub_seed(params.seed, 0xDE7E, frame_index));
    let is_target = |k: CellKind| matches!(k, CellKind::Object(i) if world.objects[i].category == target);

    let mut nearest: Option<(f64, crate::grid::Cell)> = None;
    let mut others = Vec::new();
    for (k, cell) in obs.hit_cells.iter().enumerate() {
        let Some(cell) = *cell else { continue };
        if !obs.valid[k] {
            continue;
        }
        if is_target(world.kind(cell)) {
            let (cx, cy) = world.grid().center(cell);
            let d = obs.pose.distance_to(cx, cy);
            if d <= params.tp_range && nearest.is_none_or(|(bd, _)| d < bd) {
                nearest = Some((d, cell));
            }
        } else {
            others.push(cell);
        }
    }

    // Draw every variate unconditionally so each frame consumes a fixed
    // stream regardless of what is in view.
    let tp_roll: f64 = rng.random();
    let fp_roll: f64 = rng.random();
    let tp_conf: f64 = rng.random_range(0.5..1.0);
    let fp_conf: f64 = rng.random_range(0.5..1.0);
    let fp_pick: f64 = rng.random();

    let tp = nearest.filter(|_| tp_roll < params.tp_rate).map(|(_, cell)| Detection {
        label: target.to_string(),
        cell,
        confidence: tp_conf,
    });
    let fp = (fp_roll < params.fp_rate && !others.is_empty()).then(|| {
        let k = ((fp_pick * others.len() as f64) as usize).min(others.len() - 1);
        Detection {
            label: target.to_string(),
            cell: others[k],
            confidence: fp_conf,
        }
    });
    match (tp, fp) {
        (Some(t), Some(f)) => Some(if f.confidence > t.confidence { f } else { t }),
        (t, f) => t.or(f),
    }
}
