//! Run summaries: overall metrics, the per-object SPL breakdown and
//! termination counts, plus an optional bar chart.

use std::collections::BTreeMap;
use std::path::Path;

use image::{GrayImage, Luma};
use serde::{Deserialize, Serialize};

use crate::error::Result;

use super::metrics::{compute_metrics, per_object_breakdown, EpisodeResult, Metrics, ObjectBreakdown, Outcome};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub episodes: usize,
    /// Set when there were no episodes; `metrics` is then absent.
    pub empty: bool,
    pub metrics: Option<Metrics>,
    /// SPL for each object index over episodes that reached it.
    pub per_object: Vec<ObjectBreakdown>,
    /// Episodes by how they ended.
    pub terminations: BTreeMap<String, usize>,
    /// Fraction of episodes ended by a wrong detection.
    pub misdetection_rate: f64,
}

fn outcome_name(o: Outcome) -> &'static str {
    match o {
        Outcome::Success => "success",
        Outcome::Misdetection => "misdetection",
        Outcome::Budget => "budget",
        Outcome::Exhausted => "exhausted",
    }
}

pub fn build_report(results: &[EpisodeResult]) -> Result<Report> {
    let mut terminations: BTreeMap<String, usize> = [Outcome::Success, Outcome::Misdetection, Outcome::Budget, Outcome::Exhausted]
        .into_iter()
        .map(|o| (outcome_name(o).to_string(), 0))
        .collect();
    for r in results {
        *terminations.entry(outcome_name(r.terminated_reason()).to_string()).or_default() += 1;
    }
    let n = results.len();
    let misdetections = terminations["misdetection"];
    Ok(Report {
        episodes: n,
        empty: n == 0,
        metrics: if n == 0 { None } else { Some(compute_metrics(results)?) },
        per_object: per_object_breakdown(results),
        terminations,
        misdetection_rate: if n == 0 { 0.0 } else { misdetections as f64 / n as f64 },
    })
}

/// Grayscale bar chart of per-object SPL: one white bar per object index on a
/// black background, full height meaning SPL 1.
pub fn write_bar_chart(path: &Path, breakdown: &[ObjectBreakdown]) -> Result<()> {
    const BAR: u32 = 40;
    const GAP: u32 = 20;
    const HEIGHT: u32 = 200;
    let n = breakdown.len().max(1) as u32;
    let mut img = GrayImage::from_pixel(GAP + n * (BAR + GAP), HEIGHT, Luma([0]));
    for (k, b) in breakdown.iter().enumerate() {
        let h = (b.spl.clamp(0.0, 1.0) * HEIGHT as f64).round() as u32;
        let x0 = GAP + k as u32 * (BAR + GAP);
        for x in x0..x0 + BAR {
            for y in HEIGHT - h..HEIGHT {
                img.put_pixel(x, y, Luma([255]));
            }
        }
    }
    img.save(path)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmark::metrics::ObjectResult;

    fn episode(id: u64, outcomes: &[Outcome]) -> EpisodeResult {
        EpisodeResult {
            episode_id: id,
            world: 0,
            goal_count: 3,
            objects: outcomes
                .iter()
                .enumerate()
                .map(|(i, &o)| ObjectResult {
                    object_index: i,
                    category: "chair".into(),
                    found: o == Outcome::Success,
                    outcome: o,
                    agent_path_length: 2.0,
                    oracle_path_length: 1.0,
                    steps: 5,
                })
                .collect(),
        }
    }

    #[test]
    fn empty_report_is_flagged() {
        let r = build_report(&[]).unwrap();
        assert!(r.empty && r.metrics.is_none());
        assert_eq!(r.terminations.values().sum::<usize>(), 0);
    }

    #[test]
    fn terminations_and_uniform_breakdown() {
        use Outcome::*;
        let results = vec![
            episode(0, &[Success, Success, Success]),
            episode(1, &[Success, Misdetection]),
            episode(2, &[Budget]),
        ];
        let r = build_report(&results).unwrap();
        assert_eq!(r.terminations["success"], 1);
        assert_eq!(r.terminations["misdetection"], 1);
        assert_eq!(r.terminations["budget"], 1);
        assert!((r.misdetection_rate - 1.0 / 3.0).abs() < 1e-12);
        let spl: Vec<f64> = r.per_object.iter().map(|b| b.spl).collect();
        assert_eq!(spl, vec![1.0 / 3.0, 0.25, 0.5]);
    }

    #[test]
    fn bar_chart_is_written() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("spl.png");
        let r = build_report(&[episode(0, &[Outcome::Success])]).unwrap();
        write_bar_chart(&path, &r.per_object).unwrap();
        let img = image::open(&path).unwrap().to_luma8();
        assert_eq!(img.height(), 200);
    }
}
