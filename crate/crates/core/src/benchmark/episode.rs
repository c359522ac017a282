//! Episode datasets: seeded worlds plus start poses and goal sequences.
//!
//! On disk a dataset is a directory holding `episodes.json` and one JSON file
//! per world under `worlds/`.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::grid::{chamfer_distance, Cell, Mask, Raster};
use crate::observation::Pose2;
use crate::planning::{plan_to_any, reachable_set};
use crate::sim::{generate_world, sub_seed, World, WorldParams};

use super::oracle::category_targets;

const WORLD_STREAM: u64 = 0x3071D;
const EPISODE_STREAM: u64 = 0xE915;
const WORLD_ATTEMPTS: u64 = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Episode {
    pub episode_id: u64,
    /// Index into the dataset's worlds.
    pub world: usize,
    pub world_seed: u64,
    pub start: Pose2,
    pub goals: Vec<String>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub worlds: Vec<World>,
    pub episodes: Vec<Episode>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EpisodesFile {
    worlds: Vec<String>,
    episodes: Vec<Episode>,
}

/// `n` worlds from `seed` that admit episodes under `episodes`. A seed whose
/// world cannot be built, or holds no valid episode, is replaced by the next
/// derived seed, up to 100 times.
pub fn generate_worlds(params: &WorldParams, n: usize, episodes: &EpisodeParams, seed: u64) -> Result<Vec<World>> {
    (0..n)
        .map(|i| {
            let mut last = None;
            for attempt in 0..WORLD_ATTEMPTS {
                let s = sub_seed(seed, WORLD_STREAM + attempt, i as u64);
                let world = match generate_world(params, s) {
                    Ok(w) => w,
                    Err(e) => {
                        last = Some(e);
                        continue;
                    }
                };
                match EpisodePlan::new(&world, i, episodes) {
                    Ok(_) => return Ok(world),
                    Err(e) => last = Some(e),
                }
            }
            Err(Error::EpisodeGeneration {
                world: format!("world_{i:03}"),
                message: last.map_or_else(String::new, |e| e.to_string()),
            })
        })
        .collect()
}

/// Episode sampling settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeParams {
    pub seq_len: usize,
    pub agent_radius: f64,
    pub success_radius: f64,
    /// Minimum octile distance (meters) between consecutive search regions:
    /// the start (or anchor) region and the first goal's success region, then
    /// each goal's success region and the next one's.
    pub min_leg_distance: f64,
    /// Start next to an instance of an extra category that is not a goal, so
    /// that every leg, the first included, begins beside an object.
    pub anchor_start: bool,
}

impl EpisodeParams {
    pub fn from_config(config: &Config) -> Self {
        Self {
            seq_len: config.dataset.seq_len,
            agent_radius: config.planning.agent_radius,
            success_radius: config.agent.success_radius,
            min_leg_distance: config.dataset.min_leg_distance,
            anchor_start: config.dataset.anchor_start,
        }
    }

    /// Distinct categories a world must hold.
    pub fn categories_needed(&self) -> usize {
        self.seq_len + usize::from(self.anchor_start)
    }
}

/// Samples `n` episodes, assigning worlds round-robin. Every goal category
/// has an instance reachable from the start, and goals within an episode
/// are distinct.
pub fn generate_episodes(worlds: &[World], n: usize, params: &EpisodeParams, seed: u64) -> Result<Vec<Episode>> {
    if n > 0 && worlds.is_empty() {
        return Err(crate::error::invalid("episodes requested without worlds"));
    }
    let plans = worlds
        .iter()
        .enumerate()
        .map(|(i, w)| EpisodePlan::new(w, i, params))
        .collect::<Result<Vec<_>>>()?;
    Ok((0..n)
        .map(|k| {
            let wi = k % worlds.len();
            plans[wi].sample(k as u64, sub_seed(seed, EPISODE_STREAM, k as u64))
        })
        .collect())
}

fn and(a: &Mask, b: &Mask) -> Mask {
    Raster::from_vec(a.dims(), a.data().iter().zip(b.data()).map(|(&x, &y)| x && y).collect())
}

/// Every valid category sequence of one world, enumerated up front so that
/// sampling is uniform over them and never fails.
///
/// Consecutive regions must lie `min_leg_distance` apart. With an anchor the
/// sequence must also close back onto it: the valid cycles are then rotation
/// invariant, so every leg position sees the same distribution of category
/// pairs.
struct EpisodePlan<'a> {
    world: &'a World,
    index: usize,
    categories: Vec<String>,
    /// Navigable cells of the largest component.
    nav: Mask,
    /// Success regions per category, restricted to `nav`.
    masks: Vec<Mask>,
    regions: Vec<Vec<Cell>>,
    /// Start cells far enough from each category's region (no anchor only).
    starts: Vec<Vec<Cell>>,
    sequences: Vec<Vec<usize>>,
    anchor: bool,
}

impl<'a> EpisodePlan<'a> {
    fn new(world: &'a World, index: usize, params: &EpisodeParams) -> Result<Self> {
        let fail = |message: String| Error::EpisodeGeneration {
            world: format!("world_{index:03} (seed {})", world.seed),
            message,
        };
        let nav = world.true_navigable(params.agent_radius);
        let reach = largest_component(&nav)?.ok_or_else(|| fail("no navigable cell".into()))?;
        let categories = world.present_categories();
        let needed = params.categories_needed();
        if categories.len() < needed {
            return Err(fail(format!("{} distinct categories, {needed} needed", categories.len())));
        }
        let masks: Vec<Mask> = categories
            .iter()
            .map(|c| and(&category_targets(world, &nav, c, params.success_radius), &reach))
            .collect();
        let dists: Vec<_> = masks.iter().map(chamfer_distance).collect();
        let min_cells = (params.min_leg_distance / world.cell_size) as f32;
        let n = categories.len();
        let apart = |i: usize, j: usize| masks[i].any() && masks[j].any() && masks[i].set_cells().all(|c| dists[j][c] >= min_cells);
        let compatible: Vec<Vec<bool>> = (0..n).map(|i| (0..n).map(|j| i != j && apart(i, j)).collect()).collect();
        let free: Vec<Cell> = reach.set_cells().collect();
        let starts: Vec<Vec<Cell>> = if params.anchor_start {
            Vec::new()
        } else {
            dists.iter().map(|d| free.iter().copied().filter(|&c| d[c] >= min_cells).collect()).collect()
        };

        let mut sequences = Vec::new();
        let mut prefix = Vec::with_capacity(needed);
        extend_sequences(&compatible, needed, &mut prefix, &mut sequences);
        sequences.retain(|seq: &Vec<usize>| {
            if params.anchor_start {
                seq.len() < 3 || compatible[seq[seq.len() - 1]][seq[0]]
            } else {
                !starts[seq[0]].is_empty()
            }
        });
        if sequences.is_empty() {
            return Err(fail("no category sequence satisfies the leg distance".into()));
        }
        let regions = masks.iter().map(|m| m.set_cells().collect()).collect();
        Ok(Self {
            world,
            index,
            categories,
            nav: reach,
            masks,
            regions,
            starts,
            sequences,
            anchor: params.anchor_start,
        })
    }

    /// Where an agent coming from the cycle's last region first enters the
    /// anchor's region, so the first leg starts the way later legs do.
    fn arrival(&self, seq: &[usize], rng: &mut ChaCha8Rng) -> Cell {
        let from = &self.regions[seq[seq.len() - 1]];
        let q = from[rng.random_range(0..from.len())];
        match plan_to_any(&self.nav, q, &self.masks[seq[0]], self.world.cell_size) {
            Ok(path) => path.goal(),
            Err(_) => {
                let pool = &self.regions[seq[0]];
                pool[rng.random_range(0..pool.len())]
            }
        }
    }

    fn sample(&self, id: u64, seed: u64) -> Episode {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let seq = &self.sequences[rng.random_range(0..self.sequences.len())];
        let start = if self.anchor {
            self.arrival(seq, &mut rng)
        } else {
            let pool = &self.starts[seq[0]];
            pool[rng.random_range(0..pool.len())]
        };
        let goals = &seq[usize::from(self.anchor)..];
        let (x, y) = self.world.grid().center(start);
        let heading = rng.random_range(0.0..std::f64::consts::TAU);
        Episode {
            episode_id: id,
            world: self.index,
            world_seed: self.world.seed,
            start: Pose2::new(x, y, heading),
            goals: goals.iter().map(|&ci| self.categories[ci].clone()).collect(),
            seed,
        }
    }
}

/// Depth-first enumeration of distinct-category chains of length `len`
/// whose consecutive pairs are compatible.
fn extend_sequences(compatible: &[Vec<bool>], len: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if prefix.len() == len {
        out.push(prefix.clone());
        return;
    }
    for next in 0..compatible.len() {
        let ok = match prefix.last() {
            None => true,
            Some(&last) => compatible[last][next] && !prefix.contains(&next),
        };
        if ok {
            prefix.push(next);
            extend_sequences(compatible, len, prefix, out);
            prefix.pop();
        }
    }
}

/// The largest 8-connected navigable component.
fn largest_component(nav: &Mask) -> Result<Option<Mask>> {
    let mut seen: Mask = Raster::filled(nav.dims(), false);
    let mut best: Option<(usize, Mask)> = None;
    for c in nav.set_cells() {
        if seen[c] {
            continue;
        }
        let comp = reachable_set(nav, c)?;
        let size = comp.set_cells().count();
        for d in comp.set_cells() {
            seen[d] = true;
        }
        if best.as_ref().is_none_or(|(n, _)| size > *n) {
            best = Some((size, comp));
        }
    }
    Ok(best.map(|(_, m)| m))
}

fn world_file(i: usize) -> String {
    format!("worlds/world_{i:03}.json")
}

/// Writes `episodes.json` and `worlds/*.json` under `dir`.
pub fn write_dataset(dir: &Path, dataset: &Dataset) -> Result<PathBuf> {
    std::fs::create_dir_all(dir.join("worlds"))?;
    let mut names = Vec::new();
    for (i, w) in dataset.worlds.iter().enumerate() {
        let name = world_file(i);
        std::fs::write(dir.join(&name), w.to_json()? + "\n")?;
        names.push(name);
    }
    let file = EpisodesFile {
        worlds: names,
        episodes: dataset.episodes.clone(),
    };
    let path = dir.join("episodes.json");
    std::fs::write(&path, serde_json::to_string_pretty(&file)? + "\n")?;
    Ok(path)
}

/// Loads a dataset from its directory or its `episodes.json`.
pub fn load_dataset(path: &Path) -> Result<Dataset> {
    let (dir, file) = if path.is_dir() {
        (path.to_path_buf(), path.join("episodes.json"))
    } else {
        (path.parent().unwrap_or(Path::new(".")).to_path_buf(), path.to_path_buf())
    };
    let text = std::fs::read_to_string(&file)?;
    let parsed: EpisodesFile = serde_json::from_str(&text).map_err(|e| Error::Parse {
        record: 0,
        message: format!("{}: {e}", file.display()),
    })?;
    let worlds = parsed
        .worlds
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let text = std::fs::read_to_string(dir.join(name))?;
            World::from_json(&text).map_err(|e| Error::Parse {
                record: i,
                message: format!("{name}: {e}"),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    for (k, ep) in parsed.episodes.iter().enumerate() {
        if ep.world >= worlds.len() {
            return Err(Error::Schema {
                record: k,
                message: format!("episode {} refers to missing world {}", ep.episode_id, ep.world),
            });
        }
        if ep.goals.is_empty() {
            return Err(Error::Schema {
                record: k,
                message: format!("episode {} has no goals", ep.episode_id),
            });
        }
    }
    Ok(Dataset {
        worlds,
        episodes: parsed.episodes,
    })
}
