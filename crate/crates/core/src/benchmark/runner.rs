//! Closed-loop episode execution: observe, map, pick a goal, plan, step,
//! detect, and verify detections against the map before committing to them.

use crate::belief_map::{BeliefMap, MapUpdater};
use crate::config::Config;
use crate::embedding::{synth_embed_frame, Codebook, LabelImage, PatchLabel};
use crate::error::Result;
use crate::exploration::{
    cluster_high_similarity, consensus_filter, derive_submaps, frontier_goals, select_goal, Detection, FrontierParams,
    GoalKind, GoalSummary, GoalTraceRecord, NavGoal, OccupancyGrid, OccupancyState,
};
use crate::grid::{disc_offsets, Cell, Mask, Raster};
use crate::observation::PosedObservation;
use crate::planning::{astar, plan_to_any, reachable_set, snap_to_navigable, Path};
use crate::sim::{
    render_observation, simulate_detection, step_agent, sub_seed, turn_agent, AgentState, DetectorParams,
    World, LABEL_FLOOR, LABEL_WALL,
};

use super::episode::Episode;
use super::metrics::{EpisodeResult, ObjectResult, Outcome};
use super::oracle::oracle_shortest_path;

const CODEBOOK_STREAM: u64 = 0xC0DE;
const DEPTH_STREAM: u64 = 0xDE97;
const EMBED_STREAM: u64 = 0xE3BE;
const DETECT_STREAM: u64 = 0xDE7C;

/// Everything an episode leaves behind.
#[derive(Debug, Clone)]
pub struct EpisodeRun {
    pub result: EpisodeResult,
    pub map: BeliefMap,
    pub occupancy: OccupancyGrid,
}

/// Runs episodes under one configuration. Holds only immutable state, so one
/// runner may serve several threads.
#[derive(Debug, Clone)]
pub struct Runner {
    config: Config,
    codebook: Codebook,
    updater: MapUpdater,
}

impl Runner {
    pub fn new(config: &Config) -> Result<Self> {
        config.validate()?;
        let e = &config.embedding;
        let codebook = Codebook::generate(
            &config.world.categories,
            e.feature_dim,
            e.noise_sigma,
            e.distractor_overlap,
            sub_seed(config.seed, CODEBOOK_STREAM, 0),
        )?;
        Ok(Self {
            config: config.clone(),
            codebook,
            updater: MapUpdater::new(config.mapping.params()),
        })
    }

    pub fn config(&self) -> &Config {
        &self.config
    }

    pub fn codebook(&self) -> &Codebook {
        &self.codebook
    }

    pub fn run_episode(&self, world: &World, episode: &Episode) -> Result<EpisodeResult> {
        Ok(self.run_episode_traced(world, episode, &mut |_| {})?.result)
    }

    /// Runs `episode`, reporting every goal selection to `trace`.
    pub fn run_episode_traced(
        &self,
        world: &World,
        episode: &Episode,
        trace: &mut dyn FnMut(GoalTraceRecord),
    ) -> Result<EpisodeRun> {
        let mut run = EpisodeLoop::new(self, world, episode)?;
        let mut objects = Vec::new();
        for (index, category) in episode.goals.iter().enumerate() {
            if index > 0 {
                if self.config.agent.reuse_map {
                    run.map.reset_search_layer();
                } else {
                    run.fresh_maps()?;
                }
            }
            // A look-around would mark remembered cells as searched, so skip
            // it when the reused map already points somewhere.
            let spin = self.config.agent.initial_spin && !run.remembers(category)?;
            let leg = run.search(index, category, spin, trace)?;
            let found = leg.found;
            objects.push(leg);
            if !found {
                break;
            }
        }
        Ok(EpisodeRun {
            result: EpisodeResult {
                episode_id: episode.episode_id,
                world: episode.world,
                goal_count: episode.goals.len(),
                objects,
            },
            map: run.map,
            occupancy: run.occ,
        })
    }
}

/// Majority label of the valid pixels in each `patch × patch` block; floor,
/// walls and unknown categories become the background.
fn patch_labels(world: &World, codebook: &Codebook, obs: &PosedObservation, patch: usize) -> LabelImage {
    let (h, w) = (obs.height() / patch, obs.width() / patch);
    let mut labels = Vec::with_capacity(h * w);
    let mut counts: Vec<(u16, usize)> = Vec::new();
    for pi in 0..h {
        for pj in 0..w {
            counts.clear();
            for i in pi * patch..(pi + 1) * patch {
                for j in pj * patch..(pj + 1) * patch {
                    let k = i * obs.width() + j;
                    if !obs.valid[k] {
                        continue;
                    }
                    let code = obs.hit_labels[k];
                    match counts.iter_mut().find(|(c, _)| *c == code) {
                        Some((_, n)) => *n += 1,
                        None => counts.push((code, 1)),
                    }
                }
            }
            let best = counts.iter().max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0))).map(|&(c, _)| c);
            let label = match best {
                None | Some(LABEL_FLOOR) | Some(LABEL_WALL) => PatchLabel::Void,
                Some(code) => world
                    .label_category(code)
                    .and_then(|name| codebook.index_of(name))
                    .map_or(PatchLabel::Void, PatchLabel::Label),
            };
            labels.push(label);
        }
    }
    LabelImage { height: h, width: w, labels }
}

struct EpisodeLoop<'a> {
    runner: &'a Runner,
    world: &'a World,
    episode: &'a Episode,
    map: BeliefMap,
    occ: OccupancyGrid,
    state: AgentState,
    frame: u64,
    detector: DetectorParams,
}

/// Per-leg search state.
#[derive(Default)]
struct Leg {
    /// Accepted detection being approached.
    committed: Option<Cell>,
    /// Goal targets already reached or found unreachable.
    visited: Vec<Cell>,
    /// Detection cells that could not be approached.
    abandoned: Vec<Cell>,
    /// In-place turns still to make.
    turns_left: usize,
    /// Cluster goal kept until reached, since walking toward it can mark it
    /// searched before the object itself is in view.
    pinned: Option<Cell>,
}

fn near_any(cells: &[Cell], c: Cell, radius_cells: f64) -> bool {
    let r2 = radius_cells * radius_cells;
    cells.iter().any(|v| {
        let dx = v.x as f64 - c.x as f64;
        let dy = v.y as f64 - c.y as f64;
        dx * dx + dy * dy <= r2
    })
}

impl<'a> EpisodeLoop<'a> {
    fn new(runner: &'a Runner, world: &'a World, episode: &'a Episode) -> Result<Self> {
        let cfg = &runner.config;
        let mut detector = cfg.detector;
        detector.seed = sub_seed(episode.seed, DETECT_STREAM, cfg.detector.seed);
        let mut run = Self {
            runner,
            world,
            episode,
            map: BeliefMap::with_grid(world.grid(), cfg.embedding.feature_dim, cfg.mapping.prior_variance)?,
            occ: OccupancyGrid::new(world.grid()),
            state: AgentState::new(episode.start),
            frame: 0,
            detector,
        };
        run.clear_footprint();
        Ok(run)
    }

    fn cfg(&self) -> &'a Config {
        &self.runner.config
    }

    fn fresh_maps(&mut self) -> Result<()> {
        let cfg = self.cfg();
        self.map = BeliefMap::with_grid(self.world.grid(), cfg.embedding.feature_dim, cfg.mapping.prior_variance)?;
        self.occ = OccupancyGrid::new(self.world.grid());
        self.clear_footprint();
        Ok(())
    }

    fn clear_footprint(&mut self) {
        let p = self.state.pose;
        self.occ.clear_footprint(p.x, p.y, self.cfg().exploration.footprint_radius);
    }

    /// Renders the current view, integrates it into both maps and runs the
    /// detector for `category`.
    fn observe(&mut self, category: &str) -> Result<Option<Detection>> {
        let cfg = self.cfg();
        let frame = self.frame;
        self.frame += 1;
        let obs = render_observation(
            self.world,
            self.state.pose,
            &cfg.camera,
            sub_seed(self.episode.seed, DEPTH_STREAM, frame),
        )?;
        let labels = patch_labels(self.world, &self.runner.codebook, &obs, cfg.embedding.patch_size);
        let features = synth_embed_frame(&self.runner.codebook, &labels, sub_seed(self.episode.seed, EMBED_STREAM, frame))?;
        self.runner.updater.integrate_observation(&mut self.map, &obs, &features)?;
        self.occ.integrate(&obs, &cfg.exploration.occupancy());
        self.clear_footprint();
        Ok(simulate_detection(self.world, &obs, category, &self.detector, frame))
    }

    /// Whether the map holds a high-similarity cluster for `category`.
    fn remembers(&self, category: &str) -> Result<bool> {
        let x = &self.cfg().exploration;
        let query = self.runner.codebook.embed_text(category)?;
        let sim = self.map.query_similarity(query)?;
        let sub = derive_submaps(&self.map, x.tau_e, x.tau_c, self.navigable())?;
        Ok(!cluster_high_similarity(&sim, &sub, x.tau_sim as f32).is_empty())
    }

    fn navigable(&self) -> Mask {
        self.occ.navigable(self.cfg().planning.agent_radius)
    }

    /// The agent's own cell when navigable, else the nearest navigable cell
    /// within the snap radius.
    fn start_cell(&self, nav: &Mask) -> Option<Cell> {
        let grid = self.world.grid();
        let here = grid.cell_at(self.state.pose.x, self.state.pose.y)?;
        let r = self.cfg().planning.snap_radius * grid.resolution;
        snap_to_navigable(nav, nav, here, r)
    }

    /// Whether the agent stands within the approach radius of `target`,
    /// measured between cell centres.
    fn within_approach(&self, target: Cell) -> bool {
        let grid = self.world.grid();
        let Some(here) = grid.cell_at(self.state.pose.x, self.state.pose.y) else {
            return false;
        };
        let (ax, ay) = grid.center(here);
        let (tx, ty) = grid.center(target);
        (tx - ax).hypot(ty - ay) <= self.cfg().agent.approach_radius + 1e-9
    }

    /// Moves one step along `path`. A step that would bring the agent's body
    /// into contact with an obstacle is refused; the contact reveals the
    /// obstacle cells around the attempted position.
    fn advance(&mut self, path: &Path) {
        let cfg = self.cfg();
        let next = step_agent(self.world, &self.state, path, cfg.agent.step_size);
        let grid = self.world.grid();
        let radius = cfg.planning.agent_radius * grid.resolution;
        let contacts: Vec<Cell> = grid
            .cell_at(next.pose.x, next.pose.y)
            .map(|c| {
                disc_offsets(radius)
                    .into_iter()
                    .filter_map(|(dx, dy)| grid.dims.offset(c, dx, dy))
                    .filter(|&n| self.world.is_opaque(n))
                    .collect()
            })
            .unwrap_or_default();
        if contacts.is_empty() {
            self.state = next;
        } else {
            for c in contacts {
                self.occ.mark_occupied(c);
            }
            self.state.steps_taken += 1;
        }
    }

    /// Accepts a raw detection when consensus filtering is off, or when the
    /// map agrees with it.
    fn accept(&self, det: &Detection, query: &[f32], nav: &Mask) -> Result<bool> {
        let x = &self.cfg().exploration;
        if !x.consensus {
            return Ok(true);
        }
        let sim = self.map.query_similarity(query)?;
        let sub = derive_submaps(&self.map, x.tau_e, x.tau_c, nav.clone())?;
        Ok(consensus_filter(det, &sim, &sub, x.consensus_percentile).accepted())
    }

    /// Path toward the navigable cells within the approach radius of `target`.
    fn approach_path(&self, nav: &Mask, start: Cell, target: Cell) -> Option<Path> {
        let grid = self.world.grid();
        let radius = self.cfg().agent.approach_radius * grid.resolution + 1e-9;
        let mut goal: Mask = Raster::filled(nav.dims(), false);
        for (dx, dy) in disc_offsets(radius) {
            if let Some(c) = grid.dims.offset(target, dx, dy) {
                goal[c] = nav[c];
            }
        }
        plan_to_any(nav, start, &goal, grid.cell_size()).ok()
    }

    /// Picks the best goal not yet visited that has a path, marking goals that
    /// are reached or unreachable as visited. Reaching a cluster goal starts
    /// a look-around instead of a path.
    fn explore_path(
        &self,
        leg: &mut Leg,
        nav: &Mask,
        start: Cell,
        query: &[f32],
        mut trace: impl FnMut(Vec<GoalSummary>, Option<usize>),
    ) -> Result<Option<Path>> {
        let cfg = self.cfg();
        let x = &cfg.exploration;
        let grid = self.world.grid();
        let sim = self.map.query_similarity(query)?;
        let sub = derive_submaps(&self.map, x.tau_e, x.tau_c, nav.clone())?;
        let reach = reachable_set(nav, start)?;
        let params = FrontierParams {
            min_length: x.min_frontier_length,
            ..FrontierParams::default()
        };
        let visited_radius = cfg.agent.visited_goal_radius * grid.resolution;
        let mut frontiers = frontier_goals(&sub, &sim, &params, Some(&reach));
        let mut clusters = cluster_high_similarity(&sim, &sub, x.tau_sim as f32);
        let summaries: Vec<GoalSummary> = frontiers.iter().chain(&clusters).map(GoalSummary::from).collect();
        let all: Vec<NavGoal> = frontiers.iter().chain(&clusters).cloned().collect();
        if let Some(target) = leg.pinned {
            let selected = all.iter().position(|g| g.target == target);
            match astar(nav, start, target, grid.cell_size(), cfg.planning.snap_radius) {
                Ok(path) if path.cells.len() > 1 => {
                    trace(summaries, selected);
                    return Ok(Some(path));
                }
                Ok(_) => {
                    leg.visited.push(target);
                    leg.pinned = None;
                    leg.turns_left = self.full_turn();
                    trace(summaries, selected);
                    return Ok(None);
                }
                Err(_) => {
                    leg.visited.push(target);
                    leg.pinned = None;
                }
            }
        }
        loop {
            frontiers.retain(|g| !near_any(&leg.visited, g.target, visited_radius));
            clusters.retain(|g| !near_any(&leg.visited, g.target, visited_radius));
            let Some(goal) = select_goal(&frontiers, &clusters).cloned() else {
                trace(summaries, None);
                return Ok(self.unknown_space_path(leg, nav, start));

            };
            match astar(nav, start, goal.target, grid.cell_size(), cfg.planning.snap_radius) {
                Ok(path) if path.cells.len() > 1 => {
                    if goal.kind == GoalKind::Cluster {
                        leg.pinned = Some(goal.target);
                    }
                    trace(summaries, all.iter().position(|g| *g == goal));
                    return Ok(Some(path));
                }
                Ok(_) if goal.kind == GoalKind::Cluster => {
                    leg.visited.push(goal.target);
                    leg.turns_left = self.full_turn();
                    trace(summaries, all.iter().position(|g| *g == goal));
                    return Ok(None);
                }
                _ => leg.visited.push(goal.target),
            }
        }
    }

    /// Turns that make up a full circle.
    fn full_turn(&self) -> usize {
        (360.0 / self.cfg().agent.turn_deg).ceil() as usize
    }

    /// Fallback once no frontier or cluster goal is left: the path to the
    /// nearest navigable cell bordering space the occupancy grid has never
    /// seen. Cells reached this way are marked visited.
    fn unknown_space_path(&self, leg: &mut Leg, nav: &Mask, start: Cell) -> Option<Path> {
        let grid = self.world.grid();
        let dims = grid.dims;
        let visited_radius = self.cfg().agent.visited_goal_radius * grid.resolution;
        let states = self.occ.states();
        let mut border: Mask = Raster::filled(dims, false);
        for c in dims.cells() {
            border[c] = nav[c]
                && dims.neighbors8(c).any(|n| states[n] == OccupancyState::Unknown)
                && !near_any(&leg.visited, c, visited_radius);
        }
        loop {
            let path = plan_to_any(nav, start, &border, grid.cell_size()).ok()?;
            let goal = path.goal();
            if path.cells.len() > 1 {
                return Some(path);
            }
            leg.visited.push(goal);
            for (dx, dy) in disc_offsets(visited_radius) {
                if let Some(c) = dims.offset(goal, dx, dy) {
                    border[c] = false;
                }
            }
        }
    }

    /// Searches for `category` until it is declared found, a wrong
    /// declaration ends the episode, the budget runs out, or no goal is left.
    fn search(
        &mut self,
        index: usize,
        category: &str,
        spin: bool,
        trace: &mut dyn FnMut(GoalTraceRecord),
    ) -> Result<ObjectResult> {
        let cfg = self.cfg();
        let true_nav = self.world.true_navigable(cfg.planning.agent_radius);
        let oracle = oracle_shortest_path(self.world, &true_nav, self.state.pose, category, cfg.agent.success_radius)?;
        let query = self.runner.codebook.embed_text(category)?.to_vec();
        let leg_start = self.state;
        let grid = self.world.grid();
        let abandon_radius = cfg.agent.visited_goal_radius * grid.resolution;
        let mut leg = Leg {
            turns_left: if spin { self.full_turn() } else { 0 },
            ..Leg::default()
        };
        let mut detection = self.observe(category)?;

        let outcome = loop {
            let nav = self.navigable();
            if leg.committed.is_none() {
                if let Some(det) = detection.take() {
                    if !near_any(&leg.abandoned, det.cell, abandon_radius) && self.accept(&det, &query, &nav)? {
                        leg.committed = Some(det.cell);
                    }
                }
            }
            if let Some(target) = leg.committed {
                if self.within_approach(target) {
                    let p = self.state.pose;
                    let d = self.world.distance_to_category(p.x, p.y, category);
                    break if d.is_some_and(|d| d <= cfg.agent.success_radius) {
                        Outcome::Success
                    } else {
                        Outcome::Misdetection
                    };
                }
            }
            let steps = self.state.steps_taken - leg_start.steps_taken;
            if steps >= cfg.agent.step_budget {
                break Outcome::Budget;
            }
            if leg.turns_left > 0 {
                leg.turns_left -= 1;
                self.state = turn_agent(&self.state, cfg.agent.turn_deg.to_radians());
                detection = self.observe(category)?;
                continue;
            }
            let Some(start) = self.start_cell(&nav) else {
                break Outcome::Exhausted;
            };
            let mut path = None;
            if let Some(target) = leg.committed {
                path = self.approach_path(&nav, start, target);
                if path.is_none() {
                    leg.abandoned.push(target);
                    leg.committed = None;
                }
            }
            if path.is_none() {
                let step = steps;
                let episode_id = self.episode.episode_id;
                path = self.explore_path(&mut leg, &nav, start, &query, |goals, selected| {
                    trace(GoalTraceRecord {
                        episode_id,
                        object_index: index,
                        step,
                        goals,
                        selected,
                    })
                })?;
            }
            let Some(path) = path else {
                if leg.turns_left > 0 {
                    continue;
                }
                break Outcome::Exhausted;
            };
            self.advance(&path);
            detection = self.observe(category)?;
        };

        Ok(ObjectResult {
            object_index: index,
            category: category.to_string(),
            found: outcome == Outcome::Success,
            outcome,
            agent_path_length: self.state.path_length - leg_start.path_length,
            oracle_path_length: oracle,
            steps: self.state.steps_taken - leg_start.steps_taken,
        })
    }
}
