//! End-to-end acceptance suite. Runs every criterion in order, prints one
//! PASS/FAIL line each and exits nonzero if any failed.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use onemap::belief_map::blur::scatter_weights;
use onemap::belief_map::{bayesian_fuse, spatial_blur, BeliefMap, BlurParams, BlurredCell, BlurredField, CellUpdate};
use onemap::benchmark::{
    build_report, compute_metrics, generate_episodes, generate_worlds, per_object_breakdown, EpisodeParams,
    EpisodeResult, ObjectResult, Outcome, Report, Runner,
};
use onemap::config::Config;
use onemap::exploration::{cluster_high_similarity, extract_frontiers, SubMaps};
use onemap::grid::{GridDims, MapGrid, Mask, Raster, NEIGHBORS8};
use onemap::planning::{astar, dijkstra};
use onemap::Cell;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn main() {
    let criteria: [(&str, fn() -> Verdict); 10] = [
        ("fusion contraction and fixed point", fusion_invariants),
        ("sparse blur equals dense reference", sparse_equals_dense),
        ("A* cost equals Dijkstra cost", astar_equals_dijkstra),
        ("frontier and cluster extraction", frontier_and_cluster_oracles),
        ("metric identities and examples", metric_identities),
        ("memory estimate", memory_law),
        ("easy single-object suite", easy_suite),
        ("map reuse trend", reuse_trend),
        ("consensus filter ablation", consensus_ablation),
        ("run determinism", run_determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let t = Instant::now();
        let v = check();
        let status = if v.pass { "PASS" } else { "FAIL" };
        println!(
            "[{status}] {:>2} {name}: {} ({:.1}s)",
            i + 1,
            v.detail,
            t.elapsed().as_secs_f64()
        );
        failed += usize::from(!v.pass);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}

fn within(t: Instant, limit: Duration) -> bool {
    t.elapsed() < limit
}

// ---------------------------------------------------------------- fusion

fn fusion_invariants() -> Verdict {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let dims = GridDims::new(6, 6);
    let grid = MapGrid::new(dims, 10.0);
    let dim = 4;
    let mut violations = 0;
    for _ in 0..10_000 {
        let n = dims.len();
        let features: Vec<f32> = (0..n * dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let sigma2: Vec<f32> = (0..n).map(|_| rng.random_range(1e-3..1.0)).collect();
        let search: Vec<f32> = (0..n).map(|_| rng.random_range(1e-3..1.0)).collect();
        let observed = vec![true; n];
        let mut map = BeliefMap::from_parts(grid, dim, 1.0, features, sigma2, search, observed).unwrap();
        let before = map.clone();

        // Half the touched cells receive exactly their stored feature.
        let mut cells = Vec::new();
        let mut fixed = Vec::new();
        for c in dims.cells() {
            if rng.random_bool(0.5) {
                continue;
            }
            let same = rng.random_bool(0.5);
            let feature = if same {
                map.feature(c).to_vec()
            } else {
                (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()
            };
            fixed.push(same);
            cells.push(BlurredCell {
                cell: c,
                feature,
                variance: rng.random_range(1e-3..10.0),
                mass: 1.0,
            });
        }
        bayesian_fuse(&mut map, &BlurredField { cells: cells.clone() }, 1e-3).unwrap();
        for (b, same) in cells.iter().zip(fixed) {
            let c = b.cell;
            if !(map.variance(c) < before.variance(c)) || !(map.search_variance(c) < before.search_variance(c)) {
                violations += 1;
            }
            if same && map.feature(c) != before.feature(c) {
                violations += 1;
            }
        }
        for c in dims.cells().filter(|&c| !cells.iter().any(|b| b.cell == c)) {
            if map.variance(c) != before.variance(c) || map.feature(c) != before.feature(c) {
                violations += 1;
            }
        }
    }
    let fast = within(t, Duration::from_secs(5));
    verdict(violations == 0 && fast, format!("10000 calls, {violations} violations"))
}

// ------------------------------------------------------------------ blur

/// Direct evaluation of every kernel over every raster cell.
fn dense_blur(dims: GridDims, resolution: f64, updates: &[CellUpdate], p: f64, truncation: f64) -> Vec<Option<(Vec<f64>, f64, f64)>> {
    let dim = updates[0].feature.len();
    let mut acc: Vec<(Vec<f64>, f64, f64)> = vec![(vec![0.0; dim], 0.0, 0.0); dims.len()];
    for u in updates {
        let d = u.camera_distance as f64;
        let sigma = (p * d * d).sqrt() * resolution;
        let mut weights = vec![0.0; dims.len()];
        if sigma > 0.0 {
            let reach = (truncation * sigma).max(1.0);
            for c in dims.cells() {
                let dx = c.x as f64 - u.cell.x as f64;
                let dy = c.y as f64 - u.cell.y as f64;
                let d2 = dx * dx + dy * dy;
                if d2 <= reach * reach {
                    weights[dims.index(c)] = (-d2 / (2.0 * sigma * sigma)).exp();
                }
            }
        } else {
            weights[dims.index(u.cell)] = 1.0;
        }
        let total: f64 = weights.iter().sum();
        for (i, w) in weights.iter().enumerate() {
            if *w > 0.0 {
                let w = w / total;
                let a = &mut acc[i];
                for (x, &f) in a.0.iter_mut().zip(&u.feature) {
                    *x += w * f as f64;
                }
                a.1 += w;
                a.2 += w * u.variance as f64;
            }
        }
    }
    acc.into_iter().map(|a| (a.1 > 0.0).then_some(a)).collect()
}

fn sparse_equals_dense() -> Verdict {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let tol = 1e-6;
    let mut worst: f64 = 0.0;
    let mut support_mismatch = 0;
    for _ in 0..1000 {
        let dims = GridDims::new(rng.random_range(1..=32), rng.random_range(1..=32));
        let resolution = 10.0;
        let grid = MapGrid::new(dims, resolution);
        let params = BlurParams {
            p: rng.random_range(0.0..0.02),
            truncation: rng.random_range(1.0..4.0),
        };
        let n = rng.random_range(1..=12);
        let updates: Vec<CellUpdate> = (0..n)
            .map(|_| CellUpdate {
                cell: Cell::new(rng.random_range(0..dims.nx), rng.random_range(0..dims.ny)),
                feature: (0..3).map(|_| rng.random_range(-1.0..1.0)).collect(),
                variance: rng.random_range(1e-3..3.0),
                camera_distance: rng.random_range(0.0..6.0),
            })
            .collect();
        let sparse = spatial_blur(&grid, &updates, &params);
        let dense = dense_blur(dims, resolution, &updates, params.p, params.truncation);
        let sparse_cells: BTreeSet<usize> = sparse.cells.iter().map(|b| dims.index(b.cell)).collect();
        let dense_cells: BTreeSet<usize> = (0..dims.len()).filter(|&i| dense[i].is_some()).collect();
        if sparse_cells != dense_cells {
            support_mismatch += 1;
            continue;
        }
        for b in &sparse.cells {
            let (f, mass, var) = dense[dims.index(b.cell)].as_ref().unwrap();
            for (x, y) in b.feature.iter().zip(f) {
                worst = worst.max((*x as f64 - y).abs());
            }
            worst = worst.max((b.mass as f64 - mass).abs());
            worst = worst.max((b.variance as f64 - var / mass).abs());
        }
    }
    // Each single-update kernel must also carry unit mass.
    let grid = MapGrid::new(GridDims::new(32, 32), 10.0);
    for k in 0..200 {
        let centre = Cell::new(k % 32, (k * 7) % 32);
        let w = scatter_weights(&grid, centre, (k % 6) as f64, &BlurParams::default());
        let total: f64 = w.iter().map(|(_, x)| x).sum();
        worst = worst.max((total - 1.0).abs());
    }
    let fast = within(t, Duration::from_secs(30));
    verdict(
        support_mismatch == 0 && worst <= tol && fast,
        format!("1000 rasters, max deviation {worst:.2e}, support mismatches {support_mismatch}"),
    )
}

// ------------------------------------------------------------- planning

/// Bellman-Ford relaxation on (straight, diagonal) step counts with the
/// no-corner-cutting 8-connected motion model.
fn oracle_costs(nav: &Mask, start: Cell) -> Vec<Option<(u32, u32)>> {
    let dims = nav.dims();
    let value = |c: (u32, u32)| c.0 as f64 + c.1 as f64 * std::f64::consts::SQRT_2;
    let mut best: Vec<Option<(u32, u32)>> = vec![None; dims.len()];
    best[dims.index(start)] = Some((0, 0));
    loop {
        let mut changed = false;
        for c in dims.cells() {
            let Some(g) = best[dims.index(c)] else { continue };
            for &(dx, dy) in &NEIGHBORS8 {
                let Some(n) = dims.offset(c, dx, dy) else { continue };
                if !nav[n] {
                    continue;
                }
                let diagonal = dx != 0 && dy != 0;
                if diagonal {
                    let side_a = dims.offset(c, dx, 0).unwrap();
                    let side_b = dims.offset(c, 0, dy).unwrap();
                    if !(nav[side_a] && nav[side_b]) {
                        continue;
                    }
                }
                let cand = if diagonal { (g.0, g.1 + 1) } else { (g.0 + 1, g.1) };
                let slot = &mut best[dims.index(n)];
                if slot.is_none_or(|b| value(cand) < value(b)) {
                    *slot = Some(cand);
                    changed = true;
                }
            }
        }
        if !changed {
            return best;
        }
    }
}

fn astar_equals_dijkstra() -> Verdict {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let dims = GridDims::new(32, 32);
    let mut mismatches = 0;
    let mut reachable = 0;
    for _ in 0..1000 {
        let density = rng.random_range(0.0..0.4);
        let nav: Mask = Raster::from_vec(dims, (0..dims.len()).map(|_| !rng.random_bool(density)).collect());
        let free: Vec<Cell> = nav.set_cells().collect();
        if free.len() < 2 {
            continue;
        }
        let start = free[rng.random_range(0..free.len())];
        let goal = free[rng.random_range(0..free.len())];
        let oracle = oracle_costs(&nav, start)[dims.index(goal)];
        let library = dijkstra(&nav, start).unwrap()[goal].map(|c| (c.straight, c.diagonal));
        let planned = astar(&nav, start, goal, 1.0, 0.0).ok().map(|p| (p.cost.straight, p.cost.diagonal));
        if planned != oracle || library != oracle {
            mismatches += 1;
        }
        reachable += usize::from(oracle.is_some());
    }
    let fast = within(t, Duration::from_secs(10));
    verdict(
        mismatches == 0 && fast,
        format!("1000 grids ({reachable} reachable pairs), {mismatches} mismatches"),
    )
}

// ------------------------------------------------------------ frontiers

/// Union-find components under 8-connectivity, as sets of row-major indices.
fn oracle_components(dims: GridDims, member: &[bool]) -> BTreeSet<Vec<usize>> {
    let mut parent: Vec<usize> = (0..member.len()).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for c in dims.cells() {
        let i = dims.index(c);
        if !member[i] {
            continue;
        }
        for n in dims.neighbors8(c) {
            let j = dims.index(n);
            if member[j] {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a] = b;
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in (0..member.len()).filter(|&i| member[i]) {
        let root = find(&mut parent, i);
        groups.entry(root).or_default().push(i);
    }
    groups.into_values().collect()
}

fn frontier_and_cluster_oracles() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let dims = GridDims::new(16, 16);
    let n = dims.len();
    let mut bad_frontiers = 0;
    let mut bad_clusters = 0;
    let mut total_chains = 0;
    let mut total_clusters = 0;
    for _ in 0..500 {
        let (po, pe, pc) = (rng.random_range(0.3..1.0), rng.random_range(0.2..0.9), rng.random_range(0.0..0.8));
        let observed: Vec<bool> = (0..n).map(|_| rng.random_bool(po)).collect();
        let explored: Vec<bool> = observed.iter().map(|&o| o && rng.random_bool(pe)).collect();
        let searched: Vec<bool> = observed.iter().map(|&o| o && rng.random_bool(pc)).collect();
        let sim: Vec<f32> = (0..n).map(|_| rng.random_range(-5..=10) as f32 / 10.0).collect();
        let min_length = rng.random_range(1..=4);
        let tau = rng.random_range(0..=6) as f32 / 10.0;
        let sub = SubMaps {
            observed: Raster::from_vec(dims, observed.clone()),
            explored: Raster::from_vec(dims, explored.clone()),
            searched: Raster::from_vec(dims, searched.clone()),
            navigable: Raster::filled(dims, true),
        };
        let similarity = Raster::from_vec(dims, sim.clone());

        let boundary: Vec<bool> = (0..n)
            .map(|i| {
                let c = dims.cell(i);
                explored[i]
                    && NEIGHBORS8.iter().any(|&(dx, dy)| {
                        let (x, y) = (c.x as i64 + dx, c.y as i64 + dy);
                        (0..16).contains(&x) && (0..16).contains(&y) && {
                            let j = (y * 16 + x) as usize;
                            observed[j] && !explored[j]
                        }
                    })
            })
            .collect();
        let expected: BTreeSet<Vec<usize>> = oracle_components(dims, &boundary)
            .into_iter()
            .filter(|c| c.len() >= min_length)
            .collect();
        let got: BTreeSet<Vec<usize>> = extract_frontiers(&sub, min_length)
            .into_iter()
            .map(|chain| {
                let mut v: Vec<usize> = chain.iter().map(|&c| dims.index(c)).collect();
                v.sort();
                v
            })
            .collect();
        bad_frontiers += usize::from(expected != got);
        total_chains += expected.len();

        let member: Vec<bool> = (0..n).map(|i| explored[i] && !searched[i] && sim[i] >= tau).collect();
        let expected: BTreeSet<(Vec<usize>, usize, u32)> = oracle_components(dims, &member)
            .into_iter()
            .map(|comp| {
                let best = comp.iter().map(|&i| sim[i]).fold(f32::MIN, f32::max);
                let target = *comp.iter().find(|&&i| sim[i] == best).unwrap();
                (comp, target, best.to_bits())
            })
            .collect();
        let got: BTreeSet<(Vec<usize>, usize, u32)> = cluster_high_similarity(&similarity, &sub, tau)
            .into_iter()
            .map(|g| {
                let mut v: Vec<usize> = g.support.iter().map(|&c| dims.index(c)).collect();
                v.sort();
                (v, dims.index(g.target), g.score.to_bits())
            })
            .collect();
        bad_clusters += usize::from(expected != got);
        total_clusters += expected.len();
    }
    verdict(
        bad_frontiers == 0 && bad_clusters == 0,
        format!(
            "500 configs ({total_chains} chains, {total_clusters} clusters), mismatched configs: frontiers {bad_frontiers}, clusters {bad_clusters}"
        ),
    )
}

// --------------------------------------------------------------- metrics

fn object(index: usize, found: bool, agent: f64, oracle: f64) -> ObjectResult {
    ObjectResult {
        object_index: index,
        category: format!("c{index}"),
        found,
        outcome: if found { Outcome::Success } else { Outcome::Budget },
        agent_path_length: agent,
        oracle_path_length: oracle,
        steps: 1,
    }
}

fn episode(id: u64, goal_count: usize, objects: Vec<ObjectResult>) -> EpisodeResult {
    EpisodeResult {
        episode_id: id,
        world: 0,
        goal_count,
        objects,
    }
}

fn metric_identities() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut violations = 0;
    for set in 0..1000 {
        let results: Vec<EpisodeResult> = (0..rng.random_range(1..20))
            .map(|id| {
                let k = rng.random_range(1..=4);
                let mut objects = Vec::new();
                for i in 0..k {
                    let oracle = rng.random_range(0.0..10.0);
                    let agent = oracle + rng.random_range(0.0..10.0) * f64::from(u8::from(set % 3 != 0));
                    let found = rng.random_bool(0.8);
                    objects.push(object(i, found, agent, oracle));
                    if !found {
                        break;
                    }
                }
                episode(id, k, objects)
            })
            .collect();
        let m = compute_metrics(&results).unwrap();
        let eps = 1e-12;
        if !(m.spl <= m.sr + eps && m.ppl <= m.pr + eps && m.pr + eps >= m.sr) {
            violations += 1;
        }
    }

    let all_exact = compute_metrics(&[episode(0, 3, (0..3).map(|i| object(i, true, 4.0, 4.0)).collect())]).unwrap();
    let ex1 = (all_exact.sr, all_exact.spl, all_exact.pr, all_exact.ppl) == (1.0, 1.0, 1.0, 1.0);
    let two_of_three = compute_metrics(&[episode(
        0,
        3,
        vec![object(0, true, 2.0, 2.0), object(1, true, 3.0, 3.0), object(2, false, 5.0, 1.0)],
    )])
    .unwrap();
    let ex2 = two_of_three.sr == 0.0 && two_of_three.spl == 0.0 && two_of_three.pr == 2.0 / 3.0;
    let doubled = compute_metrics(&[episode(0, 2, vec![object(0, true, 6.0, 3.0), object(1, true, 4.0, 2.0)])]).unwrap();
    let ex3 = doubled.spl == 0.5;
    verdict(
        violations == 0 && ex1 && ex2 && ex3,
        format!("1000 result sets, {violations} identity violations; examples {ex1}/{ex2}/{ex3}"),
    )
}

// ---------------------------------------------------------------- memory

fn memory_law() -> Verdict {
    let bytes = BeliefMap::memory_estimate_bytes(500, 500, 768, 4);
    let independent = 500u64 * 500 * (768 + 2) * 4 + 500 * 500;
    let mb = bytes as f64 / 1e6;
    let ok = bytes == independent && (650.0..=800.0).contains(&mb);
    verdict(ok, format!("{mb:.1} MB for 500x500 cells, f = 768"))
}

// ------------------------------------------------------------ closed loop

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn load_config(name: &str, overrides: &[(&str, &str)]) -> Config {
    let text = std::fs::read_to_string(configs_dir().join(name)).unwrap();
    let vars = overrides.iter().map(|(k, v)| (k.to_string(), v.to_string()));
    Config::from_toml_with_env(&text, vars).unwrap()
}

fn run_suite(config: &Config) -> Vec<EpisodeResult> {
    let params = EpisodeParams::from_config(config);
    let worlds = generate_worlds(&config.world, config.dataset.n_worlds, &params, config.seed).unwrap();
    let episodes = generate_episodes(&worlds, config.dataset.n_episodes, &params, config.seed).unwrap();
    let runner = Runner::new(config).unwrap();
    let chunk = episodes.len().div_ceil(threads()).max(1);
    let mut results: Vec<EpisodeResult> = std::thread::scope(|s| {
        let handles: Vec<_> = episodes
            .chunks(chunk)
            .map(|part| {
                let (runner, worlds) = (&runner, &worlds);
                s.spawn(move || {
                    part.iter()
                        .map(|ep| runner.run_episode(&worlds[ep.world], ep).unwrap())
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().unwrap()).collect()
    });
    results.sort_by_key(|r| r.episode_id);
    results
}

fn threads() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn easy_suite() -> Verdict {
    let t = Instant::now();
    let mut results = run_suite(&load_config("easy_room.toml", &[]));
    let corridor = run_suite(&load_config("easy_corridor.toml", &[]));
    let offset = results.len() as u64;
    results.extend(corridor.into_iter().map(|mut r| {
        r.episode_id += offset;
        r
    }));
    let m = compute_metrics(&results).unwrap();
    let fast = within(t, Duration::from_secs(300));
    verdict(
        results.len() == 50 && m.sr >= 0.95 && m.spl >= 0.6 && fast,
        format!("{} episodes, SR {:.3} (>= 0.95), SPL {:.3} (>= 0.6)", results.len(), m.sr, m.spl),
    )
}

fn per_object_spl(results: &[EpisodeResult]) -> Vec<f64> {
    per_object_breakdown(results).iter().map(|b| b.spl).collect()
}

fn reuse_trend() -> Verdict {
    let t = Instant::now();
    let reuse = run_suite(&load_config("default.toml", &[("ONEMAP_AGENT_REUSE_MAP", "true")]));
    let fresh = run_suite(&load_config("default.toml", &[("ONEMAP_AGENT_REUSE_MAP", "false")]));
    let r = per_object_spl(&reuse);
    let f = per_object_spl(&fresh);
    let rising = r.len() == 3 && r[0] <= r[1] && r[1] <= r[2] && r[2] - r[0] >= 0.05;
    let flat = f.len() == 3 && f.iter().all(|s| (s - f[0]).abs() <= 0.03);
    let fast = within(t, Duration::from_secs(1200));
    let fmt = |v: &[f64]| v.iter().map(|s| format!("{:.1}", 100.0 * s)).collect::<Vec<_>>().join(" / ");
    verdict(
        reuse.len() == 100 && rising && flat && fast,
        format!("SPL by object, reuse {} (rise >= 5), fresh {} (flat within 3)", fmt(&r), fmt(&f)),
    )
}

fn ablation_report(consensus: &str) -> Report {
    let results = run_suite(&load_config(
        "default.toml",
        &[("ONEMAP_DETECTOR_FP_RATE", "0.3"), ("ONEMAP_EXPLORATION_CONSENSUS", consensus)],
    ));
    build_report(&results).unwrap()
}

fn consensus_ablation() -> Verdict {
    let on = ablation_report("true");
    let off = ablation_report("false");
    let sr = |r: &Report| r.metrics.as_ref().map_or(0.0, |m| m.sr);
    let reduction = if off.misdetection_rate > 0.0 {
        1.0 - on.misdetection_rate / off.misdetection_rate
    } else {
        0.0
    };
    let sr_drop = sr(&off) - sr(&on);
    verdict(
        on.episodes == 100 && reduction >= 0.25 && sr_drop <= 0.03,
        format!(
            "misdetection {:.2} -> {:.2} ({:.0}% cut, >= 25%), SR {:.2} -> {:.2}",
            off.misdetection_rate,
            on.misdetection_rate,
            100.0 * reduction,
            sr(&off),
            sr(&on)
        ),
    )
}

// ----------------------------------------------------------- determinism

/// The CLI binary from the same target directory, built on demand.
fn cli_binary() -> std::io::Result<PathBuf> {
    let exe = std::env::current_exe()?;
    let profile_dir = exe.parent().and_then(Path::parent).unwrap().to_path_buf();
    let bin = profile_dir.join(format!("onemap{}", std::env::consts::EXE_SUFFIX));
    if !bin.exists() {
        let profile = if profile_dir.ends_with("release") { "release" } else { "test" };
        let status = Command::new(env!("CARGO"))
            .args(["build", "--quiet", "-p", "onemap-cli", "--bin", "onemap", "--profile", profile])
            .status()?;
        if !status.success() {
            return Err(std::io::Error::other("building the CLI failed"));
        }
    }
    Ok(bin)
}

fn run_determinism() -> Verdict {
    let bin = match cli_binary() {
        Ok(b) => b,
        Err(e) => return verdict(false, format!("CLI unavailable: {e}")),
    };
    let tmp = tempfile::tempdir().unwrap();
    let onemap = |args: &[&str]| {
        let mut cmd = Command::new(&bin);
        cmd.current_dir(tmp.path()).args(args);
        for (k, _) in std::env::vars().filter(|(k, _)| k.starts_with("ONEMAP_")) {
            cmd.env_remove(k);
        }
        cmd.envs([("ONEMAP_DATASET_N_WORLDS", "3"), ("ONEMAP_DATASET_N_EPISODES", "12")]);
        cmd.output().map(|o| o.status.success()).unwrap_or(false)
    };
    let config = configs_dir().join("default.toml");
    let config = config.to_str().unwrap();
    let ran = onemap(&["--config", config, "--seed", "11", "gen", "--out", "ds"])
        && onemap(&["--config", config, "--seed", "11", "run", "--dataset", "ds", "--out", "a", "--jobs", "1"])
        && onemap(&["--config", config, "--seed", "11", "run", "--dataset", "ds", "--out", "b", "--jobs", "4"]);
    if !ran {
        return verdict(false, "a CLI invocation failed");
    }
    let a = std::fs::read(tmp.path().join("a/results.jsonl")).unwrap();
    let b = std::fs::read(tmp.path().join("b/results.jsonl")).unwrap();
    verdict(
        !a.is_empty() && a == b,
        format!("two runs, {} bytes each, identical: {}", a.len(), a == b),
    )
}
