//! Frontiers: chains of semantically explored cells (E) bordering cells that
//! were observed but not yet explored (O ∖ E).

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::grid::{chamfer_distance, components8, flood_fill8, label_components8, Cell, GridDims, Mask, Raster, NEIGHBORS8};

use super::goal::{GoalKind, NavGoal};
use super::submaps::SubMaps;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrontierParams {
    /// Shorter chains are dropped.
    pub min_length: usize,
    /// A chain counts as reachable when one of its cells lies within this
    /// many cells of the reachable set.
    pub reach_radius_cells: f64,
}

impl Default for FrontierParams {
    fn default() -> Self {
        Self {
            min_length: 3,
            reach_radius_cells: 15.0,
        }
    }
}

/// Cells of E with at least one 8-neighbour in O ∖ E.
pub fn boundary_cells(sub: &SubMaps) -> Mask {
    let dims = sub.dims();
    let unexplored = sub.unexplored();
    let mut out = Raster::filled(dims, false);
    for c in sub.explored.set_cells() {
        out[c] = dims.neighbors8(c).any(|n| unexplored[n]);
    }
    out
}

/// Maximal 8-connected boundary chains with at least `min_length` cells.
pub fn extract_frontiers(sub: &SubMaps, min_length: usize) -> Vec<Vec<Cell>> {
    components8(&boundary_cells(sub))
        .into_iter()
        .filter(|c| c.len() >= min_length)
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrontierScore {
    /// −1 when the region is empty.
    pub score: f32,
    pub argmax: Option<Cell>,
    /// O ∖ E cells 8-connected to the chain, row-major.
    pub region: Vec<Cell>,
}

/// Maximum similarity over the O ∖ E region grown from the chain.
pub fn score_frontier(chain: &[Cell], similarity: &Raster<f32>, sub: &SubMaps) -> FrontierScore {
    let dims = sub.dims();
    let unexplored = sub.unexplored();
    let seeds: Vec<Cell> = chain.iter().flat_map(|&c| dims.neighbors8(c)).collect();
    let region = flood_fill8(&unexplored, seeds);
    let mut argmax: Option<Cell> = None;
    for &c in &region {
        if argmax.is_none_or(|a| similarity[c] > similarity[a]) {
            argmax = Some(c);
        }
    }
    FrontierScore {
        score: argmax.map_or(-1.0, |a| similarity[a]),
        argmax,
        region,
    }
}

/// Chain cell closest to `from` by 8-connected geodesic distance through
/// cells accepted by `passable` (chain cells always pass). Falls back to the
/// Euclidean nearest chain cell. Ties go to the lowest row-major cell.
pub fn frontier_target(dims: GridDims, chain: &[Cell], from: Cell, passable: impl Fn(Cell) -> bool) -> Cell {
    let mut on_chain = vec![false; dims.len()];
    for &c in chain {
        on_chain[dims.index(c)] = true;
    }
    let mut dist = vec![u32::MAX; dims.len()];
    let mut heap = BinaryHeap::new();
    dist[dims.index(from)] = 0;
    heap.push(Reverse((0u32, dims.index(from))));
    while let Some(Reverse((d, i))) = heap.pop() {
        if d > dist[i] {
            continue;
        }
        if on_chain[i] {
            return dims.cell(i);
        }
        let c = dims.cell(i);
        for (dx, dy) in NEIGHBORS8 {
            let Some(n) = dims.offset(c, dx, dy) else {
                continue;
            };
            let ni = dims.index(n);
            if !(on_chain[ni] || passable(n)) {
                continue;
            }
            let nd = d + if dx != 0 && dy != 0 { 14 } else { 10 };
            if nd < dist[ni] {
                dist[ni] = nd;
                heap.push(Reverse((nd, ni)));
            }
        }
    }
    let d2 = |c: &Cell| {
        let dx = c.x as i64 - from.x as i64;
        let dy = c.y as i64 - from.y as i64;
        dx * dx + dy * dy
    };
    *chain.iter().min_by_key(|c| (d2(c), **c)).expect("non-empty chain")
}

/// Scored frontier goals. When `reachable` is given, chains with no cell near
/// it are dropped and targets are restricted to chain cells near it.
pub fn frontier_goals(
    sub: &SubMaps,
    similarity: &Raster<f32>,
    params: &FrontierParams,
    reachable: Option<&Mask>,
) -> Vec<NavGoal> {
    let dims = sub.dims();
    let chains = extract_frontiers(sub, params.min_length.max(1));
    // Each chain with its cells close enough to the reachable set to serve
    // as targets.
    let chains: Vec<(Vec<Cell>, Vec<Cell>)> = match reachable {
        Some(reach) => {
            let dist = chamfer_distance(reach);
            let r = params.reach_radius_cells as f32 + 1e-4;
            chains
                .into_iter()
                .filter_map(|chain| {
                    let near: Vec<Cell> = chain.iter().copied().filter(|&c| dist[c] <= r).collect();
                    (!near.is_empty()).then_some((chain, near))
                })
                .collect()
        }
        None => chains.into_iter().map(|c| (c.clone(), c)).collect(),
    };
    if chains.is_empty() {
        return Vec::new();
    }

    // Regions are unions of O ∖ E components, so score each component once.
    let (labels, n) = label_components8(&sub.unexplored());
    let mut best: Vec<Option<Cell>> = vec![None; n];
    for c in dims.cells() {
        if let Some(k) = labels[c] {
            let slot = &mut best[k as usize];
            if slot.is_none_or(|b| similarity[c] > similarity[b]) {
                *slot = Some(c);
            }
        }
    }

    chains
        .into_iter()
        .map(|(chain, near)| {
            let mut comps: Vec<u32> = chain
                .iter()
                .flat_map(|&c| dims.neighbors8(c))
                .filter_map(|n| labels[n])
                .collect();
            comps.sort_unstable();
            comps.dedup();
            let mut argmax: Option<Cell> = None;
            for &k in &comps {
                let a = best[k as usize].expect("components are non-empty");
                if argmax.is_none_or(|b| similarity[a] > similarity[b] || (similarity[a] == similarity[b] && a < b)) {
                    argmax = Some(a);
                }
            }
            let (score, target) = match argmax {
                None => (-1.0, chain[0]),
                Some(a) => {
                    let mut sorted = chain.clone();
                    sorted.sort_unstable();
                    let passable = |c: Cell| {
                        sub.navigable[c]
                            || labels[c].is_some_and(|k| comps.binary_search(&k).is_ok())
                            || sorted.binary_search(&c).is_ok()
                    };
                    (similarity[a], frontier_target(dims, &near, a, passable))
                }
            };
            NavGoal {
                kind: GoalKind::Frontier,
                target,
                score,
                support: chain,
            }
        })
        .collect()
}
