//! Grid path planning on the navigable raster.
//!
//! Motion is 8-connected with unit cost for orthogonal and √2 for diagonal
//! steps; a diagonal step is only allowed when both orthogonal cells it
//! passes between are navigable. Costs are tracked as integer step counts so
//! optimal costs from different searches compare exactly.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Cell, GridDims, Mask, Raster, NEIGHBORS8};

/// Path cost as `straight + diagonal · √2` steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct StepCost {
    pub straight: u32,
    pub diagonal: u32,
}

impl StepCost {
    pub fn value(&self) -> f64 {
        self.straight as f64 + self.diagonal as f64 * std::f64::consts::SQRT_2
    }

    fn add(self, diagonal: bool) -> Self {
        if diagonal {
            Self {
                diagonal: self.diagonal + 1,
                ..self
            }
        } else {
            Self {
                straight: self.straight + 1,
                ..self
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub cells: Vec<Cell>,
    pub cost: StepCost,
    /// Meters.
    pub length: f64,
}

impl Path {
    fn from_cells(cells: Vec<Cell>, cost: StepCost, cell_size: f64) -> Self {
        Self {
            cells,
            cost,
            length: cost.value() * cell_size,
        }
    }

    pub fn start(&self) -> Cell {
        self.cells[0]
    }

    pub fn goal(&self) -> Cell {
        *self.cells.last().unwrap()
    }
}

/// Straight-line lower bound on the step cost between two cells.
pub fn octile(a: Cell, b: Cell) -> f64 {
    let dx = a.x.abs_diff(b.x) as f64;
    let dy = a.y.abs_diff(b.y) as f64;
    let (lo, hi) = if dx < dy { (dx, dy) } else { (dy, dx) };
    (hi - lo) + lo * std::f64::consts::SQRT_2
}

/// Successors of `cell` under the motion model, with whether the step is diagonal.
fn successors(nav: &Mask, cell: Cell) -> impl Iterator<Item = (Cell, bool)> + '_ {
    let dims = nav.dims();
    NEIGHBORS8.iter().filter_map(move |&(dx, dy)| {
        let n = dims.offset(cell, dx, dy)?;
        if !nav[n] {
            return None;
        }
        let diagonal = dx != 0 && dy != 0;
        if diagonal {
            let a = dims.offset(cell, dx, 0)?;
            let b = dims.offset(cell, 0, dy)?;
            if !(nav[a] && nav[b]) {
                return None;
            }
        }
        Some((n, diagonal))
    })
}

#[derive(Debug, Clone, Copy)]
struct Node {
    priority: f64,
    index: usize,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl Ord for Node {
    // min-heap on (priority, row-major index)
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .priority
            .total_cmp(&self.priority)
            .then_with(|| other.index.cmp(&self.index))
    }
}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn reconstruct(dims: GridDims, parent: &[usize], mut index: usize) -> Vec<Cell> {
    let mut cells = vec![dims.cell(index)];
    while parent[index] != usize::MAX {
        index = parent[index];
        cells.push(dims.cell(index));
    }
    cells.reverse();
    cells
}

/// Best-first search from `start`; `heuristic` of zero gives Dijkstra.
/// Stops at the first popped cell accepted by `is_goal`.
fn search(
    nav: &Mask,
    start: Cell,
    is_goal: impl Fn(Cell) -> bool,
    heuristic: impl Fn(Cell) -> f64,
) -> Option<(Vec<Cell>, StepCost)> {
    let dims = nav.dims();
    let mut best: Vec<Option<StepCost>> = vec![None; dims.len()];
    let mut parent = vec![usize::MAX; dims.len()];
    let mut closed = vec![false; dims.len()];
    let mut open = BinaryHeap::new();
    let s = dims.index(start);
    best[s] = Some(StepCost::default());
    open.push(Node {
        priority: heuristic(start),
        index: s,
    });
    while let Some(Node { index, .. }) = open.pop() {
        if closed[index] {
            continue;
        }
        closed[index] = true;
        let cell = dims.cell(index);
        let g = best[index].unwrap();
        if is_goal(cell) {
            return Some((reconstruct(dims, &parent, index), g));
        }
        for (n, diagonal) in successors(nav, cell) {
            let ni = dims.index(n);
            if closed[ni] {
                continue;
            }
            let cand = g.add(diagonal);
            if best[ni].is_none_or(|b| cand.value() < b.value()) {
                best[ni] = Some(cand);
                parent[ni] = index;
                open.push(Node {
                    priority: cand.value() + heuristic(n),
                    index: ni,
                });
            }
        }
    }
    None
}

/// Nearest navigable cell to `goal` (Euclidean, ties row-major) within
/// `radius_cells`, restricted to `allowed`.
pub fn snap_to_navigable(nav: &Mask, allowed: &Mask, goal: Cell, radius_cells: f64) -> Option<Cell> {
    if nav[goal] && allowed[goal] {
        return Some(goal);
    }
    let r = radius_cells.floor() as i64;
    let dims = nav.dims();
    let mut best: Option<(i64, Cell)> = None;
    for dy in -r..=r {
        for dx in -r..=r {
            let d2 = dx * dx + dy * dy;
            if (d2 as f64) > radius_cells * radius_cells {
                continue;
            }
            let Some(c) = dims.offset(goal, dx, dy) else {
                continue;
            };
            if !(nav[c] && allowed[c]) {
                continue;
            }
            let better = match best {
                None => true,
                Some((bd, bc)) => d2 < bd || (d2 == bd && c < bc),
            };
            if better {
                best = Some((d2, c));
            }
        }
    }
    best.map(|(_, c)| c)
}

/// Minimal-cost path from `start` to `goal`. A goal outside `nav` is snapped
/// to the nearest reachable navigable cell within `snap_radius` meters.
pub fn astar(nav: &Mask, start: Cell, goal: Cell, cell_size: f64, snap_radius: f64) -> Result<Path> {
    let dims = nav.dims();
    if !dims.contains(start) || !nav[start] {
        return Err(Error::InvalidStart(start));
    }
    if !dims.contains(goal) {
        return Err(Error::Unreachable { from: start, to: goal });
    }
    let target = if nav[goal] {
        goal
    } else {
        let reach = reachable_set(nav, start)?;
        snap_to_navigable(nav, &reach, goal, snap_radius / cell_size)
            .ok_or(Error::Unreachable { from: start, to: goal })?
    };
    let (cells, cost) = search(nav, start, |c| c == target, |c| octile(c, target))
        .ok_or(Error::Unreachable { from: start, to: goal })?;
    Ok(Path::from_cells(cells, cost, cell_size))
}

/// Cheapest path from `start` to any cell of `targets`.
pub fn plan_to_any(nav: &Mask, start: Cell, targets: &Mask, cell_size: f64) -> Result<Path> {
    if !nav.dims().contains(start) || !nav[start] {
        return Err(Error::InvalidStart(start));
    }
    let (cells, cost) = search(nav, start, |c| targets[c], |_| 0.0).ok_or(Error::Unreachable {
        from: start,
        to: start,
    })?;
    Ok(Path::from_cells(cells, cost, cell_size))
}

/// Optimal step cost from `start` to every cell (None when unreachable).
pub fn dijkstra(nav: &Mask, start: Cell) -> Result<Raster<Option<StepCost>>> {
    let dims = nav.dims();
    if !dims.contains(start) || !nav[start] {
        return Err(Error::InvalidStart(start));
    }
    let mut best: Vec<Option<StepCost>> = vec![None; dims.len()];
    let mut closed = vec![false; dims.len()];
    let mut open = BinaryHeap::new();
    best[dims.index(start)] = Some(StepCost::default());
    open.push(Node {
        priority: 0.0,
        index: dims.index(start),
    });
    while let Some(Node { index, .. }) = open.pop() {
        if closed[index] {
            continue;
        }
        closed[index] = true;
        let g = best[index].unwrap();
        for (n, diagonal) in successors(nav, dims.cell(index)) {
            let ni = dims.index(n);
            let cand = g.add(diagonal);
            if !closed[ni] && best[ni].is_none_or(|b| cand.value() < b.value()) {
                best[ni] = Some(cand);
                open.push(Node {
                    priority: cand.value(),
                    index: ni,
                });
            }
        }
    }
    Ok(Raster::from_vec(dims, best))
}

/// Cells reachable from `from` under the motion model.
pub fn reachable_set(nav: &Mask, from: Cell) -> Result<Mask> {
    let dims = nav.dims();
    if !dims.contains(from) || !nav[from] {
        return Err(Error::InvalidStart(from));
    }
    let mut out = Raster::filled(dims, false);
    let mut queue = VecDeque::from([from]);
    out[from] = true;
    while let Some(c) = queue.pop_front() {
        for (n, _) in successors(nav, c) {
            if !out[n] {
                out[n] = true;
                queue.push_back(n);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn open_grid(n: usize) -> Mask {
        Raster::filled(GridDims::new(n, n), true)
    }

    #[test]
    fn start_equals_goal() {
        let nav = open_grid(5);
        let p = astar(&nav, Cell::new(2, 2), Cell::new(2, 2), 0.1, 0.0).unwrap();
        assert_eq!(p.cells, vec![Cell::new(2, 2)]);
        assert_eq!(p.length, 0.0);
    }

    #[test]
    fn corner_to_corner_is_pure_diagonal() {
        let nav = open_grid(10);
        let p = astar(&nav, Cell::new(0, 0), Cell::new(9, 9), 0.1, 0.0).unwrap();
        assert_eq!(p.cost, StepCost { straight: 0, diagonal: 9 });
        assert!((p.length - 9.0 * std::f64::consts::SQRT_2 * 0.1).abs() < 1e-12);
        let d = dijkstra(&nav, Cell::new(0, 0)).unwrap();
        assert_eq!(d[Cell::new(9, 9)], Some(p.cost));
    }

    #[test]
    fn walled_goal_is_unreachable() {
        let mut nav = open_grid(7);
        for y in 0..7 {
            nav[Cell::new(3, y)] = false;
        }
        let r = astar(&nav, Cell::new(0, 0), Cell::new(6, 6), 1.0, 0.0);
        assert!(matches!(r, Err(Error::Unreachable { .. })));
        let reach = reachable_set(&nav, Cell::new(0, 0)).unwrap();
        assert_eq!(reach.count(), 21);
    }

    #[test]
    fn start_outside_nav_is_rejected() {
        let mut nav = open_grid(3);
        nav[Cell::new(0, 0)] = false;
        assert!(matches!(
            astar(&nav, Cell::new(0, 0), Cell::new(2, 2), 1.0, 0.0),
            Err(Error::InvalidStart(_))
        ));
        assert!(reachable_set(&nav, Cell::new(0, 0)).is_err());
    }

    #[test]
    fn no_corner_cutting() {
        let mut nav = open_grid(3);
        nav[Cell::new(1, 0)] = false;
        let p = astar(&nav, Cell::new(0, 0), Cell::new(1, 1), 1.0, 0.0).unwrap();
        assert_eq!(p.cells, vec![Cell::new(0, 0), Cell::new(0, 1), Cell::new(1, 1)]);
    }

    #[test]
    fn off_grid_goal_snaps_to_nearest_reachable_cell() {
        let mut nav = open_grid(6);
        nav[Cell::new(5, 5)] = false;
        let p = astar(&nav, Cell::new(0, 0), Cell::new(5, 5), 1.0, 1.5).unwrap();
        assert_eq!(p.goal(), Cell::new(5, 4));
        assert!(astar(&nav, Cell::new(0, 0), Cell::new(5, 5), 1.0, 0.5).is_err());
    }

    #[test]
    fn plan_to_any_picks_cheapest_target() {
        let nav = open_grid(8);
        let mut targets = Raster::filled(nav.dims(), false);
        targets[Cell::new(7, 0)] = true;
        targets[Cell::new(0, 3)] = true;
        let p = plan_to_any(&nav, Cell::new(0, 0), &targets, 1.0).unwrap();
        assert_eq!(p.goal(), Cell::new(0, 3));
    }
}
