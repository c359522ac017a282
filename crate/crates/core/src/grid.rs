//! Cell indexing and dense rasters shared by the map, planner and simulator.
//!
//! Cells are addressed as `(x, y)` with `x` along the world x axis. Linear
//! indices are row-major with `y` as the row, so "lowest row-major index" in
//! tie-breaks means smallest `(y, x)`.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Cell {
    pub x: usize,
    pub y: usize,
}

impl Cell {
    pub const fn new(x: usize, y: usize) -> Self {
        Self { x, y }
    }

    /// Chebyshev adjacency (8-connectivity), excluding the cell itself.
    pub fn is_adjacent8(&self, other: &Cell) -> bool {
        let dx = self.x.abs_diff(other.x);
        let dy = self.y.abs_diff(other.y);
        dx <= 1 && dy <= 1 && (dx + dy) > 0
    }
}

impl Ord for Cell {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.y, self.x).cmp(&(other.y, other.x))
    }
}

impl PartialOrd for Cell {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

pub const NEIGHBORS8: [(i64, i64); 8] = [
    (-1, -1),
    (0, -1),
    (1, -1),
    (-1, 0),
    (1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridDims {
    pub nx: usize,
    pub ny: usize,
}

impl GridDims {
    pub const fn new(nx: usize, ny: usize) -> Self {
        Self { nx, ny }
    }

    pub const fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub const fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, cell: Cell) -> usize {
        debug_assert!(self.contains(cell));
        cell.y * self.nx + cell.x
    }

    #[inline]
    pub fn cell(&self, index: usize) -> Cell {
        Cell::new(index % self.nx, index / self.nx)
    }

    #[inline]
    pub fn contains(&self, cell: Cell) -> bool {
        cell.x < self.nx && cell.y < self.ny
    }

    #[inline]
    pub fn checked_cell(&self, x: i64, y: i64) -> Option<Cell> {
        if x >= 0 && y >= 0 && (x as usize) < self.nx && (y as usize) < self.ny {
            Some(Cell::new(x as usize, y as usize))
        } else {
            None
        }
    }

    pub fn offset(&self, cell: Cell, dx: i64, dy: i64) -> Option<Cell> {
        self.checked_cell(cell.x as i64 + dx, cell.y as i64 + dy)
    }

    pub fn neighbors8(&self, cell: Cell) -> impl Iterator<Item = Cell> + '_ {
        NEIGHBORS8
            .iter()
            .filter_map(move |&(dx, dy)| self.offset(cell, dx, dy))
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.len()).map(|i| self.cell(i))
    }
}

/// Dense row-major raster over a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Raster<T> {
    dims: GridDims,
    data: Vec<T>,
}

pub type Mask = Raster<bool>;

impl<T: Clone> Raster<T> {
    pub fn filled(dims: GridDims, value: T) -> Self {
        Self {
            dims,
            data: vec![value; dims.len()],
        }
    }
}

impl<T> Raster<T> {
    pub fn from_vec(dims: GridDims, data: Vec<T>) -> Self {
        assert_eq!(dims.len(), data.len(), "raster data length mismatch");
        Self { dims, data }
    }

    pub fn dims(&self) -> GridDims {
        self.dims
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn get(&self, cell: Cell) -> &T {
        &self.data[self.dims.index(cell)]
    }

    #[inline]
    pub fn set(&mut self, cell: Cell, value: T) {
        let i = self.dims.index(cell);
        self.data[i] = value;
    }

    pub fn map<U>(&self, f: impl Fn(&T) -> U) -> Raster<U> {
        Raster {
            dims: self.dims,
            data: self.data.iter().map(f).collect(),
        }
    }
}

impl<T> std::ops::Index<Cell> for Raster<T> {
    type Output = T;

    fn index(&self, cell: Cell) -> &T {
        self.get(cell)
    }
}

impl<T> std::ops::IndexMut<Cell> for Raster<T> {
    fn index_mut(&mut self, cell: Cell) -> &mut T {
        let i = self.dims.index(cell);
        &mut self.data[i]
    }
}

impl Raster<bool> {
    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn any(&self) -> bool {
        self.data.iter().any(|&b| b)
    }

    pub fn set_cells(&self) -> impl Iterator<Item = Cell> + '_ {
        self.data
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| self.dims.cell(i))
    }

    pub fn and_not(&self, other: &Mask) -> Mask {
        assert_eq!(self.dims, other.dims);
        Raster {
            dims: self.dims,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| a && !b)
                .collect(),
        }
    }

    pub fn is_subset_of(&self, other: &Mask) -> bool {
        self.data.iter().zip(&other.data).all(|(&a, &b)| !a || b)
    }
}

/// A metric grid anchored at the world origin: cell `(x, y)` covers
/// `[x / resolution, (x + 1) / resolution)` along x, and likewise along y.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MapGrid {
    pub dims: GridDims,
    /// Cells per meter.
    pub resolution: f64,
}

impl MapGrid {
    pub fn new(dims: GridDims, resolution: f64) -> Self {
        Self { dims, resolution }
    }

    pub fn cell_size(&self) -> f64 {
        1.0 / self.resolution
    }

    pub fn extent_x(&self) -> f64 {
        self.dims.nx as f64 / self.resolution
    }

    pub fn extent_y(&self) -> f64 {
        self.dims.ny as f64 / self.resolution
    }

    pub fn cell_at(&self, x: f64, y: f64) -> Option<Cell> {
        if !(x.is_finite() && y.is_finite()) {
            return None;
        }
        let cx = (x * self.resolution).floor();
        let cy = (y * self.resolution).floor();
        if cx < 0.0 || cy < 0.0 {
            return None;
        }
        self.dims.checked_cell(cx as i64, cy as i64)
    }

    pub fn center(&self, cell: Cell) -> (f64, f64) {
        (
            (cell.x as f64 + 0.5) / self.resolution,
            (cell.y as f64 + 0.5) / self.resolution,
        )
    }
}

/// Visits the cells crossed by the segment `(x0, y0) → (x1, y1)` in order
/// (exact grid traversal). Stops early when `visit` returns `false` or the
/// segment leaves the grid.
pub fn traverse_segment(
    grid: &MapGrid,
    (x0, y0): (f64, f64),
    (x1, y1): (f64, f64),
    mut visit: impl FnMut(Cell) -> bool,
) {
    let res = grid.resolution;
    let (gx0, gy0, gx1, gy1) = (x0 * res, y0 * res, x1 * res, y1 * res);
    let (mut cx, mut cy) = (gx0.floor() as i64, gy0.floor() as i64);
    let (ex, ey) = (gx1.floor() as i64, gy1.floor() as i64);
    let (dx, dy) = (gx1 - gx0, gy1 - gy0);
    let step_x = if dx > 0.0 { 1 } else { -1 };
    let step_y = if dy > 0.0 { 1 } else { -1 };
    let t_delta_x = if dx != 0.0 { (1.0 / dx).abs() } else { f64::INFINITY };
    let t_delta_y = if dy != 0.0 { (1.0 / dy).abs() } else { f64::INFINITY };
    let mut t_max_x = if dx > 0.0 {
        ((cx + 1) as f64 - gx0) / dx
    } else if dx < 0.0 {
        (cx as f64 - gx0) / dx
    } else {
        f64::INFINITY
    };
    let mut t_max_y = if dy > 0.0 {
        ((cy + 1) as f64 - gy0) / dy
    } else if dy < 0.0 {
        (cy as f64 - gy0) / dy
    } else {
        f64::INFINITY
    };
    loop {
        let Some(cell) = grid.dims.checked_cell(cx, cy) else {
            return;
        };
        if !visit(cell) || (cx == ex && cy == ey) {
            return;
        }
        if t_max_x < t_max_y {
            if t_max_x > 1.0 {
                return;
            }
            cx += step_x;
            t_max_x += t_delta_x;
        } else {
            if t_max_y > 1.0 {
                return;
            }
            cy += step_y;
            t_max_y += t_delta_y;
        }
    }
}

/// 8-connected flood fill of `mask` from `seeds` (seeds outside the mask are
/// ignored). Returned cells are sorted row-major.
pub fn flood_fill8(mask: &Mask, seeds: impl IntoIterator<Item = Cell>) -> Vec<Cell> {
    let dims = mask.dims();
    let mut seen = vec![false; dims.len()];
    let mut queue = std::collections::VecDeque::new();
    for s in seeds {
        if dims.contains(s) && mask[s] && !seen[dims.index(s)] {
            seen[dims.index(s)] = true;
            queue.push_back(s);
        }
    }
    let mut out = Vec::new();
    while let Some(c) = queue.pop_front() {
        out.push(c);
        for n in dims.neighbors8(c) {
            let i = dims.index(n);
            if mask[n] && !seen[i] {
                seen[i] = true;
                queue.push_back(n);
            }
        }
    }
    out.sort_unstable();
    out
}

/// 8-connected components of `mask`, each sorted row-major, ordered by their
/// first cell.
pub fn components8(mask: &Mask) -> Vec<Vec<Cell>> {
    let dims = mask.dims();
    let mut seen = vec![false; dims.len()];
    let mut out = Vec::new();
    for i in 0..dims.len() {
        if !mask.data()[i] || seen[i] {
            continue;
        }
        let mut comp = Vec::new();
        let mut stack = vec![dims.cell(i)];
        seen[i] = true;
        while let Some(c) = stack.pop() {
            comp.push(c);
            for n in dims.neighbors8(c) {
                let j = dims.index(n);
                if mask.data()[j] && !seen[j] {
                    seen[j] = true;
                    stack.push(n);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// Offsets of a disc of `radius` cells (center-to-center distance ≤ radius).
pub fn disc_offsets(radius: f64) -> Vec<(i64, i64)> {
    let r = radius.max(0.0).floor() as i64;
    let r2 = radius * radius;
    let mut out = Vec::new();
    for dy in -r..=r {
        for dx in -r..=r {
            if ((dx * dx + dy * dy) as f64) <= r2 + 1e-9 {
                out.push((dx, dy));
            }
        }
    }
    out
}

/// Morphological dilation of `mask` by a disc of `radius` cells.
pub fn dilate(mask: &Mask, radius: f64) -> Mask {
    let dims = mask.dims();
    let offsets = disc_offsets(radius);
    let mut out = Raster::filled(dims, false);
    for c in mask.set_cells() {
        for &(dx, dy) in &offsets {
            if let Some(n) = dims.offset(c, dx, dy) {
                out[n] = true;
            }
        }
    }
    out
}

/// Component id per cell (8-connected) for set cells of `mask`, in the order
/// of [`components8`].
pub fn label_components8(mask: &Mask) -> (Raster<Option<u32>>, usize) {
    let comps = components8(mask);
    let mut labels = Raster::filled(mask.dims(), None);
    for (k, comp) in comps.iter().enumerate() {
        for &c in comp {
            labels[c] = Some(k as u32);
        }
    }
    (labels, comps.len())
}

/// Two-pass chamfer distance (in cells, steps of 1 and √2) from every cell
/// to the nearest set cell of `mask`; infinite when the mask is empty.
pub fn chamfer_distance(mask: &Mask) -> Raster<f32> {
    let dims = mask.dims();
    let (nx, ny) = (dims.nx, dims.ny);
    let mut d: Vec<f32> = mask.data().iter().map(|&m| if m { 0.0 } else { f32::INFINITY }).collect();
    let diag = std::f32::consts::SQRT_2;
    for y in 0..ny {
        for x in 0..nx {
            let i = y * nx + x;
            let mut v = d[i];
            if x > 0 {
                v = v.min(d[i - 1] + 1.0);
            }
            if y > 0 {
                v = v.min(d[i - nx] + 1.0);
                if x > 0 {
                    v = v.min(d[i - nx - 1] + diag);
                }
                if x + 1 < nx {
                    v = v.min(d[i - nx + 1] + diag);
                }
            }
            d[i] = v;
        }
    }
    for y in (0..ny).rev() {
        for x in (0..nx).rev() {
            let i = y * nx + x;
            let mut v = d[i];
            if x + 1 < nx {
                v = v.min(d[i + 1] + 1.0);
            }
            if y + 1 < ny {
                v = v.min(d[i + nx] + 1.0);
                if x + 1 < nx {
                    v = v.min(d[i + nx + 1] + diag);
                }
                if x > 0 {
                    v = v.min(d[i + nx - 1] + diag);
                }
            }
            d[i] = v;
        }
    }
    Raster::from_vec(dims, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_roundtrip_is_row_major() {
        let dims = GridDims::new(4, 3);
        assert_eq!(dims.index(Cell::new(1, 2)), 9);
        assert_eq!(dims.cell(9), Cell::new(1, 2));
        assert!(Cell::new(3, 0) < Cell::new(0, 1));
    }

    #[test]
    fn traversal_visits_every_crossed_cell() {
        let g = MapGrid::new(GridDims::new(10, 10), 1.0);
        let mut cells = Vec::new();
        traverse_segment(&g, (0.5, 0.5), (3.5, 1.5), |c| {
            cells.push(c);
            true
        });
        assert_eq!(cells.first(), Some(&Cell::new(0, 0)));
        assert_eq!(cells.last(), Some(&Cell::new(3, 1)));
        for w in cells.windows(2) {
            assert_eq!(w[0].x.abs_diff(w[1].x) + w[0].y.abs_diff(w[1].y), 1);
        }
    }

    #[test]
    fn dilation_by_one_cell_is_a_plus() {
        let dims = GridDims::new(5, 5);
        let mut m = Raster::filled(dims, false);
        m[Cell::new(2, 2)] = true;
        let d = dilate(&m, 1.0);
        assert_eq!(d.count(), 5);
        assert_eq!(dilate(&m, 1.5).count(), 9);
        assert_eq!(dilate(&m, 0.0).count(), 1);
    }

    #[test]
    fn chamfer_counts_octile_steps() {
        let dims = GridDims::new(6, 4);
        let mut m = Raster::filled(dims, false);
        m[Cell::new(0, 0)] = true;
        let d = chamfer_distance(&m);
        assert_eq!(d[Cell::new(3, 0)], 3.0);
        assert!((d[Cell::new(5, 3)] - (2.0 + 3.0 * std::f32::consts::SQRT_2)).abs() < 1e-5);
        assert!(chamfer_distance(&Raster::filled(dims, false))[Cell::new(1, 1)].is_infinite());
    }

    #[test]
    fn components_split_on_gaps() {
        let dims = GridDims::new(5, 1);
        let mask = Raster::from_vec(dims, vec![true, true, false, true, false]);
        let comps = components8(&mask);
        assert_eq!(comps.len(), 2);
        assert_eq!(flood_fill8(&mask, [Cell::new(3, 0)]), vec![Cell::new(3, 0)]);
    }

    #[test]
    fn neighbors_clip_at_border() {
        let dims = GridDims::new(3, 3);
        assert_eq!(dims.neighbors8(Cell::new(0, 0)).count(), 3);
        assert_eq!(dims.neighbors8(Cell::new(1, 1)).count(), 8);
    }
}
