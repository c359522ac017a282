//! Geometric free/occupied bookkeeping from depth, feeding the navigable
//! sub-map.

use serde::{Deserialize, Serialize};

use crate::grid::{dilate, disc_offsets, traverse_segment, Cell, MapGrid, Mask, Raster};
use crate::observation::PosedObservation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OccupancyState {
    Unknown,
    Free,
    Occupied,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OccupancyParams {
    /// Points higher than this above the floor are obstacles (meters).
    pub obstacle_height: f64,
    /// Disc around the agent that is known free (meters): the agent's own
    /// body, which the camera cannot see.
    pub footprint_radius: f64,
}

impl Default for OccupancyParams {
    fn default() -> Self {
        Self {
            obstacle_height: 0.1,
            footprint_radius: 0.2,
        }
    }
}

/// Occupied is sticky: once a cell is seen as an obstacle it never turns free.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    grid: MapGrid,
    state: Raster<OccupancyState>,
}

impl OccupancyGrid {
    pub fn new(grid: MapGrid) -> Self {
        Self {
            grid,
            state: Raster::filled(grid.dims, OccupancyState::Unknown),
        }
    }

    pub fn from_states(grid: MapGrid, state: Raster<OccupancyState>) -> Self {
        assert_eq!(grid.dims, state.dims());
        Self { grid, state }
    }

    pub fn grid(&self) -> &MapGrid {
        &self.grid
    }

    pub fn state(&self, cell: Cell) -> OccupancyState {
        self.state[cell]
    }

    pub fn states(&self) -> &Raster<OccupancyState> {
        &self.state
    }

    pub fn mark_free(&mut self, cell: Cell) {
        if self.state[cell] == OccupancyState::Unknown {
            self.state[cell] = OccupancyState::Free;
        }
    }

    pub fn mark_occupied(&mut self, cell: Cell) {
        self.state[cell] = OccupancyState::Occupied;
    }

    pub fn free_mask(&self) -> Mask {
        self.state.map(|s| *s == OccupancyState::Free)
    }

    pub fn occupied_mask(&self) -> Mask {
        self.state.map(|s| *s == OccupancyState::Occupied)
    }

    /// Free cells farther than `radius` meters from every occupied cell.
    pub fn navigable(&self, radius: f64) -> Mask {
        let blocked = dilate(&self.occupied_mask(), radius * self.grid.resolution);
        let mut nav = self.free_mask();
        for (n, b) in nav.data_mut().iter_mut().zip(blocked.data()) {
            *n &= !b;
        }
        nav
    }

    /// Marks the disc of `radius` meters around `(x, y)` free.
    pub fn clear_footprint(&mut self, x: f64, y: f64, radius: f64) {
        let Some(centre) = self.grid.cell_at(x, y) else {
            return;
        };
        for (dx, dy) in disc_offsets(radius * self.grid.resolution) {
            if let Some(c) = self.grid.dims.offset(centre, dx, dy) {
                self.mark_free(c);
            }
        }
    }

    /// Classifies every valid pixel as floor or obstacle and frees the cells
    /// each image column's ray crosses before its farthest return.
    pub fn integrate(&mut self, obs: &PosedObservation, params: &OccupancyParams) {
        let (h, w) = (obs.height(), obs.width());
        // Push obstacle points a quarter cell into the surface they lie on so
        // that face hits bin into the struck cell.
        let nudge = 0.25 * self.grid.cell_size();
        let mut free_cells = Vec::new();
        for j in 0..w {
            let mut farthest: Option<(f64, f64, f64, bool)> = None;
            for i in 0..h {
                let Some(p) = obs.unproject(i, j) else {
                    continue;
                };
                let (dx, dy) = (p.x - obs.pose.x, p.y - obs.pose.y);
                let range = dx.hypot(dy);
                let obstacle = p.z > params.obstacle_height;
                let (mut px, mut py) = (p.x, p.y);
                if obstacle && range > 0.0 {
                    px += dx / range * nudge;
                    py += dy / range * nudge;
                }
                if let Some(cell) = self.grid.cell_at(px, py) {
                    if obstacle {
                        self.mark_occupied(cell);
                    } else {
                        free_cells.push(cell);
                    }
                }
                if farthest.is_none_or(|f| range > f.0) {
                    farthest = Some((range, px, py, obstacle));
                }
            }
            let Some((_, ex, ey, obstacle)) = farthest else {
                continue;
            };
            let end = self.grid.cell_at(ex, ey);
            traverse_segment(&self.grid, (obs.pose.x, obs.pose.y), (ex, ey), |c| {
                if obstacle && Some(c) == end {
                    return false;
                }
                free_cells.push(c);
                true
            });
        }
        for c in free_cells {
            self.mark_free(c);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridDims;

    #[test]
    fn occupied_is_sticky_and_blocks_navigation() {
        let mut occ = OccupancyGrid::new(MapGrid::new(GridDims::new(10, 10), 10.0));
        occ.clear_footprint(0.5, 0.5, 0.3);
        let c = Cell::new(5, 5);
        assert_eq!(occ.state(c), OccupancyState::Free);
        occ.mark_occupied(c);
        occ.mark_free(c);
        assert_eq!(occ.state(c), OccupancyState::Occupied);
        let nav = occ.navigable(0.1);
        assert!(!nav[c] && !nav[Cell::new(5, 6)] && !nav[Cell::new(6, 5)]);
        assert!(nav[Cell::new(6, 6)]);
        assert!(!nav[Cell::new(0, 0)], "unknown cells are not navigable");
    }
}
