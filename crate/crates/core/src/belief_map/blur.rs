//! Sparse, spatially varying Gaussian scatter of cell updates.
//!
//! Each update spreads over a disc around its cell with standard deviation
//! `sqrt(p) * d`, where `d` is the update's distance to the camera. The kernel
//! is truncated at `truncation` standard deviations (never below one cell)
//! and renormalised over the in-bounds support, so every update deposits unit
//! mass. Only cells that receive mass appear in the output.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::projection::CellUpdate;
use crate::grid::{Cell, MapGrid};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlurParams {
    /// Proportionality between squared camera distance and location variance.
    pub p: f64,
    /// Kernel radius in standard deviations.
    pub truncation: f64,
}

impl Default for BlurParams {
    fn default() -> Self {
        Self {
            p: 0.02,
            truncation: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlurredCell {
    pub cell: Cell,
    /// Weighted sum of the features scattered into this cell.
    pub feature: Vec<f32>,
    /// Weight-proportional mean of the scattered variances.
    pub variance: f32,
    /// Total kernel weight received.
    pub mass: f32,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BlurredField {
    /// Sorted by row-major cell index.
    pub cells: Vec<BlurredCell>,
}

impl BlurredField {
    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }
}

/// Kernel standard deviation in cells for an update at `distance` meters.
pub fn kernel_sigma_cells(grid: &MapGrid, distance: f64, p: f64) -> f64 {
    (p * distance * distance).sqrt() * grid.resolution
}

/// Normalised scatter weights of one update: `(cell, weight)` pairs in
/// row-major order summing to one.
pub fn scatter_weights(grid: &MapGrid, centre: Cell, distance: f64, params: &BlurParams) -> Vec<(Cell, f64)> {
    let sigma = kernel_sigma_cells(grid, distance, params.p);
    if !(sigma > 0.0) {
        return vec![(centre, 1.0)];
    }
    let reach = (params.truncation * sigma).max(1.0);
    let r = reach.floor() as i64;
    let two_var = 2.0 * sigma * sigma;
    let mut out = Vec::with_capacity(((2 * r + 1) * (2 * r + 1)) as usize);
    let mut total = 0.0;
    for dy in -r..=r {
        for dx in -r..=r {
            let d2 = (dx * dx + dy * dy) as f64;
            if d2 > reach * reach {
                continue;
            }
            let Some(cell) = grid.dims.offset(centre, dx, dy) else {
                continue;
            };
            let g = (-d2 / two_var).exp();
            if g > 0.0 {
                out.push((cell, g));
                total += g;
            }
        }
    }
    for (_, g) in &mut out {
        *g /= total;
    }
    out
}

struct Acc {
    feature: Vec<f64>,
    mass: f64,
    variance: f64,
}

/// Scatters every update with its own kernel and merges overlaps.
pub fn spatial_blur(grid: &MapGrid, updates: &[CellUpdate], params: &BlurParams) -> BlurredField {
    let Some(dim) = updates.first().map(|u| u.feature.len()) else {
        return BlurredField::default();
    };
    let mut slots: HashMap<usize, usize> = HashMap::new();
    let mut accs: Vec<(usize, Acc)> = Vec::new();
    for u in updates {
        for (cell, w) in scatter_weights(grid, u.cell, u.camera_distance as f64, params) {
            let index = grid.dims.index(cell);
            let slot = *slots.entry(index).or_insert_with(|| {
                accs.push((
                    index,
                    Acc {
                        feature: vec![0.0; dim],
                        mass: 0.0,
                        variance: 0.0,
                    },
                ));
                accs.len() - 1
            });
            let acc = &mut accs[slot].1;
            for (a, &f) in acc.feature.iter_mut().zip(&u.feature) {
                *a += w * f as f64;
            }
            acc.mass += w;
            acc.variance += w * u.variance as f64;
        }
    }
    accs.sort_unstable_by_key(|(i, _)| *i);
    BlurredField {
        cells: accs
            .into_iter()
            .map(|(index, acc)| BlurredCell {
                cell: grid.dims.cell(index),
                feature: acc.feature.iter().map(|&v| v as f32).collect(),
                variance: (acc.variance / acc.mass) as f32,
                mass: acc.mass as f32,
            })
            .collect(),
    }
}
