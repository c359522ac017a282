//! Back-projection of pixel features into map cells and per-cell aggregation.

use std::collections::BTreeMap;

use super::variance::PixelVariances;
use crate::embedding::FeatureFrame;
use crate::error::{invalid, Result};
use crate::grid::{Cell, MapGrid};
use crate::observation::PosedObservation;

/// Aggregated evidence for one map cell from a single frame.
#[derive(Debug, Clone, PartialEq)]
pub struct CellUpdate {
    pub cell: Cell,
    pub feature: Vec<f32>,
    pub variance: f32,
    /// Planar distance from the camera to the cell centre, meters.
    pub camera_distance: f32,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Aggregation {
    /// Sorted by row-major cell index.
    pub updates: Vec<CellUpdate>,
    /// Valid pixels that landed outside the map.
    pub discarded: usize,
}

struct Accumulator {
    weighted: Vec<f64>,
    weight: f64,
    variance_sum: f64,
    count: usize,
}

/// Projects every usable pixel to the floor plane and combines pixels that
/// share a cell. Features are combined with inverse-variance weights (or
/// variance-proportional weights when `literal_variance_weights` is set);
/// variances are averaged.
pub fn project_and_aggregate(
    grid: &MapGrid,
    obs: &PosedObservation,
    pixel_features: &FeatureFrame,
    variances: &PixelVariances,
    literal_variance_weights: bool,
) -> Result<Aggregation> {
    obs.check_shape()?;
    let (h, w) = (obs.height(), obs.width());
    if pixel_features.height != h || pixel_features.width != w {
        return Err(invalid(format!(
            "pixel features are {}x{}, image is {h}x{w}",
            pixel_features.height, pixel_features.width
        )));
    }
    if variances.height != h || variances.width != w {
        return Err(invalid("variance field does not match the image"));
    }
    let dim = pixel_features.dim;

    let mut cells: BTreeMap<usize, Accumulator> = BTreeMap::new();
    let mut discarded = 0;
    for i in 0..h {
        for j in 0..w {
            let Some(var) = variances.get(i, j) else {
                continue;
            };
            let Some(p) = obs.unproject(i, j) else {
                continue;
            };
            let Some(cell) = grid.cell_at(p.x, p.y) else {
                discarded += 1;
                continue;
            };
            let var = var as f64;
            let weight = if literal_variance_weights { var } else { 1.0 / var };
            let acc = cells
                .entry(grid.dims.index(cell))
                .or_insert_with(|| Accumulator {
                    weighted: vec![0.0; dim],
                    weight: 0.0,
                    variance_sum: 0.0,
                    count: 0,
                });
            for (a, &f) in acc.weighted.iter_mut().zip(pixel_features.get(i, j)) {
                *a += weight * f as f64;
            }
            acc.weight += weight;
            acc.variance_sum += var;
            acc.count += 1;
        }
    }

    let updates = cells
        .into_iter()
        .map(|(index, acc)| {
            let cell = grid.dims.cell(index);
            let (cx, cy) = grid.center(cell);
            CellUpdate {
                cell,
                feature: acc
                    .weighted
                    .iter()
                    .map(|&v| (v / acc.weight) as f32)
                    .collect(),
                variance: (acc.variance_sum / acc.count as f64) as f32,
                camera_distance: obs.pose.distance_to(cx, cy) as f32,
            }
        })
        .collect();
    Ok(Aggregation { updates, discarded })
}
