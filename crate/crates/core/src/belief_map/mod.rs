//! The open-vocabulary belief map: a grid of fused feature vectors with a
//! fusion variance and a resettable search variance per cell.
//!
//! Updates run through four stages, each exposed on its own so they can be
//! tested and chained by hand: [`variance::compute_pixel_variances`] →
//! [`projection::project_and_aggregate`] → [`blur::spatial_blur`] →
//! [`fusion::bayesian_fuse`]. [`pipeline::MapUpdater`] composes them.

pub mod blur;
pub mod export;
pub mod fusion;
pub mod pipeline;
pub mod projection;
pub mod variance;

use crate::error::{invalid, Result};
use crate::grid::{Cell, GridDims, MapGrid, Mask, Raster};

pub use blur::{spatial_blur, BlurParams, BlurredCell, BlurredField};
pub use fusion::bayesian_fuse;
pub use pipeline::{MapUpdater, MappingParams};
pub use projection::{project_and_aggregate, Aggregation, CellUpdate};
pub use variance::{compute_pixel_variances, FeatureVarianceForm, PixelVariances, VarianceParams};

/// Bytes per stored scalar (features and variances are `f32`).
pub const SCALAR_SIZE: usize = std::mem::size_of::<f32>();

#[derive(Debug, Clone, PartialEq)]
pub struct BeliefMap {
    grid: MapGrid,
    feature_dim: usize,
    prior_variance: f32,
    features: Vec<f32>,
    sigma2: Vec<f32>,
    sigma2_search: Vec<f32>,
    observed: Vec<bool>,
}

/// Number of cells needed to cover `extent` meters at `resolution` cells/m.
pub fn cells_for_extent(extent: f64, resolution: f64) -> usize {
    ((extent * resolution) - 1e-9).ceil().max(1.0) as usize
}

impl BeliefMap {
    /// Creates an unobserved map covering `extent_x × extent_y` meters.
    pub fn new(
        extent_x: f64,
        extent_y: f64,
        resolution: f64,
        feature_dim: usize,
        prior_variance: f64,
    ) -> Result<Self> {
        for (name, v) in [
            ("extent_x", extent_x),
            ("extent_y", extent_y),
            ("resolution", resolution),
            ("prior_variance", prior_variance),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(format!("{name} must be positive, got {v}")));
            }
        }
        let dims = GridDims::new(
            cells_for_extent(extent_x, resolution),
            cells_for_extent(extent_y, resolution),
        );
        Self::with_grid(MapGrid::new(dims, resolution), feature_dim, prior_variance)
    }

    pub fn with_grid(grid: MapGrid, feature_dim: usize, prior_variance: f64) -> Result<Self> {
        if feature_dim == 0 {
            return Err(invalid("feature_dim must be positive"));
        }
        if grid.dims.is_empty() || !(grid.resolution > 0.0) {
            return Err(invalid("map grid must be non-empty with positive resolution"));
        }
        if !(prior_variance.is_finite() && prior_variance > 0.0) {
            return Err(invalid("prior_variance must be positive"));
        }
        let n = grid.dims.len();
        let prior = prior_variance as f32;
        Ok(Self {
            grid,
            feature_dim,
            prior_variance: prior,
            features: vec![0.0; n * feature_dim],
            sigma2: vec![prior; n],
            sigma2_search: vec![prior; n],
            observed: vec![false; n],
        })
    }

    /// Rebuilds a map from its raw layers (used when loading saved state).
    pub fn from_parts(
        grid: MapGrid,
        feature_dim: usize,
        prior_variance: f32,
        features: Vec<f32>,
        sigma2: Vec<f32>,
        sigma2_search: Vec<f32>,
        observed: Vec<bool>,
    ) -> Result<Self> {
        let n = grid.dims.len();
        if features.len() != n * feature_dim
            || sigma2.len() != n
            || sigma2_search.len() != n
            || observed.len() != n
        {
            return Err(invalid("belief map layer sizes do not match the grid"));
        }
        Ok(Self {
            grid,
            feature_dim,
            prior_variance,
            features,
            sigma2,
            sigma2_search,
            observed,
        })
    }

    pub fn grid(&self) -> &MapGrid {
        &self.grid
    }

    pub fn dims(&self) -> GridDims {
        self.grid.dims
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn prior_variance(&self) -> f32 {
        self.prior_variance
    }

    pub fn feature(&self, cell: Cell) -> &[f32] {
        let i = self.grid.dims.index(cell) * self.feature_dim;
        &self.features[i..i + self.feature_dim]
    }

    pub fn variance(&self, cell: Cell) -> f32 {
        self.sigma2[self.grid.dims.index(cell)]
    }

    pub fn search_variance(&self, cell: Cell) -> f32 {
        self.sigma2_search[self.grid.dims.index(cell)]
    }

    pub fn is_observed(&self, cell: Cell) -> bool {
        self.observed[self.grid.dims.index(cell)]
    }

    pub fn features_raw(&self) -> &[f32] {
        &self.features
    }

    pub fn variances_raw(&self) -> &[f32] {
        &self.sigma2
    }

    pub fn search_variances_raw(&self) -> &[f32] {
        &self.sigma2_search
    }

    pub fn observed_raw(&self) -> &[bool] {
        &self.observed
    }

    pub fn observed_mask(&self) -> Mask {
        Raster::from_vec(self.grid.dims, self.observed.clone())
    }

    pub fn variance_raster(&self) -> Raster<f32> {
        Raster::from_vec(self.grid.dims, self.sigma2.clone())
    }

    pub fn search_variance_raster(&self) -> Raster<f32> {
        Raster::from_vec(self.grid.dims, self.sigma2_search.clone())
    }

    /// Cosine similarity between `query` and every cell's fused feature.
    /// Cells where either vector has zero norm score 0.
    pub fn query_similarity(&self, query: &[f32]) -> Result<Raster<f32>> {
        if query.len() != self.feature_dim {
            return Err(invalid(format!(
                "query has dimension {}, map features have {}",
                query.len(),
                self.feature_dim
            )));
        }
        let qn = norm(query);
        let out = self
            .features
            .chunks_exact(self.feature_dim)
            .map(|f| {
                let fnorm = norm(f);
                if qn == 0.0 || fnorm == 0.0 {
                    return 0.0;
                }
                let dot: f64 = f
                    .iter()
                    .zip(query)
                    .map(|(&a, &b)| a as f64 * b as f64)
                    .sum();
                (dot / (qn * fnorm)).clamp(-1.0, 1.0) as f32
            })
            .collect();
        Ok(Raster::from_vec(self.grid.dims, out))
    }

    /// Restores the search variance to the prior everywhere. Features, fusion
    /// variance and the observed mask are untouched.
    pub fn reset_search_layer(&mut self) {
        self.sigma2_search.fill(self.prior_variance);
    }

    /// Estimated storage for an `nx × ny` map with `feature_dim` features:
    /// features plus two variance layers at `scalar_size` bytes each, and one
    /// byte per cell for the observed mask.
    pub fn memory_estimate_bytes(nx: usize, ny: usize, feature_dim: usize, scalar_size: usize) -> u64 {
        let cells = nx as u64 * ny as u64;
        cells * (feature_dim as u64 + 2) * scalar_size as u64 + cells
    }

    pub fn memory_estimate(&self) -> u64 {
        Self::memory_estimate_bytes(
            self.grid.dims.nx,
            self.grid.dims.ny,
            self.feature_dim,
            SCALAR_SIZE,
        )
    }

    /// Recursive Bayesian update of one cell with an observation of
    /// variance `obs_variance` (already clamped by the caller).
    pub(crate) fn fuse_index(&mut self, index: usize, feature: &[f32], obs_variance: f64) {
        let prior = self.sigma2[index] as f64;
        let gain = prior / (obs_variance + prior);
        let base = index * self.feature_dim;
        for (stored, &seen) in self.features[base..base + self.feature_dim]
            .iter_mut()
            .zip(feature)
        {
            let f = *stored as f64;
            *stored = (f + gain * (seen as f64 - f)) as f32;
        }
        self.sigma2[index] = ((1.0 - gain) * prior) as f32;

        let search = self.sigma2_search[index] as f64;
        let search_gain = search / (obs_variance + search);
        self.sigma2_search[index] = ((1.0 - search_gain) * search) as f32;
        self.observed[index] = true;
    }
}

pub(crate) fn norm(v: &[f32]) -> f64 {
    v.iter().map(|&x| x as f64 * x as f64).sum::<f64>().sqrt()
}
