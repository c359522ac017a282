use serde::{Deserialize, Serialize};

use super::blur::{spatial_blur, BlurParams};
use super::fusion::bayesian_fuse;
use super::projection::project_and_aggregate;
use super::variance::{compute_pixel_variances, VarianceParams};
use super::BeliefMap;
use crate::embedding::{upsample_bilinear, FeatureFrame};
use crate::error::{invalid, Result};
use crate::observation::PosedObservation;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct MappingParams {
    pub variance: VarianceParams,
    pub blur: BlurParams,
    /// Weight pixel features by their variance instead of its inverse.
    pub literal_variance_weights: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct IntegrationStats {
    pub cell_updates: usize,
    pub fused_cells: usize,
    pub discarded_pixels: usize,
}

/// Runs the full update for one posed frame: upsample → pixel variances →
/// projection → spatial blur → fusion.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MapUpdater {
    pub params: MappingParams,
}

impl MapUpdater {
    pub fn new(params: MappingParams) -> Self {
        Self { params }
    }

    pub fn integrate_observation(
        &self,
        map: &mut BeliefMap,
        obs: &PosedObservation,
        frame: &FeatureFrame,
    ) -> Result<IntegrationStats> {
        obs.check_shape()?;
        if frame.dim != map.feature_dim() {
            return Err(invalid(format!(
                "frame features have dimension {}, map has {}",
                frame.dim,
                map.feature_dim()
            )));
        }
        let pixels = upsample_bilinear(frame, obs.height(), obs.width())?;
        let variances = compute_pixel_variances(
            &obs.depth,
            &obs.valid,
            obs.height(),
            obs.width(),
            &self.params.variance,
        )?;
        let agg = project_and_aggregate(
            map.grid(),
            obs,
            &pixels,
            &variances,
            self.params.literal_variance_weights,
        )?;
        let blurred = spatial_blur(map.grid(), &agg.updates, &self.params.blur);
        let fused = bayesian_fuse(map, &blurred, self.params.variance.eps_var)?;
        Ok(IntegrationStats {
            cell_updates: agg.updates.len(),
            fused_cells: fused,
            discarded_pixels: agg.discarded,
        })
    }
}
