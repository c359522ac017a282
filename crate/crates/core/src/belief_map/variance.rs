//! Per-pixel observation variance from depth-edge leakage and distance to the
//! optimal detection range.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Upper bound on a pixel variance; keeps the exponential term finite in `f32`.
pub const MAX_PIXEL_VARIANCE: f64 = 1e30;

/// Which reading of the distance term to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FeatureVarianceForm {
    /// `exp(((d_opt - D) / 2)^2)`
    #[default]
    HalfErrorSquared,
    /// `exp((d_opt - D)^2 / 2)`
    SquaredErrorHalved,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceParams {
    /// Distance at which extracted features are most reliable, meters.
    pub d_opt: f64,
    /// Lower clamp on the combined pixel variance.
    pub eps_var: f64,
    pub form: FeatureVarianceForm,
}

impl Default for VarianceParams {
    fn default() -> Self {
        Self {
            d_opt: 2.5,
            eps_var: 1e-3,
            form: FeatureVarianceForm::HalfErrorSquared,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PixelVariances {
    pub height: usize,
    pub width: usize,
    pub variance: Vec<f32>,
    /// Pixels with invalid or zero depth; they carry no variance and are skipped.
    pub excluded: Vec<bool>,
}

impl PixelVariances {
    pub fn get(&self, i: usize, j: usize) -> Option<f32> {
        let k = i * self.width + j;
        (!self.excluded[k]).then_some(self.variance[k])
    }
}

/// Leakage term: `tanh(gx² + gy²)`.
pub fn leakage_variance(gx: f64, gy: f64) -> f64 {
    (gx * gx + gy * gy).tanh()
}

/// Distance term, growing away from `d_opt` in either direction.
pub fn feature_variance(depth: f64, params: &VarianceParams) -> f64 {
    let err = params.d_opt - depth;
    let exponent = match params.form {
        FeatureVarianceForm::HalfErrorSquared => (err / 2.0).powi(2),
        FeatureVarianceForm::SquaredErrorHalved => err * err / 2.0,
    };
    exponent.exp().min(MAX_PIXEL_VARIANCE)
}

/// Derivative of depth along one image axis at `k`, using only usable
/// neighbours: central when both exist, one-sided at borders or next to an
/// excluded pixel, zero when isolated.
fn axis_gradient(prev: Option<f64>, here: f64, next: Option<f64>) -> f64 {
    match (prev, next) {
        (Some(p), Some(n)) => (n - p) / 2.0,
        (None, Some(n)) => n - here,
        (Some(p), None) => here - p,
        (None, None) => 0.0,
    }
}

/// Computes `max(σ_L² · σ_F², eps_var)` for every usable pixel of a
/// `height × width` depth image. `valid` marks pixels the sensor returned.
pub fn compute_pixel_variances(
    depth: &[f32],
    valid: &[bool],
    height: usize,
    width: usize,
    params: &VarianceParams,
) -> Result<PixelVariances> {
    let n = height * width;
    if depth.len() != n || valid.len() != n {
        return Err(invalid(format!(
            "depth image has {} values for a {height}x{width} frame",
            depth.len()
        )));
    }
    if !(params.eps_var > 0.0) {
        return Err(invalid("eps_var must be positive"));
    }
    if let Some(d) = depth.iter().find(|d| **d < 0.0) {
        return Err(invalid(format!("negative depth {d}")));
    }

    let excluded: Vec<bool> = depth
        .iter()
        .zip(valid)
        .map(|(&d, &ok)| !ok || !(d > 0.0) || !d.is_finite())
        .collect();
    let usable = |i: usize, j: usize| -> Option<f64> {
        let k = i * width + j;
        (!excluded[k]).then(|| depth[k] as f64)
    };

    let mut variance = vec![0.0f32; n];
    for i in 0..height {
        for j in 0..width {
            let k = i * width + j;
            if excluded[k] {
                continue;
            }
            let d = depth[k] as f64;
            let gx = axis_gradient(
                j.checked_sub(1).and_then(|jj| usable(i, jj)),
                d,
                (j + 1 < width).then(|| usable(i, j + 1)).flatten(),
            );
            let gy = axis_gradient(
                i.checked_sub(1).and_then(|ii| usable(ii, j)),
                d,
                (i + 1 < height).then(|| usable(i + 1, j)).flatten(),
            );
            let v = leakage_variance(gx, gy) * feature_variance(d, params);
            variance[k] = v.clamp(params.eps_var, MAX_PIXEL_VARIANCE) as f32;
        }
    }

    Ok(PixelVariances {
        height,
        width,
        variance,
        excluded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> VarianceParams {
        VarianceParams::default()
    }

    #[test]
    fn flat_depth_at_optimum_clamps_to_eps() {
        let depth = vec![2.5f32; 9];
        let v = compute_pixel_variances(&depth, &[true; 9], 3, 3, &params()).unwrap();
        assert!(v.variance.iter().all(|&x| (x as f64 - 1e-3).abs() < 1e-9));
    }

    #[test]
    fn depth_step_matches_hand_tanh() {
        // columns 2.5 | 2.5 | 3.5 on every row; the centre pixel sees a
        // central difference of (3.5 - 2.5) / 2 = 0.5 horizontally, 0 vertically
        let row = [2.5f32, 2.5, 3.5];
        let depth: Vec<f32> = row.iter().cycle().take(9).copied().collect();
        let v = compute_pixel_variances(&depth, &[true; 9], 3, 3, &params()).unwrap();
        let expected_centre = (0.25f64).tanh(); // σ_F² = 1 at d_opt
        assert!((v.get(1, 1).unwrap() as f64 - expected_centre).abs() < 1e-6);
        // left border: one-sided 2.5 - 2.5 = 0 → clamped
        assert!((v.get(1, 0).unwrap() as f64 - 1e-3).abs() < 1e-9);
        // right border: one-sided 3.5 - 2.5 = 1 → tanh(1) · exp(0.25²)
        let direct = 1f64.tanh() * ((2.5f64 - 3.5) / 2.0).powi(2).exp();
        assert!((v.get(1, 2).unwrap() as f64 - direct).abs() < 1e-6);
    }

    #[test]
    fn distance_term_two_meters_past_optimum() {
        let p = params();
        assert!((feature_variance(4.5, &p) - std::f64::consts::E).abs() < 1e-12);
        let alt = VarianceParams {
            form: FeatureVarianceForm::SquaredErrorHalved,
            ..p
        };
        assert!((feature_variance(4.5, &alt) - 2f64.exp()).abs() < 1e-12);
    }

    #[test]
    fn invalid_and_zero_depth_are_excluded() {
        let depth = [2.0f32, 0.0, 2.0, 2.0];
        let valid = [true, true, false, true];
        let v = compute_pixel_variances(&depth, &valid, 1, 4, &params()).unwrap();
        assert_eq!(v.excluded, vec![false, true, true, false]);
        // isolated pixels get zero gradient
        assert!((v.variance[0] as f64 - 1e-3).abs() < 1e-9);
    }

    #[test]
    fn negative_depth_is_rejected() {
        assert!(compute_pixel_variances(&[-1.0], &[true], 1, 1, &params()).is_err());
    }

    #[test]
    fn single_row_has_no_vertical_term() {
        let depth = [2.5f32, 2.5, 2.5];
        let v = compute_pixel_variances(&depth, &[true; 3], 1, 3, &params()).unwrap();
        assert!(v.variance.iter().all(|&x| (x as f64 - 1e-3).abs() < 1e-9));
    }
}
