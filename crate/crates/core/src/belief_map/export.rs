//! Grayscale raster export with a JSON sidecar.
//!
//! Images put +y at the top, so row 0 of the image is the map's last row.

use std::path::{Path, PathBuf};

use image::GrayImage;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::grid::{Mask, Raster};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layer {
    Similarity,
    Variance,
    SearchVariance,
    Observed,
    Explored,
    Searched,
    Navigable,
}

impl Layer {
    pub const ALL: [Layer; 7] = [
        Layer::Similarity,
        Layer::Variance,
        Layer::SearchVariance,
        Layer::Observed,
        Layer::Explored,
        Layer::Searched,
        Layer::Navigable,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Layer::Similarity => "similarity",
            Layer::Variance => "variance",
            Layer::SearchVariance => "search_variance",
            Layer::Observed => "observed",
            Layer::Explored => "explored",
            Layer::Searched => "searched",
            Layer::Navigable => "navigable",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|l| l.name() == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotMeta {
    pub layer: Layer,
    pub extent_x: f64,
    pub extent_y: f64,
    pub resolution: f64,
    pub nx: usize,
    pub ny: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub query: Option<String>,
    /// Raster value mapped to black.
    pub value_min: f64,
    /// Raster value mapped to white.
    pub value_max: f64,
}

/// Linear min–max scaling to 0..=255. A constant raster renders black.
pub fn scalar_image(raster: &Raster<f32>) -> (GrayImage, f64, f64) {
    let (lo, hi) = raster
        .data()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v as f64), hi.max(v as f64))
        });
    let (lo, hi) = if lo.is_finite() { (lo, hi) } else { (0.0, 0.0) };
    let span = hi - lo;
    let dims = raster.dims();
    let img = GrayImage::from_fn(dims.nx as u32, dims.ny as u32, |px, py| {
        let cell = crate::grid::Cell::new(px as usize, dims.ny - 1 - py as usize);
        let v = raster[cell] as f64;
        let level = if span > 0.0 { (v - lo) / span * 255.0 } else { 0.0 };
        image::Luma([level.round().clamp(0.0, 255.0) as u8])
    });
    (img, lo, hi)
}

/// Set cells white, others black.
pub fn mask_image(mask: &Mask) -> GrayImage {
    let dims = mask.dims();
    GrayImage::from_fn(dims.nx as u32, dims.ny as u32, |px, py| {
        let cell = crate::grid::Cell::new(px as usize, dims.ny - 1 - py as usize);
        image::Luma([if mask[cell] { 255 } else { 0 }])
    })
}

/// `<image>.json` next to the image.
pub fn sidecar_path(image_path: &Path) -> PathBuf {
    let mut name = image_path.as_os_str().to_owned();
    name.push(".json");
    PathBuf::from(name)
}

/// Writes the PNG and its sidecar; returns the sidecar path.
pub fn write_snapshot(image_path: &Path, img: &GrayImage, meta: &SnapshotMeta) -> Result<PathBuf> {
    img.save_with_format(image_path, image::ImageFormat::Png)?;
    let sidecar = sidecar_path(image_path);
    std::fs::write(&sidecar, serde_json::to_string_pretty(meta)? + "\n")?;
    Ok(sidecar)
}
