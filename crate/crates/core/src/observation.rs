//! Posed camera observations: a depth image with intrinsics and a planar pose.
//!
//! Camera frame follows the usual pinhole convention: `+x` right, `+y` down,
//! `+z` forward along the optical axis. The camera is mounted level at a fixed
//! height above the floor and rotates only about the vertical axis.

use serde::{Deserialize, Serialize};

use crate::grid::Cell;

/// Planar pose in world coordinates; heading in radians, counter-clockwise from +x.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose2 {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

impl Pose2 {
    pub const fn new(x: f64, y: f64, heading: f64) -> Self {
        Self { x, y, heading }
    }

    pub fn distance_to(&self, x: f64, y: f64) -> f64 {
        (self.x - x).hypot(self.y - y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Intrinsics {
    pub width: usize,
    pub height: usize,
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

impl Intrinsics {
    /// Square pixels with the given horizontal field of view. `horizon_row` is
    /// the (continuous) row coordinate of the optical axis.
    pub fn from_hfov(width: usize, height: usize, hfov: f64, horizon_row: f64) -> Self {
        let fx = (width as f64 / 2.0) / (hfov / 2.0).tan();
        Self {
            width,
            height,
            fx,
            fy: fx,
            cx: width as f64 / 2.0,
            cy: horizon_row,
        }
    }

    pub fn hfov(&self) -> f64 {
        2.0 * (self.width as f64 / 2.0 / self.fx).atan()
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Ray slope `(X/Z, Y/Z)` through the center of pixel `(i, j)` (row, column).
    #[inline]
    pub fn pixel_slope(&self, i: usize, j: usize) -> (f64, f64) {
        (
            (j as f64 + 0.5 - self.cx) / self.fx,
            (i as f64 + 0.5 - self.cy) / self.fy,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

/// One posed frame. `depth` holds optical-axis depth in meters, row-major
/// `height × width`; pixels with `valid == false` (censored at max range or
/// missing) never take part in map updates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosedObservation {
    pub pose: Pose2,
    pub camera_height: f64,
    pub intrinsics: Intrinsics,
    pub max_range: f64,
    pub depth: Vec<f32>,
    pub valid: Vec<bool>,
    /// Per-pixel semantic label id of the struck surface (simulator only).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub hit_labels: Vec<u16>,
    /// Per-pixel struck grid cell (simulator only).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub hit_cells: Vec<Option<Cell>>,
}

impl PosedObservation {
    pub fn width(&self) -> usize {
        self.intrinsics.width
    }

    pub fn height(&self) -> usize {
        self.intrinsics.height
    }

    pub fn fov(&self) -> f64 {
        self.intrinsics.hfov()
    }

    #[inline]
    pub fn is_valid(&self, i: usize, j: usize) -> bool {
        let k = i * self.width() + j;
        self.valid[k] && self.depth[k] > 0.0 && self.depth[k].is_finite()
    }

    /// World-frame 3D point of pixel `(i, j)`; `z` is height above the floor.
    pub fn unproject(&self, i: usize, j: usize) -> Option<Point3> {
        if !self.is_valid(i, j) {
            return None;
        }
        let d = self.depth[i * self.width() + j] as f64;
        let (sx, sy) = self.intrinsics.pixel_slope(i, j);
        let right = sx * d;
        let down = sy * d;
        let (sin, cos) = self.pose.heading.sin_cos();
        Some(Point3 {
            x: self.pose.x + d * cos + right * sin,
            y: self.pose.y + d * sin - right * cos,
            z: self.camera_height - down,
        })
    }

    pub fn check_shape(&self) -> crate::Result<()> {
        let n = self.intrinsics.len();
        if n == 0 {
            return Err(crate::error::invalid("observation has no pixels"));
        }
        if self.depth.len() != n || self.valid.len() != n {
            return Err(crate::error::invalid(format!(
                "depth/valid length {} / {} does not match {}x{} image",
                self.depth.len(),
                self.valid.len(),
                self.intrinsics.height,
                self.intrinsics.width
            )));
        }
        if self.intrinsics.fx <= 0.0 || self.intrinsics.fy <= 0.0 {
            return Err(crate::error::invalid("focal lengths must be positive"));
        }
        Ok(())
    }
}
