//! Pseudo-3D rendering: each image column casts one planar ray through the
//! grid; rows below the horizon may strike the floor first, all other rows
//! strike the first wall or object (both are full-height and opaque).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{traverse_segment, Cell};
use crate::observation::{Intrinsics, Pose2, PosedObservation};

use super::world::{World, LABEL_FLOOR};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CameraParams {
    pub width: usize,
    pub height: usize,
    pub hfov_deg: f64,
    /// Angle below the horizon of the lowest image row's bottom edge.
    pub vfov_down_deg: f64,
    /// Image rows above the optical axis.
    pub rows_above_horizon: usize,
    /// Meters above the floor.
    pub camera_height: f64,
    /// Returns deeper than this are censored (meters).
    pub max_range: f64,
    /// Multiplicative depth noise: σ = depth_noise · d² (0 disables).
    pub depth_noise: f64,
}

impl Default for CameraParams {
    fn default() -> Self {
        Self {
            width: 48,
            height: 16,
            hfov_deg: 90.0,
            vfov_down_deg: 55.0,
            rows_above_horizon: 4,
            camera_height: 0.88,
            max_range: 6.0,
            depth_noise: 0.0,
        }
    }
}

impl CameraParams {
    pub fn intrinsics(&self) -> Intrinsics {
        let mut k = Intrinsics::from_hfov(self.width, self.height, self.hfov_deg.to_radians(), self.rows_above_horizon as f64);
        let rows_below = (self.height - self.rows_above_horizon) as f64;
        k.fy = rows_below / self.vfov_down_deg.to_radians().tan();
        k
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.width < 8 {
            return bad("camera width must be at least 8 pixels");
        }
        if self.height == 0 || self.rows_above_horizon >= self.height {
            return bad("camera needs at least one row below the horizon");
        }
        if !(self.hfov_deg > 0.0 && self.hfov_deg < 180.0) {
            return bad("hfov_deg must lie in (0, 180)");
        }
        if !(self.vfov_down_deg > 0.0 && self.vfov_down_deg < 90.0) {
            return bad("vfov_down_deg must lie in (0, 90)");
        }
        if !(self.camera_height > 0.0 && self.max_range > 0.0 && self.depth_noise >= 0.0) {
            return bad("camera height and range must be positive, noise non-negative");
        }
        Ok(())
    }
}

/// Planar distance along a unit ray from `(x, y)` to where it enters `cell`.
fn entry_distance(x: f64, y: f64, ux: f64, uy: f64, cell: Cell, cs: f64) -> f64 {
    let axis = |p: f64, u: f64, lo: f64| -> (f64, f64) {
        let hi = lo + cs;
        if u.abs() < 1e-15 {
            return if (lo..=hi).contains(&p) {
                (f64::NEG_INFINITY, f64::INFINITY)
            } else {
                (f64::INFINITY, f64::NEG_INFINITY)
            };
        }
        let (a, b) = ((lo - p) / u, (hi - p) / u);
        (a.min(b), a.max(b))
    };
    let (tx0, _) = axis(x, ux, cell.x as f64 * cs);
    let (ty0, _) = axis(y, uy, cell.y as f64 * cs);
    tx0.max(ty0).max(0.0)
}

/// Renders the view from `pose`. `noise_seed` drives the optional depth noise.
pub fn render_observation(world: &World, pose: Pose2, camera: &CameraParams, noise_seed: u64) -> Result<PosedObservation> {
    let grid = world.grid();
    grid.cell_at(pose.x, pose.y)
        .filter(|&c| !world.is_opaque(c))
        .ok_or(Error::InvalidPose { x: pose.x, y: pose.y })?;
    let k = camera.intrinsics();
    let (h, w) = (camera.height, camera.width);
    let n = h * w;
    let mut depth = vec![camera.max_range as f32; n];
    let mut valid = vec![false; n];
    let mut hit_labels = vec![LABEL_FLOOR; n];
    let mut hit_cells = vec![None; n];
    let (sin, cos) = pose.heading.sin_cos();
    let cs = world.cell_size;
    let mut rng = ChaCha8Rng::seed_from_u64(noise_seed);
    let unit = Normal::new(0.0, 1.0).expect("valid normal");

    for j in 0..w {
        let (sx, _) = k.pixel_slope(0, j);
        // Planar direction of the column and planar distance per unit depth.
        let (dx, dy) = (cos + sx * sin, sin - sx * cos);
        let stretch = dx.hypot(dy);
        let (ux, uy) = (dx / stretch, dy / stretch);
        let reach = camera.max_range * stretch + cs;
        let mut struck: Option<(Cell, f64)> = None;
        traverse_segment(&grid, (pose.x, pose.y), (pose.x + ux * reach, pose.y + uy * reach), |c| {
            if world.is_opaque(c) {
                struck = Some((c, entry_distance(pose.x, pose.y, ux, uy, c, cs)));
                return false;
            }
            true
        });
        let wall_depth = struck.map(|(_, r)| r / stretch);
        for i in 0..h {
            let idx = i * w + j;
            let (_, sy) = k.pixel_slope(i, j);
            let floor_depth = (sy > 0.0).then(|| camera.camera_height / sy);
            let (d, cell) = match (floor_depth, wall_depth) {
                (Some(f), Some(wd)) if f < wd => (f, grid.cell_at(pose.x + ux * f * stretch, pose.y + uy * f * stretch)),
                (Some(f), None) => (f, grid.cell_at(pose.x + ux * f * stretch, pose.y + uy * f * stretch)),
                (_, Some(wd)) => (wd, struck.map(|(c, _)| c)),
                (None, None) => continue,
            };
            if d > camera.max_range {
                continue;
            }
            let mut d = d;
            if camera.depth_noise > 0.0 {
                let z: f64 = unit.sample(&mut rng);
                d = (d * (1.0 + camera.depth_noise * d * z)).max(1e-3);
            }
            depth[idx] = d as f32;
            valid[idx] = true;
            hit_cells[idx] = cell;
            hit_labels[idx] = cell.map_or(LABEL_FLOOR, |c| world.label_code(c));
        }
    }
    Ok(PosedObservation {
        pose,
        camera_height: camera.camera_height,
        intrinsics: k,
        max_range: camera.max_range,
        depth,
        valid,
        hit_labels,
        hit_cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{GridDims, Raster};
    use crate::sim::world::{Room, LABEL_WALL};

    fn open_box(nx: usize, ny: usize) -> World {
        let dims = GridDims::new(nx, ny);
        let walls = Raster::from_vec(
            dims,
            dims.cells()
                .map(|c| c.x == 0 || c.y == 0 || c.x == nx - 1 || c.y == ny - 1)
                .collect(),
        );
        let rooms = vec![Room {
            kind: "room".into(),
            min: Cell::new(1, 1),
            max: Cell::new(nx - 2, ny - 2),
        }];
        World::new(0, 0.1, vec!["chair".into()], rooms, walls, vec![]).unwrap()
    }

    #[test]
    fn wall_two_meters_ahead() {
        // Wall cells start at x = 2.5 m; agent at x = 0.5 m facing +x.
        let world = open_box(26, 20);
        let cam = CameraParams::default();
        let obs = render_observation(&world, Pose2::new(0.55, 1.0, 0.0), &cam, 0).unwrap();
        let j = cam.width / 2;
        let top = obs.depth[j] as f64;
        assert!(obs.valid[j]);
        assert_eq!(obs.hit_labels[j], LABEL_WALL);
        // Column centers sit half a pixel off axis; compare along that ray.
        let (sx, _) = obs.intrinsics.pixel_slope(0, j);
        let planar = top * (1.0 + sx * sx).sqrt();
        assert!((planar - 1.95).abs() <= 0.1, "{planar}");
    }

    #[test]
    fn empty_world_censors_every_ray_above_the_horizon() {
        let world = open_box(400, 400);
        let cam = CameraParams {
            max_range: 5.0,
            ..CameraParams::default()
        };
        let obs = render_observation(&world, Pose2::new(20.0, 20.0, 0.3), &cam, 0).unwrap();
        for i in 0..cam.rows_above_horizon {
            assert!((0..cam.width).all(|j| !obs.valid[i * cam.width + j]));
        }
        // Lower rows see the floor.
        let last = (cam.height - 1) * cam.width;
        assert!(obs.valid[last]);
        assert_eq!(obs.hit_labels[last], LABEL_FLOOR);
    }

    #[test]
    fn pose_inside_wall_is_rejected() {
        let world = open_box(10, 10);
        assert!(matches!(
            render_observation(&world, Pose2::new(0.05, 0.5, 0.0), &CameraParams::default(), 0),
            Err(Error::InvalidPose { .. })
        ));
    }

    #[test]
    fn floor_points_land_on_floor() {
        let world = open_box(60, 60);
        let cam = CameraParams::default();
        let obs = render_observation(&world, Pose2::new(3.0, 3.0, 1.0), &cam, 0).unwrap();
        for i in cam.rows_above_horizon..cam.height {
            for j in 0..cam.width {
                let Some(p) = obs.unproject(i, j) else { continue };
                if obs.hit_labels[i * cam.width + j] == LABEL_FLOOR {
                    assert!(p.z.abs() < 1e-4, "{p:?}");
                }
            }
        }
    }
}
