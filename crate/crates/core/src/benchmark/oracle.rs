use crate::error::{Error, Result};
use crate::grid::{disc_offsets, Mask, Raster};
use crate::observation::Pose2;
use crate::planning::plan_to_any;
use crate::sim::World;

/// Navigable cells within `radius` meters (center to center) of any instance
/// of `category`.
pub fn category_targets(world: &World, nav: &Mask, category: &str, radius: f64) -> Mask {
    let dims = world.dims();
    let offsets = disc_offsets(radius / world.cell_size);
    let mut out = Raster::filled(dims, false);
    for o in world.instances_of(category) {
        for &c in &o.cells {
            for &(dx, dy) in &offsets {
                if let Some(n) = dims.offset(c, dx, dy) {
                    out[n] |= nav[n];
                }
            }
        }
    }
    out
}

/// Geodesic distance (meters) on `nav` from `from` to the nearest cell within
/// `success_radius` of any instance of `category`.
pub fn oracle_shortest_path(world: &World, nav: &Mask, from: Pose2, category: &str, success_radius: f64) -> Result<f64> {
    let start = world
        .grid()
        .cell_at(from.x, from.y)
        .ok_or(Error::InvalidPose { x: from.x, y: from.y })?;
    let targets = category_targets(world, nav, category, success_radius);
    if !targets.any() {
        return Err(Error::UnreachableCategory(category.to_string()));
    }
    match plan_to_any(nav, start, &targets, world.cell_size) {
        Ok(path) => Ok(path.length),
        Err(Error::Unreachable { .. }) => Err(Error::UnreachableCategory(category.to_string())),
        Err(e) => Err(e),
    }
}
