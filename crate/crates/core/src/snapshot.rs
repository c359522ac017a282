//! Saved map state (belief map plus occupancy) and layer rendering.
//!
//! File layout: one line of JSON header, then little-endian `f32` features
//! (row-major cells, `feature_dim` per cell), `f32` fusion variances, `f32`
//! search variances, one byte per cell for the observed flag and one byte per
//! cell for the occupancy state (0 unknown, 1 free, 2 occupied).

use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use image::GrayImage;
use serde::{Deserialize, Serialize};

use crate::belief_map::export::{mask_image, scalar_image, write_snapshot, Layer, SnapshotMeta};
use crate::belief_map::BeliefMap;
use crate::error::{invalid, Error, Result};
use crate::exploration::{derive_submaps, OccupancyGrid, OccupancyState, SubMaps};
use crate::grid::{GridDims, MapGrid, Raster};

const FORMAT: &str = "onemap-state";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct MapState {
    pub map: BeliefMap,
    pub occupancy: OccupancyGrid,
    /// Inflation radius for the navigable layer (meters).
    pub agent_radius: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    format: String,
    version: u32,
    nx: usize,
    ny: usize,
    resolution: f64,
    feature_dim: usize,
    prior_variance: f32,
    agent_radius: f64,
}

impl MapState {
    pub fn submaps(&self, tau_e: f64, tau_c: f64) -> Result<SubMaps> {
        derive_submaps(&self.map, tau_e, tau_c, self.occupancy.navigable(self.agent_radius))
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        let grid = self.map.grid();
        let header = Header {
            format: FORMAT.into(),
            version: VERSION,
            nx: grid.dims.nx,
            ny: grid.dims.ny,
            resolution: grid.resolution,
            feature_dim: self.map.feature_dim(),
            prior_variance: self.map.prior_variance(),
            agent_radius: self.agent_radius,
        };
        writeln!(w, "{}", serde_json::to_string(&header)?)?;
        for layer in [self.map.features_raw(), self.map.variances_raw(), self.map.search_variances_raw()] {
            let bytes: Vec<u8> = layer.iter().flat_map(|v| v.to_le_bytes()).collect();
            w.write_all(&bytes)?;
        }
        let observed: Vec<u8> = self.map.observed_raw().iter().map(|&o| u8::from(o)).collect();
        w.write_all(&observed)?;
        let occ: Vec<u8> = self
            .occupancy
            .states()
            .data()
            .iter()
            .map(|s| match s {
                OccupancyState::Unknown => 0,
                OccupancyState::Free => 1,
                OccupancyState::Occupied => 2,
            })
            .collect();
        w.write_all(&occ)?;
        Ok(())
    }

    pub fn read_from(r: impl Read) -> Result<Self> {
        let mut r = BufReader::new(r);
        let mut line = String::new();
        r.read_line(&mut line)?;
        let header: Header = serde_json::from_str(line.trim_end()).map_err(|e| parse(e.to_string()))?;
        if header.format != FORMAT || header.version != VERSION {
            return Err(parse(format!("unsupported format {} v{}", header.format, header.version)));
        }
        let dims = GridDims::new(header.nx, header.ny);
        let n = dims.len();
        let features = read_f32(&mut r, n * header.feature_dim)?;
        let sigma2 = read_f32(&mut r, n)?;
        let sigma2_search = read_f32(&mut r, n)?;
        let observed = read_bytes(&mut r, n)?.into_iter().map(|b| b != 0).collect();
        let states = read_bytes(&mut r, n)?
            .into_iter()
            .map(|b| match b {
                0 => Ok(OccupancyState::Unknown),
                1 => Ok(OccupancyState::Free),
                2 => Ok(OccupancyState::Occupied),
                other => Err(parse(format!("bad occupancy byte {other}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        let mut rest = [0u8; 1];
        if r.read(&mut rest)? != 0 {
            return Err(parse("trailing bytes after the last layer".into()));
        }
        let grid = MapGrid::new(dims, header.resolution);
        let map = BeliefMap::from_parts(
            grid,
            header.feature_dim,
            header.prior_variance,
            features,
            sigma2,
            sigma2_search,
            observed,
        )?;
        let occupancy = OccupancyGrid::from_states(grid, Raster::from_vec(dims, states));
        Ok(Self {
            map,
            occupancy,
            agent_radius: header.agent_radius,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_from(std::fs::File::open(path)?)
    }
}

fn parse(message: String) -> Error {
    Error::Parse { record: 0, message }
}

fn read_bytes(r: &mut impl Read, n: usize) -> Result<Vec<u8>> {
    let mut buf = vec![0u8; n];
    r.read_exact(&mut buf).map_err(|_| parse("file ends inside a layer".into()))?;
    Ok(buf)
}

fn read_f32(r: &mut impl Read, n: usize) -> Result<Vec<f32>> {
    Ok(read_bytes(r, n * 4)?
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect())
}

/// Renders one layer. `query` is `(label, embedding)` and is required for
/// [`Layer::Similarity`].
pub fn render_layer(
    state: &MapState,
    layer: Layer,
    query: Option<(&str, &[f32])>,
    tau_e: f64,
    tau_c: f64,
) -> Result<(GrayImage, SnapshotMeta)> {
    let grid = state.map.grid();
    let mut meta = SnapshotMeta {
        layer,
        extent_x: grid.dims.nx as f64 / grid.resolution,
        extent_y: grid.dims.ny as f64 / grid.resolution,
        resolution: grid.resolution,
        nx: grid.dims.nx,
        ny: grid.dims.ny,
        query: None,
        value_min: 0.0,
        value_max: 1.0,
    };
    let scalar = |raster: Raster<f32>, meta: &mut SnapshotMeta| {
        let (img, lo, hi) = scalar_image(&raster);
        meta.value_min = lo;
        meta.value_max = hi;
        img
    };
    let img = match layer {
        Layer::Similarity => {
            let (label, q) = query.ok_or_else(|| invalid("the similarity layer needs a query"))?;
            meta.query = Some(label.to_string());
            scalar(state.map.query_similarity(q)?, &mut meta)
        }
        Layer::Variance => scalar(state.map.variance_raster(), &mut meta),
        Layer::SearchVariance => scalar(state.map.search_variance_raster(), &mut meta),
        Layer::Observed | Layer::Explored | Layer::Searched | Layer::Navigable => {
            let sub = state.submaps(tau_e, tau_c)?;
            mask_image(match layer {
                Layer::Observed => &sub.observed,
                Layer::Explored => &sub.explored,
                Layer::Searched => &sub.searched,
                _ => &sub.navigable,
            })
        }
    };
    Ok((img, meta))
}

/// Renders `layer` to `image_path` plus its sidecar; returns the sidecar path.
pub fn write_layer(
    state: &MapState,
    layer: Layer,
    query: Option<(&str, &[f32])>,
    tau_e: f64,
    tau_c: f64,
    image_path: &Path,
) -> Result<PathBuf> {
    let (img, meta) = render_layer(state, layer, query, tau_e, tau_c)?;
    write_snapshot(image_path, &img, &meta)
}
