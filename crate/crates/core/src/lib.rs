//! Probabilistic open-vocabulary belief maps for object search.
//!
//! The crate builds a 2D grid of fused semantic feature vectors with a per-cell
//! variance from posed depth + feature observations, derives exploration goals
//! from it, and evaluates the resulting search policy in a deterministic
//! raycasting simulator.
//!
//! Module map:
//! - [`belief_map`]: the map itself and its update pipeline
//! - [`embedding`]: codebook embedder, feature frames and bilinear upsampling
//! - [`exploration`]: sub-maps, frontier/cluster goals, consensus filtering
//! - [`planning`]: A* and reachability on the navigable raster
//! - [`sim`]: procedural worlds, rendering, agent motion and a detector model
//! - [`benchmark`]: episodes, closed-loop runner, metrics and reports
//! - [`config`]: the file-based configuration shared by all of the above

pub mod belief_map;
pub mod benchmark;
pub mod config;
pub mod embedding;
pub mod error;
pub mod exploration;
pub mod grid;
pub mod observation;
pub mod planning;
pub mod sim;
pub mod snapshot;

pub use error::{Error, Result};
pub use grid::{Cell, GridDims, Raster};
