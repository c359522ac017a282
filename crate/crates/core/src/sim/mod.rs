//! Deterministic 2D raycasting environment: procedural worlds, posed
//! observations, agent motion and a simulated object detector.

pub mod agent;
pub mod detector;
pub mod render;
pub mod world;
pub mod worldgen;

pub use agent::{step_agent, turn_agent, AgentState};
pub use detector::{simulate_detection, DetectorParams};
pub use render::{render_observation, CameraParams};
pub use world::{CellKind, ObjectInstance, Room, World, LABEL_FLOOR, LABEL_WALL};
pub use worldgen::{generate_world, Layout, RoomKind, WorldParams};

/// Derives an independent seed for stream `tag`, item `index` (SplitMix64
/// finaliser over the mixed inputs).
pub fn sub_seed(seed: u64, tag: u64, index: u64) -> u64 {
    let mut z = seed
        ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ index.wrapping_mul(0xD1B5_4A32_D192_ED03).rotate_left(17);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
