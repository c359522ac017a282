//! Query and observation embeddings.
//!
//! Real image/text encoders are out of reach here, so [`Codebook`] supplies a
//! synthetic embedding space with controllable label separation, and
//! [`frames`] ingests feature frames dumped by an external extractor.

pub mod codebook;
pub mod frame;
pub mod frames;

pub use codebook::{Codebook, VOID_LABEL};
pub use frame::{synth_embed_frame, upsample_bilinear, FeatureFrame, LabelImage, PatchLabel};
pub use frames::{load_feature_frames, write_feature_frames};
