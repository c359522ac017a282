//! Feature fields: patch-level frames, bilinear upsampling to pixels, and the
//! synthetic image encoder.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::codebook::{Codebook, VOID_LABEL};
use crate::error::{invalid, Error, Result};

/// A `height × width × dim` field of feature vectors, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureFrame {
    pub height: usize,
    pub width: usize,
    pub dim: usize,
    pub data: Vec<f32>,
}

impl FeatureFrame {
    pub fn new(height: usize, width: usize, dim: usize, data: Vec<f32>) -> Result<Self> {
        if height == 0 || width == 0 || dim == 0 {
            return Err(invalid("feature frame dimensions must be positive"));
        }
        if data.len() != height * width * dim {
            return Err(invalid(format!(
                "feature frame holds {} values, expected {}",
                data.len(),
                height * width * dim
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(invalid("feature frame contains non-finite values"));
        }
        Ok(Self {
            height,
            width,
            dim,
            data,
        })
    }

    pub fn constant(height: usize, width: usize, value: &[f32]) -> Self {
        let data = value
            .iter()
            .copied()
            .cycle()
            .take(height * width * value.len())
            .collect();
        Self {
            height,
            width,
            dim: value.len(),
            data,
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> &[f32] {
        let k = (i * self.width + j) * self.dim;
        &self.data[k..k + self.dim]
    }
}

/// Source coordinate of output index `o` when resampling `src` → `dst` samples
/// with sample centres aligned to their footprints.
fn source_coord(o: usize, src: usize, dst: usize) -> (usize, usize, f32) {
    let s = ((o as f64 + 0.5) * src as f64 / dst as f64 - 0.5).clamp(0.0, (src - 1) as f64);
    let lo = s.floor() as usize;
    let hi = (lo + 1).min(src - 1);
    (lo, hi, (s - lo as f64) as f32)
}

/// Bilinear upsampling of a patch frame to `height × width` pixels.
pub fn upsample_bilinear(frame: &FeatureFrame, height: usize, width: usize) -> Result<FeatureFrame> {
    if height < frame.height || width < frame.width {
        return Err(invalid(format!(
            "cannot upsample {}x{} patches to smaller {height}x{width}",
            frame.height, frame.width
        )));
    }
    if height == frame.height && width == frame.width {
        return Ok(frame.clone());
    }
    let dim = frame.dim;
    let cols: Vec<_> = (0..width)
        .map(|j| source_coord(j, frame.width, width))
        .collect();
    let mut data = Vec::with_capacity(height * width * dim);
    for i in 0..height {
        let (r0, r1, ty) = source_coord(i, frame.height, height);
        for &(c0, c1, tx) in &cols {
            let (a, b, c, d) = (
                frame.get(r0, c0),
                frame.get(r0, c1),
                frame.get(r1, c0),
                frame.get(r1, c1),
            );
            for k in 0..dim {
                let top = a[k] + (b[k] - a[k]) * tx;
                let bottom = c[k] + (d[k] - c[k]) * tx;
                data.push(top + (bottom - top) * ty);
            }
        }
    }
    Ok(FeatureFrame {
        height,
        width,
        dim,
        data,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PatchLabel {
    Void,
    Label(usize),
}

/// Per-patch semantic labels, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelImage {
    pub height: usize,
    pub width: usize,
    pub labels: Vec<PatchLabel>,
}

impl LabelImage {
    /// Resolves text labels against `codebook`; `"void"` maps to the background.
    pub fn from_names(codebook: &Codebook, height: usize, width: usize, names: &[&str]) -> Result<Self> {
        if names.len() != height * width {
            return Err(invalid("label image size mismatch"));
        }
        let labels = names
            .iter()
            .map(|&n| {
                if n == VOID_LABEL {
                    Ok(PatchLabel::Void)
                } else {
                    codebook
                        .index_of(n)
                        .map(PatchLabel::Label)
                        .ok_or_else(|| Error::NotFound(format!("label '{n}' is not in the codebook")))
                }
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            height,
            width,
            labels,
        })
    }
}

/// Synthetic image encoder: each patch is its label's vector plus isotropic
/// Gaussian noise with expected norm `noise_sigma`, renormalised to unit length.
pub fn synth_embed_frame(codebook: &Codebook, labels: &LabelImage, seed: u64) -> Result<FeatureFrame> {
    let dim = codebook.dim();
    if labels.labels.len() != labels.height * labels.width {
        return Err(invalid("label image size mismatch"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let per_component = codebook.noise_sigma / (dim as f64).sqrt();
    let mut data = Vec::with_capacity(labels.labels.len() * dim);
    let mut patch = vec![0f64; dim];
    for label in &labels.labels {
        let base = match *label {
            PatchLabel::Void => &codebook.void_vector,
            PatchLabel::Label(i) => codebook
                .vectors
                .get(i)
                .ok_or_else(|| Error::NotFound(format!("label index {i} is not in the codebook")))?,
        };
        if per_component == 0.0 {
            data.extend_from_slice(base);
            continue;
        }
        for (p, &b) in patch.iter_mut().zip(base) {
            let n: f64 = rng.sample(StandardNormal);
            *p = b as f64 + per_component * n;
        }
        let norm = patch.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
        data.extend(patch.iter().map(|x| (x / norm) as f32));
    }
    Ok(FeatureFrame {
        height: labels.height,
        width: labels.width,
        dim,
        data,
    })
}
