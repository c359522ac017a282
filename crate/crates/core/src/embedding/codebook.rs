use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Reserved label for walls, floor and anything that is not an object.
pub const VOID_LABEL: &str = "void";

const MAX_REJECTION_TRIES: usize = 2000;

/// Fixed text/image embedding space: one unit vector per label plus a
/// background vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Codebook {
    pub labels: Vec<String>,
    pub vectors: Vec<Vec<f32>>,
    pub void_vector: Vec<f32>,
    /// Expected norm of the per-patch noise vector before renormalisation.
    pub noise_sigma: f64,
    /// Upper bound on the cosine similarity between two distinct labels.
    pub distractor_overlap: f64,
}

fn random_unit(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-9 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Picks a unit vector whose similarity to every vector in `existing` stays
/// within `bound`; falls back to Gram-Schmidt against `existing`.
fn separated_unit(
    rng: &mut ChaCha8Rng,
    dim: usize,
    existing: &[Vec<f64>],
    accept: impl Fn(f64) -> bool,
) -> Result<Vec<f64>> {
    for _ in 0..MAX_REJECTION_TRIES {
        let v = random_unit(rng, dim);
        if existing.iter().all(|e| accept(dot(&v, e))) {
            return Ok(v);
        }
    }
    if existing.len() >= dim {
        return Err(invalid(format!(
            "cannot separate {} labels in {dim} dimensions",
            existing.len() + 1
        )));
    }
    let basis = orthonormal_basis(existing);
    loop {
        let mut v = random_unit(rng, dim);
        // two passes keep the residual orthogonal to working precision
        for _ in 0..2 {
            for b in &basis {
                let d = dot(&v, b);
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= d * y);
            }
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-6 {
            return Ok(v.into_iter().map(|x| x / n).collect());
        }
    }
}

fn orthonormal_basis(vectors: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for v in vectors {
        let mut u = v.clone();
        for b in &basis {
            let d = dot(&u, b);
            u.iter_mut().zip(b).for_each(|(x, y)| *x -= d * y);
        }
        let n = u.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-9 {
            basis.push(u.into_iter().map(|x| x / n).collect());
        }
    }
    basis
}

impl Codebook {
    /// Seeded codebook over `labels` in `dim` dimensions. Distinct labels have
    /// cosine similarity at most `distractor_overlap`; the background vector
    /// stays within half that bound of every label in absolute value.
    pub fn generate(
        labels: &[String],
        dim: usize,
        noise_sigma: f64,
        distractor_overlap: f64,
        seed: u64,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("codebook dimension must be positive"));
        }
        if !(0.0..1.0).contains(&distractor_overlap) {
            return Err(invalid("distractor_overlap must lie in [0, 1)"));
        }
        if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
            return Err(invalid("noise_sigma must be non-negative"));
        }
        for (i, l) in labels.iter().enumerate() {
            if l == VOID_LABEL {
                return Err(invalid("'void' is reserved for the background vector"));
            }
            if labels[..i].contains(l) {
                return Err(invalid(format!("duplicate label '{l}'")));
            }
        }

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut vecs: Vec<Vec<f64>> = Vec::with_capacity(labels.len());
        for _ in labels {
            let v = separated_unit(&mut rng, dim, &vecs, |c| c <= distractor_overlap)?;
            vecs.push(v);
        }
        let void_bound = distractor_overlap / 2.0;
        let void = separated_unit(&mut rng, dim, &vecs, |c| c.abs() <= void_bound)?;

        let to_f32 = |v: &[f64]| v.iter().map(|&x| x as f32).collect::<Vec<f32>>();
        Ok(Self {
            labels: labels.to_vec(),
            vectors: vecs.iter().map(|v| to_f32(v)).collect(),
            void_vector: to_f32(&void),
            noise_sigma,
            distractor_overlap,
        })
    }

    pub fn dim(&self) -> usize {
        self.void_vector.len()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Query embedding for a label: the label's unit vector, noise-free.
    pub fn embed_text(&self, label: &str) -> Result<&[f32]> {
        self.index_of(label)
            .map(|i| self.vectors[i].as_slice())
            .ok_or_else(|| Error::NotFound(format!("label '{label}' is not in the codebook")))
    }

    /// Checks unit norms, dimensions and pairwise separation.
    pub fn validate(&self) -> Result<()> {
        let dim = self.dim();
        if dim == 0 || self.vectors.len() != self.labels.len() {
            return Err(invalid("codebook labels and vectors disagree"));
        }
        for (l, v) in self.labels.iter().zip(&self.vectors) {
            if v.len() != dim {
                return Err(invalid(format!("vector for '{l}' has wrong dimension")));
            }
        }
        for v in self.vectors.iter().chain(std::iter::once(&self.void_vector)) {
            let n = crate::belief_map::norm(v);
            if (n - 1.0).abs() > 1e-5 {
                return Err(invalid(format!("codebook vector has norm {n}")));
            }
        }
        for i in 0..self.vectors.len() {
            for j in (i + 1)..self.vectors.len() {
                let c = cosine(&self.vectors[i], &self.vectors[j]);
                if c > self.distractor_overlap + 1e-6 {
                    return Err(invalid(format!(
                        "labels '{}' and '{}' have similarity {c}",
                        self.labels[i], self.labels[j]
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cb: Codebook = serde_json::from_str(text)?;
        cb.validate()?;
        Ok(cb)
    }
}

pub fn cosine(a: &[f32], b: &[f32]) -> f64 {
    let na = crate::belief_map::norm(a);
    let nb = crate::belief_map::norm(b);
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    a.iter().zip(b).map(|(&x, &y)| x as f64 * y as f64).sum::<f64>() / (na * nb)
}
