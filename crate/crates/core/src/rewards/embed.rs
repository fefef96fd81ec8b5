//! Embedding-space rewards for tasks without a discrete ground truth: frames
//! are projected into a fixed feature space and a generated video is scored
//! against a reference rollout by frame similarity, endpoint fidelity, and
//! temporal-order consistency.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::render::{Frame, Video};
use crate::rng::{derive_seed, rng_from};

pub const EMBED_DIM: usize = 64;
const GRID: usize = 8; // frames are pooled to GRID x GRID before projection

/// Fixed frame embedder: grayscale 8x8 pooling followed by a seeded random
/// rotation. The projection matrix is orthonormalized so that inner products
/// survive the projection exactly; similarity in embedding space is then
/// similarity of pooled frames, with no projection-induced distortion.
pub struct Embedder {
    seed: u64,
    /// Row-major `EMBED_DIM x EMBED_DIM`, rows orthonormal.
    proj: Vec<f64>,
}

impl Embedder {
    pub fn new(seed: u64) -> Self {
        let mut rng = rng_from(derive_seed(seed, &[0x656d62]));
        let n = EMBED_DIM;
        let mut proj: Vec<f64> = (0..n * n).map(|_| rng.sample(StandardNormal)).collect();
        // Modified Gram-Schmidt over rows. A random Gaussian matrix is full
        // rank with probability one, and the fallback below covers the rest.
        for i in 0..n {
            for j in 0..i {
                let dot: f64 = (0..n).map(|k| proj[i * n + k] * proj[j * n + k]).sum();
                for k in 0..n {
                    proj[i * n + k] -= dot * proj[j * n + k];
                }
            }
            let norm: f64 = (0..n).map(|k| proj[i * n + k].powi(2)).sum::<f64>().sqrt();
            if norm < 1e-12 {
                for k in 0..n {
                    proj[i * n + k] = if k == i { 1.0 } else { 0.0 };
                }
            } else {
                for k in 0..n {
                    proj[i * n + k] /= norm;
                }
            }
        }
        Embedder { seed, proj }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Unit-norm embedding of one frame. An all-black frame (zero pooled
    /// vector) maps to the canonical first basis vector.
    pub fn embed_frame(&self, frame: &Frame) -> Vec<f64> {
        let mut pooled = [0.0f64; EMBED_DIM];
        let mut counts = [0usize; EMBED_DIM];
        for y in 0..frame.height {
            let gy = y * GRID / frame.height;
            for x in 0..frame.width {
                let gx = x * GRID / frame.width;
                let px = frame.get(x, y);
                let gray = (px[0] as f64 + px[1] as f64 + px[2] as f64) / 3.0;
                pooled[gy * GRID + gx] += gray;
                counts[gy * GRID + gx] += 1;
            }
        }
        for (p, c) in pooled.iter_mut().zip(counts) {
            if c > 0 {
                *p /= c as f64;
            }
        }
        let n = EMBED_DIM;
        let mut out = vec![0.0; n];
        for (i, o) in out.iter_mut().enumerate() {
            *o = (0..n).map(|k| self.proj[i * n + k] * pooled[k]).sum();
        }
        let norm: f64 = out.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < 1e-12 {
            let mut e = vec![0.0; n];
            e[0] = 1.0;
            return e;
        }
        for v in &mut out {
            *v /= norm;
        }
        out
    }

    pub fn embed_video(&self, video: &Video) -> Vec<Vec<f64>> {
        video.frames.iter().map(|f| self.embed_frame(f)).collect()
    }
}

/// Inner product of two unit vectors, computed as `1 - |a-b|^2 / 2`.
///
/// For unit inputs this equals the dot product; the difference form makes
/// self-similarity exactly 1.0 rather than 1 minus a rounding crumb.
pub fn unit_dot(a: &[f64], b: &[f64]) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (1.0 - 0.5 * d2).max(-1.0)
}

/// Linear interpolation of an embedding sequence to `target` frames, with
/// renormalization. Indices that land exactly on an input frame are copied
/// bit for bit, so `target == seq.len()` returns the input unchanged.
pub fn interp_embeddings(seq: &[Vec<f64>], target: usize) -> Result<Vec<Vec<f64>>> {
    if seq.is_empty() || target == 0 {
        return Err(Error::InvalidArgument(
            "embedding interpolation needs non-empty input and target".into(),
        ));
    }
    if seq.len() == 1 || target == 1 {
        return Ok((0..target).map(|_| seq[0].clone()).collect());
    }
    let mut out = Vec::with_capacity(target);
    for j in 0..target {
        let f = j as f64 * (seq.len() - 1) as f64 / (target - 1) as f64;
        let i = (f.floor() as usize).min(seq.len() - 2);
        let w = f - i as f64;
        if w == 0.0 {
            out.push(seq[i].clone());
            continue;
        }
        if w == 1.0 {
            out.push(seq[i + 1].clone());
            continue;
        }
        let mut v: Vec<f64> = seq[i]
            .iter()
            .zip(&seq[i + 1])
            .map(|(a, b)| (1.0 - w) * a + w * b)
            .collect();
        let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-12 {
            // Antipodal neighbors cancel; fall back to the canonical vector.
            v = vec![0.0; seq[i].len()];
            v[0] = 1.0;
        } else {
            for x in &mut v {
                *x /= norm;
            }
        }
        out.push(v);
    }
    Ok(out)
}

/// Mean per-frame similarity between two equal-length embedding sequences.
pub fn reward_cos(gen: &[Vec<f64>], reference: &[Vec<f64>]) -> f64 {
    assert_eq!(gen.len(), reference.len());
    let total: f64 = gen.iter().zip(reference).map(|(a, b)| unit_dot(a, b)).sum();
    total / gen.len() as f64
}

/// Endpoint fidelity: similarity at the first and last frame, averaged.
pub fn reward_end(gen: &[Vec<f64>], reference: &[Vec<f64>]) -> f64 {
    assert!(!gen.is_empty() && gen.len() == reference.len());
    let first = unit_dot(&gen[0], &reference[0]);
    let last = unit_dot(gen.last().unwrap(), reference.last().unwrap());
    (first + last) / 2.0
}

/// Normalized cumulative displacement through embedding space: entry `t`
/// (for `t` in `1..len`) is the fraction of the total path length covered
/// after step `t`. A static sequence has zero displacement everywhere.
pub fn cum_progress(seq: &[Vec<f64>], epsilon: f64) -> Vec<f64> {
    if seq.len() < 2 {
        return Vec::new();
    }
    let steps: Vec<f64> = seq
        .windows(2)
        .map(|w| {
            w[0].iter()
                .zip(&w[1])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    let total: f64 = steps.iter().sum();
    let denom = total + epsilon;
    let mut acc = 0.0;
    steps
        .iter()
        .map(|d| {
            acc += d;
            acc / denom
        })
        .collect()
}

/// Temporal-order consistency: 1 minus the mean absolute gap between the two
/// cumulative-progress profiles, clamped to [0, 1]. Sequences too short to
/// have a profile are trivially consistent.
pub fn reward_temp(gen: &[Vec<f64>], reference: &[Vec<f64>], epsilon: f64) -> f64 {
    assert_eq!(gen.len(), reference.len());
    let a = cum_progress(gen, epsilon);
    let b = cum_progress(reference, epsilon);
    if a.is_empty() {
        return 1.0;
    }
    let mean_gap: f64 =
        a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64;
    (1.0 - mean_gap).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EmbWeights {
    pub cos: f64,
    pub temp: f64,
    pub end: f64,
}

impl Default for EmbWeights {
    fn default() -> Self {
        EmbWeights { cos: 0.5, temp: 0.2, end: 0.3 }
    }
}

pub struct EmbScore {
    pub cos: f64,
    pub temp: f64,
    pub end: f64,
    pub combined: f64,
}

/// Full embedding reward between a generated and a reference video.
/// The shorter embedding sequence is interpolated to the longer one's length
/// before the components are computed.
pub fn reward_emb(
    embedder: &Embedder,
    gen: &Video,
    reference: &Video,
    weights: EmbWeights,
    epsilon: f64,
) -> Result<EmbScore> {
    if gen.frames.is_empty() || reference.frames.is_empty() {
        return Err(Error::InvalidArgument("embedding reward on an empty video".into()));
    }
    let eg = embedder.embed_video(gen);
    let er = embedder.embed_video(reference);
    let tc = eg.len().max(er.len());
    let eg = interp_embeddings(&eg, tc)?;
    let er = interp_embeddings(&er, tc)?;
    let cos = reward_cos(&eg, &er);
    let temp = reward_temp(&eg, &er, epsilon);
    let end = reward_end(&eg, &er);
    // Summation order keeps the perfect score exactly 1.0 for the default
    // weights: 0.2 + 0.3 is exactly representable as 0.5.
    let combined = weights.cos * cos + (weights.temp * temp + weights.end * end);
    Ok(EmbScore { cos, temp, end, combined })
}
