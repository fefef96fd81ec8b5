//! Verifiable rewards for maze videos: exact match, progress ratio, and
//! motion fidelity.

use crate::envgen::{Cell, CellPath};
use crate::error::{Error, Result};
use crate::render::{Rasterizer, Video};
use crate::track::locate_agent;

/// Exact match: 1 when the predicted path equals the ground truth cell for
/// cell, including equal length; 0 otherwise.
pub fn reward_em(pred: &[Cell], gt: &CellPath) -> f64 {
    if pred.len() == gt.len() && pred.iter().zip(&gt.0).all(|(a, b)| a == b) {
        1.0
    } else {
        0.0
    }
}

/// Progress ratio: the fraction of ground-truth positions covered by the
/// longest matching prefix. Positions beyond the end of the prediction count
/// as mismatches, so a short prediction is credited only for what it did.
pub fn reward_pr(pred: &[Cell], gt: &CellPath) -> f64 {
    let n = gt.len();
    if n == 0 {
        return 0.0;
    }
    let mut matched = 0usize;
    for (k, cell) in gt.0.iter().enumerate() {
        if pred.get(k) == Some(cell) {
            matched += 1;
        } else {
            break;
        }
    }
    matched as f64 / n as f64
}

/// Frame indices sampled for motion fidelity: an even stride over the video,
/// first and last frame always included.
pub fn mf_frame_indices(frame_count: usize, samples: usize) -> Vec<usize> {
    assert!(frame_count > 0 && samples > 0);
    if samples >= frame_count {
        return (0..frame_count).collect();
    }
    if samples == 1 {
        return vec![0];
    }
    (0..samples)
        .map(|k| k * (frame_count - 1) / (samples - 1))
        .collect()
}

/// Motion fidelity: how much of the background stayed untouched.
///
/// On each sampled frame the agent disc (radius + 1 around the tracked
/// centroid) is masked out and the remaining pixels are compared against the
/// canonical agent-free background; a pixel is perturbed when any channel
/// differs by more than `tau`. The score is the mean over sampled frames of
/// `1 - perturbed_fraction`. Frames where the agent is not visible are
/// compared unmasked.
pub fn reward_mf(video: &Video, rasterizer: &Rasterizer, tau: f64, samples: usize) -> Result<f64> {
    if video.frames.is_empty() {
        return Err(Error::InvalidArgument("motion fidelity on an empty video".into()));
    }
    if samples == 0 {
        return Err(Error::InvalidArgument("motion fidelity needs at least one sample".into()));
    }
    let canonical = rasterizer.canonical();
    let mask_radius = video.geometry.agent_radius_px + 1.0;
    let mut total = 0.0;
    for &idx in &mf_frame_indices(video.frames.len(), samples) {
        let frame = &video.frames[idx];
        if frame.width != canonical.width || frame.height != canonical.height {
            return Err(Error::InvalidArgument(
                "video and canonical background disagree on frame size".into(),
            ));
        }
        let centroid = locate_agent(frame);
        let mut unmasked = 0usize;
        let mut perturbed = 0usize;
        for y in 0..frame.height {
            for x in 0..frame.width {
                if let Some(c) = centroid {
                    let dx = x as f64 + 0.5 - c[0];
                    let dy = y as f64 + 0.5 - c[1];
                    if dx * dx + dy * dy <= mask_radius * mask_radius {
                        continue;
                    }
                }
                unmasked += 1;
                let a = frame.get(x, y);
                let b = canonical.get(x, y);
                let diff = (0..3)
                    .map(|ch| (a[ch] as i32 - b[ch] as i32).abs())
                    .max()
                    .unwrap();
                if diff as f64 > tau {
                    perturbed += 1;
                }
            }
        }
        if unmasked == 0 {
            return Err(Error::DegenerateMask(format!(
                "agent mask covers every pixel of frame {idx}"
            )));
        }
        total += 1.0 - perturbed as f64 / unmasked as f64;
    }
    Ok(total / mf_frame_indices(video.frames.len(), samples).len() as f64)
}
