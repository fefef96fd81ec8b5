//! Generative variable: a fixed-length trajectory plus a per-frame background
//! field. This is the object the flow model transports noise into.

use crate::error::{Error, Result};

/// Number of background regions a frame is split into (2x2 quadrants).
pub const BG_REGIONS: usize = 4;

/// A trajectory of `F` waypoints in continuous environment coordinates
/// together with an `F x 4` background brightness field.
///
/// Flat layout (used by the flow model and the checkpoint format):
/// all waypoints first as `[x0, y0, x1, y1, ...]`, then the background rows
/// as `[bg0_q0..bg0_q3, bg1_q0..bg1_q3, ...]`. Total dimension `6 * F`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryLatent {
    pub waypoints: Vec<[f64; 2]>,
    pub bg: Vec<[f64; BG_REGIONS]>,
}

impl TrajectoryLatent {
    pub fn zeros(frames: usize) -> Self {
        TrajectoryLatent {
            waypoints: vec![[0.0; 2]; frames],
            bg: vec![[0.0; BG_REGIONS]; frames],
        }
    }

    pub fn frames(&self) -> usize {
        self.waypoints.len()
    }

    /// Flat dimension for a given frame count.
    pub fn dim_for(frames: usize) -> usize {
        frames * (2 + BG_REGIONS)
    }

    pub fn dim(&self) -> usize {
        Self::dim_for(self.frames())
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.dim());
        for w in &self.waypoints {
            out.extend_from_slice(w);
        }
        for b in &self.bg {
            out.extend_from_slice(b);
        }
        out
    }

    pub fn from_flat(frames: usize, flat: &[f64]) -> Result<Self> {
        if flat.len() != Self::dim_for(frames) {
            return Err(Error::InvalidArgument(format!(
                "latent of {} values cannot hold {} frames (need {})",
                flat.len(),
                frames,
                Self::dim_for(frames)
            )));
        }
        let mut waypoints = Vec::with_capacity(frames);
        for i in 0..frames {
            waypoints.push([flat[2 * i], flat[2 * i + 1]]);
        }
        let bg_base = 2 * frames;
        let mut bg = Vec::with_capacity(frames);
        for i in 0..frames {
            let mut row = [0.0; BG_REGIONS];
            row.copy_from_slice(&flat[bg_base + BG_REGIONS * i..bg_base + BG_REGIONS * (i + 1)]);
            bg.push(row);
        }
        Ok(TrajectoryLatent { waypoints, bg })
    }
}
