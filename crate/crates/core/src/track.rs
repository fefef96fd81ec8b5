//! Color-based agent tracking: recover the discrete cell path from a
//! rendered video without any knowledge of the latent that produced it.

use crate::envgen::Cell;
use crate::render::{Frame, Video};

/// A pixel counts as agent-colored when it is saturated blue:
/// `B >= 180 && R <= 90 && G <= 90`.
#[inline]
pub fn is_agent_pixel(px: [u8; 3]) -> bool {
    px[2] >= 180 && px[0] <= 90 && px[1] <= 90
}

/// Minimum number of agent pixels for a detection; smaller blobs are noise.
pub const MIN_BLOB_PIXELS: usize = 3;

/// Centroid (in pixel coordinates, pixel centers at +0.5) of all
/// agent-colored pixels, or `None` when fewer than [`MIN_BLOB_PIXELS`] match.
pub fn locate_agent(frame: &Frame) -> Option<[f64; 2]> {
    let mut count = 0usize;
    let mut sx = 0.0;
    let mut sy = 0.0;
    for (i, px) in frame.data.chunks_exact(3).enumerate() {
        if is_agent_pixel([px[0], px[1], px[2]]) {
            count += 1;
            sx += (i % frame.width) as f64 + 0.5;
            sy += (i / frame.width) as f64 + 0.5;
        }
    }
    (count >= MIN_BLOB_PIXELS).then(|| [sx / count as f64, sy / count as f64])
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrackResult {
    /// Visited cells with consecutive duplicates collapsed. Empty when the
    /// agent was never found.
    pub cells: Vec<Cell>,
    pub frames_seen: usize,
    pub frames_missing: usize,
}

impl TrackResult {
    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }
}

/// Per-frame agent localization mapped to grid cells.
///
/// Frames without a detection are dropped rather than interpolated; a video
/// where the agent is never visible yields an empty result, which callers
/// must treat as a degenerate trajectory rather than an error.
pub fn extract_trajectory(video: &Video) -> TrackResult {
    let g = &video.geometry;
    let mut cells: Vec<Cell> = Vec::new();
    let mut frames_seen = 0usize;
    let mut frames_missing = 0usize;
    for frame in &video.frames {
        let Some(centroid) = locate_agent(frame) else {
            frames_missing += 1;
            continue;
        };
        frames_seen += 1;
        let o = g.origin(frame.width, frame.height);
        let col = ((centroid[0] - o[0]) / g.cell_px).floor() as i64;
        let row = ((centroid[1] - o[1]) / g.cell_px).floor() as i64;
        let cell = Cell::new(
            row.clamp(0, g.rows as i64 - 1) as usize,
            col.clamp(0, g.cols as i64 - 1) as usize,
        );
        if cells.last() != Some(&cell) {
            cells.push(cell);
        }
    }
    TrackResult {
        cells,
        frames_seen,
        frames_missing,
    }
}
