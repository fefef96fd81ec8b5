//! Rasterization of environments and trajectories into small RGB frame
//! sequences, plus the on-disk video format (PPM frames + geometry sidecar).
//!
//! The color scheme is load-bearing for downstream consumers: the tracker
//! recognizes the agent purely by color, and the motion-fidelity reward
//! compares corridor pixels against the canonical background. Corridors are
//! rendered as near-white (220) rather than 255 so that positive brightness
//! perturbations remain representable after clamping.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use crate::envgen::{Maze, NavScene, ROOM_SIZE};
use crate::error::{Error, Result};
use crate::latent::{TrajectoryLatent, BG_REGIONS};

pub const DEFAULT_RESOLUTION: usize = 32;

pub const WALL_COLOR: [u8; 3] = [0, 0, 0];
pub const CORRIDOR_COLOR: [u8; 3] = [220, 220, 220];
pub const TRAP_COLOR: [u8; 3] = [200, 60, 60];
pub const GOAL_COLOR: [u8; 3] = [60, 190, 60];
pub const AGENT_COLOR: [u8; 3] = [40, 40, 220];
pub const OBSTACLE_COLOR: [u8; 3] = [90, 90, 90];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub width: usize,
    pub height: usize,
    /// Row-major RGB bytes, `3 * width * height` of them.
    pub data: Vec<u8>,
}

impl Frame {
    pub fn filled(width: usize, height: usize, color: [u8; 3]) -> Self {
        let mut data = Vec::with_capacity(width * height * 3);
        for _ in 0..width * height {
            data.extend_from_slice(&color);
        }
        Frame { width, height, data }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, color: [u8; 3]) {
        let i = (y * self.width + x) * 3;
        self.data[i..i + 3].copy_from_slice(&color);
    }
}

/// Frame quadrant of a pixel: 0 top-left, 1 top-right, 2 bottom-left,
/// 3 bottom-right. Used to index the background field.
#[inline]
pub fn quadrant_of(x: usize, y: usize, width: usize, height: usize) -> usize {
    (if y >= height / 2 { 2 } else { 0 }) + (if x >= width / 2 { 1 } else { 0 })
}

/// Mapping between environment coordinates and pixels.
///
/// The environment occupies `extent * cell_px + 1` pixels per axis (cell
/// interiors plus a one-pixel boundary lattice), centered in the frame:
/// `origin = floor((frame_side - (extent * cell_px + 1)) / 2)`. A position
/// `p` in environment units maps to the pixel coordinate
/// `origin + p * cell_px`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Geometry {
    pub cols: usize,
    pub rows: usize,
    pub cell_px: f64,
    pub agent_radius_px: f64,
}

impl Geometry {
    pub fn origin(&self, frame_w: usize, frame_h: usize) -> [f64; 2] {
        let ox = ((frame_w as f64 - (self.cols as f64 * self.cell_px + 1.0)) / 2.0).floor();
        let oy = ((frame_h as f64 - (self.rows as f64 * self.cell_px + 1.0)) / 2.0).floor();
        [ox, oy]
    }

    pub fn to_pixel(&self, pos: [f64; 2], frame_w: usize, frame_h: usize) -> [f64; 2] {
        let o = self.origin(frame_w, frame_h);
        [o[0] + pos[0] * self.cell_px, o[1] + pos[1] * self.cell_px]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Video {
    pub frames: Vec<Frame>,
    pub geometry: Geometry,
    /// Number of waypoints that had to be clamped into the environment
    /// extent while rendering.
    pub clamp_warnings: u32,
}

fn agent_radius_for(cell_px: f64) -> f64 {
    (0.38 * cell_px).max(1.2)
}

fn draw_disc(frame: &mut Frame, center: [f64; 2], radius: f64, color: [u8; 3]) {
    let x0 = ((center[0] - radius - 1.0).floor().max(0.0)) as usize;
    let y0 = ((center[1] - radius - 1.0).floor().max(0.0)) as usize;
    let x1 = ((center[0] + radius + 1.0).ceil() as usize).min(frame.width);
    let y1 = ((center[1] + radius + 1.0).ceil() as usize).min(frame.height);
    let r2 = radius * radius;
    for y in y0..y1 {
        for x in x0..x1 {
            let dx = x as f64 + 0.5 - center[0];
            let dy = y as f64 + 0.5 - center[1];
            if dx * dx + dy * dy <= r2 {
                frame.set(x, y, color);
            }
        }
    }
}

/// Shared rasterization state for one environment: the canonical agent-free
/// background and the mask of pixels eligible for background perturbation.
pub struct Rasterizer {
    geometry: Geometry,
    frame_w: usize,
    frame_h: usize,
    extent: [f64; 2],
    canonical: Frame,
    corridor_mask: Vec<bool>,
}

impl Rasterizer {
    /// Rasterizer for a grid maze at a square resolution.
    pub fn maze(maze: &Maze, resolution: usize) -> Result<Self> {
        let max_side = maze.width.max(maze.height);
        let cell_px = (resolution - 1) / max_side;
        if cell_px < 2 {
            return Err(Error::InvalidArgument(format!(
                "resolution {resolution} too small for a {}x{} maze",
                maze.width, maze.height
            )));
        }
        let geometry = Geometry {
            cols: maze.width,
            rows: maze.height,
            cell_px: cell_px as f64,
            agent_radius_px: agent_radius_for(cell_px as f64),
        };
        let mut canonical = Frame::filled(resolution, resolution, CORRIDOR_COLOR);
        let o = geometry.origin(resolution, resolution);
        let (ox, oy) = (o[0] as usize, o[1] as usize);
        let w_px = maze.width * cell_px;
        let h_px = maze.height * cell_px;

        // Boundary lattice.
        for x in 0..=w_px {
            canonical.set(ox + x, oy, WALL_COLOR);
            canonical.set(ox + x, oy + h_px, WALL_COLOR);
        }
        for y in 0..=h_px {
            canonical.set(ox, oy + y, WALL_COLOR);
            canonical.set(ox + w_px, oy + y, WALL_COLOR);
        }
        // Interior walls, drawn with both end posts so junctions stay closed.
        for r in 0..maze.height {
            for c in 0..maze.width {
                let cell = crate::envgen::Cell::new(r, c);
                if c + 1 < maze.width
                    && maze.wall_between(cell, crate::envgen::Cell::new(r, c + 1)) == Some(true)
                {
                    let x = ox + (c + 1) * cell_px;
                    for y in oy + r * cell_px..=oy + (r + 1) * cell_px {
                        canonical.set(x, y, WALL_COLOR);
                    }
                }
                if r + 1 < maze.height
                    && maze.wall_between(cell, crate::envgen::Cell::new(r + 1, c)) == Some(true)
                {
                    let y = oy + (r + 1) * cell_px;
                    for x in ox + c * cell_px..=ox + (c + 1) * cell_px {
                        canonical.set(x, y, WALL_COLOR);
                    }
                }
            }
        }
        // Trap and goal cell interiors.
        let mut fill_cell = |cell: crate::envgen::Cell, color: [u8; 3]| {
            for y in oy + cell.row * cell_px + 1..oy + (cell.row + 1) * cell_px {
                for x in ox + cell.col * cell_px + 1..ox + (cell.col + 1) * cell_px {
                    canonical.set(x, y, color);
                }
            }
        };
        for t in &maze.traps {
            fill_cell(*t, TRAP_COLOR);
        }
        fill_cell(maze.goal, GOAL_COLOR);

        let corridor_mask = canonical
            .data
            .chunks_exact(3)
            .map(|px| px == CORRIDOR_COLOR)
            .collect();
        Ok(Rasterizer {
            geometry,
            frame_w: resolution,
            frame_h: resolution,
            extent: [maze.width as f64, maze.height as f64],
            canonical,
            corridor_mask,
        })
    }

    /// Rasterizer for a nav scene; one environment unit is one meter.
    pub fn nav(scene: &NavScene, resolution: usize) -> Result<Self> {
        if resolution < 16 {
            return Err(Error::InvalidArgument(format!(
                "resolution {resolution} too small for a nav scene"
            )));
        }
        let cell_px = (resolution as f64 - 1.0) / ROOM_SIZE;
        let geometry = Geometry {
            cols: ROOM_SIZE as usize,
            rows: ROOM_SIZE as usize,
            cell_px,
            agent_radius_px: agent_radius_for(cell_px),
        };
        let mut canonical = Frame::filled(resolution, resolution, CORRIDOR_COLOR);
        let to_px = |p: [f64; 2]| geometry.to_pixel(p, resolution, resolution);
        for o in &scene.obstacles {
            draw_disc(&mut canonical, to_px([o.x, o.y]), o.r * cell_px, OBSTACLE_COLOR);
        }
        draw_disc(&mut canonical, to_px(scene.landmark), 0.5 * cell_px, GOAL_COLOR);
        let corridor_mask = canonical
            .data
            .chunks_exact(3)
            .map(|px| px == CORRIDOR_COLOR)
            .collect();
        Ok(Rasterizer {
            geometry,
            frame_w: resolution,
            frame_h: resolution,
            extent: [ROOM_SIZE, ROOM_SIZE],
            canonical,
            corridor_mask,
        })
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    /// Agent-free background with a zero background field.
    pub fn canonical(&self) -> &Frame {
        &self.canonical
    }

    /// Pixels eligible for background perturbation.
    pub fn corridor_mask(&self) -> &[bool] {
        &self.corridor_mask
    }

    /// Render one frame: canonical background, plus the background field
    /// applied per quadrant, plus the agent disc. Returns the frame and
    /// whether the agent position had to be clamped into the extent.
    pub fn render_frame(&self, pos: [f64; 2], bg: &[f64; BG_REGIONS]) -> (Frame, bool) {
        let mut frame = self.canonical.clone();
        if bg.iter().any(|v| *v != 0.0) {
            for (i, keep) in self.corridor_mask.iter().enumerate() {
                if !keep {
                    continue;
                }
                let (x, y) = (i % self.frame_w, i / self.frame_w);
                let q = quadrant_of(x, y, self.frame_w, self.frame_h);
                if bg[q] == 0.0 {
                    continue;
                }
                for ch in 0..3 {
                    let v = frame.data[i * 3 + ch] as f64 + bg[q];
                    frame.data[i * 3 + ch] = v.clamp(0.0, 255.0) as u8;
                }
            }
        }
        let clamped_pos = [
            pos[0].clamp(0.0, self.extent[0]),
            pos[1].clamp(0.0, self.extent[1]),
        ];
        let clamped = clamped_pos != pos;
        let center = self
            .geometry
            .to_pixel(clamped_pos, self.frame_w, self.frame_h);
        draw_disc(&mut frame, center, self.geometry.agent_radius_px, AGENT_COLOR);
        (frame, clamped)
    }

    /// Render a full latent into a video, counting clamped waypoints.
    pub fn render_video(&self, latent: &TrajectoryLatent) -> Video {
        let mut frames = Vec::with_capacity(latent.frames());
        let mut clamp_warnings = 0u32;
        for (wp, bg) in latent.waypoints.iter().zip(&latent.bg) {
            let (frame, clamped) = self.render_frame(*wp, bg);
            if clamped {
                clamp_warnings += 1;
            }
            frames.push(frame);
        }
        Video {
            frames,
            geometry: self.geometry,
            clamp_warnings,
        }
    }
}

fn format_f64(v: f64) -> String {
    // Keep the sidecar stable and round-trippable.
    let s = format!("{v}");
    s
}

/// Write a video as `frame_NNNN.ppm` files plus a `geometry` sidecar:
/// `GEOM <cols> <rows> <cell_px> <agent_radius_px> <frame_count>`.
pub fn write_video(video: &Video, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let geo = dir.join("geometry");
    let g = &video.geometry;
    let line = format!(
        "GEOM {} {} {} {} {}\n",
        g.cols,
        g.rows,
        format_f64(g.cell_px),
        format_f64(g.agent_radius_px),
        video.frames.len()
    );
    fs::write(&geo, line).map_err(|e| Error::io(&geo, e))?;
    for (i, frame) in video.frames.iter().enumerate() {
        let path = dir.join(format!("frame_{i:04}.ppm"));
        let mut buf = Vec::with_capacity(frame.data.len() + 32);
        write!(buf, "P6\n{} {}\n255\n", frame.width, frame.height)
            .expect("in-memory write cannot fail");
        buf.extend_from_slice(&frame.data);
        fs::write(&path, &buf).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

fn parse_ppm(bytes: &[u8], path: &Path) -> Result<Frame> {
    let bad = |msg: &str| Error::Format(format!("{}: {msg}", path.display()));
    // Header: magic, width, height, maxval as whitespace-separated tokens,
    // then a single whitespace byte before the raster.
    let mut pos = 0usize;
    let token = |pos: &mut usize| -> Result<String> {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        let begin = *pos;
        while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if begin == *pos {
            return Err(bad("truncated header"));
        }
        Ok(String::from_utf8_lossy(&bytes[begin..*pos]).into_owned())
    };
    if token(&mut pos)? != "P6" {
        return Err(bad("not a P6 ppm"));
    }
    let width: usize = token(&mut pos)?.parse().map_err(|_| bad("bad width"))?;
    let height: usize = token(&mut pos)?.parse().map_err(|_| bad("bad height"))?;
    if token(&mut pos)? != "255" {
        return Err(bad("maxval must be 255"));
    }
    pos += 1; // single whitespace after maxval
    let want = width * height * 3;
    if bytes.len() - pos != want {
        return Err(bad(&format!(
            "raster is {} bytes, expected {want}",
            bytes.len() - pos
        )));
    }
    Ok(Frame {
        width,
        height,
        data: bytes[pos..].to_vec(),
    })
}

/// Read a video directory written by [`write_video`].
pub fn read_video(dir: &Path) -> Result<Video> {
    let geo_path = dir.join("geometry");
    let text = fs::read_to_string(&geo_path).map_err(|e| Error::io(&geo_path, e))?;
    let parts: Vec<&str> = text.split_whitespace().collect();
    if parts.len() != 6 || parts[0] != "GEOM" {
        return Err(Error::Format(format!(
            "{}: sidecar must be `GEOM <cols> <rows> <cell_px> <agent_radius_px> <frames>`",
            geo_path.display()
        )));
    }
    let bad = |what: &str| Error::Format(format!("{}: bad {what}", geo_path.display()));
    let geometry = Geometry {
        cols: parts[1].parse().map_err(|_| bad("cols"))?,
        rows: parts[2].parse().map_err(|_| bad("rows"))?,
        cell_px: parts[3].parse().map_err(|_| bad("cell_px"))?,
        agent_radius_px: parts[4].parse().map_err(|_| bad("agent_radius_px"))?,
    };
    let count: usize = parts[5].parse().map_err(|_| bad("frame count"))?;
    let mut frames = Vec::with_capacity(count);
    for i in 0..count {
        let path = dir.join(format!("frame_{i:04}.ppm"));
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        let frame = parse_ppm(&bytes, &path)?;
        if let Some(first) = frames.first() {
            let f: &Frame = first;
            if f.width != frame.width || f.height != frame.height {
                return Err(Error::Format(format!(
                    "{}: frame size differs from frame 0",
                    path.display()
                )));
            }
        }
        frames.push(frame);
    }
    Ok(Video {
        frames,
        geometry,
        clamp_warnings: 0,
    })
}
