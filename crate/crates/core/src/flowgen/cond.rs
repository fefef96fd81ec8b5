//! Fixed binary featurizations of environments for model conditioning.
//!
//! Encodings are pure functions of the environment with a fixed width, so a
//! single network can be conditioned on any maze up to the supported size.
//! There is no learned encoder anywhere in this path.

use crate::envgen::{Cell, Maze, MazeKind, NavScene};
use crate::error::{Error, Result};

/// Largest maze side the maze encoding can represent.
pub const MAX_GRID: usize = 8;

/// Width of `encode_maze` output:
/// horizontal walls + vertical walls + start, goal, trap bitmaps + 4 scalars
/// (width, height, trapfield flag, constant bias).
pub const MAZE_COND_DIM: usize =
    (MAX_GRID - 1) * MAX_GRID + MAX_GRID * (MAX_GRID - 1) + 3 * MAX_GRID * MAX_GRID + 4;

/// Width of `encode_nav` output: start and landmark positions plus three
/// obstacle slots of (x, y, radius, present).
pub const NAV_COND_DIM: usize = 4 + 3 * 4;

/// Maximum obstacle count `encode_nav` can represent.
pub const NAV_OBSTACLE_SLOTS: usize = 3;

/// Wall bitmaps, start/goal/trap one-hots, and size scalars, padded to the
/// `MAX_GRID` layout so the width is independent of the actual maze size.
/// Cells outside the maze read as zero everywhere.
pub fn encode_maze(maze: &Maze) -> Result<Vec<f64>> {
    if maze.width > MAX_GRID || maze.height > MAX_GRID {
        return Err(Error::InvalidArgument(format!(
            "maze {}x{} exceeds the {MAX_GRID}x{MAX_GRID} conditioning layout",
            maze.width, maze.height
        )));
    }
    let mut out = vec![0.0; MAZE_COND_DIM];
    let h_base = 0;
    let v_base = h_base + (MAX_GRID - 1) * MAX_GRID;
    let start_base = v_base + MAX_GRID * (MAX_GRID - 1);
    let goal_base = start_base + MAX_GRID * MAX_GRID;
    let trap_base = goal_base + MAX_GRID * MAX_GRID;
    let tail = trap_base + MAX_GRID * MAX_GRID;

    for r in 0..maze.height - 1 {
        for c in 0..maze.width {
            if maze.wall_between(Cell::new(r, c), Cell::new(r + 1, c)) == Some(true) {
                out[h_base + r * MAX_GRID + c] = 1.0;
            }
        }
    }
    for r in 0..maze.height {
        for c in 0..maze.width - 1 {
            if maze.wall_between(Cell::new(r, c), Cell::new(r, c + 1)) == Some(true) {
                out[v_base + r * (MAX_GRID - 1) + c] = 1.0;
            }
        }
    }
    out[start_base + maze.start.row * MAX_GRID + maze.start.col] = 1.0;
    out[goal_base + maze.goal.row * MAX_GRID + maze.goal.col] = 1.0;
    for trap in &maze.traps {
        out[trap_base + trap.row * MAX_GRID + trap.col] = 1.0;
    }
    out[tail] = maze.width as f64 / MAX_GRID as f64;
    out[tail + 1] = maze.height as f64 / MAX_GRID as f64;
    out[tail + 2] = if maze.kind == MazeKind::Trapfield { 1.0 } else { 0.0 };
    out[tail + 3] = 1.0;
    Ok(out)
}

/// Room-normalized start/landmark coordinates and up to three obstacle
/// slots; absent slots are zeroed with their present-flag cleared.
pub fn encode_nav(scene: &NavScene) -> Result<Vec<f64>> {
    if scene.obstacles.len() > NAV_OBSTACLE_SLOTS {
        return Err(Error::InvalidArgument(format!(
            "scene has {} obstacles, conditioning supports {NAV_OBSTACLE_SLOTS}",
            scene.obstacles.len()
        )));
    }
    let room = crate::envgen::ROOM_SIZE;
    let mut out = vec![0.0; NAV_COND_DIM];
    out[0] = scene.start[0] / room;
    out[1] = scene.start[1] / room;
    out[2] = scene.landmark[0] / room;
    out[3] = scene.landmark[1] / room;
    for (slot, o) in scene.obstacles.iter().enumerate() {
        let base = 4 + slot * 4;
        out[base] = o.x / room;
        out[base + 1] = o.y / room;
        out[base + 2] = o.r / room;
        out[base + 3] = 1.0;
    }
    Ok(out)
}
