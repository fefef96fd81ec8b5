//! Environment generation: grid mazes, trap fields, and planar nav scenes,
//! plus the demonstration latents used for supervised pre-training.

mod maze;
mod nav;

pub use maze::{
    gen_regular_maze, gen_trapfield, make_demo, maze_from_text, maze_to_text, resample_polyline,
    solve_optimal, Cell, CellPath, Maze, MazeKind, MAX_TRAP_FRACTION, MIN_SIZE,
};
pub use nav::{
    gen_nav_scene, nav_demo, Disc, NavScene, MAX_ROLLOUT_STEPS, MIN_ROLLOUT_STEPS, ROOM_SIZE,
};
