//! Planar navigation scenes: a square room, a few disc obstacles, a landmark,
//! and a scripted reference rollout that walks to the landmark while steering
//! around obstacles.

use rand::Rng;

use crate::envgen::maze::resample_polyline;
use crate::error::{Error, Result};
use crate::latent::TrajectoryLatent;
use crate::rng::{derive_seed, rng_from};

/// Room side length in meters. Scenes are always this size.
pub const ROOM_SIZE: f64 = 10.0;
pub const MIN_ROLLOUT_STEPS: usize = 20;
pub const MAX_ROLLOUT_STEPS: usize = 40;
/// Clearance added to obstacle radii when planning the reference rollout.
const PLAN_MARGIN: f64 = 0.35;
const SCENE_RETRY_BUDGET: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Disc {
    pub x: f64,
    pub y: f64,
    pub r: f64,
}

impl Disc {
    pub fn contains(&self, p: [f64; 2]) -> bool {
        (p[0] - self.x).powi(2) + (p[1] - self.y).powi(2) <= self.r * self.r
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct NavScene {
    pub seed: u64,
    pub obstacles: Vec<Disc>,
    pub start: [f64; 2],
    pub landmark: [f64; 2],
    /// Scripted rollout: `steps` positions from start to landmark.
    pub reference: Vec<[f64; 2]>,
}

impl NavScene {
    pub fn steps(&self) -> usize {
        self.reference.len()
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Distance from point `p` to the segment `a..b`.
fn segment_distance(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    if len2 == 0.0 {
        return dist(a, p);
    }
    let t = (((p[0] - a[0]) * ab[0] + (p[1] - a[1]) * ab[1]) / len2).clamp(0.0, 1.0);
    dist([a[0] + t * ab[0], a[1] + t * ab[1]], p)
}

fn segment_blocked(a: [f64; 2], b: [f64; 2], obstacles: &[Disc]) -> Option<usize> {
    obstacles
        .iter()
        .enumerate()
        .filter(|(_, o)| segment_distance(a, b, [o.x, o.y]) <= o.r + PLAN_MARGIN)
        .min_by(|(_, x), (_, y)| {
            segment_distance(a, b, [x.x, x.y])
                .partial_cmp(&segment_distance(a, b, [y.x, y.y]))
                .unwrap()
        })
        .map(|(i, _)| i)
}

/// Straight-line plan with recursive detours: when a segment clips an
/// obstacle, insert a waypoint pushed out past the obstacle boundary on the
/// side of the closest approach, then plan both halves.
fn plan(a: [f64; 2], b: [f64; 2], obstacles: &[Disc], depth: usize, out: &mut Vec<[f64; 2]>) -> bool {
    match segment_blocked(a, b, obstacles) {
        None => {
            out.push(b);
            true
        }
        Some(_) if depth == 0 => false,
        Some(i) => {
            let o = obstacles[i];
            let ab = [b[0] - a[0], b[1] - a[1]];
            let len2 = ab[0] * ab[0] + ab[1] * ab[1];
            let t = (((o.x - a[0]) * ab[0] + (o.y - a[1]) * ab[1]) / len2).clamp(0.05, 0.95);
            let q = [a[0] + t * ab[0], a[1] + t * ab[1]];
            let mut n = [q[0] - o.x, q[1] - o.y];
            let n_len = (n[0] * n[0] + n[1] * n[1]).sqrt();
            if n_len < 1e-9 {
                // Closest approach runs through the center; detour sideways.
                let inv = 1.0 / len2.sqrt();
                n = [-ab[1] * inv, ab[0] * inv];
            } else {
                n = [n[0] / n_len, n[1] / n_len];
            }
            let push = o.r + PLAN_MARGIN + 0.3;
            let w = [
                (o.x + n[0] * push).clamp(0.4, ROOM_SIZE - 0.4),
                (o.y + n[1] * push).clamp(0.4, ROOM_SIZE - 0.4),
            ];
            plan(a, w, obstacles, depth - 1, out) && plan(w, b, obstacles, depth - 1, out)
        }
    }
}

/// Generate a scene and its reference rollout. Layouts that the planner
/// cannot serve are rejected and resampled; the whole procedure is a pure
/// function of the seed.
pub fn gen_nav_scene(seed: u64) -> Result<NavScene> {
    for attempt in 0..SCENE_RETRY_BUDGET as u64 {
        let mut rng = rng_from(derive_seed(seed, &[0x6e61, attempt]));
        let n_obs = rng.gen_range(0..=3);
        let obstacles: Vec<Disc> = (0..n_obs)
            .map(|_| Disc {
                x: rng.gen_range(1.5..ROOM_SIZE - 1.5),
                y: rng.gen_range(1.5..ROOM_SIZE - 1.5),
                r: rng.gen_range(0.6..1.2),
            })
            .collect();
        let sample_point = |rng: &mut rand_chacha::ChaCha8Rng| {
            [
                rng.gen_range(0.5..ROOM_SIZE - 0.5),
                rng.gen_range(0.5..ROOM_SIZE - 0.5),
            ]
        };
        let start = sample_point(&mut rng);
        let landmark = sample_point(&mut rng);
        let clear = |p: [f64; 2]| {
            obstacles
                .iter()
                .all(|o| dist(p, [o.x, o.y]) > o.r + PLAN_MARGIN + 0.2)
        };
        if dist(start, landmark) < 3.0 || !clear(start) || !clear(landmark) {
            continue;
        }
        let mut polyline = vec![start];
        if !plan(start, landmark, &obstacles, 8, &mut polyline) {
            continue;
        }
        let length: f64 = polyline.windows(2).map(|w| dist(w[0], w[1])).sum();
        let steps = ((length / 0.35).ceil() as usize + 1).clamp(MIN_ROLLOUT_STEPS, MAX_ROLLOUT_STEPS);
        let reference = resample_polyline(&polyline, steps);
        let valid = reference.iter().all(|p| {
            p[0] >= 0.0
                && p[0] <= ROOM_SIZE
                && p[1] >= 0.0
                && p[1] <= ROOM_SIZE
                && obstacles.iter().all(|o| !o.contains(*p))
        }) && dist(*reference.last().unwrap(), landmark) <= 0.5;
        if valid {
            return Ok(NavScene {
                seed,
                obstacles,
                start,
                landmark,
                reference,
            });
        }
    }
    Err(Error::GenerationFailure(format!(
        "no valid nav scene for seed {seed} within {SCENE_RETRY_BUDGET} attempts"
    )))
}

/// Demonstration latent for a nav scene: the reference rollout resampled to
/// `frames` waypoints with a zero background field.
pub fn nav_demo(scene: &NavScene, frames: usize) -> Result<TrajectoryLatent> {
    if frames < 2 {
        return Err(Error::InvalidArgument("nav demo needs at least 2 frames".into()));
    }
    let mut latent = TrajectoryLatent::zeros(frames);
    latent.waypoints = resample_polyline(&scene.reference, frames);
    Ok(latent)
}
