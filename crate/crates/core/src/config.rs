//! Experiment configuration: one TOML document describing a full run, from
//! dataset generation through training and evaluation.
//!
//! Everything except the experiment name and the master seed has a default,
//! so a two-line file is a valid experiment. Validation happens at parse
//! time and reports the offending field; nothing downstream re-checks.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::envgen::{
    gen_nav_scene, gen_regular_maze, gen_trapfield, solve_optimal, Maze, MazeKind, NavScene,
    MAX_TRAP_FRACTION, MIN_SIZE,
};
use crate::error::{Error, Result};
use crate::eval::EvalConfig;
use crate::flowgen::{DEFAULT_HIDDEN, MAX_GRID};
use crate::grpo::{GrpoConfig, SftConfig, TrainTask};
use crate::rng::{derive_seed, rng_from};

/// Seed-derivation tags separating the three dataset streams.
const TRAIN_TAG: u64 = 0x7472696e;
const HELDOUT_TAG: u64 = 0x68656c64;
const NAV_TAG: u64 = 0x6e617673;

/// Attempts per suite slot before generation gives up. Rejection only
/// discards mazes whose optimal path does not fit the frame budget, so the
/// budget is generous.
const SLOT_RETRY_BUDGET: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Name used in artifact paths and logs.
    pub experiment: String,
    /// Root seed; every stream of randomness in the run derives from it.
    pub master_seed: u64,
    #[serde(default)]
    pub suite: SuiteConfig,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub sft: SftConfig,
    #[serde(default)]
    pub grpo: GrpoConfig,
    #[serde(default)]
    pub eval: EvalConfig,
}

/// Dataset shape: how many environments of which kind and size, and the
/// frame budget every demonstration and rollout must fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteConfig {
    /// Environment kind name; see `MazeKind::from_config_name`.
    pub kind: String,
    pub train_count: usize,
    pub eval_count: usize,
    pub nav_count: usize,
    /// Maze side lengths are drawn uniformly from `min_size..=max_size`.
    pub min_size: usize,
    pub max_size: usize,
    /// Trap density for the trapfield kind; ignored otherwise.
    pub trap_fraction: f64,
    /// Latent length in frames; optimal paths must fit.
    pub frames: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            kind: "regular".to_string(),
            train_count: 40,
            eval_count: 20,
            nav_count: 0,
            min_size: 4,
            max_size: 6,
            trap_fraction: 0.2,
            frames: 24,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    /// Hidden width of the velocity network.
    pub hidden: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig { hidden: DEFAULT_HIDDEN }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.experiment.trim().is_empty() {
            return Err(Error::Config("experiment name must not be empty".into()));
        }
        self.suite.validate()?;
        if self.model.hidden == 0 {
            return Err(Error::Config("model.hidden must be >= 1".into()));
        }
        if self.sft.epochs == 0 || self.sft.batch_size == 0 || !(self.sft.lr > 0.0) {
            return Err(Error::Config(
                "sft.epochs, sft.batch_size and sft.lr must all be positive".into(),
            ));
        }
        self.grpo.validate()?;
        if self.eval.steps < 2 {
            return Err(Error::Config(format!(
                "eval.steps must be >= 2, got {}",
                self.eval.steps
            )));
        }
        Ok(())
    }
}

impl SuiteConfig {
    pub fn validate(&self) -> Result<()> {
        let kind = MazeKind::from_config_name(&self.kind)?;
        if self.train_count + self.eval_count + self.nav_count == 0 {
            return Err(Error::Config("suite is empty: all counts are zero".into()));
        }
        if self.min_size < MIN_SIZE {
            return Err(Error::Config(format!(
                "suite.min_size must be >= {MIN_SIZE}, got {}",
                self.min_size
            )));
        }
        if self.max_size < self.min_size {
            return Err(Error::Config(format!(
                "suite.max_size ({}) below suite.min_size ({})",
                self.max_size, self.min_size
            )));
        }
        if self.max_size > MAX_GRID {
            return Err(Error::Config(format!(
                "suite.max_size must be <= {MAX_GRID} (condition encoder limit), got {}",
                self.max_size
            )));
        }
        if matches!(kind, MazeKind::Trapfield)
            && !(self.trap_fraction > 0.0 && self.trap_fraction <= MAX_TRAP_FRACTION)
        {
            return Err(Error::Config(format!(
                "suite.trap_fraction must lie in (0, {MAX_TRAP_FRACTION}] for trapfields, got {}",
                self.trap_fraction
            )));
        }
        // The shortest corner-to-corner path already needs this many cells.
        let min_frames = 2 * self.max_size - 1;
        if self.frames < min_frames {
            return Err(Error::Config(format!(
                "suite.frames ({}) cannot hold a {0}x{0} optimal path (need >= {min_frames})",
                self.frames
            )));
        }
        Ok(())
    }

    /// Generates one maze for suite slot `i`, retrying fresh seeds until the
    /// optimal path fits the frame budget.
    fn maze_for_slot(&self, kind: MazeKind, master_seed: u64, tag: u64, i: usize) -> Result<Maze> {
        let mut rng = rng_from(derive_seed(master_seed, &[tag, i as u64]));
        for _ in 0..SLOT_RETRY_BUDGET {
            let width = rng.gen_range(self.min_size..=self.max_size);
            let height = rng.gen_range(self.min_size..=self.max_size);
            let seed = rng.gen::<u64>();
            let maze = match kind {
                MazeKind::Regular => gen_regular_maze(width, height, seed),
                MazeKind::Trapfield => gen_trapfield(width, height, self.trap_fraction, seed),
            };
            // Trapfield seeds can wall off the goal entirely; that is a
            // rejection, not an error.
            let Ok(maze) = maze else { continue };
            let Ok(path) = solve_optimal(&maze) else { continue };
            if path.len() <= self.frames {
                return Ok(maze);
            }
        }
        Err(Error::GenerationFailure(format!(
            "no {}x{}..{} maze with a path of <= {} cells found for slot {i} \
             in {SLOT_RETRY_BUDGET} attempts",
            self.min_size, self.max_size, self.kind, self.frames
        )))
    }

    fn mazes(&self, kind: MazeKind, master_seed: u64, tag: u64, count: usize) -> Result<Vec<Maze>> {
        (0..count).map(|i| self.maze_for_slot(kind, master_seed, tag, i)).collect()
    }

    /// Materializes the full dataset for a master seed. Deterministic: the
    /// same config and seed always produce the same suite.
    pub fn build(&self, master_seed: u64) -> Result<Suite> {
        self.validate()?;
        let kind = MazeKind::from_config_name(&self.kind)?;
        let train = self.mazes(kind, master_seed, TRAIN_TAG, self.train_count)?;
        let heldout = self.mazes(kind, master_seed, HELDOUT_TAG, self.eval_count)?;
        let nav = (0..self.nav_count)
            .map(|i| gen_nav_scene(derive_seed(master_seed, &[NAV_TAG, i as u64])))
            .collect::<Result<Vec<_>>>()?;
        Ok(Suite { train, heldout, nav, frames: self.frames })
    }
}

/// A materialized dataset: training mazes, held-out evaluation mazes, and
/// navigation scenes, all sharing one frame budget.
#[derive(Debug, Clone)]
pub struct Suite {
    pub train: Vec<Maze>,
    pub heldout: Vec<Maze>,
    pub nav: Vec<NavScene>,
    pub frames: usize,
}

impl Suite {
    pub fn train_tasks(&self) -> Result<Vec<TrainTask>> {
        self.train.iter().cloned().map(TrainTask::maze).collect()
    }

    pub fn heldout_tasks(&self) -> Result<Vec<TrainTask>> {
        self.heldout.iter().cloned().map(TrainTask::maze).collect()
    }

    pub fn nav_tasks(&self) -> Result<Vec<TrainTask>> {
        self.nav.iter().cloned().map(|s| TrainTask::nav(s, self.frames)).collect()
    }
}

/// Parses and validates a config document.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let cfg: ExperimentConfig =
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text)
}
