//! Desk-scale laboratory for studying reinforcement fine-tuning of
//! flow-matching trajectory generators on verifiable spatial tasks.
//!
//! The pipeline: [`envgen`] builds mazes and nav scenes with ground-truth
//! solutions, [`flowgen`] learns to generate trajectory latents conditioned
//! on the environment, [`render`] turns latents into RGB videos, [`track`]
//! recovers the discrete path from pixels alone, [`rewards`] scores it
//! against the ground truth, [`grpo`] runs group-relative policy updates on
//! those scores, and [`eval`] reports benchmark metrics.

pub mod config;
pub mod envgen;
pub mod error;
pub mod eval;
pub mod flowgen;
pub mod grpo;
pub mod latent;
pub mod render;
pub mod rewards;
pub mod rng;
pub mod track;

pub use error::{Error, Result};
