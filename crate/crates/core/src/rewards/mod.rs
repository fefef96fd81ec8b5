//! Reward computation behind a single pluggable interface.
//!
//! Rollout scoring never inspects the latent that produced a video; every
//! signal is recovered from pixels (tracking, background comparison, frame
//! embeddings) so that rewards stay verifiable end to end.

mod embed;
mod game;

pub use embed::{
    cum_progress, interp_embeddings, reward_cos, reward_emb, reward_end, reward_temp, unit_dot,
    EmbScore, EmbWeights, Embedder, EMBED_DIM,
};
pub use game::{mf_frame_indices, reward_em, reward_mf, reward_pr};

use crate::envgen::CellPath;
use crate::error::{Error, Result};
use crate::render::{Rasterizer, Video};
use crate::track::TrackResult;

/// Everything a reward function may look at for one sample.
pub enum SampleContext<'a> {
    /// Maze rollout: ground-truth path plus the tracked prediction.
    Game {
        gt: &'a CellPath,
        tracked: &'a TrackResult,
        video: &'a Video,
        rasterizer: &'a Rasterizer,
    },
    /// Nav rollout: generated video scored against a reference video.
    Nav {
        gen: &'a Video,
        reference: &'a Video,
    },
}

/// Per-sample reward with its per-component decomposition.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RewardBreakdown {
    /// Component names and values, in combination order.
    pub components: Vec<(String, f64)>,
    pub weights: Vec<f64>,
    pub combined: f64,
    /// Set when the trajectory was empty and components fell back to their
    /// floor values.
    pub degenerate: bool,
}

pub trait RewardFn: Send + Sync {
    fn name(&self) -> &'static str;
    fn evaluate(&self, ctx: &SampleContext) -> Result<RewardBreakdown>;
}

/// Declarative reward configuration; `name` selects the implementation.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct RewardSpec {
    pub name: String,
    pub em_weight: f64,
    pub pr_weight: f64,
    pub mf_weight: f64,
    pub mf_tau: f64,
    pub mf_samples: usize,
    pub embed_seed: u64,
    pub emb_cos_weight: f64,
    pub emb_temp_weight: f64,
    pub emb_end_weight: f64,
    pub epsilon: f64,
}

impl Default for RewardSpec {
    fn default() -> Self {
        RewardSpec {
            name: "game".into(),
            em_weight: 0.3,
            pr_weight: 0.5,
            mf_weight: 0.2,
            mf_tau: 25.0,
            mf_samples: 8,
            embed_seed: 7,
            emb_cos_weight: 0.5,
            emb_temp_weight: 0.2,
            emb_end_weight: 0.3,
            epsilon: 1e-8,
        }
    }
}

impl RewardSpec {
    /// EM-only variant used by the reward-design ablation.
    pub fn em_only() -> Self {
        RewardSpec {
            em_weight: 1.0,
            pr_weight: 0.0,
            mf_weight: 0.0,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let check = |label: &str, ws: &[f64]| -> Result<()> {
            if ws.iter().any(|w| *w < 0.0) {
                return Err(Error::Config(format!("{label} weights must be non-negative")));
            }
            let sum: f64 = ws.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(Error::Config(format!(
                    "{label} weights sum to {sum}, expected 1"
                )));
            }
            Ok(())
        };
        check("game reward", &[self.em_weight, self.pr_weight, self.mf_weight])?;
        check(
            "embedding reward",
            &[self.emb_cos_weight, self.emb_temp_weight, self.emb_end_weight],
        )?;
        if self.mf_tau <= 0.0 || self.mf_samples == 0 || self.epsilon <= 0.0 {
            return Err(Error::Config("mf_tau, mf_samples, epsilon must be positive".into()));
        }
        Ok(())
    }
}

struct GameReward {
    spec: RewardSpec,
}

impl RewardFn for GameReward {
    fn name(&self) -> &'static str {
        "game"
    }

    fn evaluate(&self, ctx: &SampleContext) -> Result<RewardBreakdown> {
        let SampleContext::Game { gt, tracked, video, rasterizer } = ctx else {
            return Err(Error::InvalidArgument(
                "game reward requires a maze sample context".into(),
            ));
        };
        let degenerate = tracked.is_empty();
        let (em, pr) = if degenerate {
            (0.0, 0.0)
        } else {
            (reward_em(&tracked.cells, gt), reward_pr(&tracked.cells, gt))
        };
        let mf = reward_mf(video, rasterizer, self.spec.mf_tau, self.spec.mf_samples)?;
        let s = &self.spec;
        let combined = s.em_weight * em + (s.pr_weight * pr + s.mf_weight * mf);
        Ok(RewardBreakdown {
            components: vec![("em".into(), em), ("pr".into(), pr), ("mf".into(), mf)],
            weights: vec![s.em_weight, s.pr_weight, s.mf_weight],
            combined,
            degenerate,
        })
    }
}

struct EmbedReward {
    spec: RewardSpec,
    embedder: Embedder,
}

impl RewardFn for EmbedReward {
    fn name(&self) -> &'static str {
        "embed"
    }

    fn evaluate(&self, ctx: &SampleContext) -> Result<RewardBreakdown> {
        let SampleContext::Nav { gen, reference } = ctx else {
            return Err(Error::InvalidArgument(
                "embedding reward requires a nav sample context".into(),
            ));
        };
        let s = &self.spec;
        let weights = EmbWeights {
            cos: s.emb_cos_weight,
            temp: s.emb_temp_weight,
            end: s.emb_end_weight,
        };
        let score = reward_emb(&self.embedder, gen, reference, weights, s.epsilon)?;
        Ok(RewardBreakdown {
            components: vec![
                ("cos".into(), score.cos),
                ("temp".into(), score.temp),
                ("end".into(), score.end),
            ],
            weights: vec![weights.cos, weights.temp, weights.end],
            combined: score.combined,
            degenerate: false,
        })
    }
}

/// Build the reward named by the spec. Unknown names are configuration
/// errors so that a typo fails fast instead of silently scoring zero.
pub fn make_reward(spec: &RewardSpec) -> Result<Box<dyn RewardFn>> {
    spec.validate()?;
    match spec.name.as_str() {
        "game" => Ok(Box::new(GameReward { spec: spec.clone() })),
        "embed" => Ok(Box::new(EmbedReward {
            embedder: Embedder::new(spec.embed_seed),
            spec: spec.clone(),
        })),
        other => Err(Error::Config(format!("unknown reward `{other}`"))),
    }
}
