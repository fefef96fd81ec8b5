//! Group-relative policy optimization over the flow policy.
//!
//! Rollouts are collected in groups per condition; rewards are normalized
//! within each group into advantages, so no value network exists anywhere.
//! The update ascends a PPO-style clipped surrogate with a closed-form
//! Gaussian KL penalty against the frozen reference policy. Collection is
//! read-only in the parameters and runs in parallel; the update itself is
//! serial and owns the parameters exclusively.

use std::time::Instant;

use rayon::prelude::*;

use crate::envgen::{nav_demo, solve_optimal, CellPath, Maze, NavScene};
use crate::error::{Error, Result};
use crate::flowgen::{sde_sample, step_logprob_value, Adam, FlowModel, SdeRollout, SdeStep};
use crate::render::{Rasterizer, Video, DEFAULT_RESOLUTION};
use crate::rewards::{make_reward, RewardBreakdown, RewardSpec, SampleContext};
use crate::rng::derive_seed;
use crate::track::extract_trajectory;

/// Hyperparameters of one training run. Defaults mirror the reference
/// configuration; desk-scale runs override sizes, never semantics.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct GrpoConfig {
    /// Rollouts per condition (G).
    pub group_size: usize,
    /// Integration steps during collection.
    pub s_train: usize,
    /// Integration steps at evaluation time.
    pub s_infer: usize,
    /// SDE noise scale; must be positive for training.
    pub noise_scale: f64,
    /// Ratio clip half-width.
    pub clip_eps: f64,
    /// KL penalty coefficient against the reference policy.
    pub beta_kl: f64,
    pub lr: f64,
    pub iterations: usize,
    /// Conditions sampled per iteration.
    pub batch_size: usize,
    pub seed: u64,
    /// Advantage-normalization std guard.
    pub eps_adv: f64,
    pub reward: RewardSpec,
    /// Observer hint: persist a checkpoint every this many iterations.
    pub checkpoint_every: usize,
}

impl Default for GrpoConfig {
    fn default() -> Self {
        GrpoConfig {
            group_size: 8,
            s_train: 30,
            s_infer: 50,
            noise_scale: 0.5,
            clip_eps: 0.2,
            beta_kl: 0.04,
            lr: 1e-4,
            iterations: 50,
            batch_size: 8,
            seed: 0,
            eps_adv: 1e-8,
            reward: RewardSpec::default(),
            checkpoint_every: 10,
        }
    }
}

impl GrpoConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.group_size < 2 {
            return fail(format!("group_size must be >= 2, got {}", self.group_size));
        }
        if self.s_train < 2 || self.s_infer < 2 {
            return fail("s_train and s_infer must be >= 2".into());
        }
        if self.s_train > self.s_infer {
            return fail(format!(
                "s_train ({}) must not exceed s_infer ({})",
                self.s_train, self.s_infer
            ));
        }
        if !(self.noise_scale > 0.0) {
            return fail(format!("noise_scale must be > 0 for training, got {}", self.noise_scale));
        }
        if !(self.clip_eps > 0.0 && self.clip_eps < 1.0) {
            return fail(format!("clip_eps must lie in (0,1), got {}", self.clip_eps));
        }
        if self.beta_kl < 0.0 {
            return fail(format!("beta_kl must be >= 0, got {}", self.beta_kl));
        }
        if !(self.lr > 0.0) {
            return fail(format!("lr must be > 0, got {}", self.lr));
        }
        if self.batch_size == 0 {
            return fail("batch_size must be >= 1".into());
        }
        if !(self.eps_adv > 0.0) {
            return fail(format!("eps_adv must be > 0, got {}", self.eps_adv));
        }
        self.reward.validate()
    }
}

/// One trainable condition: the encoding fed to the model plus everything
/// the reward needs to score a rendered rollout.
pub struct TrainTask {
    pub cond: Vec<f64>,
    pub env: TaskEnv,
}

pub enum TaskEnv {
    Maze { maze: Maze, gt: CellPath, rasterizer: Rasterizer },
    Nav { scene: NavScene, rasterizer: Rasterizer, reference: Video },
}

impl TrainTask {
    pub fn maze(maze: Maze) -> Result<TrainTask> {
        let cond = crate::flowgen::encode_maze(&maze)?;
        let gt = solve_optimal(&maze)?;
        let rasterizer = Rasterizer::maze(&maze, DEFAULT_RESOLUTION)?;
        Ok(TrainTask { cond, env: TaskEnv::Maze { maze, gt, rasterizer } })
    }

    /// `frames` fixes the reference video length; it should match the
    /// latent frame count of the model being trained.
    pub fn nav(scene: NavScene, frames: usize) -> Result<TrainTask> {
        let cond = crate::flowgen::encode_nav(&scene)?;
        let rasterizer = Rasterizer::nav(&scene, DEFAULT_RESOLUTION)?;
        let reference = rasterizer.render_video(&nav_demo(&scene, frames)?);
        Ok(TrainTask { cond, env: TaskEnv::Nav { scene, rasterizer, reference } })
    }

    pub fn rasterizer(&self) -> &Rasterizer {
        match &self.env {
            TaskEnv::Maze { rasterizer, .. } => rasterizer,
            TaskEnv::Nav { rasterizer, .. } => rasterizer,
        }
    }

    /// Scores one rendered rollout against this task's ground truth.
    pub fn score(
        &self,
        reward: &dyn crate::rewards::RewardFn,
        video: &Video,
    ) -> Result<RewardBreakdown> {
        match &self.env {
            TaskEnv::Maze { gt, rasterizer, .. } => {
                let tracked = extract_trajectory(video);
                reward.evaluate(&SampleContext::Game { gt, tracked: &tracked, video, rasterizer })
            }
            TaskEnv::Nav { reference, .. } => {
                reward.evaluate(&SampleContext::Nav { gen: video, reference })
            }
        }
    }
}

/// Collected experience for one condition: everything `grpo_update` needs,
/// with behavior-policy log-probs cached at collection time.
pub struct GroupRollout {
    pub cond: Vec<f64>,
    pub rollouts: Vec<SdeRollout>,
    pub videos: Vec<Video>,
    pub breakdowns: Vec<RewardBreakdown>,
    pub rewards: Vec<f64>,
    pub advantages: Vec<f64>,
    pub old_logps: Vec<Vec<f64>>,
}

/// Group-normalized advantages: (r - mean) / population std. Degenerate
/// groups (std below the guard) get all-zero advantages instead of a blowup;
/// ties are common early under sparse rewards.
pub fn advantages(rewards: &[f64], eps_guard: f64) -> Vec<f64> {
    assert!(rewards.len() >= 2, "advantage normalization needs a group of at least 2");
    let g = rewards.len() as f64;
    let mean = rewards.iter().sum::<f64>() / g;
    let var = rewards.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / g;
    let std = var.sqrt();
    if std < eps_guard {
        return vec![0.0; rewards.len()];
    }
    // sqrt(d^2 / var) is correctly rounded whenever d^2 / var is exact, which
    // covers every all-tie and single-winner group; d / std is not.
    rewards
        .iter()
        .map(|r| {
            let d = r - mean;
            let a = (d * d / var).sqrt();
            if d < 0.0 {
                -a
            } else {
                a
            }
        })
        .collect()
}

/// PPO-style pessimistic surrogate: min(ratio * A, clip(ratio) * A).
pub fn clip_objective(ratio: f64, advantage: f64, eps: f64) -> f64 {
    let clipped = ratio.clamp(1.0 - eps, 1.0 + eps);
    (ratio * advantage).min(clipped * advantage)
}

/// Closed-form KL between the per-step transition under `model` and under
/// `reference` (Gaussians with equal covariance): |m - m_ref|^2 / (2 var).
/// Returns the gradient in `model`'s parameters.
pub fn kl_step(
    model: &FlowModel,
    reference: &FlowModel,
    cond: &[f64],
    step: &SdeStep,
) -> Result<(f64, Vec<f64>)> {
    let var = step.sigma * step.sigma * step.dt;
    if !(var > 0.0) {
        return Err(Error::InvalidArgument(
            "per-step KL undefined at zero noise; sample with a > 0".into(),
        ));
    }
    if model.frames != reference.frames || model.cond_dim != reference.cond_dim {
        return Err(Error::InvalidArgument("policy and reference shapes differ".into()));
    }
    let eval = model.eval_drift(cond, step)?;
    let ref_mean = reference.eval_drift(cond, step)?.mean;
    let diff: Vec<f64> = eval.mean.iter().zip(&ref_mean).map(|(a, b)| a - b).collect();
    let kl = diff.iter().map(|d| d * d).sum::<f64>() / (2.0 * var);
    let dl_dmean: Vec<f64> = diff.iter().map(|d| d / var).collect();
    let mut grad = vec![0.0; model.mlp.param_count()];
    model.drift_grad(&eval, &dl_dmean, &mut grad);
    Ok((kl, grad))
}

/// Samples, renders, and scores G rollouts for one task under a frozen
/// parameter snapshot. Member work is independent and runs in parallel;
/// results keep member order, so the group is seed-deterministic.
pub fn sample_group(
    model: &FlowModel,
    task: &TrainTask,
    cfg: &GrpoConfig,
    seed: u64,
) -> Result<GroupRollout> {
    cfg.validate()?;
    let reward = make_reward(&cfg.reward)?;
    struct Member {
        rollout: SdeRollout,
        video: Video,
        breakdown: RewardBreakdown,
        old_logp: Vec<f64>,
    }
    let members: Vec<Member> = (0..cfg.group_size)
        .into_par_iter()
        .map(|i| -> Result<Member> {
            let member_seed = derive_seed(seed, &[0x6d626572, i as u64]);
            let rollout = sde_sample(model, &task.cond, cfg.s_train, cfg.noise_scale, member_seed)?;
            let latent = rollout.final_latent(model.frames)?;
            let video = task.rasterizer().render_video(&latent);
            let breakdown = task.score(reward.as_ref(), &video)?;
            let old_logp = rollout
                .steps
                .iter()
                .map(|s| step_logprob_value(model, &task.cond, s))
                .collect::<Result<Vec<f64>>>()?;
            Ok(Member { rollout, video, breakdown, old_logp })
        })
        .collect::<Result<Vec<Member>>>()?;

    let rewards: Vec<f64> = members.iter().map(|m| m.breakdown.combined).collect();
    let advs = advantages(&rewards, cfg.eps_adv);
    let mut rollouts = Vec::with_capacity(members.len());
    let mut videos = Vec::with_capacity(members.len());
    let mut breakdowns = Vec::with_capacity(members.len());
    let mut old_logps = Vec::with_capacity(members.len());
    for m in members {
        rollouts.push(m.rollout);
        videos.push(m.video);
        breakdowns.push(m.breakdown);
        old_logps.push(m.old_logp);
    }
    Ok(GroupRollout {
        cond: task.cond.clone(),
        rollouts,
        videos,
        breakdowns,
        rewards,
        advantages: advs,
        old_logps,
    })
}

/// Per-update diagnostics; also the payload of the training log.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct UpdateDiagnostics {
    pub mean_reward: f64,
    pub max_reward: f64,
    pub mean_abs_advantage: f64,
    /// Fraction of steps where the clipped branch was strictly active.
    pub clip_fraction: f64,
    pub mean_kl: f64,
    pub component_means: Vec<(String, f64)>,
}

/// Surrogate objective J(theta) over collected groups: clipped advantage
/// term minus beta_kl times the per-step KL, averaged over steps, members,
/// and groups. Returns (J, dJ/dtheta, diagnostics). The gradient treats the
/// active min-branch as locally constant, matching finite differences away
/// from clip kinks.
pub fn objective_grad(
    model: &FlowModel,
    reference: &FlowModel,
    groups: &[GroupRollout],
    cfg: &GrpoConfig,
) -> Result<(f64, Vec<f64>, UpdateDiagnostics)> {
    if groups.is_empty() {
        return Err(Error::InvalidArgument("objective over an empty batch of groups".into()));
    }
    let n_params = model.mlp.param_count();
    let mut grad = vec![0.0; n_params];
    let mut objective = 0.0;
    let mut kl_sum = 0.0;
    let mut clip_events = 0usize;
    let mut step_count = 0usize;

    for group in groups {
        let group_w = 1.0 / (groups.len() as f64 * group.rollouts.len() as f64);
        for (i, rollout) in group.rollouts.iter().enumerate() {
            let adv = group.advantages[i];
            let w = group_w / rollout.steps.len() as f64;
            for (k, step) in rollout.steps.iter().enumerate() {
                let var = step.sigma * step.sigma * step.dt;
                if !(var > 0.0) {
                    return Err(Error::InvalidArgument(
                        "collected rollout has a zero-noise step; train with a > 0".into(),
                    ));
                }
                let eval = model.eval_drift(&group.cond, step)?;
                let ref_mean = reference.eval_drift(&group.cond, step)?.mean;
                let y = step.next_state();

                let resid: Vec<f64> =
                    y.iter().zip(&eval.mean).map(|(yi, mi)| yi - mi).collect();
                let d = resid.len() as f64;
                let sq: f64 = resid.iter().map(|r| r * r).sum();
                let logp =
                    -0.5 * d * (2.0 * std::f64::consts::PI * var).ln() - sq / (2.0 * var);
                let ratio = (logp - group.old_logps[i][k]).exp();
                if !ratio.is_finite() {
                    return Err(Error::Numeric(format!(
                        "non-finite ratio at group member {i} step {k}"
                    )));
                }
                let unclipped = ratio * adv;
                let clipped = ratio.clamp(1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps) * adv;
                let surrogate = unclipped.min(clipped);
                // d surrogate / d logp: ratio * adv on the unclipped branch,
                // zero on the flat clipped branch.
                let factor = if unclipped <= clipped {
                    adv * ratio
                } else {
                    clip_events += 1;
                    0.0
                };

                let diff: Vec<f64> =
                    eval.mean.iter().zip(&ref_mean).map(|(a, b)| a - b).collect();
                let kl = diff.iter().map(|v| v * v).sum::<f64>() / (2.0 * var);

                objective += w * (surrogate - cfg.beta_kl * kl);
                kl_sum += kl;
                step_count += 1;

                // Fused upstream gradient on the transition mean:
                // d logp / dm = resid / var, d KL / dm = diff / var.
                let dl_dmean: Vec<f64> = resid
                    .iter()
                    .zip(&diff)
                    .map(|(r, dv)| w * (factor * r - cfg.beta_kl * dv) / var)
                    .collect();
                model.drift_grad(&eval, &dl_dmean, &mut grad);
            }
        }
    }

    let total_members: usize = groups.iter().map(|g| g.rollouts.len()).sum();
    let all_rewards = groups.iter().flat_map(|g| g.rewards.iter().copied());
    let diag = UpdateDiagnostics {
        mean_reward: all_rewards.clone().sum::<f64>() / total_members as f64,
        max_reward: all_rewards.fold(f64::NEG_INFINITY, f64::max),
        mean_abs_advantage: groups
            .iter()
            .flat_map(|g| g.advantages.iter())
            .map(|a| a.abs())
            .sum::<f64>()
            / total_members as f64,
        clip_fraction: clip_events as f64 / step_count as f64,
        mean_kl: kl_sum / step_count as f64,
        component_means: component_means(groups),
    };
    if !objective.is_finite() || grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::Numeric(format!(
            "non-finite objective or gradient; diagnostics: {diag:?}"
        )));
    }
    Ok((objective, grad, diag))
}

fn component_means(groups: &[GroupRollout]) -> Vec<(String, f64)> {
    let mut sums: Vec<(String, f64)> = Vec::new();
    let mut count = 0usize;
    for b in groups.iter().flat_map(|g| g.breakdowns.iter()) {
        if sums.is_empty() {
            sums = b.components.iter().map(|(n, _)| (n.clone(), 0.0)).collect();
        }
        for (slot, (_, v)) in sums.iter_mut().zip(&b.components) {
            slot.1 += v;
        }
        count += 1;
    }
    for slot in &mut sums {
        slot.1 /= count as f64;
    }
    sums
}

/// One ascent step on the surrogate objective. Adam moments persist in the
/// caller across iterations.
pub fn grpo_update(
    model: &mut FlowModel,
    reference: &FlowModel,
    groups: &[GroupRollout],
    cfg: &GrpoConfig,
    opt: &mut Adam,
) -> Result<UpdateDiagnostics> {
    let (_, mut grad, diag) = objective_grad(model, reference, groups, cfg)?;
    for g in &mut grad {
        *g = -*g;
    }
    opt.step(model.params_mut(), &grad);
    Ok(diag)
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct SftConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
}

impl Default for SftConfig {
    fn default() -> Self {
        SftConfig { epochs: 200, batch_size: 16, lr: 1e-3 }
    }
}

/// Supervised pre-training: Adam on the flow-matching loss over
/// demonstration latents. Returns the per-step loss curve. Declares
/// divergence when the loss stays above 10x its initial value for 100
/// consecutive steps.
pub fn sft_train(
    model: &mut FlowModel,
    demos: &[(Vec<f64>, Vec<f64>)],
    cfg: &SftConfig,
    seed: u64,
) -> Result<Vec<f64>> {
    use rand::seq::SliceRandom;
    use rand::Rng;

    if demos.is_empty() {
        return Err(Error::InvalidArgument("supervised training needs at least one demo".into()));
    }
    if cfg.epochs == 0 || cfg.batch_size == 0 || !(cfg.lr > 0.0) {
        return Err(Error::Config("sft epochs, batch_size, lr must be positive".into()));
    }
    let mut rng = crate::rng::rng_from(derive_seed(seed, &[0x736674]));
    let mut opt = Adam::new(cfg.lr, model.mlp.param_count());
    let mut losses = Vec::new();
    let mut order: Vec<usize> = (0..demos.len()).collect();
    let mut initial = f64::NAN;
    let mut high_streak = 0usize;

    for _epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<(Vec<f64>, Vec<f64>)> =
                chunk.iter().map(|&i| demos[i].clone()).collect();
            let (loss, grad) = crate::flowgen::fm_loss(model, &batch, rng.gen())?;
            opt.step(model.params_mut(), &grad);
            if initial.is_nan() {
                initial = loss.max(1e-12);
            }
            if loss > 10.0 * initial {
                high_streak += 1;
                if high_streak >= 100 {
                    return Err(Error::Diverged(format!(
                        "loss {loss:.3e} above 10x initial {initial:.3e} for 100 steps"
                    )));
                }
            } else {
                high_streak = 0;
            }
            losses.push(loss);
        }
    }
    Ok(losses)
}

/// One line of the training log; serialization deliberately excludes wall
/// times so identical configurations produce byte-identical logs. Timing
/// lives in the skipped fields for callers that want a separate sidecar.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct IterRecord {
    pub iteration: usize,
    pub seed: u64,
    pub mean_reward: f64,
    pub max_reward: f64,
    pub mean_abs_advantage: f64,
    pub clip_fraction: f64,
    pub mean_kl: f64,
    pub component_means: Vec<(String, f64)>,
    #[serde(skip)]
    pub collect_secs: f64,
    #[serde(skip)]
    pub update_secs: f64,
}

/// Full training loop: per iteration, sample a batch of conditions, collect
/// a group per condition, and apply one update. The reference policy is the
/// entry checkpoint and never moves. The observer runs after every
/// iteration (checkpointing, logging); its error aborts the run.
pub fn train(
    model: &mut FlowModel,
    tasks: &[TrainTask],
    cfg: &GrpoConfig,
    mut observer: impl FnMut(&IterRecord, &FlowModel) -> Result<()>,
) -> Result<Vec<IterRecord>> {
    cfg.validate()?;
    if tasks.is_empty() {
        return Err(Error::InvalidArgument("training needs a non-empty task suite".into()));
    }
    let reference = model.clone();
    let mut opt = Adam::new(cfg.lr, model.mlp.param_count());
    let mut records = Vec::with_capacity(cfg.iterations);

    for iteration in 0..cfg.iterations {
        let iter_seed = derive_seed(cfg.seed, &[0x69746572, iteration as u64]);
        let picks: Vec<usize> = if tasks.len() <= cfg.batch_size {
            (0..tasks.len()).collect()
        } else {
            let mut rng = crate::rng::rng_from(iter_seed);
            rand::seq::index::sample(&mut rng, tasks.len(), cfg.batch_size).into_vec()
        };

        let t0 = Instant::now();
        let snapshot: &FlowModel = model;
        let groups: Vec<GroupRollout> = picks
            .par_iter()
            .enumerate()
            .map(|(slot, &idx)| {
                sample_group(
                    snapshot,
                    &tasks[idx],
                    cfg,
                    derive_seed(iter_seed, &[0x67727570, slot as u64]),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        let collect_secs = t0.elapsed().as_secs_f64();

        let t1 = Instant::now();
        let diag = grpo_update(model, &reference, &groups, cfg, &mut opt)?;
        let update_secs = t1.elapsed().as_secs_f64();

        let record = IterRecord {
            iteration,
            seed: iter_seed,
            mean_reward: diag.mean_reward,
            max_reward: diag.max_reward,
            mean_abs_advantage: diag.mean_abs_advantage,
            clip_fraction: diag.clip_fraction,
            mean_kl: diag.mean_kl,
            component_means: diag.component_means,
            collect_secs,
            update_secs,
        };
        observer(&record, model)?;
        records.push(record);
    }
    Ok(records)
}
