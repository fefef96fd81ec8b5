//! Acceptance suite: one test per shipped guarantee, spanning reward
//! semantics, gradient correctness, sampler consistency, training trends,
//! and end-to-end reproducibility.
//!
//! Every test prints exactly one `ACCEPTANCE NN <name>: PASS|FAIL` line so a
//! full run (`cargo test --test acceptance -- --nocapture`) doubles as a
//! checklist. Compute-heavy criteria share one training pool of supervised
//! checkpoints and take turns on a bench lock so their runtime caps measure
//! their own work.

use std::fs;
use std::panic::{catch_unwind, resume_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::sync::{Mutex, MutexGuard, OnceLock};
use std::time::Instant;

use rand::Rng;

use flowmaze::config::{Suite, SuiteConfig};
use flowmaze::envgen::{gen_nav_scene, gen_regular_maze, make_demo, solve_optimal, Cell, CellPath};
use flowmaze::eval::{
    best_of_k, evaluate_nav_demos, evaluate_vr, metric_ac, metric_ade, metric_fde, metric_mr,
    metric_se, weighted_overall, EvalConfig, MR_TAU, SE_SIGMA,
};
use flowmaze::flowgen::analytic::{ks_critical, ks_statistic, Gauss1d};
use flowmaze::flowgen::{
    encode_maze, fm_loss, ode_sample, sde_sample, sde_sample_field, sigma_schedule, step_logprob,
    step_logprob_value, FlowModel, SdeStep, MAZE_COND_DIM,
};
use flowmaze::grpo::{
    advantages, kl_step, objective_grad, sft_train, train, GroupRollout, GrpoConfig, SftConfig,
    TrainTask,
};
use flowmaze::render::{Rasterizer, Video};
use flowmaze::rewards::{
    make_reward, reward_em, reward_emb, reward_end, reward_pr, reward_temp, EmbWeights, Embedder,
    RewardSpec,
};
use flowmaze::rng::{derive_seed, rng_from};

/// Runs one criterion body and prints its verdict line. Panics propagate so
/// the harness still reports the failure; the line is the human summary.
fn criterion<T>(id: usize, name: &str, body: impl FnOnce() -> T) -> T {
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(body));
    let verdict = if outcome.is_ok() { "PASS" } else { "FAIL" };
    println!("ACCEPTANCE {id:02} {name}: {verdict} ({:.1}s)", start.elapsed().as_secs_f64());
    match outcome {
        Ok(value) => value,
        Err(panic) => resume_unwind(panic),
    }
}

/// Bench lock for criteria with runtime caps or multi-minute training: held
/// for the duration of their measured work so concurrent tests cannot steal
/// cores and inflate the caps. Recovered on poison so one failed criterion
/// does not cascade into the others.
static BENCH: Mutex<()> = Mutex::new(());

fn bench_slot() -> MutexGuard<'static, ()> {
    BENCH.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
}

// ---------------------------------------------------------------------------
// Shared training pool
//
// The RL criteria all start from the same five supervised checkpoints on the
// same 40-train / 20-held-out maze suite, so those are built once. The
// recipe matches the shipped `grpo_maze` preset scaled to desk size: 12
// frames holds every optimal path up to 6x6, and 3000 epochs of supervised
// training reaches near-perfect training-set decoding while leaving the
// held-out exact-match rate near its floor.
// ---------------------------------------------------------------------------

const FRAMES: usize = 12;
const HIDDEN: usize = 128;
/// Two-stage supervised schedule: a long exploratory stage at the base
/// learning rate, then a polish stage at a fifth of it. The polish stage is
/// what pushes training-set decoding to saturation; single-stage checkpoints
/// plateau too far from the data for the RL phase to find a signal.
const SFT_STAGE1: usize = 6000;
const SFT_STAGE2: usize = 4000;
const SUITE_SEED: u64 = 17;
const TRAIN_SEEDS: [u64; 5] = [1, 2, 3, 4, 5];
const RL_ITERATIONS: usize = 1500;

struct Pool {
    train: Vec<TrainTask>,
    heldout: Vec<TrainTask>,
    models: Vec<FlowModel>,
    /// Wall seconds spent on supervised training, per seed.
    sft_secs: Vec<f64>,
    /// Held-out mean exact match of each supervised checkpoint.
    baseline_em: Vec<f64>,
}

fn suite_config() -> SuiteConfig {
    SuiteConfig {
        train_count: 40,
        eval_count: 20,
        min_size: 4,
        max_size: 6,
        frames: FRAMES,
        ..SuiteConfig::default()
    }
}

fn tasks_of(suite: &Suite) -> (Vec<TrainTask>, Vec<TrainTask>) {
    (suite.train_tasks().unwrap(), suite.heldout_tasks().unwrap())
}

/// Held-out exact match averaged over ten deterministic evaluation rounds.
/// One 20-maze round quantizes EM to 5-point steps and is hostage to the
/// per-round noise draws; the ten-round mean resolves half-point differences.
fn mean_em(model: &FlowModel, tasks: &[TrainTask]) -> f64 {
    let mut total = 0.0;
    for round in 0..10u64 {
        let cfg =
            EvalConfig { steps: 30, noise_scale: 0.0, seed: 7000 + round, ..EvalConfig::default() };
        total += evaluate_vr(model, tasks, &cfg).unwrap().em;
    }
    total / 10.0
}

fn pool() -> &'static Pool {
    static POOL: OnceLock<Pool> = OnceLock::new();
    POOL.get_or_init(|| {
        let suite = suite_config().build(SUITE_SEED).unwrap();
        let demos: Vec<(Vec<f64>, Vec<f64>)> = suite
            .train
            .iter()
            .map(|m| {
                let path = solve_optimal(m).unwrap();
                (make_demo(m, &path, FRAMES).unwrap().flatten(), encode_maze(m).unwrap())
            })
            .collect();
        let (train, heldout) = tasks_of(&suite);
        let mut models = Vec::new();
        let mut sft_secs = Vec::new();
        let mut baseline_em = Vec::new();
        for &seed in &TRAIN_SEEDS {
            let t0 = Instant::now();
            let mut model = FlowModel::new(FRAMES, MAZE_COND_DIM, HIDDEN, seed);
            let stage1 = SftConfig { epochs: SFT_STAGE1, batch_size: 8, lr: 1e-3 };
            sft_train(&mut model, &demos, &stage1, seed + 1).unwrap();
            let stage2 = SftConfig { epochs: SFT_STAGE2, batch_size: 8, lr: 2e-4 };
            sft_train(&mut model, &demos, &stage2, seed + 2).unwrap();
            sft_secs.push(t0.elapsed().as_secs_f64());
            baseline_em.push(mean_em(&model, &heldout));
            models.push(model);
        }
        Pool { train, heldout, models, sft_secs, baseline_em }
    })
}

/// One finished RL run and the numbers the trend criteria compare.
struct Arm {
    final_em: f64,
    /// Mean training reward over the final tenth of the run; the last single
    /// iteration alone is hostage to one batch draw.
    tail_reward: f64,
    collect_secs: f64,
    wall_secs: f64,
}

fn rl_config(seed: u64, s_train: usize, reward: RewardSpec) -> GrpoConfig {
    GrpoConfig {
        group_size: 8,
        s_train,
        s_infer: 30,
        noise_scale: 0.5,
        clip_eps: 0.2,
        beta_kl: 0.04,
        lr: 1e-4,
        iterations: RL_ITERATIONS,
        batch_size: 8,
        seed: 100 + seed,
        reward,
        ..GrpoConfig::default()
    }
}

fn run_arm(start: &FlowModel, heldout: &[TrainTask], tasks: &[TrainTask], cfg: &GrpoConfig) -> Arm {
    let mut model = start.clone();
    let t0 = Instant::now();
    let records = train(&mut model, tasks, cfg, |_, _| Ok(())).unwrap();
    let wall_secs = t0.elapsed().as_secs_f64();
    let tail = records.len() - records.len() / 10;
    let tail_reward = records[tail..].iter().map(|r| r.mean_reward).sum::<f64>()
        / records[tail..].len() as f64;
    Arm {
        final_em: mean_em(&model, heldout),
        tail_reward,
        collect_secs: records.iter().map(|r| r.collect_secs).sum(),
        wall_secs,
    }
}

/// Dense-reward arms from the supervised checkpoints, shared by the RL gain,
/// reward-design, and collection-budget criteria.
fn dense_arms() -> &'static Vec<Arm> {
    static ARMS: OnceLock<Vec<Arm>> = OnceLock::new();
    ARMS.get_or_init(|| {
        let p = pool();
        TRAIN_SEEDS
            .iter()
            .zip(&p.models)
            .map(|(&seed, model)| {
                let cfg = rl_config(seed, 10, RewardSpec::default());
                run_arm(model, &p.heldout, &p.train, &cfg)
            })
            .collect()
    })
}

// ---------------------------------------------------------------------------
// 01: reward oracle equivalence
// ---------------------------------------------------------------------------

/// Direct transcription of the exact-match definition: 1 when the predicted
/// cell sequence is identical to the ground truth, 0 otherwise.
fn oracle_em(pred: &[Cell], gt: &CellPath) -> f64 {
    if pred.len() == gt.0.len() && pred.iter().zip(&gt.0).all(|(a, b)| a == b) {
        1.0
    } else {
        0.0
    }
}

/// Direct transcription of the progress-ratio definition: leading positions
/// where prediction and ground truth agree, over the ground-truth length; a
/// position past the end of the prediction cannot agree.
fn oracle_pr(pred: &[Cell], gt: &CellPath) -> f64 {
    let mut matched = 0usize;
    for (i, g) in gt.0.iter().enumerate() {
        if i < pred.len() && pred[i] == *g {
            matched += 1;
        } else {
            break;
        }
    }
    matched as f64 / gt.0.len() as f64
}

#[test]
fn reward_oracle_equivalence() {
    criterion(1, "reward oracle equivalence", || {
        let _slot = bench_slot();
        let start = Instant::now();

        // Five fixed 4x4 mazes. Generated goals sit in the far corner, which
        // puts every optimal path at 7+ cells; two mazes get their goal moved
        // onto the fifth cell of that path so ground truths of length 5 fall
        // inside the enumerated range and the exact-match branch is exercised
        // in both directions. A perfect maze has one path between any two
        // cells, so the relocated ground truth is just the prefix.
        let mut mazes = Vec::new();
        for (i, seed) in [11u64, 22, 33, 44, 55].into_iter().enumerate() {
            let mut maze = gen_regular_maze(4, 4, seed).unwrap();
            if i >= 3 {
                let full = solve_optimal(&maze).unwrap();
                maze.goal = full.0[4];
            }
            let gt = solve_optimal(&maze).unwrap();
            mazes.push((maze, gt));
        }
        assert!(mazes.iter().filter(|(_, gt)| gt.len() <= 6).count() == 2);

        let cells: Vec<Cell> = (0..16).map(|i| Cell::new(i / 4, i % 4)).collect();
        let mut mismatches = 0usize;
        let mut exact_hits = 0usize;
        let mut checked = 0usize;
        for (_, gt) in &mazes {
            // Odometer over all 16^len sequences for len 1..=6, mutating one
            // position per step.
            for len in 1..=6usize {
                let mut digits = vec![0usize; len];
                let mut pred = vec![cells[0]; len];
                'seq: loop {
                    let em = reward_em(&pred, gt);
                    let pr = reward_pr(&pred, gt);
                    if em != oracle_em(&pred, gt) || pr != oracle_pr(&pred, gt) {
                        mismatches += 1;
                    }
                    if em == 1.0 {
                        exact_hits += 1;
                    }
                    checked += 1;
                    let mut pos = 0;
                    loop {
                        digits[pos] += 1;
                        if digits[pos] < 16 {
                            pred[pos] = cells[digits[pos]];
                            break;
                        }
                        digits[pos] = 0;
                        pred[pos] = cells[0];
                        pos += 1;
                        if pos == len {
                            break 'seq;
                        }
                    }
                }
            }
        }

        // 16 + 16^2 + ... + 16^6 sequences per maze.
        assert_eq!(checked, 5 * 17_895_696);
        assert_eq!(mismatches, 0, "reward implementations disagree with their definitions");
        // Each relocated-goal maze hits its ground truth exactly once.
        assert_eq!(exact_hits, 2, "enumeration failed to cover the exact-match case");
        let secs = start.elapsed().as_secs_f64();
        assert!(secs < 10.0, "enumeration took {secs:.1}s, cap is 10s");
    });
}

// ---------------------------------------------------------------------------
// 02: gradient correctness against central finite differences
// ---------------------------------------------------------------------------

/// Relative disagreement between an analytic gradient and a central
/// finite-difference probe of `f`, measured in vector norm.
fn fd_rel_error(
    model: &mut FlowModel,
    grad: &[f64],
    mut f: impl FnMut(&FlowModel) -> f64,
) -> f64 {
    let h = 1e-5;
    let n = model.params().len();
    let mut fd = vec![0.0; n];
    for i in 0..n {
        let saved = model.params()[i];
        model.params_mut()[i] = saved + h;
        let up = f(model);
        model.params_mut()[i] = saved - h;
        let down = f(model);
        model.params_mut()[i] = saved;
        fd[i] = (up - down) / (2.0 * h);
    }
    let diff: f64 = grad.iter().zip(&fd).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    let scale: f64 = fd.iter().map(|v| v * v).sum::<f64>().sqrt();
    diff / scale.max(1e-10)
}

/// Small random model for derivative probes: 2 frames, 3 condition values,
/// hidden width 4, so a full finite-difference sweep touches ~150 params.
fn probe_model(seed: u64) -> FlowModel {
    FlowModel::new(2, 3, 4, seed)
}

fn random_vec(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// A synthetic recorded transition with positive noise, positioned away from
/// the time-grid endpoints so every term of the log-density is smooth.
fn probe_step(rng: &mut impl Rng, behavior: &FlowModel, cond: &[f64]) -> SdeStep {
    let dim = behavior.latent_dim();
    let t = rng.gen_range(0.2..0.8);
    let dt = 0.03;
    let sigma = sigma_schedule(t, 0.4).unwrap();
    let x = random_vec(rng, dim);
    let v = behavior.velocity(&x, t, cond);
    let mean: Vec<f64> = x.iter().zip(&v).map(|(xi, vi)| xi - vi * dt).collect();
    let noise: Vec<f64> = (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect();
    SdeStep { x, mean, noise, sigma, dt, t }
}

#[test]
fn gradients_match_finite_differences() {
    criterion(2, "gradients match finite differences", || {
        let _slot = bench_slot();
        let start = Instant::now();
        const TOL: f64 = 1e-4;
        const INSTANCES: u64 = 100;

        for i in 0..INSTANCES {
            let mut rng = rng_from(derive_seed(0x6664, &[i]));

            // Flow-matching loss over a two-demo batch; the internal noise
            // draws are a pure function of the batch seed, so the value is
            // a deterministic function of the parameters.
            let mut model = probe_model(derive_seed(1, &[i]));
            let dim = model.latent_dim();
            let batch: Vec<(Vec<f64>, Vec<f64>)> = (0..2)
                .map(|_| (random_vec(&mut rng, dim), random_vec(&mut rng, 3)))
                .collect();
            let loss_seed = rng.gen();
            let (_, grad) = fm_loss(&model, &batch, loss_seed).unwrap();
            let err = fd_rel_error(&mut model, &grad, |m| fm_loss(m, &batch, loss_seed).unwrap().0);
            assert!(err <= TOL, "fm_loss instance {i}: relative error {err:.2e}");

            // Per-step log-density of a transition recorded under a different
            // (behavior) model, scored under the probe model.
            let behavior = probe_model(derive_seed(2, &[i]));
            let cond = random_vec(&mut rng, 3);
            let step = probe_step(&mut rng, &behavior, &cond);
            let (_, grad) = step_logprob(&model, &cond, &step).unwrap();
            let err = fd_rel_error(&mut model, &grad, |m| {
                step_logprob_value(m, &cond, &step).unwrap()
            });
            assert!(err <= TOL, "step_logprob instance {i}: relative error {err:.2e}");

            // Per-step KL against a frozen reference.
            let reference = probe_model(derive_seed(3, &[i]));
            let (_, grad) = kl_step(&model, &reference, &cond, &step).unwrap();
            let err = fd_rel_error(&mut model, &grad, |m| {
                kl_step(m, &reference, &cond, &step).unwrap().0
            });
            assert!(err <= TOL, "kl_step instance {i}: relative error {err:.2e}");

            // Full surrogate objective over one collected group. Rollouts
            // come from the behavior model so the importance ratios sit away
            // from 1, exercising both clip branches across instances.
            let cfg = GrpoConfig {
                group_size: 3,
                s_train: 4,
                s_infer: 8,
                noise_scale: 0.4,
                clip_eps: 0.2,
                beta_kl: 0.03,
                seed: i,
                ..GrpoConfig::default()
            };
            let rollouts: Vec<_> = (0..3)
                .map(|g| sde_sample(&behavior, &cond, 4, 0.4, derive_seed(i, &[g])).unwrap())
                .collect();
            let old_logps: Vec<Vec<f64>> = rollouts
                .iter()
                .map(|r| {
                    r.steps
                        .iter()
                        .map(|s| step_logprob_value(&behavior, &cond, s).unwrap())
                        .collect()
                })
                .collect();
            let rewards = vec![0.0, 0.5, 1.0];
            let group = GroupRollout {
                cond: cond.clone(),
                rollouts,
                videos: Vec::new(),
                breakdowns: Vec::new(),
                advantages: advantages(&rewards, 1e-8),
                rewards,
                old_logps,
            };
            let groups = [group];
            let (_, grad, _) = objective_grad(&model, &reference, &groups, &cfg).unwrap();
            let err = fd_rel_error(&mut model, &grad, |m| {
                objective_grad(m, &reference, &groups, &cfg).unwrap().0
            });
            assert!(err <= TOL, "objective instance {i}: relative error {err:.2e}");
        }

        let secs = start.elapsed().as_secs_f64();
        assert!(secs < 60.0, "finite-difference sweep took {secs:.1}s, cap is 60s");
    });
}

// ---------------------------------------------------------------------------
// 03: zero-noise SDE equals the ODE bitwise
// ---------------------------------------------------------------------------

#[test]
fn zero_noise_sde_matches_ode_exactly() {
    criterion(3, "zero-noise sde equals ode exactly", || {
        for i in 0..100u64 {
            let mut rng = rng_from(derive_seed(0x736f, &[i]));
            let frames = rng.gen_range(2..=4);
            let cond_dim = rng.gen_range(1..=6);
            let hidden = rng.gen_range(3..=8);
            let model = FlowModel::new(frames, cond_dim, hidden, rng.gen());
            let cond = random_vec(&mut rng, cond_dim);
            let steps = rng.gen_range(2..=12);
            let seed = rng.gen();
            let sde = sde_sample(&model, &cond, steps, 0.0, seed).unwrap();
            let ode = ode_sample(&model, &cond, steps, seed).unwrap();
            assert_eq!(
                sde.final_latent(frames).unwrap(),
                ode,
                "triple {i}: zero-noise SDE diverged from the ODE"
            );
        }
    });
}

// ---------------------------------------------------------------------------
// 04: noise injection preserves the terminal marginal
// ---------------------------------------------------------------------------

#[test]
fn sde_preserves_the_analytic_marginal() {
    criterion(4, "sde preserves the analytic marginal", || {
        let _slot = bench_slot();
        let start = Instant::now();
        const FIELD: Gauss1d = Gauss1d { mu: 1.5, s: 0.7 };
        const N: usize = 5000;
        for (a, base_seed) in [(0.25, 0x6b3101u64), (0.5, 0x6b3102)] {
            let samples: Vec<f64> = (0..N)
                .map(|i| {
                    sde_sample_field(&FIELD, 100, a, derive_seed(base_seed, &[i as u64]))
                        .unwrap()
                        .final_x[0]
                })
                .collect();
            let d = ks_statistic(&samples, |x| FIELD.data_cdf(x));
            let crit = ks_critical(N, 0.01);
            assert!(d < crit, "a={a}: KS statistic {d:.4} over the 1% critical value {crit:.4}");
        }
        let secs = start.elapsed().as_secs_f64();
        assert!(secs < 30.0, "marginal check took {secs:.1}s, cap is 30s");
    });
}

// ---------------------------------------------------------------------------
// 05: advantage normalization identities
// ---------------------------------------------------------------------------

#[test]
fn advantage_normalization_identities() {
    criterion(5, "advantage normalization identities", || {
        // All-tie groups collapse to zero advantages regardless of level.
        for level in [0.0, 0.3, 1.0] {
            for g in [2usize, 4, 8] {
                assert_eq!(advantages(&vec![level; g], 1e-8), vec![0.0; g]);
            }
        }

        // A single winner scores exactly sqrt(G-1); every loser is its
        // negative share. The winner value is exact for all three sizes.
        for g in [2usize, 4, 8] {
            let mut rewards = vec![0.0; g];
            rewards[0] = 1.0;
            let adv = advantages(&rewards, 1e-8);
            assert_eq!(adv[0], ((g - 1) as f64).sqrt(), "winner advantage, G={g}");
            // Mean: exact zero for G in {2, 4}; G=8 rounds 1/sqrt(7) and the
            // sum lands within one epsilon of zero.
            let sum: f64 = adv.iter().sum();
            if g == 8 {
                assert!(sum.abs() <= f64::EPSILON, "G=8 mean off by {sum:.3e}");
            } else {
                assert_eq!(sum, 0.0, "G={g} mean must be exactly zero");
            }
            // Unit population variance up to one rounding of the square.
            let msq: f64 = adv.iter().map(|a| a * a).sum::<f64>() / g as f64;
            assert!((msq - 1.0).abs() <= 4.0 * f64::EPSILON, "G={g} variance {msq}");
        }

        // Random non-degenerate groups: mean and population std stay pinned
        // at float precision across sizes and reward scales.
        for i in 0..200u64 {
            let mut rng = rng_from(derive_seed(0x616476, &[i]));
            let g = rng.gen_range(2..=16);
            let scale = 10f64.powi(rng.gen_range(-2..3));
            let rewards: Vec<f64> = (0..g).map(|_| rng.gen_range(0.0..scale)).collect();
            let adv = advantages(&rewards, 1e-8);
            if adv.iter().all(|a| *a == 0.0) {
                continue; // degenerate guard fired; covered above
            }
            let mean = adv.iter().sum::<f64>() / g as f64;
            let msq = adv.iter().map(|a| a * a).sum::<f64>() / g as f64;
            assert!(mean.abs() <= 1e-12, "instance {i}: mean {mean:.3e}");
            assert!((msq - 1.0).abs() <= 1e-12, "instance {i}: variance {msq}");
        }
    });
}

// ---------------------------------------------------------------------------
// 06-09: training trend criteria (shared pool and dense arms)
// ---------------------------------------------------------------------------

#[test]
fn rl_improves_held_out_exact_match() {
    criterion(6, "rl improves held-out exact match", || {
        let _slot = bench_slot();
        let p = pool();
        let arms = dense_arms();

        // Budget model: the five seed pipelines are independent, so on an
        // eight-core machine they run side by side and the wall clock is the
        // slowest single pipeline. The suite itself runs the seeds
        // sequentially, which keeps each measurement uncontended.
        let makespan = (0..TRAIN_SEEDS.len())
            .map(|i| p.sft_secs[i] + arms[i].wall_secs)
            .fold(0.0f64, f64::max);
        assert!(makespan <= 900.0, "slowest seed pipeline took {makespan:.0}s, cap is 900s");

        let mut wins = 0;
        for (i, arm) in arms.iter().enumerate() {
            let gain = arm.final_em - p.baseline_em[i];
            println!(
                "  seed {}: held-out EM {:.1} -> {:.1} ({:+.1})",
                TRAIN_SEEDS[i], p.baseline_em[i], arm.final_em, gain
            );
            if gain >= 10.0 {
                wins += 1;
            }
        }
        assert!(wins >= 4, "only {wins}/5 seeds gained >= 10 EM points");
    });
}

#[test]
fn cold_start_rl_stays_weak() {
    criterion(7, "cold-start rl stays weak", || {
        let _slot = bench_slot();
        let p = pool();
        let mut weak = 0;
        for &seed in &TRAIN_SEEDS {
            let start = FlowModel::new(FRAMES, MAZE_COND_DIM, HIDDEN, derive_seed(0x636f, &[seed]));
            let cfg = rl_config(seed, 10, RewardSpec::default());
            let arm = run_arm(&start, &p.heldout, &p.train, &cfg);
            println!("  seed {seed}: cold-start held-out EM {:.1}", arm.final_em);
            if arm.final_em < 10.0 {
                weak += 1;
            }
        }
        assert!(weak >= 4, "only {weak}/5 cold starts stayed under 10 EM");
    });
}

#[test]
fn dense_reward_matches_or_beats_exact_match_only() {
    criterion(8, "dense reward matches or beats exact-match-only", || {
        let _slot = bench_slot();
        let p = pool();
        let dense = dense_arms();
        let mut wins = 0;
        for (i, &seed) in TRAIN_SEEDS.iter().enumerate() {
            // Same seed as the dense arm: identical initial conditions and
            // noise stream, so the reward definition is the only difference.
            let cfg = rl_config(seed, 10, RewardSpec::em_only());
            let em_only = run_arm(&p.models[i], &p.heldout, &p.train, &cfg);
            println!(
                "  seed {seed}: reward dense {:.3} vs em-only {:.3}; EM dense {:.1} vs {:.1}",
                dense[i].tail_reward, em_only.tail_reward, dense[i].final_em, em_only.final_em
            );
            if dense[i].tail_reward >= em_only.tail_reward && dense[i].final_em >= em_only.final_em
            {
                wins += 1;
            }
        }
        assert!(wins >= 4, "dense reward won only {wins}/5 seeds");
    });
}

#[test]
fn short_collection_matches_full_collection() {
    criterion(9, "short collection matches full collection", || {
        let _slot = bench_slot();
        let p = pool();
        let short = dense_arms();
        let mut close = 0;
        let (mut short_collect, mut full_collect) = (0.0, 0.0);
        for (i, &seed) in TRAIN_SEEDS.iter().enumerate() {
            let cfg = rl_config(seed, 30, RewardSpec::default());
            let full = run_arm(&p.models[i], &p.heldout, &p.train, &cfg);
            let gap = (short[i].final_em - full.final_em).abs();
            println!(
                "  seed {seed}: EM 10-step {:.1} vs 30-step {:.1} (gap {:.1})",
                short[i].final_em, full.final_em, gap
            );
            if gap <= 5.0 {
                close += 1;
            }
            short_collect += short[i].collect_secs;
            full_collect += full.collect_secs;
        }
        assert!(close >= 4, "EM gap exceeded 5 points on {}/5 seeds", 5 - close);
        let ratio = short_collect / full_collect;
        assert!(
            ratio <= 0.40,
            "10-step collection used {:.0}% of the 30-step collection time",
            100.0 * ratio
        );
    });
}

// ---------------------------------------------------------------------------
// 10: embedding reward properties
// ---------------------------------------------------------------------------

fn reference_video(ras: &Rasterizer, positions: &[[f64; 2]]) -> Video {
    let frames = positions.iter().map(|p| ras.render_frame(*p, &[0.0; 4]).0).collect();
    Video { frames, geometry: ras.geometry(), clamp_warnings: 0 }
}

#[test]
fn embedding_reward_properties() {
    criterion(10, "embedding reward properties", || {
        let embedder = Embedder::new(7);
        for seed in 0..100u64 {
            let scene = gen_nav_scene(seed).unwrap();
            let ras = Rasterizer::nav(&scene, 32).unwrap();
            let video = reference_video(&ras, &scene.reference);

            // Self-similarity is exactly 1 in every component.
            let score =
                reward_emb(&embedder, &video, &video, EmbWeights::default(), 1e-8).unwrap();
            assert_eq!(score.combined, 1.0, "seed {seed}: self-score drifted off 1.0");

            // Endpoint fidelity never rises as the final position walks away
            // from the reference endpoint along a fixed ray. Only the last
            // frame changes, so the endpoint embedding is recomputed in
            // place. The ray points toward the room center to stay inside
            // render bounds.
            let er = embedder.embed_video(&video);
            let end = *scene.reference.last().unwrap();
            let to_center = [5.0 - end[0], 5.0 - end[1]];
            let norm = (to_center[0].powi(2) + to_center[1].powi(2)).sqrt();
            let dir = if norm > 1e-9 {
                [to_center[0] / norm, to_center[1] / norm]
            } else {
                [std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2]
            };
            let mut prev = f64::INFINITY;
            for k in 0..10 {
                let d = 0.25 * k as f64;
                let pos = [end[0] + d * dir[0], end[1] + d * dir[1]];
                let frame = ras.render_frame(pos, &[0.0; 4]).0;
                let mut eg = er.clone();
                *eg.last_mut().unwrap() = embedder.embed_frame(&frame);
                let r_end = reward_end(&eg, &er);
                assert!(
                    r_end <= prev + 1e-12,
                    "seed {seed} step {k}: endpoint reward rose {prev:.6} -> {r_end:.6}"
                );
                prev = r_end;
            }
        }

        // Two static videos have empty displacement profiles; the epsilon
        // guard keeps the temporal score exactly 1 instead of dividing by
        // zero, even when the frames differ between the videos.
        for seed in [3u64, 5, 9] {
            let scene = gen_nav_scene(seed).unwrap();
            let ras = Rasterizer::nav(&scene, 32).unwrap();
            let still_a = reference_video(&ras, &vec![scene.start; 12]);
            let still_b = reference_video(&ras, &vec![scene.landmark; 12]);
            let ea = embedder.embed_video(&still_a);
            let eb = embedder.embed_video(&still_b);
            assert_eq!(reward_temp(&ea, &eb, 1e-8), 1.0, "seed {seed}");
        }
    });
}

// ---------------------------------------------------------------------------
// 11: best-of-K scaling
// ---------------------------------------------------------------------------

#[test]
fn best_of_k_scaling_is_monotone() {
    criterion(11, "best-of-k scaling is monotone", || {
        let _slot = bench_slot();
        let p = pool();
        let model = &p.models[0];
        // A fresh 50-maze suite from a different master seed: the scaling
        // claim is about sampling budget, not about the training split.
        let suite =
            SuiteConfig { train_count: 30, eval_count: 20, ..suite_config() }.build(23).unwrap();
        let (mut mazes, extra) = tasks_of(&suite);
        mazes.extend(extra);
        assert_eq!(mazes.len(), 50);

        let reward = make_reward(&RewardSpec::default()).unwrap();
        let ks = [1usize, 4, 8, 12, 16];
        let mut strict = 0;
        for (i, task) in mazes.iter().enumerate() {
            let cfg = EvalConfig {
                steps: 30,
                noise_scale: 0.5,
                seed: derive_seed(0x626f6b, &[i as u64]),
                ..EvalConfig::default()
            };
            let curve = best_of_k(model, task, &ks, &cfg, reward.as_ref()).unwrap();
            assert!(
                curve.best_rewards.windows(2).all(|w| w[1] >= w[0]),
                "maze {i}: best-of-K curve decreased: {:?}",
                curve.best_rewards
            );
            if curve.best_rewards[ks.len() - 1] > curve.best_rewards[0] {
                strict += 1;
            }
        }
        assert!(strict >= 35, "only {strict}/50 mazes improved strictly from K=1 to K=16");
    });
}

// ---------------------------------------------------------------------------
// 12: navigation metric identities and ranges
// ---------------------------------------------------------------------------

#[test]
fn navigation_metric_identities_and_ranges() {
    criterion(12, "navigation metric identities and ranges", || {
        // A perfect prediction is perfect in every metric, exactly.
        let line: Vec<[f64; 2]> =
            (0..15).map(|i| [0.5 * i as f64, (0.3 * i as f64).sin() + 4.0]).collect();
        assert_eq!(metric_ade(&line, &line).unwrap(), 0.0);
        assert_eq!(metric_fde(&line, &line).unwrap(), 0.0);
        assert!(!metric_mr(0.0, MR_TAU));
        assert_eq!(metric_se(0.0, SE_SIGMA), 1.0);
        assert_eq!(metric_ac(&line, &line).unwrap(), 1.0);
        assert_eq!(weighted_overall(1.0, 1.0, false, 0.0, 0.0), 1.0);

        // The same identities hold end to end when the evaluation loop scores
        // each scene's own reference track.
        let scenes: Vec<TrainTask> = (0..5u64)
            .map(|s| TrainTask::nav(gen_nav_scene(s).unwrap(), FRAMES).unwrap())
            .collect();
        let report = evaluate_nav_demos(&scenes, &EvalConfig::default()).unwrap();
        assert_eq!(
            (report.ade, report.fde, report.mr, report.se, report.ac, report.wo),
            (0.0, 0.0, 0.0, 1.0, 1.0, 1.0)
        );
        assert_eq!(report.samples, 5);

        // Randomized tracks keep every metric inside its declared interval.
        for trial in 0..1000u64 {
            let mut rng = rng_from(derive_seed(0x6e6d, &[trial]));
            let mut track = |n: usize| -> Vec<[f64; 2]> {
                (0..n).map(|_| [rng.gen_range(-12.0..12.0), rng.gen_range(-12.0..12.0)]).collect()
            };
            let pred = track(rng.gen_range(2..=20));
            let gt = track(rng.gen_range(2..=20));
            let ade = metric_ade(&pred, &gt).unwrap();
            let fde = metric_fde(&pred, &gt).unwrap();
            let se = metric_se(fde, SE_SIGMA);
            let ac = metric_ac(&pred, &gt).unwrap();
            let wo = weighted_overall(ac, se, metric_mr(fde, MR_TAU), ade, fde);
            assert!(ade.is_finite() && ade >= 0.0, "trial {trial}: ade {ade}");
            assert!(fde.is_finite() && fde >= 0.0, "trial {trial}: fde {fde}");
            assert!((0.0..=1.0).contains(&se), "trial {trial}: se {se}");
            assert!((0.0..=1.0).contains(&ac), "trial {trial}: ac {ac}");
            assert!((0.0..=1.0).contains(&wo), "trial {trial}: wo {wo}");
        }
    });
}

// ---------------------------------------------------------------------------
// 13: end-to-end byte reproducibility
// ---------------------------------------------------------------------------

const REPRO_CONFIG: &str = r#"
experiment = "acceptance-repro"
master_seed = 29

[suite]
train_count = 6
eval_count = 3
nav_count = 0
min_size = 3
max_size = 4
frames = 12

[model]
hidden = 16

[sft]
epochs = 120
batch_size = 3
lr = 1e-3

[grpo]
group_size = 2
s_train = 6
s_infer = 10
iterations = 3
batch_size = 3
checkpoint_every = 10

[eval]
steps = 10
"#;

fn run_pipeline(root: &Path, config: &Path) -> Vec<(String, Vec<u8>)> {
    let bin = env!("CARGO_BIN_EXE_flowmaze");
    let s = |p: &Path| p.to_str().unwrap().to_string();
    let data = root.join("data");
    let sft = root.join("sft");
    let grpo = root.join("grpo");
    let eval_dir = root.join("eval");
    let steps: Vec<Vec<String>> = vec![
        vec!["gen-data".into(), "--config".into(), s(config), "--out".into(), s(&data)],
        vec![
            "sft".into(), "--config".into(), s(config),
            "--data".into(), s(&data), "--out".into(), s(&sft),
        ],
        vec![
            "grpo".into(), "--config".into(), s(config), "--data".into(), s(&data),
            "--checkpoint".into(), s(&sft.join("sft.ckpt")), "--out".into(), s(&grpo),
        ],
        vec![
            "eval".into(), "--config".into(), s(config), "--data".into(), s(&data),
            "--checkpoint".into(), s(&grpo.join("grpo.ckpt")), "--out".into(), s(&eval_dir),
        ],
    ];
    for args in steps {
        let out = Command::new(bin).args(&args).output().expect("binary failed to launch");
        assert!(
            out.status.success(),
            "{args:?} failed: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    [
        data.join("manifest.json"),
        data.join("demos.jsonl"),
        sft.join("sft_log.jsonl"),
        grpo.join("grpo_log.jsonl"),
        eval_dir.join("vr_report.json"),
        eval_dir.join("vr_report.csv"),
    ]
    .into_iter()
    .map(|p| {
        let name = p.file_name().unwrap().to_string_lossy().into_owned();
        (name, fs::read(&p).unwrap_or_else(|e| panic!("missing artifact {}: {e}", p.display())))
    })
    .collect()
}

#[test]
fn pipeline_runs_are_byte_reproducible() {
    criterion(13, "pipeline runs are byte reproducible", || {
        let _slot = bench_slot();
        let tmp = tempfile::TempDir::new().unwrap();
        let config = tmp.path().join("config.toml");
        fs::write(&config, REPRO_CONFIG).unwrap();
        let first = run_pipeline(&tmp.path().join("a"), &config);
        let second = run_pipeline(&tmp.path().join("b"), &config);
        for ((name, a), (_, b)) in first.iter().zip(&second) {
            assert_eq!(a, b, "{name} differs between identical pipeline runs");
        }
    });
}
