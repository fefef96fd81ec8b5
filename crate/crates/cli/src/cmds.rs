//! One function per subcommand. Each resolves its config, runs the library,
//! and leaves a self-describing artifact tree: `run.json` plus the
//! command-specific outputs.

use std::fs;
use std::io::Write;
use std::path::Path;

use flowmaze::config::{load_config, ExperimentConfig, Suite};
use flowmaze::envgen::solve_optimal;
use flowmaze::eval::{best_of_k, evaluate_nav, evaluate_vr, EvalConfig};
use flowmaze::flowgen::{
    encode_maze, load_checkpoint, save_checkpoint, FlowModel, MAZE_COND_DIM, NAV_COND_DIM,
};
use flowmaze::grpo::{sft_train, train, TrainTask};
use flowmaze::rewards::make_reward;
use flowmaze::rng::derive_seed;
use flowmaze::{Error, Result};

use crate::data::{load_demos, load_suite, write_dataset, write_json};
use crate::plot::plot_file;
use crate::run::{stream_seeds, write_run_info};

fn ensure_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

/// Loads the config; a `--seed` flag replaces the master seed before any
/// stream is derived, so one config file serves a whole seed sweep.
fn resolve_config(config: &Path, seed: Option<u64>) -> Result<ExperimentConfig> {
    let mut cfg = load_config(config)?;
    if let Some(s) = seed {
        cfg.master_seed = s;
    }
    Ok(cfg)
}

/// A checkpoint must agree with the dataset it is run against; dimension
/// drift here means the wrong file was passed.
fn check_model_shape(model: &FlowModel, suite: &Suite) -> Result<()> {
    if model.frames != suite.frames {
        return Err(Error::Format(format!(
            "checkpoint holds {} frames but the dataset uses {}",
            model.frames, suite.frames
        )));
    }
    if model.cond_dim != MAZE_COND_DIM {
        return Err(Error::Format(format!(
            "checkpoint condition width {} does not match maze encoding {MAZE_COND_DIM}",
            model.cond_dim
        )));
    }
    Ok(())
}

pub fn gen_data(config: &Path, seed: Option<u64>, out: &Path) -> Result<()> {
    let cfg = resolve_config(config, seed)?;
    ensure_dir(out)?;
    let suite = cfg.suite.build(cfg.master_seed)?;
    write_dataset(out, &cfg, &suite)?;
    write_run_info(out, "gen-data", &cfg)?;
    println!(
        "wrote {} train mazes, {} held-out mazes, {} nav scenes to {}",
        suite.train.len(),
        suite.heldout.len(),
        suite.nav.len(),
        out.display()
    );
    Ok(())
}

pub fn sft(config: &Path, data: &Path, seed: Option<u64>, out: &Path) -> Result<()> {
    let cfg = resolve_config(config, seed)?;
    ensure_dir(out)?;
    let (_, suite) = load_suite(data)?;
    let latents = load_demos(data)?;
    if latents.len() != suite.train.len() {
        return Err(Error::Format(format!(
            "{} demos for {} train mazes",
            latents.len(),
            suite.train.len()
        )));
    }
    let demos: Vec<(Vec<f64>, Vec<f64>)> = suite
        .train
        .iter()
        .zip(latents)
        .map(|(maze, latent)| Ok((latent, encode_maze(maze)?)))
        .collect::<Result<_>>()?;

    let seeds = stream_seeds(cfg.master_seed);
    let mut model =
        FlowModel::new(suite.frames, MAZE_COND_DIM, cfg.model.hidden, seeds["model_init"]);
    let losses = sft_train(&mut model, &demos, &cfg.sft, seeds["sft"])?;

    let log_path = out.join("sft_log.jsonl");
    let mut log = fs::File::create(&log_path).map_err(|e| Error::io(&log_path, e))?;
    for (step, loss) in losses.iter().enumerate() {
        writeln!(log, "{{\"step\":{step},\"loss\":{loss}}}")
            .map_err(|e| Error::io(&log_path, e))?;
    }
    save_checkpoint(&model, &out.join("sft.ckpt"))?;
    write_run_info(out, "sft", &cfg)?;
    println!(
        "sft: {} steps over {} epochs on {} demos, loss {:.4} -> {:.4}",
        losses.len(),
        cfg.sft.epochs,
        demos.len(),
        losses.first().unwrap_or(&f64::NAN),
        losses.last().unwrap_or(&f64::NAN)
    );
    Ok(())
}

pub fn grpo(
    config: &Path,
    data: &Path,
    checkpoint: Option<&Path>,
    seed: Option<u64>,
    out: &Path,
) -> Result<()> {
    let mut cfg = resolve_config(config, seed)?;
    ensure_dir(out)?;
    let (_, suite) = load_suite(data)?;
    let tasks: Vec<TrainTask> = suite.train_tasks()?;

    let seeds = stream_seeds(cfg.master_seed);
    let mut model = match checkpoint {
        Some(path) => {
            let model = load_checkpoint(path)?;
            check_model_shape(&model, &suite)?;
            model
        }
        // Cold start: optimize from a fresh initialization instead of a
        // supervised checkpoint.
        None => FlowModel::new(suite.frames, MAZE_COND_DIM, cfg.model.hidden, seeds["model_init"]),
    };
    cfg.grpo.seed = seeds["grpo"];

    let log_path = out.join("grpo_log.jsonl");
    let mut log = fs::File::create(&log_path).map_err(|e| Error::io(&log_path, e))?;
    let mut collect_secs = Vec::with_capacity(cfg.grpo.iterations);
    let mut update_secs = Vec::with_capacity(cfg.grpo.iterations);
    let every = cfg.grpo.checkpoint_every;
    let records = train(&mut model, &tasks, &cfg.grpo, |record, snapshot| {
        let line =
            serde_json::to_string(record).map_err(|e| Error::Format(e.to_string()))?;
        writeln!(log, "{line}").map_err(|e| Error::io(&log_path, e))?;
        collect_secs.push(record.collect_secs);
        update_secs.push(record.update_secs);
        println!(
            "iter {:>4}  reward {:.4}  clip {:.3}  kl {:.5}",
            record.iteration, record.mean_reward, record.clip_fraction, record.mean_kl
        );
        if every > 0 && (record.iteration + 1) % every == 0 {
            save_checkpoint(snapshot, &out.join(format!("ckpt_{:04}.ckpt", record.iteration + 1)))?;
        }
        Ok(())
    })?;
    save_checkpoint(&model, &out.join("grpo.ckpt"))?;

    // Wall times live in a sidecar: the log itself stays byte-identical
    // across same-seed runs.
    write_json(
        &out.join("timing.json"),
        &serde_json::json!({ "collect_secs": collect_secs, "update_secs": update_secs }),
    )?;
    write_run_info(out, "grpo", &cfg)?;
    println!(
        "grpo: {} iterations on {} tasks -> {}",
        records.len(),
        tasks.len(),
        out.join("grpo.ckpt").display()
    );
    Ok(())
}

pub fn eval(
    config: &Path,
    data: &Path,
    checkpoint: &Path,
    seed: Option<u64>,
    out: &Path,
) -> Result<()> {
    let mut cfg = resolve_config(config, seed)?;
    ensure_dir(out)?;
    let (_, suite) = load_suite(data)?;
    let model = load_checkpoint(checkpoint)?;
    if model.frames != suite.frames {
        return Err(Error::Format(format!(
            "checkpoint holds {} frames but the dataset uses {}",
            model.frames, suite.frames
        )));
    }
    cfg.eval.seed = stream_seeds(cfg.master_seed)["eval"];

    // The conditioning width pins a checkpoint to one task family; the
    // other section is skipped rather than sampled with garbage inputs.
    let mut scored = 0usize;
    let tasks = suite.heldout_tasks()?;
    if !tasks.is_empty() {
        if model.cond_dim == MAZE_COND_DIM {
            let report = evaluate_vr(&model, &tasks, &cfg.eval)?;
            fs::write(out.join("vr_report.json"), report.to_json()? + "\n")
                .map_err(|e| Error::io(out, e))?;
            fs::write(out.join("vr_report.csv"), report.to_csv())
                .map_err(|e| Error::io(out, e))?;
            println!(
                "vr: em {:.1}  sr {:.1}  pr {:.1}  mf {:.1}  ({} samples, {} excluded)",
                report.em, report.sr, report.pr, report.mf, report.samples, report.excluded
            );
            scored += 1;
        } else {
            println!("vr: skipped ({} mazes, checkpoint is not maze-conditioned)", tasks.len());
        }
    }
    let nav_tasks = suite.nav_tasks()?;
    if !nav_tasks.is_empty() {
        if model.cond_dim == NAV_COND_DIM {
            let report = evaluate_nav(&model, &nav_tasks, &cfg.eval)?;
            fs::write(out.join("nav_report.json"), report.to_json()? + "\n")
                .map_err(|e| Error::io(out, e))?;
            fs::write(out.join("nav_report.csv"), report.to_csv())
                .map_err(|e| Error::io(out, e))?;
            println!(
                "nav: ade {:.3}  fde {:.3}  wo {:.3}  ({} samples)",
                report.ade, report.fde, report.wo, report.samples
            );
            scored += 1;
        } else {
            println!(
                "nav: skipped ({} scenes, checkpoint is not nav-conditioned)",
                nav_tasks.len()
            );
        }
    }
    if scored == 0 {
        return Err(Error::InvalidArgument(format!(
            "checkpoint condition width {} fits no populated suite",
            model.cond_dim
        )));
    }
    write_run_info(out, "eval", &cfg)?;
    Ok(())
}

pub fn scale(
    config: &Path,
    data: &Path,
    checkpoint: &Path,
    ks: &[usize],
    seed: Option<u64>,
    out: &Path,
) -> Result<()> {
    let cfg = resolve_config(config, seed)?;
    ensure_dir(out)?;
    let (_, suite) = load_suite(data)?;
    let model = load_checkpoint(checkpoint)?;
    check_model_shape(&model, &suite)?;
    let reward = make_reward(&cfg.grpo.reward)?;
    let scale_seed = stream_seeds(cfg.master_seed)["scale"];

    let tasks = suite.heldout_tasks()?;
    if tasks.is_empty() {
        return Err(Error::InvalidArgument("dataset has no held-out mazes to sweep".into()));
    }
    let mut per_maze: Vec<Vec<f64>> = Vec::with_capacity(tasks.len());
    for (i, task) in tasks.iter().enumerate() {
        let eval_cfg =
            EvalConfig { seed: derive_seed(scale_seed, &[i as u64]), ..cfg.eval.clone() };
        let curve = best_of_k(&model, task, ks, &eval_cfg, reward.as_ref())?;
        per_maze.push(curve.best_rewards);
    }
    let mean_best: Vec<f64> = (0..ks.len())
        .map(|j| per_maze.iter().map(|row| row[j]).sum::<f64>() / per_maze.len() as f64)
        .collect();

    write_json(
        &out.join("scale.json"),
        &serde_json::json!({ "ks": ks, "mean_best": mean_best, "per_maze": per_maze }),
    )?;
    let csv_path = out.join("scale.csv");
    let mut csv = String::from("k,mean_best\n");
    for (k, m) in ks.iter().zip(&mean_best) {
        csv.push_str(&format!("{k},{m}\n"));
    }
    fs::write(&csv_path, csv).map_err(|e| Error::io(&csv_path, e))?;
    write_run_info(out, "scale", &cfg)?;
    for (k, m) in ks.iter().zip(&mean_best) {
        println!("K={k:>3}  mean best reward {m:.4}");
    }
    Ok(())
}

pub fn plot(log: &Path, out: &Path, field: &str) -> Result<()> {
    let n = plot_file(log, out, field)?;
    println!("plotted {n} points of `{field}` to {}", out.display());
    Ok(())
}

/// Smoke check used by tests: the dataset a command is about to consume must
/// be internally consistent.
#[allow(dead_code)]
pub fn verify_dataset(data: &Path) -> Result<()> {
    let (_, suite) = load_suite(data)?;
    for maze in suite.train.iter().chain(&suite.heldout) {
        let path = solve_optimal(maze)?;
        if path.len() > suite.frames {
            return Err(Error::Format("manifest contains a path longer than its frames".into()));
        }
    }
    Ok(())
}
