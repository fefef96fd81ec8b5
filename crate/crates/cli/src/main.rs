//! `flowmaze`: experiment orchestration for the maze-video flow laboratory.
//!
//! Pipeline: `gen-data` materializes a dataset, `sft` pre-trains on its
//! demonstrations, `grpo` runs reinforcement learning on the train split,
//! `eval` scores a checkpoint on the held-out split, `scale` sweeps
//! best-of-K sampling budgets, and `plot` renders any JSONL log as SVG.
//! Every command exits 0 on success and with its error class code otherwise.

mod cmds;
mod data;
mod plot;
mod run;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "flowmaze", version, about = "maze-video flow model experiment harness")]
struct Cli {
    /// Replace the config's master_seed for this run.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for sampling and evaluation (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate maze suites, demonstrations, and nav scenes.
    GenData {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Supervised pre-training on the dataset's demonstrations.
    Sft {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Group-relative policy optimization from a checkpoint (or cold start).
    Grpo {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Starting checkpoint; omit to train from scratch.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a checkpoint on the held-out split (and nav scenes if present).
    Eval {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Best-of-K test-time scaling sweep over the held-out split.
    Scale {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
        /// Sample budgets, strictly increasing.
        #[arg(long, value_delimiter = ',', default_value = "1,4,8,12,16")]
        ks: Vec<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render a JSONL log as an SVG line chart.
    Plot {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Numeric field to plot from each row.
        #[arg(long, default_value = "mean_reward")]
        field: String,
    },
}

fn main() {
    let cli = Cli::parse();
    if let Some(n) = cli.workers {
        // Errors only if a pool already exists, which cannot happen this
        // early in main.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }

    let result = match &cli.cmd {
        Cmd::GenData { config, out } => cmds::gen_data(config, cli.seed, out),
        Cmd::Sft { config, data, out } => cmds::sft(config, data, cli.seed, out),
        Cmd::Grpo { config, data, checkpoint, out } => {
            cmds::grpo(config, data, checkpoint.as_deref(), cli.seed, out)
        }
        Cmd::Eval { config, data, checkpoint, out } => {
            cmds::eval(config, data, checkpoint, cli.seed, out)
        }
        Cmd::Scale { config, data, checkpoint, ks, out } => {
            cmds::scale(config, data, checkpoint, ks, cli.seed, out)
        }
        Cmd::Plot { log, out, field } => cmds::plot(log, out, field),
    };

    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
