//! Run provenance: every command drops a `run.json` into its output
//! directory with the fully resolved config, the derived per-stream seeds,
//! and the source revision, so any artifact can be regenerated from that
//! file alone.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;

use serde::{Deserialize, Serialize};

use flowmaze::config::ExperimentConfig;
use flowmaze::rng::derive_seed;
use flowmaze::Result;

use crate::data::write_json;

/// Stream tags: one per independent consumer of the master seed.
pub const INIT_TAG: u64 = 0x696e6974;
pub const SFT_TAG: u64 = 0x736674;
pub const GRPO_TAG: u64 = 0x6772706f;
pub const EVAL_TAG: u64 = 0x6576;
pub const SCALE_TAG: u64 = 0x7363;

#[derive(Debug, Serialize, Deserialize)]
pub struct RunInfo {
    pub command: String,
    pub experiment: String,
    pub git: String,
    pub master_seed: u64,
    pub seeds: BTreeMap<String, u64>,
    pub config: ExperimentConfig,
}

fn git_describe() -> String {
    Command::new("git")
        .args(["describe", "--always", "--dirty"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .map(|o| String::from_utf8_lossy(&o.stdout).trim().to_string())
        .unwrap_or_else(|| "unknown".to_string())
}

/// Derives the named seed streams off the master seed. The same master seed
/// always yields the same map, so artifacts are reproducible from it.
pub fn stream_seeds(master_seed: u64) -> BTreeMap<String, u64> {
    let mut seeds = BTreeMap::new();
    seeds.insert("model_init".to_string(), derive_seed(master_seed, &[INIT_TAG]));
    seeds.insert("sft".to_string(), derive_seed(master_seed, &[SFT_TAG]));
    seeds.insert("grpo".to_string(), derive_seed(master_seed, &[GRPO_TAG]));
    seeds.insert("eval".to_string(), derive_seed(master_seed, &[EVAL_TAG]));
    seeds.insert("scale".to_string(), derive_seed(master_seed, &[SCALE_TAG]));
    seeds
}

pub fn write_run_info(out: &Path, command: &str, cfg: &ExperimentConfig) -> Result<()> {
    let info = RunInfo {
        command: command.to_string(),
        experiment: cfg.experiment.clone(),
        git: git_describe(),
        master_seed: cfg.master_seed,
        seeds: stream_seeds(cfg.master_seed),
        config: cfg.clone(),
    };
    write_json(&out.join("run.json"), &info)
}
