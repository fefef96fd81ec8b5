//! On-disk dataset layout: a JSON manifest describing every generated
//! environment plus a JSONL file of demonstration latents.
//!
//! Mazes travel as their text serialization, which round-trips walls, traps,
//! endpoints, and the generator seed, so a manifest alone reproduces the
//! exact task suite without re-running generation.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use flowmaze::config::{ExperimentConfig, Suite};
use flowmaze::envgen::{make_demo, maze_from_text, maze_to_text, solve_optimal, NavScene};
use flowmaze::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const DEMOS_FILE: &str = "demos.jsonl";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub experiment: String,
    pub master_seed: u64,
    pub frames: usize,
    pub train: Vec<String>,
    pub heldout: Vec<String>,
    pub nav: Vec<NavScene>,
}

/// One supervised example: the demonstration latent for train maze `index`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DemoRecord {
    pub index: usize,
    pub latent: Vec<f64>,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Format(e.to_string()))?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

/// Writes the manifest and the demonstration file for a materialized suite.
pub fn write_dataset(out: &Path, cfg: &ExperimentConfig, suite: &Suite) -> Result<()> {
    let manifest = Manifest {
        experiment: cfg.experiment.clone(),
        master_seed: cfg.master_seed,
        frames: suite.frames,
        train: suite.train.iter().map(maze_to_text).collect(),
        heldout: suite.heldout.iter().map(maze_to_text).collect(),
        nav: suite.nav.clone(),
    };
    write_json(&out.join(MANIFEST_FILE), &manifest)?;

    let demo_path = out.join(DEMOS_FILE);
    let mut file = fs::File::create(&demo_path).map_err(|e| Error::io(&demo_path, e))?;
    for (index, maze) in suite.train.iter().enumerate() {
        let path = solve_optimal(maze)?;
        let latent = make_demo(maze, &path, suite.frames)?;
        let record = DemoRecord { index, latent: latent.flatten() };
        let line = serde_json::to_string(&record).map_err(|e| Error::Format(e.to_string()))?;
        writeln!(file, "{line}").map_err(|e| Error::io(&demo_path, e))?;
    }
    Ok(())
}

/// Reconstructs the suite a manifest describes.
pub fn load_suite(data_dir: &Path) -> Result<(Manifest, Suite)> {
    let manifest: Manifest = read_json(&data_dir.join(MANIFEST_FILE))?;
    let train =
        manifest.train.iter().map(|t| maze_from_text(t)).collect::<Result<Vec<_>>>()?;
    let heldout =
        manifest.heldout.iter().map(|t| maze_from_text(t)).collect::<Result<Vec<_>>>()?;
    let suite =
        Suite { train, heldout, nav: manifest.nav.clone(), frames: manifest.frames };
    Ok((manifest, suite))
}

/// Reads the demonstration latents, in index order.
pub fn load_demos(data_dir: &Path) -> Result<Vec<Vec<f64>>> {
    let path = data_dir.join(DEMOS_FILE);
    let file = fs::File::open(&path).map_err(|e| Error::io(&path, e))?;
    let mut records: Vec<DemoRecord> = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(&path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        records
            .push(serde_json::from_str(&line).map_err(|e| Error::Format(e.to_string()))?);
    }
    records.sort_by_key(|r| r.index);
    for (i, r) in records.iter().enumerate() {
        if r.index != i {
            return Err(Error::Format(format!(
                "demo file is missing index {i} (found {})",
                r.index
            )));
        }
    }
    Ok(records.into_iter().map(|r| r.latent).collect())
}
