//! Configuration documents: asset parameters plus a scenario tree, given
//! either inline or as references to trajectory CSV files.

use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use vpp_core::{
    read_trajectories_csv, validate_config, ScenarioError, ScenarioTree, TrajectorySet, VppConfig,
};

use crate::CliError;

/// Scenario tree CSV references, resolved relative to the config file.
#[derive(Debug, Deserialize)]
pub struct TreeFiles {
    /// Day-ahead price trajectories.
    pub da: PathBuf,
    /// Balancing price trajectories, one file per day-ahead scenario.
    pub ba: Vec<PathBuf>,
    /// Delivered energy trajectories.
    pub energy: PathBuf,
}

#[derive(Debug, Deserialize)]
struct TreeSections {
    #[serde(default)]
    tree: Option<ScenarioTree>,
    #[serde(default)]
    tree_files: Option<TreeFiles>,
}

/// A parsed config document with its scenario tree resolved.
pub struct LoadedConfig {
    pub cfg: VppConfig,
    pub tree: ScenarioTree,
}

/// Reads a config document and resolves its scenario tree. The document must
/// contain exactly one of `tree` (inline arrays) and `tree_files` (paths
/// relative to the config file).
pub fn load(path: &Path) -> Result<LoadedConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let cfg = VppConfig::from_json(&text)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    let sections: TreeSections = serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let tree = match (sections.tree, sections.tree_files) {
        (Some(tree), None) => tree,
        (None, Some(files)) => tree_from_files(base, &files)?,
        (Some(_), Some(_)) => {
            return Err(CliError::Validation(format!(
                "{}: config must contain exactly one of `tree` and `tree_files`, found both",
                path.display()
            )))
        }
        (None, None) => {
            return Err(CliError::Validation(format!(
                "{}: config must contain a `tree` object or a `tree_files` object",
                path.display()
            )))
        }
    };
    Ok(LoadedConfig { cfg, tree })
}

/// Loads a config document and rejects it if any validation rule fails,
/// listing every violation in the error message.
pub fn load_validated(path: &Path) -> Result<LoadedConfig, CliError> {
    let loaded = load(path)?;
    let violations = validate_config(&loaded.cfg, &loaded.tree);
    if violations.is_empty() {
        return Ok(loaded);
    }
    let mut msg = format!("{}: invalid configuration", path.display());
    for violation in &violations {
        msg.push_str("\n  ");
        msg.push_str(&violation.to_string());
    }
    Err(CliError::Validation(msg))
}

fn tree_from_files(base: &Path, files: &TreeFiles) -> Result<ScenarioTree, CliError> {
    let da = read_trajectory_file(&base.join(&files.da))?;
    let mut ba_prices = Vec::with_capacity(files.ba.len());
    let mut ba_prob = Vec::with_capacity(files.ba.len());
    for file in &files.ba {
        let set = read_trajectory_file(&base.join(file))?;
        ba_prices.push(set.trajectories);
        ba_prob.push(set.weights);
    }
    let energy = read_trajectory_file(&base.join(&files.energy))?;
    Ok(ScenarioTree {
        da_prices: da.trajectories,
        da_prob: da.weights,
        ba_prices,
        ba_prob,
        energy: energy.trajectories,
        energy_prob: energy.weights,
    })
}

/// Reads one trajectory CSV as written by `gen-scenarios`.
pub fn read_trajectory_file(path: &Path) -> Result<TrajectorySet, CliError> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    read_trajectories_csv(BufReader::new(file), &path.display().to_string())
        .map_err(|e| scenario_error(path, e))
}

/// Maps a scenario-engine error onto the exit-code taxonomy: stream failures
/// are I/O, everything else is invalid input.
pub fn scenario_error(path: &Path, err: ScenarioError) -> CliError {
    match err {
        ScenarioError::Io(source) => CliError::io(path, source),
        other => CliError::Validation(other.to_string()),
    }
}
