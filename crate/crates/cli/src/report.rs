use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::experiment::{aggregate, seed_rounds, Aggregate, Summary};
use crate::output::{read_seed_csv, write_json};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub seeds: Vec<u64>,
    pub horizon: usize,
    pub aggregate: Aggregate,
}

fn seed_files(dir: &Path) -> Result<Vec<(u64, PathBuf)>, CliError> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| CliError::io(dir, e))? {
        let path = entry.map_err(|e| CliError::io(dir, e))?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
        if let Some(seed) = name
            .strip_prefix("seed_")
            .and_then(|s| s.strip_suffix(".csv"))
            .and_then(|s| s.parse::<u64>().ok())
        {
            files.push((seed, path));
        }
    }
    files.sort();
    Ok(files)
}

/// Re-aggregates the per-seed CSVs of an output directory and writes
/// `report.json` next to them.
pub fn report(dir: &Path) -> Result<Report, CliError> {
    let files = seed_files(dir)?;
    if files.is_empty() {
        return Err(CliError::format(dir, "no seed_<n>.csv files found"));
    }
    let curves = files
        .iter()
        .map(|(_, p)| read_seed_csv(p))
        .collect::<Result<Vec<_>, _>>()?;
    let summary_path = dir.join("summary.json");
    let horizon = match fs::read_to_string(&summary_path) {
        Ok(text) => {
            let s: Summary = serde_json::from_str(&text).map_err(|e| CliError::format(&summary_path, e))?;
            s.horizon
        }
        Err(_) => curves.iter().map(|c| seed_rounds(&c.regret, &c.violations)).max().unwrap_or(0),
    };
    let regret: Vec<&Vec<Vec<f64>>> = curves.iter().map(|c| &c.regret).collect();
    let viol: Vec<&Vec<Vec<Vec<f64>>>> = curves.iter().map(|c| &c.violations).collect();
    let rep = Report {
        seeds: files.iter().map(|(s, _)| *s).collect(),
        horizon,
        aggregate: aggregate(&regret, &viol, horizon),
    };
    write_json(&dir.join("report.json"), &rep)?;
    Ok(rep)
}
