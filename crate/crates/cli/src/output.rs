use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::CliError;
use crate::experiment::SeedRun;

/// Rounds to 12 significant digits.
pub fn round12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().expect("formatted float parses")
}

/// Fixed 12-significant-digit text form used in CSV cells.
pub fn fmt12(x: f64) -> String {
    format!("{x:.11e}")
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::format(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn csv_header(num_players: usize, num_constraints: usize) -> Vec<String> {
    let mut header = vec!["t".to_string(), "z".to_string()];
    header.extend((1..=num_players).map(|i| format!("a_{i}")));
    header.extend((1..=num_players).map(|i| format!("regret_{i}")));
    for i in 1..=num_players {
        header.extend((1..=num_constraints).map(|m| format!("violation_{i}_{m}")));
    }
    header
}

pub fn write_seed_csv(path: &Path, run: &SeedRun) -> Result<(), CliError> {
    let n = run.game.num_players;
    let m = run.game.num_constraints;
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::format(path, e))?;
    w.write_record(csv_header(n, m)).map_err(|e| CliError::format(path, e))?;
    for (t, rec) in run.trajectory.records.iter().enumerate() {
        let mut row = vec![rec.round.to_string(), rec.context.to_string()];
        row.extend(rec.joint_action.iter().map(|a| a.to_string()));
        row.extend(run.regret.iter().map(|c| c.get(t).map_or_else(String::new, |x| fmt12(*x))));
        for p in &run.violations {
            row.extend(p.iter().map(|c| fmt12(c[t])));
        }
        w.write_record(&row).map_err(|e| CliError::format(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Per-seed curves read back from a CSV: `regret[player][t]` and
/// `violations[player][m][t]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedCurves {
    pub regret: Vec<Vec<f64>>,
    pub violations: Vec<Vec<Vec<f64>>>,
}

pub fn read_seed_csv(path: &Path) -> Result<SeedCurves, CliError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::format(path, e))?;
    let headers = r.headers().map_err(|e| CliError::format(path, e))?.clone();
    let regret_cols: Vec<usize> = (0..headers.len())
        .filter(|i| headers[*i].starts_with("regret_"))
        .collect();
    let n = regret_cols.len();
    let viol_cols: Vec<usize> = (0..headers.len())
        .filter(|i| headers[*i].starts_with("violation_"))
        .collect();
    if n == 0 || viol_cols.len() % n != 0 {
        return Err(CliError::format(path, "unexpected column layout"));
    }
    let m = viol_cols.len() / n;
    let mut out = SeedCurves {
        regret: vec![Vec::new(); n],
        violations: vec![vec![Vec::new(); m]; n],
    };
    for row in r.records() {
        let row = row.map_err(|e| CliError::format(path, e))?;
        let parse = |i: usize| -> Result<f64, CliError> {
            row[i].parse().map_err(|_| CliError::format(path, format!("bad number {:?}", &row[i])))
        };
        for (p, c) in regret_cols.iter().enumerate() {
            // An empty cell marks regret that is undefined for this player.
            if !row[*c].is_empty() {
                out.regret[p].push(parse(*c)?);
            }
        }
        for (j, c) in viol_cols.iter().enumerate() {
            out.violations[j / m][j % m].push(parse(*c)?);
        }
    }
    Ok(out)
}
