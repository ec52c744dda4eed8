use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use super::run::{SweepResult, SweepSummary};
use crate::error::{Error, Result};

/// Files written by [`write_results`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputPaths {
    pub csv: PathBuf,
    pub json: PathBuf,
}

/// `<dir>/<experiment>_<tag>.csv` and `.json`.
pub fn output_paths(dir: &Path, experiment: &str, tag: &str) -> OutputPaths {
    let stem = format!("{experiment}_{tag}");
    OutputPaths {
        csv: dir.join(format!("{stem}.csv")),
        json: dir.join(format!("{stem}.json")),
    }
}

/// CSV bytes: one row per (point, trial).
pub fn csv_bytes(res: &SweepResult) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &res.records {
        w.serialize(r)
            .map_err(|e| Error::io("<csv buffer>", e.into()))?;
    }
    w.into_inner()
        .map_err(|e| Error::io("<csv buffer>", e.into_error()))
}

pub fn summary_json(summary: &SweepSummary) -> String {
    let mut s = serde_json::to_string_pretty(summary).expect("summary serializes");
    s.push('\n');
    s
}

pub fn read_summary(path: &Path) -> Result<SweepSummary> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Json {
        context: path.display().to_string(),
        source: e,
    })
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))
}

/// Writes the CSV rows and the JSON summary; creates `dir` if needed.
pub fn write_results(res: &SweepResult, dir: &Path, tag: &str) -> Result<OutputPaths> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let paths = output_paths(dir, &res.summary.experiment, tag);
    write_file(&paths.csv, &csv_bytes(res)?)?;
    write_file(&paths.json, summary_json(&res.summary).as_bytes())?;
    Ok(paths)
}
