//! Result files, timing side files and the run manifest.
//!
//! Result files hold only deterministic fields so that reruns are
//! byte-identical; wall-clock timings go to a `.timing.jsonl` side file.
//! Every file is written to a temporary name and renamed into place.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Algorithm, RunConfig, RunRecord};
use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Completed,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub config_hash: String,
    pub seed: u64,
    /// e.g. `DTLZ2-m2-n5`
    pub problem: String,
    pub algorithm: Algorithm,
    /// Arms not part of the original comparison.
    pub extension: bool,
    /// Relative to the manifest's directory.
    pub path: String,
    pub timing_path: String,
    pub status: RunStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub runs: Vec<ManifestEntry>,
}

impl Manifest {
    /// Insert or replace the entry with the same result path.
    pub fn upsert(&mut self, entry: ManifestEntry) {
        match self.runs.iter_mut().find(|e| e.path == entry.path) {
            Some(slot) => *slot = entry,
            None => self.runs.push(entry),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct ResultLine {
    iteration: usize,
    eval_index: usize,
    chosen_x: Vec<f64>,
    objectives: Vec<f64>,
    scalarised_value: f64,
    hypervolume_so_far: f64,
    weights: Vec<f64>,
    fallback: bool,
}

#[derive(Serialize, Deserialize)]
struct TimingLine {
    iteration: usize,
    wall_time_model_fit: f64,
    wall_time_acquisition: f64,
}

pub(crate) fn problem_label(config: &RunConfig) -> String {
    let p = &config.problem;
    format!("{}-m{}-n{}", p.name, p.num_objectives, p.num_variables)
}

/// File stem shared by the result and timing files of a run.
pub(crate) fn run_stem(config: &RunConfig) -> String {
    format!(
        "{}_{}_seed{}_{}",
        problem_label(config),
        config.algorithm,
        config.seed,
        &config.hash()[..8]
    )
}

pub(crate) fn entry_for(
    config: &RunConfig,
    status: RunStatus,
    error: Option<String>,
) -> ManifestEntry {
    let stem = run_stem(config);
    ManifestEntry {
        config_hash: config.hash(),
        seed: config.seed,
        problem: problem_label(config),
        algorithm: config.algorithm,
        extension: config.algorithm.is_extension(),
        path: format!("{stem}.jsonl"),
        timing_path: format!("{stem}.timing.jsonl"),
        status,
        error,
    }
}

pub(crate) fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(format!(".tmp{}", std::process::id()));
    let tmp = PathBuf::from(tmp);
    let write = || -> std::io::Result<()> {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    };
    write().map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::io(path, e)
    })
}

fn to_lines<T: Serialize>(rows: impl Iterator<Item = T>) -> Vec<u8> {
    let mut out = Vec::new();
    for row in rows {
        serde_json::to_writer(&mut out, &row).expect("record serialises");
        out.push(b'\n');
    }
    out
}

/// Write the result and timing files of a run into `dir`; returns the
/// manifest entry describing them.
pub fn write_run(dir: &Path, config: &RunConfig, records: &[RunRecord]) -> Result<ManifestEntry> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let entry = entry_for(config, RunStatus::Completed, None);
    let results = to_lines(records.iter().map(|r| ResultLine {
        iteration: r.iteration,
        eval_index: r.eval_index,
        chosen_x: r.chosen_x.clone(),
        objectives: r.objectives.clone(),
        scalarised_value: r.scalarised_value,
        hypervolume_so_far: r.hypervolume_so_far,
        weights: r.weights.clone(),
        fallback: r.fallback,
    }));
    let timings = to_lines(records.iter().map(|r| TimingLine {
        iteration: r.iteration,
        wall_time_model_fit: r.wall_time_model_fit,
        wall_time_acquisition: r.wall_time_acquisition,
    }));
    write_atomic(&dir.join(&entry.timing_path), &timings)?;
    write_atomic(&dir.join(&entry.path), &results)?;
    Ok(entry)
}

fn read_lines<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                message: format!("line {}: {e}", i + 1),
            })
        })
        .collect()
}

/// Records of a result file; timing fields are zero.
pub fn read_records(path: &Path) -> Result<Vec<RunRecord>> {
    let lines: Vec<ResultLine> = read_lines(path)?;
    Ok(lines
        .into_iter()
        .map(|l| RunRecord {
            iteration: l.iteration,
            eval_index: l.eval_index,
            chosen_x: l.chosen_x,
            objectives: l.objectives,
            scalarised_value: l.scalarised_value,
            hypervolume_so_far: l.hypervolume_so_far,
            weights: l.weights,
            fallback: l.fallback,
            wall_time_model_fit: 0.0,
            wall_time_acquisition: 0.0,
        })
        .collect())
}

/// (model-fit seconds, acquisition seconds) per iteration.
pub fn read_timings(path: &Path) -> Result<Vec<(f64, f64)>> {
    let lines: Vec<TimingLine> = read_lines(path)?;
    Ok(lines
        .into_iter()
        .map(|l| (l.wall_time_model_fit, l.wall_time_acquisition))
        .collect())
}

/// The manifest of `dir`, or an empty one if there is none yet.
pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let path = dir.join(MANIFEST_FILE);
    if !path.exists() {
        return Ok(Manifest::default());
    }
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path,
        message: e.to_string(),
    })
}

pub(crate) fn write_manifest(dir: &Path, manifest: &Manifest) -> Result<()> {
    let mut text = serde_json::to_vec_pretty(manifest).expect("manifest serialises");
    text.push(b'\n');
    write_atomic(&dir.join(MANIFEST_FILE), &text)
}

/// Write a run's files into `dir` and add it to the manifest there.
pub fn record_run(dir: &Path, config: &RunConfig, records: &[RunRecord]) -> Result<ManifestEntry> {
    let entry = write_run(dir, config, records)?;
    let mut manifest = read_manifest(dir)?;
    manifest.upsert(entry.clone());
    write_manifest(dir, &manifest)?;
    Ok(entry)
}
