use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::io::{entry_for, read_manifest, write_manifest, Manifest, ManifestEntry, RunStatus};
use super::{read_records, run, write_run, Algorithm, RunConfig};
use crate::error::{Error, Result};
use crate::problems::ProblemSpec;

/// A problems × algorithms × seeds grid. `base` holds every other
/// `RunConfig` field and is shared by all runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatchConfig {
    pub problems: Vec<ProblemSpec>,
    pub algorithms: Vec<Algorithm>,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub base: toml::Table,
}

impl BatchConfig {
    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::config("<file>", e.message().to_string()))?;
        // overrides address the shared run fields
        let base = table
            .entry("base")
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        let base = base
            .as_table_mut()
            .ok_or_else(|| Error::config("base", "must be a table"))?;
        super::config::apply_overrides(base, overrides)?;
        let cfg: BatchConfig =
            toml::Value::Table(table)
                .try_into()
                .map_err(|e: toml::de::Error| {
                    let field = e
                        .message()
                        .split('`')
                        .nth(1)
                        .unwrap_or("<file>")
                        .to_string();
                    Error::config(field, e.message().to_string())
                })?;
        expand_grid(&cfg)?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text, overrides)
    }
}

/// One validated `RunConfig` per grid cell, ordered problem, algorithm, seed.
pub fn expand_grid(batch: &BatchConfig) -> Result<Vec<RunConfig>> {
    for key in ["problem", "algorithm", "seed"] {
        if batch.base.contains_key(key) {
            return Err(Error::config(
                format!("base.{key}"),
                "set by the grid, not by base",
            ));
        }
    }
    if batch.problems.is_empty() || batch.algorithms.is_empty() || batch.seeds.is_empty() {
        return Err(Error::config(
            "problems",
            "problems, algorithms and seeds must be non-empty",
        ));
    }
    let mut out = Vec::new();
    for problem in &batch.problems {
        for algorithm in &batch.algorithms {
            for seed in &batch.seeds {
                let mut t = batch.base.clone();
                t.insert(
                    "problem".into(),
                    toml::Value::try_from(problem)
                        .map_err(|e| Error::config("problems", e.to_string()))?,
                );
                t.insert(
                    "algorithm".into(),
                    toml::Value::String(algorithm.to_string()),
                );
                t.insert("seed".into(), toml::Value::Integer(*seed as i64));
                let text = toml::to_string(&t).map_err(|e| Error::config("base", e.to_string()))?;
                out.push(RunConfig::from_toml_str(&text, &[])?);
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BatchSummary {
    pub completed: usize,
    pub skipped: usize,
    /// (result path, error message)
    pub failed: Vec<(String, String)>,
}

fn is_complete(dir: &Path, config: &RunConfig, entry: &ManifestEntry) -> bool {
    dir.join(&entry.timing_path).exists()
        && read_records(&dir.join(&entry.path)).is_ok_and(|r| r.len() == config.acquisition_steps())
}

/// Run every config on a pool of `jobs` threads, writing one result file
/// per run and a manifest into `dir`. A failing run is recorded in the
/// manifest and does not stop the others. With `resume`, runs whose
/// complete result file already exists are skipped.
pub fn run_batch(
    configs: &[RunConfig],
    dir: &Path,
    jobs: usize,
    resume: bool,
) -> Result<BatchSummary> {
    for c in configs {
        c.validate()?;
    }
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;

    let outcomes: Vec<(ManifestEntry, bool)> = pool.install(|| {
        configs
            .par_iter()
            .map(|config| {
                let planned = entry_for(config, RunStatus::Completed, None);
                if resume && is_complete(dir, config, &planned) {
                    return (planned, true);
                }
                let result = run(config).and_then(|records| write_run(dir, config, &records));
                match result {
                    Ok(entry) => (entry, false),
                    Err(e) => (
                        entry_for(config, RunStatus::Failed, Some(e.to_string())),
                        false,
                    ),
                }
            })
            .collect()
    });

    let mut manifest = read_manifest(dir).unwrap_or_else(|_| Manifest::default());
    let mut summary = BatchSummary::default();
    for (entry, skipped) in outcomes {
        match (entry.status, skipped) {
            (RunStatus::Completed, true) => summary.skipped += 1,
            (RunStatus::Completed, false) => summary.completed += 1,
            (RunStatus::Failed, _) => summary
                .failed
                .push((entry.path.clone(), entry.error.clone().unwrap_or_default())),
        }
        manifest.upsert(entry);
    }
    write_manifest(dir, &manifest)?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    const GRID: &str = r#"
algorithms = ["RandomSearch", "MonoEI"]
seeds = [0, 1]

[[problems]]
name = "DTLZ2"
num_objectives = 2
num_variables = 3

[base]
init_size = 6
budget = 8
"#;

    #[test]
    fn grid_expands_in_order() {
        let b = BatchConfig::from_toml_str(GRID, &["ga.population=10".into()]).unwrap();
        let cfgs = expand_grid(&b).unwrap();
        assert_eq!(cfgs.len(), 4);
        assert_eq!(cfgs[0].algorithm, Algorithm::RandomSearch);
        assert_eq!(cfgs[1].seed, 1);
        assert_eq!(cfgs[2].algorithm, Algorithm::MonoEI);
        assert!(cfgs
            .iter()
            .all(|c| c.ga.population == 10 && c.budget() == 8));
    }

    #[test]
    fn grid_rejects_bad_base() {
        let bad = GRID.replace("budget = 8", "budget = 4");
        let err = BatchConfig::from_toml_str(&bad, &[]).unwrap_err();
        assert!(
            matches!(err, Error::Config { ref field, .. } if field == "budget"),
            "{err}"
        );
        let bad = GRID.replace("budget = 8", "seed = 4");
        assert!(BatchConfig::from_toml_str(&bad, &[]).is_err());
    }
}
