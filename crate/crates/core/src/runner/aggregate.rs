use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use super::io::{read_manifest, read_records, read_timings, RunStatus};
use super::RunRecord;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateRow {
    pub algorithm: String,
    pub eval_index: usize,
    pub hv_median: f64,
    pub hv_lo: f64,
    pub hv_hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimingRow {
    pub algorithm: String,
    pub median_fit_s: f64,
    pub median_acq_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub rows: Vec<AggregateRow>,
    pub timing: Vec<TimingRow>,
}

/// Linear-interpolation percentile of ascending `sorted`, `q` in [0, 1].
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "percentile of an empty sample");
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    percentile(&v, 0.5)
}

/// Median and 2.5/97.5 percentiles of the hypervolume per evaluation index,
/// grouped by algorithm (rows ordered by algorithm name, then index). All
/// runs must share the same sequence of evaluation indices.
pub fn summarise(runs: &[(String, Vec<RunRecord>)]) -> Result<Vec<AggregateRow>> {
    if runs.is_empty() {
        return Err(Error::InvalidArgument("no runs to summarise".into()));
    }
    let indices = |r: &[RunRecord]| r.iter().map(|x| x.eval_index).collect::<Vec<_>>();
    let expected = indices(&runs[0].1);
    let mismatches: Vec<String> = runs
        .iter()
        .enumerate()
        .filter(|(_, (_, r))| indices(r) != expected)
        .map(|(k, (alg, r))| {
            let got = indices(r);
            format!(
                "run {k} ({alg}) covers evaluations {:?}..{:?}, expected {:?}..{:?}",
                got.first(),
                got.last(),
                expected.first(),
                expected.last()
            )
        })
        .collect();
    if !mismatches.is_empty() {
        return Err(Error::InconsistentGrid(mismatches.join("; ")));
    }

    let mut groups: BTreeMap<&str, Vec<&[RunRecord]>> = BTreeMap::new();
    for (alg, recs) in runs {
        groups.entry(alg.as_str()).or_default().push(recs);
    }
    let mut rows = Vec::new();
    for (alg, members) in groups {
        for (k, &eval_index) in expected.iter().enumerate() {
            let mut hv: Vec<f64> = members.iter().map(|r| r[k].hypervolume_so_far).collect();
            hv.sort_by(f64::total_cmp);
            rows.push(AggregateRow {
                algorithm: alg.to_string(),
                eval_index,
                hv_median: percentile(&hv, 0.5),
                hv_lo: percentile(&hv, 0.025),
                hv_hi: percentile(&hv, 0.975),
            });
        }
    }
    Ok(rows)
}

/// Aggregate the completed runs listed in `dir`'s manifest. The directory
/// must hold a single problem; see [`aggregate_problem`] otherwise.
pub fn aggregate(dir: &Path) -> Result<Summary> {
    aggregate_problem(dir, None)
}

/// Like [`aggregate`], restricted to runs whose problem label (e.g.
/// `DTLZ2-m2-n5`) equals `problem` when one is given.
pub fn aggregate_problem(dir: &Path, problem: Option<&str>) -> Result<Summary> {
    let manifest = read_manifest(dir)?;
    let done: Vec<_> = manifest
        .runs
        .iter()
        .filter(|e| e.status == RunStatus::Completed)
        .filter(|e| problem.is_none_or(|p| e.problem == p))
        .collect();
    if done.is_empty() {
        let what = problem.map_or(String::new(), |p| format!(" for {p}"));
        return Err(Error::config(
            "dir",
            format!("no completed result files{what} in {}", dir.display()),
        ));
    }
    let mut problems: Vec<&str> = done.iter().map(|e| e.problem.as_str()).collect();
    problems.sort_unstable();
    problems.dedup();
    if problems.len() > 1 {
        return Err(Error::InconsistentGrid(format!(
            "several problems in one directory ({}); select one with a problem filter",
            problems.join(", ")
        )));
    }

    let mut runs = Vec::with_capacity(done.len());
    let mut times: BTreeMap<String, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for e in &done {
        let alg = e.algorithm.to_string();
        runs.push((alg.clone(), read_records(&dir.join(&e.path))?));
        let slot = times.entry(alg).or_default();
        for (fit, acq) in read_timings(&dir.join(&e.timing_path))? {
            slot.0.push(fit);
            slot.1.push(acq);
        }
    }
    let rows = summarise(&runs)?;
    let timing = times
        .into_iter()
        .map(|(algorithm, (fit, acq))| TimingRow {
            algorithm,
            median_fit_s: if fit.is_empty() { 0.0 } else { median(&fit) },
            median_acq_s: if acq.is_empty() { 0.0 } else { median(&acq) },
        })
        .collect();
    Ok(Summary { rows, timing })
}
