use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mobo::runner::{self, BatchConfig, RunConfig};
use mobo::scalar_dist::{density_table, gaussianity_report, GumbelParams, ScalarisedPosterior};
use mobo::{streams, Error};

/// Environment variable naming the default output root.
const OUTPUT_ENV: &str = "MOBO_OUTPUT_DIR";
const DEFAULT_OUTPUT: &str = "results";

#[derive(Parser)]
#[command(
    name = "mobo",
    version,
    about = "Mono- and multi-surrogate multi-objective Bayesian optimisation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one optimisation and write its records.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Override a config field, e.g. `--set seed=7` or `--set ga.population=50`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Output directory [default: $MOBO_OUTPUT_DIR or ./results]
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a problems × algorithms × seeds grid.
    Batch {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Skip runs whose complete result file already exists.
        #[arg(long)]
        resume: bool,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print hypervolume medians and bands, and median timings.
    Report {
        #[arg(long)]
        dir: PathBuf,
        /// Only runs of this problem, e.g. `DTLZ2-m2-n5` (needed when the
        /// directory holds several).
        #[arg(long)]
        problem: Option<String>,
    },
    /// Compare the scalarised distribution with Gaussian, Gumbel and Laplace fits.
    DistCheck {
        #[arg(
            long,
            value_delimiter = ',',
            allow_hyphen_values = true,
            required = true
        )]
        means: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        stds: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        weights: Vec<f64>,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Density table path [default: <output root>/density.csv]
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 4001)]
        points: usize,
    },
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl Failure {
    fn from_load(e: Error) -> Self {
        Failure::Usage(e.to_string())
    }

    fn from_run(e: Error) -> Self {
        match e {
            Error::Config { .. } => Failure::Usage(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

fn output_root(explicit: Option<PathBuf>) -> PathBuf {
    explicit
        .or_else(|| std::env::var_os(OUTPUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT))
}

fn cmd_run(config: &Path, overrides: &[String], out: PathBuf) -> Result<(), Failure> {
    let cfg = RunConfig::from_file(config, overrides).map_err(Failure::from_load)?;
    let records = runner::run(&cfg).map_err(Failure::from_run)?;
    let entry = runner::record_run(&out, &cfg, &records).map_err(Failure::from_run)?;
    let last = records
        .last()
        .expect("validated config has at least one step");
    let fallbacks = records.iter().filter(|r| r.fallback).count();
    let fit: f64 = records.iter().map(|r| r.wall_time_model_fit).sum();
    let acq: f64 = records.iter().map(|r| r.wall_time_acquisition).sum();
    println!("problem       {}", entry.problem);
    println!(
        "algorithm     {}{}",
        cfg.algorithm,
        if entry.extension { " (extension)" } else { "" }
    );
    println!("seed          {}", cfg.seed);
    println!(
        "evaluations   {} ({} initial + {} acquired)",
        last.eval_index,
        cfg.init_size(),
        records.len()
    );
    println!("hypervolume   {:.6}", last.hypervolume_so_far);
    println!("fallbacks     {fallbacks}");
    println!("model fit     {fit:.3} s total");
    println!("acquisition   {acq:.3} s total");
    println!("records       {}", out.join(&entry.path).display());
    Ok(())
}

fn cmd_batch(
    config: &Path,
    overrides: &[String],
    jobs: usize,
    resume: bool,
    out: PathBuf,
) -> Result<(), Failure> {
    if jobs == 0 {
        return Err(Failure::Usage("--jobs must be >= 1".into()));
    }
    let batch = BatchConfig::from_file(config, overrides).map_err(Failure::from_load)?;
    let configs = runner::expand_grid(&batch).map_err(Failure::from_load)?;
    let summary = runner::run_batch(&configs, &out, jobs, resume).map_err(Failure::from_run)?;
    println!(
        "{} runs: {} completed, {} skipped, {} failed -> {}",
        configs.len(),
        summary.completed,
        summary.skipped,
        summary.failed.len(),
        out.display()
    );
    for (path, message) in &summary.failed {
        eprintln!("failed {path}: {message}");
    }
    if summary.failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Runtime(format!(
            "{} runs failed",
            summary.failed.len()
        )))
    }
}

fn cmd_report(dir: &Path, problem: Option<&str>) -> Result<(), Failure> {
    if !dir.is_dir() {
        return Err(Failure::Usage(format!(
            "{} is not a directory",
            dir.display()
        )));
    }
    let summary = runner::aggregate_problem(dir, problem).map_err(|e| match e {
        Error::Config { .. } | Error::InconsistentGrid(_) => Failure::Usage(e.to_string()),
        other => Failure::Runtime(other.to_string()),
    })?;
    let mut text = String::from("algorithm,eval_index,hv_median,hv_lo,hv_hi\n");
    for r in &summary.rows {
        writeln!(
            text,
            "{},{},{},{},{}",
            r.algorithm, r.eval_index, r.hv_median, r.hv_lo, r.hv_hi
        )
        .unwrap();
    }
    text.push_str("\nalgorithm,median_fit_s,median_acq_s\n");
    for t in &summary.timing {
        writeln!(
            text,
            "{},{},{}",
            t.algorithm, t.median_fit_s, t.median_acq_s
        )
        .unwrap();
    }
    print!("{text}");
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_dist_check(
    means: &[f64],
    stds: &[f64],
    weights: &[f64],
    samples: usize,
    seed: u64,
    points: usize,
    out: PathBuf,
) -> Result<(), Failure> {
    if means.len() != stds.len() || means.len() != weights.len() {
        return Err(Failure::Usage(format!(
            "--means, --stds and --weights need equal lengths (got {}, {}, {})",
            means.len(),
            stds.len(),
            weights.len()
        )));
    }
    if weights.iter().any(|w| w.is_nan() || *w <= 0.0) {
        return Err(Failure::Usage("--weights must be positive".into()));
    }
    if samples < 10_000 {
        return Err(Failure::Usage("--samples must be >= 10000".into()));
    }
    let ideal = vec![0.0; means.len()];
    let sp = ScalarisedPosterior::from_objectives(means, stds, weights, &ideal)
        .map_err(|e| Failure::Usage(e.to_string()))?;
    let report = gaussianity_report(&sp, samples, &mut streams::stream(seed, "dist-check", 0))
        .map_err(|e| Failure::Runtime(e.to_string()))?;
    for (key, value) in report.to_records() {
        println!("{key:<16} {value}");
    }
    let gumbel = GumbelParams::new(report.gumbel_location, report.gumbel_scale)
        .map_err(|e| Failure::Runtime(e.to_string()))?;
    let mut text = String::from("g,exact_pdf,gumbel_pdf,laplace_pdf\n");
    for [g, e, gu, la] in density_table(&sp, &gumbel, points) {
        writeln!(text, "{g},{e},{gu},{la}").unwrap();
    }
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)
            .map_err(|e| Failure::Runtime(format!("{}: {e}", parent.display())))?;
    }
    std::fs::write(&out, text).map_err(|e| Failure::Runtime(format!("{}: {e}", out.display())))?;
    println!("density table    {}", out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            config,
            overrides,
            out,
        } => cmd_run(&config, &overrides, output_root(out)),
        Command::Batch {
            config,
            jobs,
            resume,
            overrides,
            out,
        } => cmd_batch(&config, &overrides, jobs, resume, output_root(out)),
        Command::Report { dir, problem } => cmd_report(&dir, problem.as_deref()),
        Command::DistCheck {
            means,
            stds,
            weights,
            samples,
            seed,
            out,
            points,
        } => {
            let out = out.unwrap_or_else(|| output_root(None).join("density.csv"));
            cmd_dist_check(&means, &stds, &weights, samples, seed, points, out)
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
