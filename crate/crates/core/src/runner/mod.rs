//! The optimisation loop, batch orchestration over seeds, persistence and
//! aggregation of hypervolume traces.
//!
//! Every random draw in a run comes from a named stream of the run seed:
//! `init`, `weights`, `gp`, `ga`, `mc`, `random`, `fallback`, `perturb`.
//! Iteration `k` of every algorithm therefore sees the same weight vector.

mod aggregate;
mod batch;
mod config;
mod io;

use std::time::Instant;

use rand::Rng as _;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::acquisition::{ehvi_with_normals, ei_closed_form, ei_from_samples, GumbelDraws};
use crate::error::Result;
use crate::gp::{self, FitOptions, GpModel, Prediction};
use crate::metrics::ParetoArchive;
use crate::optimizers::ga_maximise;
use crate::problems::{lhs_sample, Dataset};
use crate::scalar_dist::{fit_gumbel, sample_with_normals, ScalarisedPosterior};
use crate::scalarise::{
    augmented_tchebycheff, sample_weight, tchebycheff, NormalisationState, WeightVector,
};
use crate::streams::{self, derive_seed};

pub use aggregate::{
    aggregate, aggregate_problem, percentile, summarise, AggregateRow, Summary, TimingRow,
};
pub use batch::{expand_grid, run_batch, BatchConfig, BatchSummary};
pub use config::{Algorithm, McCounts, RunConfig};
pub use io::{
    read_manifest, read_records, read_timings, record_run, write_run, Manifest, ManifestEntry,
    RunStatus, MANIFEST_FILE,
};

/// Proposals closer than this (max-norm) to an evaluated point are perturbed.
pub const DUPLICATE_TOL: f64 = 1e-9;
/// Side length of the perturbation box around a duplicate proposal.
pub const PERTURB_BOX: f64 = 1e-3;

/// Outcome of one acquisition step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    /// 0-based acquisition step.
    pub iteration: usize,
    /// Evaluations spent once this step's point is evaluated.
    pub eval_index: usize,
    pub chosen_x: Vec<f64>,
    pub objectives: Vec<f64>,
    /// Scalarised value of `objectives` under this step's weights and the
    /// normalisation of the data before the step.
    pub scalarised_value: f64,
    pub hypervolume_so_far: f64,
    pub weights: Vec<f64>,
    /// Set when model fitting failed and a random point was used instead.
    pub fallback: bool,
    pub wall_time_model_fit: f64,
    pub wall_time_acquisition: f64,
}

/// Run one optimisation and return one record per acquisition step.
pub fn run(config: &RunConfig) -> Result<Vec<RunRecord>> {
    config.validate()?;
    let problem = &config.problem;
    let seed = config.seed;
    let n = problem.num_variables;
    let bounds = problem.bounds();
    let lo: Vec<f64> = bounds.iter().map(|b| b.0).collect();
    let hi: Vec<f64> = bounds.iter().map(|b| b.1).collect();

    let mut data = Dataset::new();
    let mut archive = ParetoArchive::new(problem.reference_point());
    for x in lhs_sample(n, config.init_size(), &mut streams::stream(seed, "init", 0)) {
        let f = problem.evaluate(&x)?;
        archive.insert(&f)?;
        data.push(x, f);
    }

    let mut records = Vec::with_capacity(config.acquisition_steps());
    for it in 0..config.acquisition_steps() {
        let weights = sample_weight(
            problem.num_objectives,
            &mut streams::stream(seed, "weights", it as u64),
        )?;
        let norm = NormalisationState::from_points(&data.objectives)?;
        let step = propose(config, it, &data, &norm, &weights, &archive, &lo, &hi)?;
        let x = separate_from_archive(step.x, &data.inputs, &lo, &hi, seed, it);

        let f = problem.evaluate(&x)?;
        let f_norm = norm.normalise(&f)?;
        let z = norm.ideal();
        let scalarised_value = match config.algorithm {
            Algorithm::MonoEI => augmented_tchebycheff(&f_norm, &weights, &z, config.rho)?,
            _ => tchebycheff(&f_norm, &weights, &z)?,
        };
        archive.insert(&f)?;
        data.push(x.clone(), f.clone());
        records.push(RunRecord {
            iteration: it,
            eval_index: data.eval_count(),
            chosen_x: x,
            objectives: f,
            scalarised_value,
            hypervolume_so_far: archive.hypervolume()?,
            weights: weights.as_slice().to_vec(),
            fallback: step.fallback,
            wall_time_model_fit: step.fit_seconds,
            wall_time_acquisition: step.acquisition_seconds,
        });
    }
    Ok(records)
}

struct Proposal {
    x: Vec<f64>,
    fallback: bool,
    fit_seconds: f64,
    acquisition_seconds: f64,
}

fn uniform_point(lo: &[f64], hi: &[f64], rng: &mut streams::Rng) -> Vec<f64> {
    lo.iter()
        .zip(hi)
        .map(|(l, h)| l + (h - l) * rng.random::<f64>())
        .collect()
}

fn fit_options(config: &RunConfig, it: usize, objective: usize) -> FitOptions {
    let m = config.problem.num_objectives;
    FitOptions {
        restarts: config.gp_restarts,
        seed: derive_seed(config.seed, "gp", (it * m + objective) as u64),
        input_bounds: Some(config.problem.bounds()),
        fixed_noise: None,
        max_iter: 100,
    }
}

fn predict_all(models: &[GpModel], x: &[f64]) -> Option<Vec<Prediction>> {
    models.iter().map(|gp| gp.predict(x).ok()).collect()
}

fn normal_draws(count: usize, rng: &mut streams::Rng) -> Vec<f64> {
    (0..count).map(|_| rng.sample(StandardNormal)).collect()
}

#[allow(clippy::too_many_arguments)]
fn propose(
    config: &RunConfig,
    it: usize,
    data: &Dataset,
    norm: &NormalisationState,
    weights: &WeightVector,
    archive: &ParetoArchive,
    lo: &[f64],
    hi: &[f64],
) -> Result<Proposal> {
    let seed = config.seed;
    let m = config.problem.num_objectives;
    let mut ga = config.ga.clone();
    ga.seed = derive_seed(seed, "ga", it as u64);

    if config.algorithm == Algorithm::RandomSearch {
        let x = uniform_point(lo, hi, &mut streams::stream(seed, "random", it as u64));
        return Ok(Proposal {
            x,
            fallback: false,
            fit_seconds: 0.0,
            acquisition_seconds: 0.0,
        });
    }

    let z = norm.ideal();
    let normalised: Vec<Vec<f64>> = data
        .objectives
        .iter()
        .map(|f| norm.normalise(f))
        .collect::<Result<_>>()?;

    let fit_start = Instant::now();
    let fitted: Result<Vec<GpModel>> = if config.algorithm == Algorithm::MonoEI {
        let targets: Vec<f64> = normalised
            .iter()
            .map(|f| augmented_tchebycheff(f, weights, &z, config.rho))
            .collect::<Result<_>>()?;
        gp::fit(&data.inputs, &targets, &fit_options(config, it, 0)).map(|gp| vec![gp])
    } else {
        (0..m)
            .into_par_iter()
            .map(|i| {
                gp::fit(
                    &data.inputs,
                    &data.objective_column(i),
                    &fit_options(config, it, i),
                )
            })
            .collect()
    };
    let fit_seconds = fit_start.elapsed().as_secs_f64();

    let models = match fitted {
        Ok(models) => models,
        Err(_) => {
            let x = uniform_point(lo, hi, &mut streams::stream(seed, "fallback", it as u64));
            return Ok(Proposal {
                x,
                fallback: true,
                fit_seconds,
                acquisition_seconds: 0.0,
            });
        }
    };

    let acq_start = Instant::now();
    let mut mc = streams::stream(seed, "mc", it as u64);
    let result = match config.algorithm {
        Algorithm::MonoEI => {
            let incumbent = normalised
                .iter()
                .map(|f| augmented_tchebycheff(f, weights, &z, config.rho))
                .collect::<Result<Vec<f64>>>()?
                .into_iter()
                .fold(f64::INFINITY, f64::min);
            let gp = &models[0];
            ga_maximise(
                |x| {
                    gp.predict(x).map_or(f64::NEG_INFINITY, |p| {
                        ei_closed_form(p.mean, p.std, incumbent)
                    })
                },
                lo,
                hi,
                &ga,
            )?
        }
        Algorithm::MultiEiGumbel | Algorithm::MultiEiExactMC => {
            let incumbent = normalised
                .iter()
                .map(|f| tchebycheff(f, weights, &z))
                .collect::<Result<Vec<f64>>>()?
                .into_iter()
                .fold(f64::INFINITY, f64::min);
            let ranges: Vec<f64> = (0..m).map(|i| norm.range(i)).collect();
            let mins = norm.mins().to_vec();
            let w = weights.as_slice().to_vec();
            let posterior = move |x: &[f64]| -> Option<ScalarisedPosterior> {
                let preds = predict_all(&models, x)?;
                let mu: Vec<f64> = preds
                    .iter()
                    .enumerate()
                    .map(|(i, p)| (p.mean - mins[i]) / ranges[i])
                    .collect();
                let sd: Vec<f64> = preds
                    .iter()
                    .enumerate()
                    .map(|(i, p)| p.std / ranges[i])
                    .collect();
                ScalarisedPosterior::from_objectives(&mu, &sd, &w, &vec![0.0; m]).ok()
            };
            if config.algorithm == Algorithm::MultiEiGumbel {
                let normals = normal_draws(config.gumbel_sample_count * m, &mut mc);
                let draws = GumbelDraws::draw(config.mc_counts.search, &mut mc);
                ga_maximise(
                    |x| {
                        let Some(sp) = posterior(x) else {
                            return f64::NEG_INFINITY;
                        };
                        let samples = sample_with_normals(&sp, &normals);
                        match fit_gumbel(&samples) {
                            Ok(fit) => draws.ei(&fit.params, incumbent),
                            // degenerate sample cloud: use the draws directly
                            Err(_) => ei_from_samples(&samples, incumbent),
                        }
                    },
                    lo,
                    hi,
                    &ga,
                )?
            } else {
                let normals = normal_draws(config.mc_counts.search * m, &mut mc);
                ga_maximise(
                    |x| {
                        posterior(x).map_or(f64::NEG_INFINITY, |sp| {
                            ei_from_samples(&sample_with_normals(&sp, &normals), incumbent)
                        })
                    },
                    lo,
                    hi,
                    &ga,
                )?
            }
        }
        Algorithm::MultiEHVI => {
            let normals = normal_draws(config.mc_counts.search * m, &mut mc);
            let front = archive.points();
            let reference = archive.ref_point();
            ga_maximise(
                |x| {
                    predict_all(&models, x)
                        .and_then(|p| ehvi_with_normals(&p, front, reference, &normals).ok())
                        .unwrap_or(f64::NEG_INFINITY)
                },
                lo,
                hi,
                &ga,
            )?
        }
        Algorithm::RandomSearch => unreachable!("handled above"),
    };
    Ok(Proposal {
        x: result.best_x,
        fallback: false,
        fit_seconds,
        acquisition_seconds: acq_start.elapsed().as_secs_f64(),
    })
}

/// Nudge `x` by a uniform draw in a `PERTURB_BOX` cube when it repeats an
/// evaluated point, then clamp to the bounds.
fn separate_from_archive(
    mut x: Vec<f64>,
    inputs: &[Vec<f64>],
    lo: &[f64],
    hi: &[f64],
    seed: u64,
    it: usize,
) -> Vec<f64> {
    let is_duplicate = |x: &[f64]| {
        inputs
            .iter()
            .any(|p| p.iter().zip(x).all(|(a, b)| (a - b).abs() <= DUPLICATE_TOL))
    };
    if is_duplicate(&x) {
        let mut rng = streams::stream(seed, "perturb", it as u64);
        for (j, v) in x.iter_mut().enumerate() {
            *v = (*v + PERTURB_BOX * (rng.random::<f64>() - 0.5)).clamp(lo[j], hi[j]);
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizers::GaConfig;
    use crate::problems::{ProblemName, ProblemSpec};

    fn small(algorithm: Algorithm, seed: u64) -> RunConfig {
        let mut cfg = RunConfig::new(
            ProblemSpec::new(ProblemName::Dtlz2, 2, 3).unwrap(),
            algorithm,
            seed,
        );
        cfg.init_size = Some(8);
        cfg.budget = Some(11);
        cfg.ga = GaConfig {
            population: 12,
            generations: 4,
            ..GaConfig::default()
        };
        cfg.mc_counts.search = 64;
        cfg.gumbel_sample_count = 64;
        cfg.gp_restarts = 2;
        cfg
    }

    #[test]
    fn one_extra_evaluation_gives_one_step() {
        let mut cfg = small(Algorithm::MultiEiGumbel, 1);
        cfg.budget = Some(9);
        let recs = run(&cfg).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].eval_index, 9);
    }

    #[test]
    fn every_algorithm_spends_the_budget_exactly() {
        for alg in Algorithm::ALL {
            let cfg = small(alg, 2);
            let recs = run(&cfg).unwrap();
            assert_eq!(recs.len(), 3, "{alg}");
            assert_eq!(recs.last().unwrap().eval_index, 11);
            for (k, pair) in recs.windows(2).enumerate() {
                assert_eq!(pair[0].iteration, k);
                assert!(pair[1].iteration > pair[0].iteration);
                assert!(pair[1].hypervolume_so_far >= pair[0].hypervolume_so_far);
            }
            for r in &recs {
                assert!(r.chosen_x.iter().all(|v| (0.0..=1.0).contains(v)));
                assert_eq!(r.objectives, cfg.problem.evaluate(&r.chosen_x).unwrap());
            }
        }
    }

    #[test]
    fn weights_are_shared_across_algorithms() {
        let a = run(&small(Algorithm::MonoEI, 5)).unwrap();
        let b = run(&small(Algorithm::RandomSearch, 5)).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.weights, y.weights);
        }
    }

    #[test]
    fn duplicates_are_perturbed_inside_bounds() {
        let inputs = vec![vec![0.0, 0.5, 1.0]];
        let x = separate_from_archive(vec![0.0, 0.5, 1.0], &inputs, &[0.0; 3], &[1.0; 3], 3, 0);
        assert_ne!(x, inputs[0]);
        assert!(x
            .iter()
            .zip(&inputs[0])
            .all(|(a, b)| (a - b).abs() <= PERTURB_BOX / 2.0));
        assert!(x.iter().all(|v| (0.0..=1.0).contains(v)));
        let fresh = separate_from_archive(vec![0.2, 0.2, 0.2], &inputs, &[0.0; 3], &[1.0; 3], 3, 0);
        assert_eq!(fresh, vec![0.2, 0.2, 0.2]);
    }
}
