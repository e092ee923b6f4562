//! Real-coded genetic algorithm: binary tournament, simulated binary
//! crossover, polynomial mutation, single elite.

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::streams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaConfig {
    #[serde(default = "default_population")]
    pub population: usize,
    #[serde(default = "default_generations")]
    pub generations: usize,
    #[serde(default = "default_crossover_prob")]
    pub crossover_prob: f64,
    /// Per-variable mutation probability; `None` means 1/n.
    #[serde(default)]
    pub mutation_prob: Option<f64>,
    #[serde(default = "default_sbx_eta")]
    pub sbx_eta: f64,
    #[serde(default = "default_pm_eta")]
    pub pm_eta: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_population() -> usize {
    100
}
fn default_generations() -> usize {
    100
}
fn default_crossover_prob() -> f64 {
    0.9
}
fn default_sbx_eta() -> f64 {
    15.0
}
fn default_pm_eta() -> f64 {
    20.0
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            population: default_population(),
            generations: default_generations(),
            crossover_prob: default_crossover_prob(),
            mutation_prob: None,
            sbx_eta: default_sbx_eta(),
            pm_eta: default_pm_eta(),
            seed: 0,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population < 4 || !self.population.is_multiple_of(2) {
            return Err(Error::config("ga.population", "must be even and >= 4"));
        }
        if self.generations < 1 {
            return Err(Error::config("ga.generations", "must be >= 1"));
        }
        if !(0.0..=1.0).contains(&self.crossover_prob) {
            return Err(Error::config("ga.crossover_prob", "must lie in [0, 1]"));
        }
        if let Some(p) = self.mutation_prob {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::config("ga.mutation_prob", "must lie in [0, 1]"));
            }
        }
        if !(self.sbx_eta > 0.0) {
            return Err(Error::config("ga.sbx_eta", "must be positive"));
        }
        if !(self.pm_eta > 0.0) {
            return Err(Error::config("ga.pm_eta", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct GaResult {
    pub best_x: Vec<f64>,
    pub best_value: f64,
    /// Best-ever value after the initial population and after each generation.
    pub history: Vec<f64>,
    pub evaluations: usize,
}

fn fitness<F: Fn(&[f64]) -> f64 + Sync>(objective: &F, pop: &[Vec<f64>]) -> Vec<f64> {
    // par_iter keeps index order, so results do not depend on scheduling.
    pop.par_iter()
        .map(|x| {
            let v = objective(x);
            if v.is_nan() {
                f64::NEG_INFINITY
            } else {
                v
            }
        })
        .collect()
}

fn tournament(rng: &mut streams::Rng, values: &[f64]) -> usize {
    let a = rng.random_range(0..values.len());
    let b = rng.random_range(0..values.len());
    if values[b] > values[a] {
        b
    } else {
        a
    }
}

fn sbx(rng: &mut streams::Rng, p1: &mut [f64], p2: &mut [f64], lo: &[f64], hi: &[f64], eta: f64) {
    for j in 0..p1.len() {
        if rng.random::<f64>() > 0.5 {
            continue;
        }
        if (p1[j] - p2[j]).abs() <= 1e-14 {
            continue;
        }
        let (y1, y2) = if p1[j] < p2[j] {
            (p1[j], p2[j])
        } else {
            (p2[j], p1[j])
        };
        let (yl, yu) = (lo[j], hi[j]);
        let u: f64 = rng.random();
        let spread = |beta: f64| {
            let alpha = 2.0 - beta.powf(-(eta + 1.0));
            if u <= 1.0 / alpha {
                (u * alpha).powf(1.0 / (eta + 1.0))
            } else {
                (1.0 / (2.0 - u * alpha)).powf(1.0 / (eta + 1.0))
            }
        };
        let bq1 = spread(1.0 + 2.0 * (y1 - yl) / (y2 - y1));
        let c1 = 0.5 * ((y1 + y2) - bq1 * (y2 - y1));
        let bq2 = spread(1.0 + 2.0 * (yu - y2) / (y2 - y1));
        let c2 = 0.5 * ((y1 + y2) + bq2 * (y2 - y1));
        let (c1, c2) = (c1.clamp(yl, yu), c2.clamp(yl, yu));
        if rng.random::<f64>() <= 0.5 {
            p1[j] = c2;
            p2[j] = c1;
        } else {
            p1[j] = c1;
            p2[j] = c2;
        }
    }
}

fn polynomial_mutation(
    rng: &mut streams::Rng,
    x: &mut [f64],
    lo: &[f64],
    hi: &[f64],
    prob: f64,
    eta: f64,
) {
    let pow = 1.0 / (eta + 1.0);
    for j in 0..x.len() {
        if rng.random::<f64>() >= prob {
            continue;
        }
        let width = hi[j] - lo[j];
        let d1 = (x[j] - lo[j]) / width;
        let d2 = (hi[j] - x[j]) / width;
        let u: f64 = rng.random();
        let dq = if u < 0.5 {
            let v = 2.0 * u + (1.0 - 2.0 * u) * (1.0 - d1).powf(eta + 1.0);
            v.powf(pow) - 1.0
        } else {
            let v = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * (1.0 - d2).powf(eta + 1.0);
            1.0 - v.powf(pow)
        };
        x[j] = (x[j] + dq * width).clamp(lo[j], hi[j]);
    }
}

/// Maximise `objective` over the box `[lo, hi]`. Returns the best individual
/// ever evaluated.
pub fn ga_maximise<F>(objective: F, lo: &[f64], hi: &[f64], cfg: &GaConfig) -> Result<GaResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    cfg.validate()?;
    crate::error::check_dim(lo.len(), hi.len())?;
    if lo.iter().zip(hi).any(|(l, h)| !(l < h)) {
        return Err(Error::InvalidArgument(
            "GA box requires lo < hi componentwise".into(),
        ));
    }
    let n = lo.len();
    let mut rng = streams::seeded(cfg.seed);
    let pm = cfg.mutation_prob.unwrap_or(1.0 / n as f64);

    let mut pop: Vec<Vec<f64>> = (0..cfg.population)
        .map(|_| (0..n).map(|j| rng.random_range(lo[j]..hi[j])).collect())
        .collect();
    let mut values = fitness(&objective, &pop);
    let mut evaluations = pop.len();

    let argmax = |v: &[f64]| {
        let mut best = 0;
        for (i, x) in v.iter().enumerate() {
            if *x > v[best] {
                best = i;
            }
        }
        best
    };

    let b = argmax(&values);
    let mut best_x = pop[b].clone();
    let mut best_value = values[b];
    let mut history = vec![best_value];

    for _ in 0..cfg.generations {
        let elite = argmax(&values);
        let mut children: Vec<Vec<f64>> = Vec::with_capacity(cfg.population);
        while children.len() < cfg.population - 1 {
            let mut c1 = pop[tournament(&mut rng, &values)].clone();
            let mut c2 = pop[tournament(&mut rng, &values)].clone();
            if rng.random::<f64>() < cfg.crossover_prob {
                sbx(&mut rng, &mut c1, &mut c2, lo, hi, cfg.sbx_eta);
            }
            polynomial_mutation(&mut rng, &mut c1, lo, hi, pm, cfg.pm_eta);
            polynomial_mutation(&mut rng, &mut c2, lo, hi, pm, cfg.pm_eta);
            children.push(c1);
            children.push(c2);
        }
        children.truncate(cfg.population - 1);
        let child_values = fitness(&objective, &children);
        evaluations += children.len();

        let mut next = Vec::with_capacity(cfg.population);
        let mut next_values = Vec::with_capacity(cfg.population);
        next.push(pop[elite].clone());
        next_values.push(values[elite]);
        next.extend(children);
        next_values.extend(child_values);
        pop = next;
        values = next_values;

        let b = argmax(&values);
        if values[b] > best_value {
            best_value = values[b];
            best_x = pop[b].clone();
        }
        history.push(best_value);
    }

    Ok(GaResult {
        best_x,
        best_value,
        history,
        evaluations,
    })
}
