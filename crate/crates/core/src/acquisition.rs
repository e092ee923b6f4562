//! Expected improvement in closed form (Gaussian posterior), by Monte Carlo
//! over a scalarised distribution, and Monte-Carlo expected hypervolume
//! improvement.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{check_dim, Error, Result};
use crate::gp::Prediction;
use crate::metrics::{hypervolume_improvement, nondominated_filter};
use crate::normal;
use crate::scalar_dist::{open_unit, sample, GumbelParams, ScalarisedPosterior};
use crate::scalarise::{augmented_tchebycheff, tchebycheff, NormalisationState, WeightVector};

/// Improvement threshold for the scalarised EI, plus the current front for
/// EHVI.
#[derive(Debug, Clone, PartialEq)]
pub struct Incumbent {
    pub best_scalarised: f64,
    pub front: Vec<Vec<f64>>,
}

impl Incumbent {
    /// Minimum scalarised value of the observed objectives after
    /// normalisation. `rho = None` uses the plain Tchebycheff function.
    pub fn from_archive(
        objectives: &[Vec<f64>],
        weights: &WeightVector,
        rho: Option<f64>,
    ) -> Result<Self> {
        let state = NormalisationState::from_points(objectives)?;
        let z = state.ideal();
        let mut best = f64::INFINITY;
        for f in objectives {
            let fn_ = state.normalise(f)?;
            let g = match rho {
                Some(r) => augmented_tchebycheff(&fn_, weights, &z, r)?,
                None => tchebycheff(&fn_, weights, &z)?,
            };
            best = best.min(g);
        }
        Ok(Incumbent {
            best_scalarised: best,
            front: nondominated_filter(objectives),
        })
    }
}

/// (g′ − μ)Φ(u) + σφ(u), u = (g′ − μ)/σ; max(0, g′ − μ) when σ = 0.
pub fn ei_closed_form(mean: f64, std: f64, incumbent: f64) -> f64 {
    let gap = incumbent - mean;
    if !(std > 0.0) {
        return gap.max(0.0);
    }
    let u = gap / std;
    (gap * normal::cdf(u) + std * normal::pdf(u)).max(0.0)
}

/// Mean of max(0, g′ − gₖ).
pub fn ei_from_samples(samples: &[f64], incumbent: f64) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    samples
        .iter()
        .map(|g| (incumbent - g).max(0.0))
        .sum::<f64>()
        / samples.len() as f64
}

/// MC EI of a Gumbel using pre-drawn uniforms on (0, 1) (common random
/// numbers across candidates).
pub fn ei_gumbel_with_uniforms(p: &GumbelParams, incumbent: f64, uniforms: &[f64]) -> f64 {
    if uniforms.is_empty() {
        return 0.0;
    }
    uniforms
        .iter()
        .map(|u| (incumbent - p.quantile(*u)).max(0.0))
        .sum::<f64>()
        / uniforms.len() as f64
}

/// Common uniforms for Gumbel EI, stored as ln(−ln u) so each candidate
/// costs one pass of adds: quantile(u) = α − β·ln(−ln u).
#[derive(Debug, Clone, PartialEq)]
pub struct GumbelDraws {
    log_neg_log: Vec<f64>,
}

impl GumbelDraws {
    pub fn from_uniforms(uniforms: &[f64]) -> Self {
        GumbelDraws {
            log_neg_log: uniforms.iter().map(|u| (-u.ln()).ln()).collect(),
        }
    }

    pub fn draw<R: Rng + ?Sized>(count: usize, rng: &mut R) -> Self {
        let u: Vec<f64> = (0..count).map(|_| open_unit(rng)).collect();
        Self::from_uniforms(&u)
    }

    pub fn len(&self) -> usize {
        self.log_neg_log.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_neg_log.is_empty()
    }

    /// Same value as `ei_gumbel_with_uniforms` on the originating uniforms.
    pub fn ei(&self, p: &GumbelParams, incumbent: f64) -> f64 {
        if self.log_neg_log.is_empty() {
            return 0.0;
        }
        let gap = incumbent - p.location;
        let total: f64 = self
            .log_neg_log
            .iter()
            .map(|l| (gap + p.scale * l).max(0.0))
            .sum();
        total / self.log_neg_log.len() as f64
    }
}

/// Where Monte-Carlo EI draws its samples from.
#[derive(Debug, Clone, Copy)]
pub enum McSource<'a> {
    /// Fitted Gumbel approximation.
    Gumbel(GumbelParams),
    /// The exact max-of-Gaussians distribution.
    Exact(&'a ScalarisedPosterior),
}

/// (1/count) Σ max(0, g′ − gₖ) over `count` draws.
pub fn ei_monte_carlo<R: Rng + ?Sized>(
    source: McSource<'_>,
    incumbent: f64,
    count: usize,
    rng: &mut R,
) -> f64 {
    match source {
        McSource::Gumbel(p) => {
            let total: f64 = (0..count)
                .map(|_| (incumbent - p.quantile(open_unit(rng))).max(0.0))
                .sum();
            total / count.max(1) as f64
        }
        McSource::Exact(sp) => ei_from_samples(&sample(sp, count, rng), incumbent),
    }
}

fn check_ehvi_inputs(
    predictions: &[Prediction],
    front: &[Vec<f64>],
    ref_point: &[f64],
) -> Result<()> {
    check_dim(ref_point.len(), predictions.len())?;
    for p in front {
        check_dim(ref_point.len(), p.len())?;
        if p.iter().zip(ref_point).any(|(a, r)| !(a < r)) {
            return Err(Error::InvalidReference {
                point: p.clone(),
                reference: ref_point.to_vec(),
            });
        }
    }
    Ok(())
}

/// Monte-Carlo EHVI with pre-drawn standard normals laid out `count × m`.
/// With all σ = 0 this is the deterministic improvement of the mean.
pub fn ehvi_with_normals(
    predictions: &[Prediction],
    front: &[Vec<f64>],
    ref_point: &[f64],
    normals: &[f64],
) -> Result<f64> {
    check_ehvi_inputs(predictions, front, ref_point)?;
    let m = ref_point.len();
    let means: Vec<f64> = predictions.iter().map(|p| p.mean).collect();
    if predictions.iter().all(|p| p.std == 0.0) {
        return hypervolume_improvement(front, &means, ref_point);
    }
    let mut total = 0.0;
    let mut count = 0usize;
    let mut y = vec![0.0; m];
    for z in normals.chunks_exact(m) {
        for i in 0..m {
            y[i] = means[i] + predictions[i].std * z[i];
        }
        total += hypervolume_improvement(front, &y, ref_point)?;
        count += 1;
    }
    Ok(if count == 0 {
        0.0
    } else {
        total / count as f64
    })
}

/// E[HV(front ∪ {F}) − HV(front)] with F drawn componentwise from the
/// independent Gaussian predictions.
pub fn ehvi<R: Rng + ?Sized>(
    predictions: &[Prediction],
    front: &[Vec<f64>],
    ref_point: &[f64],
    count: usize,
    rng: &mut R,
) -> Result<f64> {
    check_ehvi_inputs(predictions, front, ref_point)?;
    let normals: Vec<f64> = (0..count * predictions.len())
        .map(|_| rng.sample(StandardNormal))
        .collect();
    ehvi_with_normals(predictions, front, ref_point, &normals)
}
