//! Distribution of the weighted Tchebycheff value g = maxᵢ wᵢ(fᵢ − zᵢ) when
//! each objective has an independent Gaussian posterior fᵢ ~ N(μᵢ, σᵢ²).
//!
//! With mᵢ = wᵢ(μᵢ − zᵢ) and sᵢ = wᵢσᵢ the CDF is ∏ Φ((g − mᵢ)/sᵢ) and the
//! density is
//!
//! ```text
//! p(g) = Σᵢ (1/sᵢ) φ(uᵢ)/Φ(uᵢ) · ∏ⱼ Φ(uⱼ),   uᵢ = (g − mᵢ)/sᵢ
//! ```
//!
//! Besides the exact forms this module provides the Gumbel (maximum
//! likelihood, fixed-point) and Laplace approximations used downstream.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::normal;
use crate::optimizers::safeguarded_newton_1d;

/// Relative floor on the scaled standard deviations.
pub const STD_FLOOR: f64 = 1e-9;

/// Euler–Mascheroni constant.
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarisedPosterior {
    means: Vec<f64>,
    stds: Vec<f64>,
}

impl ScalarisedPosterior {
    /// `means` are mᵢ and `stds` are sᵢ; each sᵢ is floored at
    /// 1e-9·max(1, |mᵢ|).
    pub fn new(means: Vec<f64>, stds: Vec<f64>) -> Result<Self> {
        check_dim(means.len(), stds.len())?;
        if means.is_empty() {
            return Err(Error::InvalidArgument("need at least one component".into()));
        }
        if means.iter().chain(&stds).any(|v| !v.is_finite()) || stds.iter().any(|s| *s < 0.0) {
            return Err(Error::InvalidArgument(
                "means must be finite and stds finite and >= 0".into(),
            ));
        }
        let stds = means
            .iter()
            .zip(stds)
            .map(|(m, s)| s.max(STD_FLOOR * m.abs().max(1.0)))
            .collect();
        Ok(ScalarisedPosterior { means, stds })
    }

    /// mᵢ = wᵢ(μᵢ − zᵢ), sᵢ = wᵢσᵢ.
    pub fn from_objectives(
        mu: &[f64],
        sigma: &[f64],
        weights: &[f64],
        ideal: &[f64],
    ) -> Result<Self> {
        check_dim(mu.len(), sigma.len())?;
        check_dim(mu.len(), weights.len())?;
        check_dim(mu.len(), ideal.len())?;
        let means = mu
            .iter()
            .zip(weights)
            .zip(ideal)
            .map(|((m, w), z)| w * (m - z))
            .collect();
        let stds = sigma.iter().zip(weights).map(|(s, w)| w * s).collect();
        Self::new(means, stds)
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn stds(&self) -> &[f64] {
        &self.stds
    }

    pub fn len(&self) -> usize {
        self.means.len()
    }

    pub fn is_empty(&self) -> bool {
        self.means.is_empty()
    }

    pub fn max_std(&self) -> f64 {
        self.stds.iter().cloned().fold(0.0, f64::max)
    }

    /// [min mᵢ − k·max sᵢ, max mᵢ + k·max sᵢ]
    pub fn support(&self, k: f64) -> (f64, f64) {
        let lo = self.means.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = self.means.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let s = self.max_std();
        (lo - k * s, hi + k * s)
    }

    fn standardised(&self, g: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.means
            .iter()
            .zip(&self.stds)
            .map(move |(m, s)| ((g - m) / s, *s))
    }
}

/// log p(g)
pub fn exact_log_pdf(sp: &ScalarisedPosterior, g: f64) -> f64 {
    let log_cdf: Vec<f64> = sp
        .standardised(g)
        .map(|(u, _)| normal::log_cdf(u))
        .collect();
    let total: f64 = log_cdf.iter().sum();
    // log of the i-th term: log φ(uᵢ) − log sᵢ − log Φ(uᵢ) + Σⱼ log Φ(uⱼ)
    let terms: Vec<f64> = sp
        .standardised(g)
        .zip(&log_cdf)
        .map(|((u, s), lc)| normal::log_pdf(u) - s.ln() - lc + total)
        .collect();
    let top = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY || top.is_nan() {
        return f64::NEG_INFINITY;
    }
    top + terms.iter().map(|t| (t - top).exp()).sum::<f64>().ln()
}

pub fn exact_pdf(sp: &ScalarisedPosterior, g: f64) -> f64 {
    exact_log_pdf(sp, g).exp()
}

/// ∏ Φ((g − mᵢ)/sᵢ)
pub fn exact_cdf(sp: &ScalarisedPosterior, g: f64) -> f64 {
    sp.standardised(g)
        .map(|(u, _)| normal::log_cdf(u))
        .sum::<f64>()
        .exp()
}

/// d/dg log p(g) in closed form for any m. With rᵢ = φ(uᵢ)/(sᵢΦ(uᵢ)) and
/// R = Σ rᵢ: (R² − Σ rᵢ² − Σ uᵢrᵢ/sᵢ)/R.
pub fn exact_log_pdf_derivative(sp: &ScalarisedPosterior, g: f64) -> f64 {
    let mut r_sum = 0.0;
    let mut r_sq = 0.0;
    let mut slope = 0.0;
    for (u, s) in sp.standardised(g) {
        let r = normal::pdf_over_cdf(u) / s;
        r_sum += r;
        r_sq += r * r;
        slope += u * r / s;
    }
    (r_sum * r_sum - r_sq - slope) / r_sum
}

/// Draws of maxᵢ N(mᵢ, sᵢ²).
pub fn sample<R: Rng + ?Sized>(sp: &ScalarisedPosterior, count: usize, rng: &mut R) -> Vec<f64> {
    (0..count)
        .map(|_| {
            sp.means
                .iter()
                .zip(&sp.stds)
                .map(|(m, s)| m + s * rng.sample::<f64, _>(StandardNormal))
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect()
}

/// Same as [`sample`] but driven by pre-drawn standard normals laid out
/// row-major as `count × m`; used for common random numbers across
/// candidates.
pub fn sample_with_normals(sp: &ScalarisedPosterior, normals: &[f64]) -> Vec<f64> {
    let m = sp.len();
    normals
        .chunks_exact(m)
        .map(|z| {
            z.iter()
                .zip(sp.means.iter().zip(&sp.stds))
                .map(|(zi, (mi, si))| mi + si * zi)
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GumbelParams {
    pub location: f64,
    pub scale: f64,
}

impl GumbelParams {
    pub fn new(location: f64, scale: f64) -> Result<Self> {
        if !location.is_finite() || !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "invalid Gumbel({location}, {scale})"
            )));
        }
        Ok(GumbelParams { location, scale })
    }

    pub fn log_pdf(&self, g: f64) -> f64 {
        let t = (g - self.location) / self.scale;
        -self.scale.ln() - (t + (-t).exp())
    }

    pub fn cdf(&self, g: f64) -> f64 {
        (-(-(g - self.location) / self.scale).exp()).exp()
    }

    /// α − β ln(−ln q)
    pub fn quantile(&self, q: f64) -> f64 {
        self.location - self.scale * (-q.ln()).ln()
    }

    pub fn mean(&self) -> f64 {
        self.location + EULER_GAMMA * self.scale
    }

    pub fn sample<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Vec<f64> {
        (0..count).map(|_| self.quantile(open_unit(rng))).collect()
    }

    /// N log(1/β) − Σ tᵢ − Σ e^{−tᵢ}
    pub fn log_likelihood(&self, samples: &[f64]) -> f64 {
        let n = samples.len() as f64;
        let (st, se) = samples.iter().fold((0.0, 0.0), |(st, se), g| {
            let t = (g - self.location) / self.scale;
            (st + t, se + (-t).exp())
        });
        -n * self.scale.ln() - st - se
    }
}

/// Uniform on (0, 1), excluding both ends.
pub(crate) fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

/// (1/β) e^{−(t + e^{−t})}, t = (g − α)/β
pub fn gumbel_pdf(p: &GumbelParams, g: f64) -> f64 {
    p.log_pdf(g).exp()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GumbelFit {
    pub params: GumbelParams,
    pub iterations: usize,
    /// Moment-matched starting point of the iteration.
    pub initial: GumbelParams,
}

/// Maximum-iteration cap of the β fixed-point iteration.
pub const GUMBEL_MAX_ITER: usize = 200;

/// Maximum-likelihood Gumbel fit. β solves
/// β = ḡ − Σ gᵢe^{−gᵢ/β} / Σ e^{−gᵢ/β} by fixed-point iteration from the
/// moment estimate, damped once the iterates start to oscillate; then
/// α = −β log((1/N) Σ e^{−gᵢ/β}).
pub fn fit_gumbel(samples: &[f64]) -> Result<GumbelFit> {
    if samples.len() < 10 {
        return Err(Error::InvalidArgument(
            "Gumbel fit needs at least 10 samples".into(),
        ));
    }
    if samples.iter().any(|g| !g.is_finite()) {
        return Err(Error::InvalidArgument(
            "Gumbel fit needs finite samples".into(),
        ));
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    // centred values keep the exponentials in range and make the fit shift-equivariant
    let d: Vec<f64> = samples.iter().map(|g| g - mean).collect();
    let var = d.iter().map(|x| x * x).sum::<f64>() / (n - 1.0);
    if !(var > 0.0) || d.iter().all(|x| *x == d[0]) {
        return Err(Error::InvalidArgument(
            "Gumbel fit needs non-constant samples".into(),
        ));
    }
    let beta0 = var.sqrt() * 6f64.sqrt() / PI;
    let initial = GumbelParams {
        location: mean - EULER_GAMMA * beta0,
        scale: beta0,
    };

    // returns (−weighted mean of d, log-sum-exp offset, Σ weights)
    let tilt = |beta: f64| {
        let top = d
            .iter()
            .map(|x| -x / beta)
            .fold(f64::NEG_INFINITY, f64::max);
        let (mut sw, mut swd) = (0.0, 0.0);
        for x in &d {
            let w = (-x / beta - top).exp();
            sw += w;
            swd += w * x;
        }
        (-swd / sw, top, sw)
    };

    let mut beta = beta0;
    let mut damping = 1.0;
    let mut prev_step: Option<f64> = None;
    for it in 1..=GUMBEL_MAX_ITER {
        let (target, _, _) = tilt(beta);
        let step = target - beta;
        if let Some(p) = prev_step {
            if p * step < 0.0 {
                damping = if damping == 1.0 {
                    0.5
                } else if step.abs() >= p.abs() {
                    damping * 0.5
                } else {
                    damping
                };
            }
        }
        let mut next = beta + damping * step;
        if !(next > 0.0) {
            next = 0.5 * beta;
        }
        let moved = (next - beta).abs();
        beta = next;
        prev_step = Some(step);
        if moved < 1e-8 * beta {
            let (_, top, sw) = tilt(beta);
            let location = mean - beta * (top + (sw / n).ln());
            let params = GumbelParams::new(location, beta)?;
            return Ok(GumbelFit {
                params,
                iterations: it,
                initial,
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: GUMBEL_MAX_ITER,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaplaceParams {
    pub mode: f64,
    pub precision: f64,
}

impl LaplaceParams {
    pub fn std(&self) -> f64 {
        1.0 / self.precision.sqrt()
    }

    pub fn pdf(&self, g: f64) -> f64 {
        normal::pdf((g - self.mode) / self.std()) / self.std()
    }
}

/// Gaussian N(g₀, A⁻¹) at the mode g₀ of the exact density, with
/// A = −(log p)''(g₀).
pub fn laplace_fit(sp: &ScalarisedPosterior) -> Result<LaplaceParams> {
    let h = 1e-5 * sp.max_std();
    let dlog = |g: f64| exact_log_pdf_derivative(sp, g);
    let curvature = |g: f64| (dlog(g + h) - dlog(g - h)) / (2.0 * h);
    let mode = safeguarded_newton_1d(dlog, curvature, sp.support(6.0), 1e-8)?;
    let precision = -curvature(mode);
    if !(precision > 0.0) {
        return Err(Error::NonConcave {
            curvature: -precision,
        });
    }
    Ok(LaplaceParams { mode, precision })
}

/// Largest gap between the empirical CDF of `sorted` and `cdf`.
pub fn ks_distance<F: Fn(f64) -> f64>(sorted: &[f64], cdf: F) -> f64 {
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let c = cdf(*x);
            (c - i as f64 / n).max((i + 1) as f64 / n - c)
        })
        .fold(0.0, f64::max)
}

/// How far the scalarised distribution is from Gaussian, estimated from
/// samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianityReport {
    pub sample_count: usize,
    pub mean: f64,
    pub std: f64,
    pub skewness: f64,
    pub ks_gaussian: f64,
    pub ks_gumbel: f64,
    pub gumbel_location: f64,
    pub gumbel_scale: f64,
}

impl GaussianityReport {
    /// Flat `(key, value)` pairs in a fixed order.
    pub fn to_records(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("sample_count", self.sample_count as f64),
            ("mean", self.mean),
            ("std", self.std),
            ("skewness", self.skewness),
            ("ks_gaussian", self.ks_gaussian),
            ("ks_gumbel", self.ks_gumbel),
            ("gumbel_location", self.gumbel_location),
            ("gumbel_scale", self.gumbel_scale),
        ]
    }
}

pub fn skewness(samples: &[f64]) -> f64 {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let (m2, m3) = samples.iter().fold((0.0, 0.0), |(a, b), x| {
        let d = x - mean;
        (a + d * d, b + d * d * d)
    });
    let (m2, m3) = (m2 / n, m3 / n);
    m3 / m2.powf(1.5)
}

pub fn gaussianity_report<R: Rng + ?Sized>(
    sp: &ScalarisedPosterior,
    sample_count: usize,
    rng: &mut R,
) -> Result<GaussianityReport> {
    if sample_count < 10_000 {
        return Err(Error::InvalidArgument(
            "gaussianity report needs at least 10^4 samples".into(),
        ));
    }
    let mut draws = sample(sp, sample_count, rng);
    let n = draws.len() as f64;
    let mean = draws.iter().sum::<f64>() / n;
    let std = (draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let skew = skewness(&draws);
    let gumbel = fit_gumbel(&draws)?.params;
    draws.sort_by(f64::total_cmp);
    let ks_gaussian = ks_distance(&draws, |x| normal::cdf((x - mean) / std));
    let ks_gumbel = ks_distance(&draws, |x| gumbel.cdf(x));
    Ok(GaussianityReport {
        sample_count,
        mean,
        std,
        skewness: skew,
        ks_gaussian,
        ks_gumbel,
        gumbel_location: gumbel.location,
        gumbel_scale: gumbel.scale,
    })
}

/// Rows (g, exact pdf, Gumbel pdf, Laplace pdf) on `points` evenly spaced
/// values covering the support of the exact density and the bulk of both
/// approximations. A Laplace fit that fails leaves NaN in its column.
pub fn density_table(
    sp: &ScalarisedPosterior,
    gumbel: &GumbelParams,
    points: usize,
) -> Vec<[f64; 4]> {
    let laplace = laplace_fit(sp).ok();
    let (mut lo, mut hi) = sp.support(8.0);
    lo = lo.min(gumbel.quantile(1e-12));
    hi = hi.max(gumbel.quantile(1.0 - 1e-12));
    if let Some(l) = &laplace {
        lo = lo.min(l.mode - 8.0 * l.std());
        hi = hi.max(l.mode + 8.0 * l.std());
    }
    let points = points.max(2);
    (0..points)
        .map(|k| {
            let g = lo + (hi - lo) * k as f64 / (points - 1) as f64;
            [
                g,
                exact_pdf(sp, g),
                gumbel_pdf(gumbel, g),
                laplace.as_ref().map_or(f64::NAN, |l| l.pdf(g)),
            ]
        })
        .collect()
}
