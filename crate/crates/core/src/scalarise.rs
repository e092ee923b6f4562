//! Weighted and augmented Tchebycheff scalarisation with per-iteration
//! objective normalisation.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// Augmentation coefficient of the mono-surrogate scalarisation.
pub const DEFAULT_RHO: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    /// Accepts non-negative weights summing to 1 within 1e-12.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() || weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::InvalidArgument(
                "weights must be non-negative and non-empty".into(),
            ));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "weights sum to {sum}, expected 1"
            )));
        }
        Ok(WeightVector(weights))
    }

    /// Rescale arbitrary non-negative weights onto the simplex.
    pub fn normalised(raw: &[f64]) -> Result<Self> {
        let sum: f64 = raw.iter().sum();
        if raw.is_empty() || raw.iter().any(|w| !(*w >= 0.0)) || !(sum > 0.0) {
            return Err(Error::InvalidArgument(
                "weights must be non-negative with positive sum".into(),
            ));
        }
        Ok(WeightVector(raw.iter().map(|w| w / sum).collect()))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Uniform draw from the unit simplex via spacings of sorted uniforms.
pub fn sample_weight<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Result<WeightVector> {
    if m < 2 {
        return Err(Error::InvalidArgument(
            "weight sampling needs m >= 2".into(),
        ));
    }
    let mut cuts: Vec<f64> = (0..m - 1).map(|_| rng.random::<f64>()).collect();
    cuts.sort_by(f64::total_cmp);
    let mut w = Vec::with_capacity(m);
    let mut prev = 0.0;
    for c in cuts {
        w.push(c - prev);
        prev = c;
    }
    w.push(1.0 - prev);
    Ok(WeightVector(w))
}

/// Per-objective min/max over the evaluated points; the ideal point is the
/// origin of the normalised space.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalisationState {
    mins: Vec<f64>,
    maxs: Vec<f64>,
}

impl NormalisationState {
    pub fn from_points(points: &[Vec<f64>]) -> Result<Self> {
        let first = points.first().ok_or_else(|| {
            Error::InvalidArgument("normalisation needs at least one point".into())
        })?;
        let mut mins = first.clone();
        let mut maxs = first.clone();
        for p in &points[1..] {
            check_dim(mins.len(), p.len())?;
            for (i, v) in p.iter().enumerate() {
                mins[i] = mins[i].min(*v);
                maxs[i] = maxs[i].max(*v);
            }
        }
        Ok(NormalisationState { mins, maxs })
    }

    pub fn mins(&self) -> &[f64] {
        &self.mins
    }

    pub fn maxs(&self) -> &[f64] {
        &self.maxs
    }

    pub fn dim(&self) -> usize {
        self.mins.len()
    }

    /// max − min, or 1 for a degenerate objective.
    pub fn range(&self, i: usize) -> f64 {
        let r = self.maxs[i] - self.mins[i];
        if r > 0.0 {
            r
        } else {
            1.0
        }
    }

    pub fn ideal(&self) -> Vec<f64> {
        vec![0.0; self.mins.len()]
    }

    /// (f − min)/(max − min), not clamped.
    pub fn normalise(&self, objectives: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), objectives.len())?;
        Ok(objectives
            .iter()
            .enumerate()
            .map(|(i, f)| (f - self.mins[i]) / self.range(i))
            .collect())
    }
}

/// maxᵢ wᵢ(fᵢ − zᵢ)
pub fn tchebycheff(f_norm: &[f64], w: &WeightVector, z: &[f64]) -> Result<f64> {
    check_dim(w.len(), f_norm.len())?;
    check_dim(w.len(), z.len())?;
    Ok(f_norm
        .iter()
        .zip(w.as_slice())
        .zip(z)
        .map(|((f, wi), zi)| wi * (f - zi))
        .fold(f64::NEG_INFINITY, f64::max))
}

/// tchebycheff + ρ Σᵢ wᵢ(fᵢ − zᵢ)
pub fn augmented_tchebycheff(f_norm: &[f64], w: &WeightVector, z: &[f64], rho: f64) -> Result<f64> {
    if !(rho >= 0.0) {
        return Err(Error::InvalidArgument("rho must be >= 0".into()));
    }
    let max = tchebycheff(f_norm, w, z)?;
    let sum: f64 = f_norm
        .iter()
        .zip(w.as_slice())
        .zip(z)
        .map(|((f, wi), zi)| wi * (f - zi))
        .sum();
    Ok(max + rho * sum)
}
