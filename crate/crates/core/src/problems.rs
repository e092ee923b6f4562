//! DTLZ2, DTLZ5 and DTLZ7 test problems on [0, 1]^n, Latin hypercube
//! designs, and the evaluation archive.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ProblemName {
    #[serde(rename = "DTLZ2")]
    Dtlz2,
    #[serde(rename = "DTLZ5")]
    Dtlz5,
    #[serde(rename = "DTLZ7")]
    Dtlz7,
}

impl fmt::Display for ProblemName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProblemName::Dtlz2 => "DTLZ2",
            ProblemName::Dtlz5 => "DTLZ5",
            ProblemName::Dtlz7 => "DTLZ7",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub name: ProblemName,
    pub num_objectives: usize,
    pub num_variables: usize,
}

impl ProblemSpec {
    pub fn new(name: ProblemName, num_objectives: usize, num_variables: usize) -> Result<Self> {
        let spec = ProblemSpec {
            name,
            num_objectives,
            num_variables,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_objectives < 2 {
            return Err(Error::config("problem.num_objectives", "must be >= 2"));
        }
        if self.num_variables < self.num_objectives {
            return Err(Error::config(
                "problem.num_variables",
                "must be >= num_objectives",
            ));
        }
        Ok(())
    }

    pub fn bounds(&self) -> Vec<(f64, f64)> {
        vec![(0.0, 1.0); self.num_variables]
    }

    /// Fixed hypervolume reference point: 1.1 × the nadir of the true front
    /// for DTLZ2/5 (1.1, …, 1.1); for DTLZ7 (1.1, …, 1.1, 2.2·m).
    pub fn reference_point(&self) -> Vec<f64> {
        let m = self.num_objectives;
        let mut r = vec![1.1; m];
        if self.name == ProblemName::Dtlz7 {
            r[m - 1] = 2.2 * m as f64;
        }
        r
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.num_variables, x.len())?;
        for (index, &value) in x.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::OutOfBounds {
                    index,
                    value,
                    lo: 0.0,
                    hi: 1.0,
                });
            }
        }
        let m = self.num_objectives;
        let (position, distance) = x.split_at(m - 1);
        Ok(match self.name {
            ProblemName::Dtlz2 => {
                let g: f64 = distance.iter().map(|v| (v - 0.5).powi(2)).sum();
                let angles: Vec<f64> = position.iter().map(|v| v * FRAC_PI_2).collect();
                spherical(&angles, 1.0 + g)
            }
            ProblemName::Dtlz5 => {
                let g: f64 = distance.iter().map(|v| (v - 0.5).powi(2)).sum();
                let mut angles = Vec::with_capacity(m - 1);
                angles.push(position[0] * FRAC_PI_2);
                for v in &position[1..] {
                    angles.push(PI / (4.0 * (1.0 + g)) * (1.0 + 2.0 * g * v));
                }
                spherical(&angles, 1.0 + g)
            }
            ProblemName::Dtlz7 => {
                let g = 1.0 + 9.0 / distance.len() as f64 * distance.iter().sum::<f64>();
                let h = m as f64
                    - position
                        .iter()
                        .map(|f| f / (1.0 + g) * (1.0 + (3.0 * PI * f).sin()))
                        .sum::<f64>();
                let mut f = position.to_vec();
                f.push((1.0 + g) * h);
                f
            }
        })
    }
}

/// f₁ = r ∏ cos θⱼ, fᵢ = r ∏_{j ≤ m−i} cos θⱼ · sin θ_{m−i+1}, f_m = r sin θ₁
fn spherical(angles: &[f64], radius: f64) -> Vec<f64> {
    let m = angles.len() + 1;
    (0..m)
        .map(|i| {
            let cos_count = m - 1 - i;
            let mut v = radius;
            for a in &angles[..cos_count] {
                v *= a.cos();
            }
            if i > 0 {
                v *= angles[cos_count].sin();
            }
            v
        })
        .collect()
}

/// Latin hypercube design on [0, 1)^n: every column puts exactly one point in
/// each stratum [k/count, (k+1)/count).
pub fn lhs_sample<R: Rng + ?Sized>(n: usize, count: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let mut design = vec![vec![0.0; n]; count];
    let mut strata: Vec<usize> = (0..count).collect();
    for j in 0..n {
        strata.shuffle(rng);
        for (row, &k) in design.iter_mut().zip(&strata) {
            let v = (k as f64 + rng.random::<f64>()) / count as f64;
            // guard the upper stratum edge against rounding
            row[j] = v
                .min((k + 1) as f64 / count as f64 - f64::EPSILON)
                .max(k as f64 / count as f64);
        }
    }
    design
}

/// Evaluated decision vectors and their objective vectors.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub inputs: Vec<Vec<f64>>,
    pub objectives: Vec<Vec<f64>>,
}

impl Dataset {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: Vec<f64>, f: Vec<f64>) {
        self.inputs.push(x);
        self.objectives.push(f);
    }

    pub fn eval_count(&self) -> usize {
        self.inputs.len()
    }

    /// Column `i` of the objective matrix.
    pub fn objective_column(&self, i: usize) -> Vec<f64> {
        self.objectives.iter().map(|f| f[i]).collect()
    }
}
