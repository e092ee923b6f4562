//! Zero-mean Gaussian process regression with an ARD squared-exponential
//! kernel.
//!
//! [`fit`] rescales inputs to the unit box, standardises targets, and picks
//! hyperparameters by maximising the log marginal likelihood with bounded
//! BFGS from several seeded starting points. [`GpModel::condition`] builds a
//! model from fixed hyperparameters without any rescaling.

use std::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng as _;

use crate::error::{check_dim, Error, Result};
use crate::optimizers::{quasi_newton_maximise, QnOptions};
use crate::streams;

/// Diagonal jitter tried in order until the Cholesky factorisation succeeds.
pub const JITTER_LADDER: [f64; 5] = [1e-10, 1e-9, 1e-8, 1e-7, 1e-6];

const SIGNAL_BOUNDS: (f64, f64) = (1e-3, 1e3);
const LENGTHSCALE_BOUNDS: (f64, f64) = (1e-3, 1e3);
const NOISE_BOUNDS: (f64, f64) = (1e-6, 1.0);

#[derive(Debug, Clone, PartialEq)]
pub struct Hyperparams {
    pub signal_std: f64,
    pub lengthscales: Vec<f64>,
    pub noise_std: f64,
}

impl Hyperparams {
    pub fn new(signal_std: f64, lengthscales: Vec<f64>, noise_std: f64) -> Result<Self> {
        if !(signal_std > 0.0) || lengthscales.iter().any(|l| !(*l > 0.0)) || !(noise_std >= 0.0) {
            return Err(Error::InvalidArgument(
                "hyperparameters require signal_std > 0, lengthscales > 0, noise_std >= 0".into(),
            ));
        }
        Ok(Hyperparams {
            signal_std,
            lengthscales,
            noise_std,
        })
    }

    pub fn dim(&self) -> usize {
        self.lengthscales.len()
    }

    /// (ln σ_f, ln l_1, …, ln l_n, ln σ_n)
    pub fn to_log(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.dim() + 2);
        v.push(self.signal_std.ln());
        v.extend(self.lengthscales.iter().map(|l| l.ln()));
        v.push(self.noise_std.ln());
        v
    }

    pub fn from_log(theta: &[f64]) -> Self {
        let n = theta.len() - 2;
        Hyperparams {
            signal_std: theta[0].exp(),
            lengthscales: theta[1..=n].iter().map(|t| t.exp()).collect(),
            noise_std: theta[n + 1].exp(),
        }
    }
}

/// σ_f² exp(−½ Σ (x_j − x'_j)²/l_j²) + σ_n² [same_point]
pub fn kernel_eval(x: &[f64], x_prime: &[f64], hp: &Hyperparams, same_point: bool) -> Result<f64> {
    check_dim(hp.dim(), x.len())?;
    check_dim(hp.dim(), x_prime.len())?;
    let noise = if same_point {
        hp.noise_std * hp.noise_std
    } else {
        0.0
    };
    Ok(se_kernel(x, x_prime, hp) + noise)
}

fn se_kernel(x: &[f64], x_prime: &[f64], hp: &Hyperparams) -> f64 {
    let r2: f64 = x
        .iter()
        .zip(x_prime)
        .zip(&hp.lengthscales)
        .map(|((a, b), l)| {
            let d = (a - b) / l;
            d * d
        })
        .sum();
    hp.signal_std * hp.signal_std * (-0.5 * r2).exp()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub mean: f64,
    pub std: f64,
}

/// Pairwise squared coordinate differences, cached across likelihood
/// evaluations of one dataset.
struct Distances {
    n_points: usize,
    dim: usize,
    /// sq[d][i * N + j] = (x_i,d − x_j,d)²
    sq: Vec<Vec<f64>>,
}

impl Distances {
    fn new(inputs: &[Vec<f64>]) -> Self {
        let n_points = inputs.len();
        let dim = inputs.first().map_or(0, |x| x.len());
        let sq = (0..dim)
            .map(|d| {
                let mut m = vec![0.0; n_points * n_points];
                for i in 0..n_points {
                    for j in 0..i {
                        let v = (inputs[i][d] - inputs[j][d]).powi(2);
                        m[i * n_points + j] = v;
                        m[j * n_points + i] = v;
                    }
                }
                m
            })
            .collect();
        Distances { n_points, dim, sq }
    }

    /// Noise-free SE kernel matrix, row-major.
    fn se_matrix(&self, hp: &Hyperparams) -> Vec<f64> {
        let n = self.n_points;
        let sf2 = hp.signal_std * hp.signal_std;
        let inv_l2: Vec<f64> = hp.lengthscales.iter().map(|l| 1.0 / (l * l)).collect();
        let mut k = vec![0.0; n * n];
        for i in 0..n {
            k[i * n + i] = sf2;
            for j in 0..i {
                let idx = i * n + j;
                let r2: f64 = (0..self.dim).map(|d| self.sq[d][idx] * inv_l2[d]).sum();
                let v = sf2 * (-0.5 * r2).exp();
                k[idx] = v;
                k[j * n + i] = v;
            }
        }
        k
    }
}

fn factorise(se: &[f64], n: usize, noise_var: f64) -> Result<(Cholesky<f64, Dyn>, f64)> {
    for &jitter in &JITTER_LADDER {
        let mut k = DMatrix::from_row_slice(n, n, se);
        for i in 0..n {
            k[(i, i)] += noise_var + jitter;
        }
        if let Some(ch) = Cholesky::new(k) {
            return Ok((ch, jitter));
        }
    }
    Err(Error::NonPdKernel {
        max_jitter: JITTER_LADDER[JITTER_LADDER.len() - 1],
    })
}

fn lml_from_factor(ch: &Cholesky<f64, Dyn>, targets: &DVector<f64>) -> (f64, DVector<f64>) {
    let n = targets.len() as f64;
    let alpha = ch.solve(targets);
    let log_det: f64 = 2.0 * ch.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    let value = -0.5 * targets.dot(&alpha) - 0.5 * log_det - 0.5 * n * (2.0 * PI).ln();
    (value, alpha)
}

/// −½ fᵀK⁻¹f − ½ log|K| − (N/2) log 2π, with K including σ_n² and jitter on
/// the diagonal.
pub fn log_marginal_likelihood(
    inputs: &[Vec<f64>],
    targets: &[f64],
    hp: &Hyperparams,
) -> Result<f64> {
    check_dim(inputs.len(), targets.len())?;
    if inputs.is_empty() {
        return Err(Error::InvalidArgument(
            "need at least one data point".into(),
        ));
    }
    for x in inputs {
        check_dim(hp.dim(), x.len())?;
    }
    let dist = Distances::new(inputs);
    let se = dist.se_matrix(hp);
    let (ch, _) = factorise(&se, inputs.len(), hp.noise_std * hp.noise_std)?;
    Ok(lml_from_factor(&ch, &DVector::from_column_slice(targets)).0)
}

/// Log marginal likelihood and its gradient with respect to the log
/// hyperparameters (ln σ_f, ln l_1…ln l_n, ln σ_n).
pub fn log_marginal_likelihood_grad(
    inputs: &[Vec<f64>],
    targets: &[f64],
    hp: &Hyperparams,
) -> Result<(f64, Vec<f64>)> {
    check_dim(inputs.len(), targets.len())?;
    for x in inputs {
        check_dim(hp.dim(), x.len())?;
    }
    let dist = Distances::new(inputs);
    lml_grad_cached(&dist, &DVector::from_column_slice(targets), hp)
}

/// Lower triangle (row-major, j ≤ i) of K⁻¹ = L⁻ᵀL⁻¹ from the Cholesky factor.
fn inverse_lower(ch: &Cholesky<f64, Dyn>) -> Vec<f64> {
    let l = ch.l_dirty();
    let n = l.nrows();
    // rows of X = L⁻¹ (lower triangular): xᵢ = (eᵢ − Σ_{k<i} L_ik x_k) / L_ii
    let mut x = vec![0.0; n * n];
    for i in 0..n {
        let (done, rest) = x.split_at_mut(i * n);
        let row = &mut rest[..=i];
        row[i] = 1.0;
        for k in 0..i {
            let lik = l[(i, k)];
            if lik != 0.0 {
                let xk = &done[k * n..=k * n + k];
                for (r, v) in row[..=k].iter_mut().zip(xk) {
                    *r -= lik * v;
                }
            }
        }
        let inv_d = 1.0 / l[(i, i)];
        for r in row.iter_mut() {
            *r *= inv_d;
        }
    }
    // K⁻¹_ab = Σ_i X_ia X_ib, accumulated row by row of X
    let mut kinv = vec![0.0; n * n];
    for i in 0..n {
        let xi = &x[i * n..=i * n + i];
        for a in 0..=i {
            let xa = xi[a];
            if xa != 0.0 {
                for (k, v) in kinv[a * n..=a * n + a].iter_mut().zip(&xi[..=a]) {
                    *k += xa * v;
                }
            }
        }
    }
    kinv
}

fn lml_grad_cached(
    dist: &Distances,
    targets: &DVector<f64>,
    hp: &Hyperparams,
) -> Result<(f64, Vec<f64>)> {
    let n = dist.n_points;
    let se = dist.se_matrix(hp);
    let noise_var = hp.noise_std * hp.noise_std;
    let (ch, _) = factorise(&se, n, noise_var)?;
    let (value, alpha) = lml_from_factor(&ch, targets);
    let kinv = inverse_lower(&ch);

    // W = ααᵀ − K⁻¹ ; ∂LML/∂θ = ½ tr(W ∂K/∂θ)
    let mut grad = vec![0.0; dist.dim + 2];
    let mut trace_w = 0.0;
    for i in 0..n {
        let wii = alpha[i] * alpha[i] - kinv[i * n + i];
        trace_w += wii;
        grad[0] += wii * se[i * n + i];
        for j in 0..i {
            let idx = i * n + j;
            // symmetric: count (i, j) and (j, i)
            let wk = 2.0 * (alpha[i] * alpha[j] - kinv[idx]) * se[idx];
            grad[0] += wk;
            for d in 0..dist.dim {
                grad[1 + d] += wk * dist.sq[d][idx];
            }
        }
    }
    for (d, l) in hp.lengthscales.iter().enumerate() {
        grad[1 + d] *= 0.5 / (l * l);
    }
    grad[dist.dim + 1] = noise_var * trace_w;
    Ok((value, grad))
}

#[derive(Debug, Clone)]
pub struct FitOptions {
    pub restarts: usize,
    pub seed: u64,
    /// Box used to rescale inputs to [0, 1]^n. `None` means inputs are used
    /// as given.
    pub input_bounds: Option<Vec<(f64, f64)>>,
    /// Hold σ_n at this value instead of optimising it.
    pub fixed_noise: Option<f64>,
    pub max_iter: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            restarts: 10,
            seed: 0,
            input_bounds: None,
            fixed_noise: None,
            max_iter: 100,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GpModel {
    train_inputs: Vec<Vec<f64>>,
    hyperparams: Hyperparams,
    chol: Cholesky<f64, Dyn>,
    weights: DVector<f64>,
    jitter: f64,
    log_likelihood: f64,
    input_bounds: Option<Vec<(f64, f64)>>,
    target_shift: f64,
    target_scale: f64,
}

impl GpModel {
    /// Condition a GP on raw data with fixed hyperparameters. No input
    /// rescaling or target standardisation.
    pub fn condition(inputs: &[Vec<f64>], targets: &[f64], hp: Hyperparams) -> Result<Self> {
        Self::build(inputs.to_vec(), targets.to_vec(), hp, None, 0.0, 1.0)
    }

    fn build(
        inputs: Vec<Vec<f64>>,
        targets: Vec<f64>,
        hp: Hyperparams,
        input_bounds: Option<Vec<(f64, f64)>>,
        target_shift: f64,
        target_scale: f64,
    ) -> Result<Self> {
        check_dim(inputs.len(), targets.len())?;
        if inputs.is_empty() {
            return Err(Error::InvalidArgument(
                "need at least one data point".into(),
            ));
        }
        for x in &inputs {
            check_dim(hp.dim(), x.len())?;
        }
        let dist = Distances::new(&inputs);
        let se = dist.se_matrix(&hp);
        let (chol, jitter) = factorise(&se, inputs.len(), hp.noise_std * hp.noise_std)?;
        let t = DVector::from_column_slice(&targets);
        let (log_likelihood, weights) = lml_from_factor(&chol, &t);
        Ok(GpModel {
            train_inputs: inputs,
            hyperparams: hp,
            chol,
            weights,
            jitter,
            log_likelihood,
            input_bounds,
            target_shift,
            target_scale,
        })
    }

    pub fn hyperparams(&self) -> &Hyperparams {
        &self.hyperparams
    }

    /// Log marginal likelihood of the (standardised) training targets.
    pub fn log_likelihood(&self) -> f64 {
        self.log_likelihood
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn dim(&self) -> usize {
        self.hyperparams.dim()
    }

    pub fn num_points(&self) -> usize {
        self.train_inputs.len()
    }

    /// Lower-triangular factor L with L·Lᵀ = K + jitter·I.
    pub fn chol_factor(&self) -> DMatrix<f64> {
        self.chol.l()
    }

    fn scale_input(&self, x: &[f64]) -> Vec<f64> {
        match &self.input_bounds {
            Some(b) => x
                .iter()
                .zip(b)
                .map(|(v, (lo, hi))| (v - lo) / (hi - lo))
                .collect(),
            None => x.to_vec(),
        }
    }

    /// Posterior mean and standard deviation of the latent function at `x`.
    pub fn predict(&self, x: &[f64]) -> Result<Prediction> {
        check_dim(self.dim(), x.len())?;
        let xs = self.scale_input(x);
        let kstar = DVector::from_iterator(
            self.train_inputs.len(),
            self.train_inputs
                .iter()
                .map(|xi| se_kernel(&xs, xi, &self.hyperparams)),
        );
        let mean = kstar.dot(&self.weights);
        let v = self
            .chol
            .l_dirty()
            .solve_lower_triangular(&kstar)
            .expect("Cholesky factor has a positive diagonal");
        let prior = self.hyperparams.signal_std * self.hyperparams.signal_std;
        let var = (prior - v.norm_squared()).max(0.0);
        Ok(Prediction {
            mean: mean * self.target_scale + self.target_shift,
            std: var.sqrt() * self.target_scale,
        })
    }
}

fn log_bounds(dim: usize, fixed_noise: bool) -> Vec<(f64, f64)> {
    let ln = |b: (f64, f64)| (b.0.ln(), b.1.ln());
    let mut b = vec![ln(SIGNAL_BOUNDS)];
    b.extend(std::iter::repeat_n(ln(LENGTHSCALE_BOUNDS), dim));
    if !fixed_noise {
        b.push(ln(NOISE_BOUNDS));
    }
    b
}

/// Fit a GP by maximising the log marginal likelihood over `opts.restarts`
/// BFGS runs. The first run starts at σ_f = 1, l = 0.5, σ_n = 0.01; the rest
/// start log-uniformly inside the hyperparameter bounds.
pub fn fit(inputs: &[Vec<f64>], targets: &[f64], opts: &FitOptions) -> Result<GpModel> {
    check_dim(inputs.len(), targets.len())?;
    if inputs.len() < 2 {
        return Err(Error::InvalidArgument(
            "GP fit needs at least two points".into(),
        ));
    }
    if opts.restarts < 1 {
        return Err(Error::InvalidArgument("restarts must be >= 1".into()));
    }
    let dim = inputs[0].len();
    for x in inputs {
        check_dim(dim, x.len())?;
    }
    if let Some(b) = &opts.input_bounds {
        check_dim(dim, b.len())?;
        if b.iter().any(|(lo, hi)| !(lo < hi)) {
            return Err(Error::InvalidArgument("input bounds need lo < hi".into()));
        }
    }

    let scaled: Vec<Vec<f64>> = match &opts.input_bounds {
        Some(b) => inputs
            .iter()
            .map(|x| {
                x.iter()
                    .zip(b)
                    .map(|(v, (lo, hi))| (v - lo) / (hi - lo))
                    .collect()
            })
            .collect(),
        None => inputs.to_vec(),
    };
    let n = targets.len() as f64;
    let shift = targets.iter().sum::<f64>() / n;
    let sd = (targets.iter().map(|t| (t - shift).powi(2)).sum::<f64>() / n).sqrt();
    let scale = if sd > 0.0 && sd.is_finite() { sd } else { 1.0 };
    let standardised: Vec<f64> = targets.iter().map(|t| (t - shift) / scale).collect();

    let dist = Distances::new(&scaled);
    let tvec = DVector::from_column_slice(&standardised);
    let fixed_ln_noise = opts.fixed_noise.map(|s| s.ln());
    let bounds = log_bounds(dim, fixed_ln_noise.is_some());
    let full = |theta: &[f64]| -> Vec<f64> {
        let mut t = theta.to_vec();
        if let Some(ln_sn) = fixed_ln_noise {
            t.push(ln_sn);
        }
        t
    };

    let starts: Vec<Vec<f64>> = (0..opts.restarts)
        .map(|k| {
            if k == 0 {
                let mut t = vec![0.0];
                t.extend(std::iter::repeat_n(0.5f64.ln(), dim));
                if fixed_ln_noise.is_none() {
                    t.push(1e-2f64.ln());
                }
                t
            } else {
                let mut rng = streams::stream(opts.seed, "gp-restart", k as u64);
                bounds
                    .iter()
                    .map(|&(lo, hi)| rng.random_range(lo..hi))
                    .collect()
            }
        })
        .collect();

    let qn = QnOptions {
        max_iter: opts.max_iter,
        grad_tol: 1e-5,
        value_tol: 1e-10,
    };
    let outcomes: Vec<Result<(Vec<f64>, f64)>> = starts
        .iter()
        .map(|x0| {
            let objective = |theta: &[f64]| {
                let hp = Hyperparams::from_log(&full(theta));
                let (v, mut g) = lml_grad_cached(&dist, &tvec, &hp).ok()?;
                if fixed_ln_noise.is_some() {
                    g.pop();
                }
                Some((v, g))
            };
            quasi_newton_maximise(objective, x0, &bounds, &qn)
                .map(|r| (r.x, r.value))
                .ok_or(Error::NonPdKernel {
                    max_jitter: JITTER_LADDER[JITTER_LADDER.len() - 1],
                })
        })
        .collect();

    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut last_err = None;
    for outcome in outcomes {
        match outcome {
            Ok((x, v)) => {
                if best.as_ref().is_none_or(|b| v > b.1) {
                    best = Some((x, v));
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    let Some((theta, _)) = best else {
        return Err(Error::FitFailed {
            restarts: opts.restarts,
            last: Box::new(last_err.unwrap_or(Error::InvalidArgument("no restarts ran".into()))),
        });
    };
    let hp = Hyperparams::from_log(&full(&theta));
    GpModel::build(
        scaled,
        standardised,
        hp,
        opts.input_bounds.clone(),
        shift,
        scale,
    )
}
