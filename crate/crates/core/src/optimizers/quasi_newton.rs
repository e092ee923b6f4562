//! Bounded BFGS (projected, backtracking Armijo line search) for
//! maximisation.

#[derive(Debug, Clone, Copy)]
pub struct QnOptions {
    pub max_iter: usize,
    /// Stop when the projected gradient's infinity norm falls below this.
    pub grad_tol: f64,
    /// Stop when successive accepted values improve by less than this
    /// (relative) for several iterations in a row.
    pub value_tol: f64,
}

impl Default for QnOptions {
    fn default() -> Self {
        QnOptions {
            max_iter: 200,
            grad_tol: 1e-6,
            value_tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone)]
pub struct QnResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub converged: bool,
    pub iterations: usize,
    pub evaluations: usize,
}

/// Central-difference gradient.
pub fn numeric_gradient<F: FnMut(&[f64]) -> Option<f64>>(
    f: &mut F,
    x: &[f64],
    h: f64,
) -> Option<Vec<f64>> {
    let mut xp = x.to_vec();
    let mut g = vec![0.0; x.len()];
    for j in 0..x.len() {
        xp[j] = x[j] + h;
        let fp = f(&xp)?;
        xp[j] = x[j] - h;
        let fm = f(&xp)?;
        xp[j] = x[j];
        g[j] = (fp - fm) / (2.0 * h);
    }
    Some(g)
}

/// Wrap a value-only objective with a central-difference gradient.
pub fn with_numeric_gradient<F>(mut f: F, h: f64) -> impl FnMut(&[f64]) -> Option<(f64, Vec<f64>)>
where
    F: FnMut(&[f64]) -> Option<f64>,
{
    move |x| {
        let v = f(x)?;
        let g = numeric_gradient(&mut f, x, h)?;
        Some((v, g))
    }
}

fn project(x: &mut [f64], bounds: &[(f64, f64)]) {
    for (v, &(lo, hi)) in x.iter_mut().zip(bounds) {
        *v = v.clamp(lo, hi);
    }
}

/// Components of the ascent direction that would push through an active
/// bound are zeroed.
fn free_mask(x: &[f64], g: &[f64], bounds: &[(f64, f64)]) -> Vec<bool> {
    x.iter()
        .zip(g)
        .zip(bounds)
        .map(|((&xi, &gi), &(lo, hi))| !((xi <= lo && gi < 0.0) || (xi >= hi && gi > 0.0)))
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Maximise `f` (value and gradient; `None` marks an infeasible evaluation)
/// from `x0` inside `bounds`. The returned value is never below f(x0).
pub fn quasi_newton_maximise<F>(
    mut f: F,
    x0: &[f64],
    bounds: &[(f64, f64)],
    opts: &QnOptions,
) -> Option<QnResult>
where
    F: FnMut(&[f64]) -> Option<(f64, Vec<f64>)>,
{
    let n = x0.len();
    assert_eq!(n, bounds.len(), "bounds length must match x0");
    let mut x = x0.to_vec();
    project(&mut x, bounds);
    let (mut fx, mut g) = f(&x)?;
    let mut evaluations = 1;

    // inverse Hessian approximation of −f, row-major
    let identity = |scale: f64| {
        let mut h = vec![0.0; n * n];
        for i in 0..n {
            h[i * n + i] = scale;
        }
        h
    };
    let mut hinv = identity(1.0);
    let mut fresh = true;
    let mut stalls = 0;

    for iter in 0..opts.max_iter {
        let mask = free_mask(&x, &g, bounds);
        let pg_norm = g
            .iter()
            .zip(&mask)
            .map(|(gi, &m)| if m { gi.abs() } else { 0.0 })
            .fold(0.0, f64::max);
        if pg_norm < opts.grad_tol {
            return Some(QnResult {
                x,
                value: fx,
                converged: true,
                iterations: iter,
                evaluations,
            });
        }

        let gm: Vec<f64> = g
            .iter()
            .zip(&mask)
            .map(|(gi, &m)| if m { *gi } else { 0.0 })
            .collect();
        let mut d: Vec<f64> = (0..n)
            .map(|i| {
                if mask[i] {
                    (0..n).map(|j| hinv[i * n + j] * gm[j]).sum()
                } else {
                    0.0
                }
            })
            .collect();
        if dot(&d, &gm) <= 0.0 {
            hinv = identity(1.0);
            fresh = true;
            d = gm.clone();
        }

        // backtracking line search on the projected path
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..50 {
            let mut xn: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + t * di).collect();
            project(&mut xn, bounds);
            let step: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
            if step.iter().all(|s| *s == 0.0) {
                break;
            }
            evaluations += 1;
            if let Some((fn_, gn)) = f(&xn) {
                if fn_.is_finite() && fn_ >= fx + 1e-4 * dot(&g, &step) {
                    accepted = Some((xn, fn_, gn, step));
                    break;
                }
            }
            t *= 0.5;
        }

        let Some((xn, fn_, gn, s)) = accepted else {
            if fresh {
                return Some(QnResult {
                    x,
                    value: fx,
                    converged: false,
                    iterations: iter,
                    evaluations,
                });
            }
            hinv = identity(1.0);
            fresh = true;
            continue;
        };

        // minimisation view: y = ∇(−f)(xn) − ∇(−f)(x)
        let y: Vec<f64> = g.iter().zip(&gn).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() && sy > 0.0 {
            if fresh {
                hinv = identity(sy / dot(&y, &y));
            }
            let rho = 1.0 / sy;
            let hy: Vec<f64> = (0..n)
                .map(|i| (0..n).map(|j| hinv[i * n + j] * y[j]).sum())
                .collect();
            let yhy = dot(&y, &hy);
            for i in 0..n {
                for j in 0..n {
                    hinv[i * n + j] +=
                        (1.0 + rho * yhy) * rho * s[i] * s[j] - rho * (hy[i] * s[j] + s[i] * hy[j]);
                }
            }
            fresh = false;
        }

        let improvement = fn_ - fx;
        x = xn;
        g = gn;
        fx = fn_;
        if improvement <= opts.value_tol * (1.0 + fx.abs()) {
            stalls += 1;
            if stalls >= 3 {
                return Some(QnResult {
                    x,
                    value: fx,
                    converged: true,
                    iterations: iter + 1,
                    evaluations,
                });
            }
        } else {
            stalls = 0;
        }
    }
    Some(QnResult {
        x,
        value: fx,
        converged: false,
        iterations: opts.max_iter,
        evaluations,
    })
}
