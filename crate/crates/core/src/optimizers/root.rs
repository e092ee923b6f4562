use crate::error::{Error, Result};

/// Find a zero of `f` inside a sign-changing bracket. Newton steps use `df`;
/// any step that leaves the current bracket is replaced by bisection.
pub fn safeguarded_newton_1d<F, D>(f: F, df: D, bracket: (f64, f64), tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let (mut a, mut b) = if bracket.0 <= bracket.1 {
        bracket
    } else {
        (bracket.1, bracket.0)
    };
    let mut fa = f(a);
    let fb = f(b);
    if fa.abs() < tol {
        return Ok(a);
    }
    if fb.abs() < tol {
        return Ok(b);
    }
    if !(fa * fb < 0.0) {
        return Err(Error::NoSignChange { lo: a, hi: b });
    }

    const MAX_ITER: usize = 500;
    let mut x = 0.5 * (a + b);
    for _ in 0..MAX_ITER {
        let fx = f(x);
        if fx.abs() < tol {
            return Ok(x);
        }
        if (fx < 0.0) == (fa < 0.0) {
            a = x;
            fa = fx;
        } else {
            b = x;
        }
        if b - a <= 4.0 * f64::EPSILON * a.abs().max(b.abs()).max(f64::MIN_POSITIVE) {
            break;
        }
        let slope = df(x);
        let newton = x - fx / slope;
        x = if newton.is_finite() && newton > a && newton < b {
            newton
        } else {
            0.5 * (a + b)
        };
    }
    Err(Error::NoConvergence {
        iterations: MAX_ITER,
    })
}
