//! Inner optimisers: GA for acquisition maximisation, bounded BFGS for GP
//! hyperparameters, and a bracketed Newton root finder.

mod ga;
mod quasi_newton;
mod root;

pub use ga::{ga_maximise, GaConfig, GaResult};
pub use quasi_newton::{
    numeric_gradient, quasi_newton_maximise, with_numeric_gradient, QnOptions, QnResult,
};
pub use root::safeguarded_newton_1d;
