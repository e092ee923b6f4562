//! Multi-objective Bayesian optimisation with Tchebycheff scalarisation:
//! mono-surrogate EI, multi-surrogate EI over the exact (Gumbel-approximated)
//! distribution of the scalarised objective, and multi-surrogate EHVI.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acquisition;
pub mod error;
pub mod gp;
pub mod metrics;
pub mod normal;
pub mod optimizers;
pub mod problems;
pub mod runner;
pub mod scalar_dist;
pub mod scalarise;
pub mod streams;

pub use error::{Error, Result};
