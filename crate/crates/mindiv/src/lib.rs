//! Minimum power-divergence estimation.
//!
//! The crate covers Rényi, density-power and log-density-power divergences,
//! power-law families and their conversions, forward projections onto linear
//! families, the estimators derived from projection equations, the
//! piecewise maximisation used for compact-support Student models, and
//! sufficiency checks.

// `!(x > 0.0)` is used on purpose so that NaN fails parameter checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod divergences;
pub mod estimators;
pub mod families;
pub mod kde;
pub mod linalg;
pub mod lp;
pub mod optim;
pub mod piecewise;
pub mod prob;
pub mod projection;
pub mod quad;
pub mod report;
pub mod simulate;
pub mod suffstat;

pub use error::{Error, Result};
