//! Volatility occupation time estimation.
//!
//! The crate simulates stochastic-volatility price models, recovers the
//! latent spot variance from discretely observed prices with truncated
//! block estimators, and turns the recovered path into an occupation-time
//! curve (with quantiles) and a kernel occupation density. The
//! [`harness`] module runs the Monte Carlo studies on top of these pieces.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod density;
pub mod error;
pub mod grid;
pub mod harness;
pub mod io;
pub mod occupation;
pub mod oracle;
pub mod seed;
pub mod sim;
pub mod spotvol;

pub use error::{Error, Result};
pub use grid::SamplingGrid;
