//! Discrete hedging error of `F = g(∫ η dW)` for a singular deterministic
//! volatility `η(t) ∝ (T − t)^{(β−1)/2}`.
//!
//! The crate has two independent routes to the mean-square hedging error:
//!
//! * [`analytic_error`] evaluates it exactly (up to chaos truncation) from the
//!   Hermite coefficients of `g`, interval by interval, as the sum of a
//!   volatility-variation term and an information-loss term;
//! * [`hedging_simulator`] samples the hedge exactly in distribution and
//!   estimates the same quantity by Monte Carlo.
//!
//! [`rate_lab`] sweeps the number of rebalancing dates and fits the
//! convergence rate, and [`cli_io`] wires everything to config files, CSV
//! output and the `hedgerate` binary.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic_error;
pub mod cli_io;
mod error;
pub mod hedging_simulator;
pub mod hermite_chaos;
pub mod rate_lab;
pub mod singular_model;

pub use error::{Error, Result};
