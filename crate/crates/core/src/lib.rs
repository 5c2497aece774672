//! Proximal point methods and regularity conditions for (weakly) convex optimization.
//!
//! The crate provides
//! - problem oracles and a zoo of benchmark and machine-learning objectives ([`problem`], [`zoo`]),
//! - the proximal mapping with residual certificates ([`prox`]),
//! - the exact and inexact proximal point methods and gradient descent, with
//!   per-iteration checks of their convergence bounds ([`ppm`], [`ippm`], [`gd`]),
//! - empirical estimation and cross-checking of the SC/RSI/EB/PL/QG constants ([`regularity`]),
//! - a config-driven experiment runner writing CSV traces and JSON reports ([`harness`]).

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod gd;
pub mod harness;
pub mod ippm;
pub mod linalg;
pub mod ppm;
pub mod problem;
pub mod prox;
pub mod regularity;
pub mod zoo;

pub use error::{Error, Result};
pub use problem::{Point, ProblemSpec};
