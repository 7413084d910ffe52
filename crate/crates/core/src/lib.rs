//! Direction estimation for single-index models `E[Y | X] = g(X'β)` with an
//! unknown increasing link `g`.
//!
//! The least-squares estimators in [`estimator`] recover `β / ‖β‖` in closed
//! form; [`inference`] supplies plug-in asymptotic covariances and a Wald
//! test; [`baselines`] holds maximum score, LMRC and probit for comparison;
//! [`simulate`] runs the Monte Carlo comparison tables.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod cli;
pub mod error;
pub mod estimator;
pub mod inference;
pub mod numkit;
pub mod simulate;

pub use error::{Error, Result};
pub use estimator::{cosine_to, estimate_centered, estimate_uncentered, Dataset, DirectionEstimate, Method};
