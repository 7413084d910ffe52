//! Comparison estimators: maximum score, linearized maximum rank
//! correlation and probit maximum likelihood. All return unit directions.

mod lmrc;
mod maxscore;
mod probit;

pub use lmrc::{lmrc, rank_contrasts};
pub use maxscore::{max_score_objective, maximum_score, MaxScoreConfig, MAX_SCORE_MAX_DIM};
pub use probit::{probit_fit, probit_mle, ProbitFit, SEPARATION_NORM};

pub(crate) use probit::norm_cdf;

/// Newton iteration budget used by the simulation engine and the CLI.
pub const PROBIT_MAX_ITER: usize = 100;
pub const PROBIT_TOL: f64 = 1e-8;
