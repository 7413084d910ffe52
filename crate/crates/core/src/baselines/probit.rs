//! Probit maximum likelihood with an intercept, fitted by Newton–Raphson
//! with step halving. The slope vector, normalized, is the direction.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use nalgebra::{DMatrix, DVector};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::estimator::{Dataset, DirectionEstimate, Method};
use crate::numkit::{self, SymMatrix};

/// Slope norm beyond which the likelihood is taken to diverge.
pub const SEPARATION_NORM: f64 = 1e4;
const MAX_HALVINGS: usize = 20;
const PERFECT_FIT_TOL: f64 = 1e-6;
const TAIL_SWITCH: f64 = -30.0;

#[derive(Debug, Clone)]
pub struct ProbitFit {
    pub intercept: f64,
    pub slopes: DVector<f64>,
    /// Log-likelihood at the start and after every accepted step.
    pub loglik_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// `ln Φ(z)`, accurate far into the lower tail.
pub(crate) fn log_norm_cdf(z: f64) -> f64 {
    if z < TAIL_SWITCH {
        let z2 = z * z;
        -0.5 * z2 - (-z).ln() - 0.5 * (2.0 * PI).ln() + (1.0 - 1.0 / z2 + 3.0 / (z2 * z2)).ln()
    } else {
        (0.5 * erfc(-z * FRAC_1_SQRT_2)).ln()
    }
}

/// Inverse Mills ratio `φ(z) / Φ(z)`.
pub(crate) fn mills(z: f64) -> f64 {
    if z < TAIL_SWITCH {
        let z2 = z * z;
        -z / (1.0 - 1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2))
    } else {
        let pdf = (-0.5 * z * z).exp() / (2.0 * PI).sqrt();
        pdf / (0.5 * erfc(-z * FRAC_1_SQRT_2))
    }
}

pub(crate) fn norm_cdf(z: f64) -> f64 {
    0.5 * erfc(-z * FRAC_1_SQRT_2)
}

fn log_likelihood(design: &DMatrix<f64>, y: &DVector<f64>, theta: &DVector<f64>) -> f64 {
    let eta = design * theta;
    eta.iter()
        .zip(y.iter())
        .map(|(&e, &yi)| if yi == 1.0 { log_norm_cdf(e) } else { log_norm_cdf(-e) })
        .sum()
}

pub fn probit_fit(data: &Dataset, max_iter: usize, tol: f64) -> Result<ProbitFit> {
    if !data.is_binary() {
        return Err(Error::InvalidResponse("probit needs a 0/1 response".into()));
    }
    let ones = data.y().iter().filter(|&&v| v == 1.0).count();
    if ones == 0 || ones == data.n() {
        return Err(Error::InvalidResponse("probit needs both response classes".into()));
    }
    let (n, p) = (data.n(), data.p());
    let design = DMatrix::from_fn(n, p + 1, |i, j| if j == 0 { 1.0 } else { data.x()[(i, j - 1)] });
    let y = data.y();

    let mut theta = DVector::<f64>::zeros(p + 1);
    let mut ll = log_likelihood(&design, y, &theta);
    let mut trace = vec![ll];
    let mut converged = false;
    let mut iterations = 0;

    for _ in 0..max_iter {
        let eta = &design * &theta;
        let mut grad = DVector::<f64>::zeros(p + 1);
        let mut info = DMatrix::<f64>::zeros(p + 1, p + 1);
        for i in 0..n {
            let q = if y[i] == 1.0 { 1.0 } else { -1.0 };
            let m = mills(q * eta[i]);
            let d1 = q * m;
            let d2 = m * (q * eta[i] + m);
            let row = design.row(i);
            grad += row.transpose() * d1;
            info += row.transpose() * row * d2;
        }
        if grad.amax() <= tol {
            converged = true;
            break;
        }
        iterations += 1;
        let info = SymMatrix::symmetrized(info);
        let step = numkit::pd_solve(&info, &grad).map_err(|_| Error::SingularMatrix)?;

        let mut t = 1.0;
        let mut candidate = &theta + &step;
        let mut cand_ll = log_likelihood(&design, y, &candidate);
        let mut halvings = 0;
        while !(cand_ll >= ll) && halvings < MAX_HALVINGS {
            t *= 0.5;
            candidate = &theta + &step * t;
            cand_ll = log_likelihood(&design, y, &candidate);
            halvings += 1;
        }
        if !(cand_ll >= ll) {
            // no ascent along the Newton direction at any tried step size
            converged = true;
            break;
        }
        theta = candidate;
        ll = cand_ll;
        trace.push(ll);

        let slope_norm = theta.rows(1, p).norm();
        if slope_norm > SEPARATION_NORM {
            return Err(Error::SeparationError(format!("slope norm reached {slope_norm:.3e}")));
        }
    }

    let eta = &design * &theta;
    let perfect = (0..n).all(|i| (norm_cdf(eta[i]) - y[i]).abs() < PERFECT_FIT_TOL);
    if perfect {
        return Err(Error::SeparationError(
            "every observation is fitted with probability one".into(),
        ));
    }

    Ok(ProbitFit {
        intercept: theta[0],
        slopes: theta.rows(1, p).into_owned(),
        loglik_trace: trace,
        iterations,
        converged,
    })
}

pub fn probit_mle(data: &Dataset, max_iter: usize, tol: f64) -> Result<DirectionEstimate> {
    let fit = probit_fit(data, max_iter, tol)?;
    let mut est = DirectionEstimate::from_raw(fit.slopes, Method::Probit, data.y_mean())?;
    est.iterations = Some(fit.iterations);
    Ok(est)
}
