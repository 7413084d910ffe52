//! Plug-in asymptotic covariance for the least-squares directions and the
//! Wald test of a hypothesized unit direction.
//!
//! `√n (D − β)` is asymptotically the average of per-sample influence vectors
//!
//! ```text
//! ψᵢ = P Σ̂⁻¹ ( λ̂⁻¹ (Yᵢ − γ̂) X̃ᵢ − X̃ᵢ X̃ᵢ' β̂ ),   P = I − β̂β̂'
//! ```
//!
//! (centered form; the uncentered form uses raw `Xᵢ` and no `γ̂` term), so
//! their sample covariance estimates `Σ_β`. The projector keeps the limit in
//! the tangent plane of the unit sphere at `β̂`, giving rank `p − 1`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimator::{self, Dataset, DirectionEstimate, Method};
use crate::numkit::{self, SymMatrix};

/// `|λ̂|` at or below this is too weak a signal to divide by.
pub const LAMBDA_FLOOR: f64 = 1e-8;

/// Relative eigenvalue cutoff for the rank and pseudoinverse of `Σ_β`.
///
/// The null direction `β̂` is annihilated only up to rounding, so the
/// `dim · eps` default can retain it; 1e-8 separates it cleanly.
pub const COVARIANCE_RANK_TOL: f64 = 1e-8;

const UNIT_NORM_TOL: f64 = 1e-8;

/// Estimated covariance of the limit law of `√n (D − β/‖β‖)`.
#[derive(Debug, Clone)]
pub struct AsymptoticCovariance {
    pub sigma_beta: SymMatrix,
    pub rank: usize,
    pub lambda_hat: f64,
    pub gamma_hat: f64,
    /// Sample size the covariance was estimated from.
    pub n: usize,
}

impl AsymptoticCovariance {
    /// Plug-in standard errors `sqrt(diag(Σ_β) / n)`.
    pub fn standard_errors(&self) -> DVector<f64> {
        let n = self.n as f64;
        self.sigma_beta.diagonal().map(|v| (v.max(0.0) / n).sqrt())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LevelDecision {
    pub alpha: f64,
    pub reject: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WaldResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    pub reject_at: Vec<LevelDecision>,
    /// Set when the numerical rank of `Σ_β` differs from `p − 1`.
    pub rank_warning: Option<String>,
}

impl WaldResult {
    pub fn rejects_at(&self, alpha: f64) -> Option<bool> {
        self.reject_at.iter().find(|d| d.alpha == alpha).map(|d| d.reject)
    }
}

/// Per-sample influence vectors (rows of the returned `n × p` matrix),
/// before mean removal.
pub fn influence_vectors(data: &Dataset, est: &DirectionEstimate) -> Result<DMatrix<f64>> {
    let centered = match est.method {
        Method::LsCentered => true,
        Method::LsUncentered => false,
        other => {
            return Err(Error::InvalidDataset(format!(
                "asymptotic covariance is only defined for least-squares estimates, not {other}"
            )))
        }
    };
    if est.p() != data.p() {
        return Err(Error::DimensionMismatch(format!(
            "estimate has dimension {} but data has {} covariates",
            est.p(),
            data.p()
        )));
    }
    let lambda = est.lambda_hat.unwrap_or(0.0);
    if !(lambda.abs() > LAMBDA_FLOOR) {
        return Err(Error::UnstableLambda(lambda));
    }
    let (_, chol) = estimator::covariance_factor(data)?;

    let (n, p) = (data.n(), data.p());
    let beta = &est.direction;
    let gamma = est.gamma_hat;
    let offset = if centered { data.x_mean() } else { DVector::zeros(p) };
    let projector = DMatrix::identity(p, p) - beta * beta.transpose();

    let mut psi = DMatrix::zeros(n, p);
    for i in 0..n {
        let xt = data.row(i) - &offset;
        let yi = data.y()[i];
        let response_part = if centered { (yi - gamma) / lambda } else { yi / lambda };
        let w = &xt * response_part - &xt * xt.dot(beta);
        let v = &projector * numkit::cholesky_solve(&chol, &w);
        psi.set_row(i, &v.transpose());
    }
    Ok(psi)
}

/// `Σ_β` for the centered estimator.
pub fn covariance_centered(data: &Dataset, est: &DirectionEstimate) -> Result<AsymptoticCovariance> {
    expect_method(est, Method::LsCentered)?;
    covariance_from_influence(data, est)
}

/// `Σ_β` for the uncentered estimator (mean-zero designs).
pub fn covariance_uncentered(data: &Dataset, est: &DirectionEstimate) -> Result<AsymptoticCovariance> {
    expect_method(est, Method::LsUncentered)?;
    covariance_from_influence(data, est)
}

/// Dispatches on the estimate's method.
pub fn covariance_for(data: &Dataset, est: &DirectionEstimate) -> Result<AsymptoticCovariance> {
    covariance_from_influence(data, est)
}

fn expect_method(est: &DirectionEstimate, want: Method) -> Result<()> {
    if est.method != want {
        return Err(Error::InvalidDataset(format!(
            "expected an estimate from {want}, got {}",
            est.method
        )));
    }
    Ok(())
}

fn covariance_from_influence(data: &Dataset, est: &DirectionEstimate) -> Result<AsymptoticCovariance> {
    let psi = influence_vectors(data, est)?;
    let n = psi.nrows();
    let mean = psi.row_mean();
    let mut centered = psi;
    for mut row in centered.row_iter_mut() {
        row -= &mean;
    }
    let sigma = SymMatrix::symmetrized(centered.tr_mul(&centered) / n as f64);
    let (_, rank) = numkit::moore_penrose(&sigma, COVARIANCE_RANK_TOL);
    Ok(AsymptoticCovariance {
        sigma_beta: sigma,
        rank,
        lambda_hat: est.lambda_hat.unwrap_or(f64::NAN),
        gamma_hat: est.gamma_hat,
        n: data.n(),
    })
}

/// Wald statistic `n (d − β₀)' Σ_β⁺ (d − β₀)` against `χ²(p − 1)`.
pub fn wald_test(
    est: &DirectionEstimate,
    cov: &AsymptoticCovariance,
    beta0: &DVector<f64>,
    levels: &[f64],
) -> Result<WaldResult> {
    let p = est.p();
    if beta0.len() != p {
        return Err(Error::InvalidNull(format!(
            "null direction has length {} but the estimate has {p}",
            beta0.len()
        )));
    }
    if (beta0.norm() - 1.0).abs() > UNIT_NORM_TOL {
        return Err(Error::InvalidNull(format!(
            "null direction must have unit norm, got {}",
            beta0.norm()
        )));
    }
    if cov.sigma_beta.dim() != p {
        return Err(Error::DimensionMismatch("covariance does not match the estimate".into()));
    }
    if p < 2 {
        return Err(Error::InvalidNull("a direction in one dimension has nothing to test".into()));
    }
    if let Some(alpha) = levels.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
        return Err(Error::InvalidNull(format!("significance level {alpha} is not in (0, 1)")));
    }

    let (pinv, rank) = numkit::moore_penrose(&cov.sigma_beta, COVARIANCE_RANK_TOL);
    let dev = &est.direction - beta0;
    let statistic = (cov.n as f64 * dev.dot(&pinv.mul_vec(&dev))).max(0.0);
    let dof = p - 1;
    let p_value = chi_square_upper_tail(statistic, dof);
    let reject_at = levels
        .iter()
        .map(|&alpha| LevelDecision {
            alpha,
            reject: p_value < alpha,
        })
        .collect();
    let rank_warning = (rank != dof).then(|| {
        format!("numerical rank of the covariance is {rank}, expected {dof}; degrees of freedom kept at {dof}")
    });
    Ok(WaldResult {
        statistic,
        dof,
        p_value,
        reject_at,
        rank_warning,
    })
}

/// `P(χ²(dof) > x)` via the regularized upper incomplete gamma function.
pub fn chi_square_upper_tail(x: f64, dof: usize) -> f64 {
    assert!(dof > 0, "chi-square needs at least one degree of freedom");
    if x <= 0.0 {
        return 1.0;
    }
    if x.is_infinite() {
        return 0.0;
    }
    statrs::function::gamma::gamma_ur(dof as f64 / 2.0, x / 2.0).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::{estimate_centered, estimate_uncentered};
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn normal_design(n: usize, p: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(n, p, |_, _| StandardNormal.sample(&mut rng))
    }

    fn probit_like(n: usize, beta: &[f64], seed: u64) -> Dataset {
        let p = beta.len();
        let x = normal_design(n, p, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xfeed);
        let b = DVector::from_column_slice(beta).normalize();
        let y = DVector::from_fn(n, |i, _| {
            let e: f64 = StandardNormal.sample(&mut rng);
            if x.row(i).transpose().dot(&b) + e > 0.0 { 1.0 } else { 0.0 }
        });
        Dataset::new(x, y).unwrap()
    }

    #[test]
    fn chi_square_reference_points() {
        assert_eq!(chi_square_upper_tail(0.0, 3), 1.0);
        assert!((chi_square_upper_tail(5.991, 2) - 0.05).abs() < 1e-4);
        assert!((chi_square_upper_tail(3.841, 1) - 0.05).abs() < 1e-4);
    }

    #[test]
    fn chi_square_two_dof_is_exponential() {
        for k in 0..=500 {
            let x = k as f64 * 0.1;
            assert!((chi_square_upper_tail(x, 2) - (-x / 2.0).exp()).abs() <= 1e-10, "x = {x}");
        }
    }

    #[test]
    fn chi_square_one_dof_matches_normal_tail() {
        // P(χ²₁ > x) = 2 (1 − Φ(√x)) = erfc(√(x/2)).
        for k in 1..=200 {
            let x = k as f64 * 0.1;
            let want = statrs::function::erf::erfc((x / 2.0).sqrt());
            assert!((chi_square_upper_tail(x, 1) - want).abs() <= 1e-10, "x = {x}");
        }
    }

    #[test]
    fn p_value_monotone_in_statistic() {
        for dof in 1..8 {
            let mut prev = 1.0;
            for k in 0..400 {
                let v = chi_square_upper_tail(k as f64 * 0.25, dof);
                assert!(v <= prev + 1e-15);
                prev = v;
            }
        }
    }

    #[test]
    fn influence_vectors_match_direct_recomputation() {
        // X ~ N(0, I), β = e₁, Y = X₁ + ε.
        let n = 400;
        let z = normal_design(n, 4, 11);
        let x = z.columns(0, 3).into_owned();
        let y = z.column(0) + z.column(3);
        let data = Dataset::new(x, y).unwrap();
        let est = estimate_centered(&data).unwrap();
        let psi = influence_vectors(&data, &est).unwrap();

        let xbar = data.x_mean();
        let cov = numkit::sample_covariance(data.x()).unwrap();
        let inv = cov.as_matrix().clone().try_inverse().unwrap();
        let b = &est.direction;
        let proj = DMatrix::identity(3, 3) - b * b.transpose();
        let lambda = est.lambda_hat.unwrap();
        for i in 0..n {
            let xt = data.row(i) - &xbar;
            let yi = data.y()[i];
            let want = &proj
                * &inv
                * (&xt * (yi / lambda) - &xt * xt.dot(b) - &xt * (est.gamma_hat / lambda));
            assert_relative_eq!(psi.row(i).transpose(), want, epsilon = 1e-10);
        }
        // With Σ̂ ≈ I the simplified form λ̂⁻¹P(YᵢXᵢ − γ̂Xᵢ) − PXᵢXᵢ'β̂ is close.
        let cov = covariance_centered(&data, &est).unwrap();
        let mut approx = DMatrix::<f64>::zeros(n, 3);
        for i in 0..n {
            let xi = data.row(i);
            let v = &proj * (&xi * ((data.y()[i] - est.gamma_hat) / lambda) - &xi * xi.dot(b));
            approx.set_row(i, &v.transpose());
        }
        let m = approx.row_mean();
        for mut r in approx.row_iter_mut() {
            r -= &m;
        }
        let approx_cov = approx.tr_mul(&approx) / n as f64;
        assert!((cov.sigma_beta.as_matrix() - approx_cov).norm() < 0.25 * cov.sigma_beta.frobenius_norm());
    }

    #[test]
    fn covariance_lives_in_tangent_plane() {
        for (seed, p) in [(1u64, 2usize), (2, 3), (3, 5)] {
            let beta: Vec<f64> = (0..p).map(|j| 1.0 - 0.3 * j as f64).collect();
            let data = probit_like(300, &beta, seed);
            let est = estimate_centered(&data).unwrap();
            let cov = covariance_centered(&data, &est).unwrap();
            let leak = cov.sigma_beta.mul_vec(&est.direction).norm();
            assert!(leak <= 1e-6 * cov.sigma_beta.frobenius_norm());
            assert_eq!(cov.rank, p - 1);
            let eig = numkit::symmetric_eigen(&cov.sigma_beta);
            assert!(eig.values.iter().all(|&l| l >= -1e-8 * eig.values.amax()));
        }
    }

    #[test]
    fn uncentered_covariance_is_symmetric_psd() {
        let data = probit_like(250, &[0.5, -1.0, 0.2], 5);
        let est = estimate_uncentered(&data).unwrap();
        let cov = covariance_uncentered(&data, &est).unwrap();
        let m = cov.sigma_beta.as_matrix();
        assert_eq!(m, &m.transpose());
        let eig = numkit::symmetric_eigen(&cov.sigma_beta);
        assert!(eig.values.iter().all(|&l| l >= -1e-8 * eig.values.amax()));
        assert!(covariance_centered(&data, &est).is_err());
    }

    #[test]
    fn unstable_lambda_is_rejected() {
        let data = probit_like(50, &[1.0, 0.0], 3);
        let mut est = estimate_centered(&data).unwrap();
        est.lambda_hat = Some(1e-9);
        assert!(matches!(covariance_centered(&data, &est), Err(Error::UnstableLambda(_))));
    }

    #[test]
    fn wald_at_the_estimate_is_zero() {
        let data = probit_like(500, &[1.0, -0.5, 0.25], 8);
        let est = estimate_centered(&data).unwrap();
        let cov = covariance_centered(&data, &est).unwrap();
        let r = wald_test(&est, &cov, &est.direction, &[0.05, 0.01]).unwrap();
        assert!(r.statistic.abs() < 1e-12);
        assert_relative_eq!(r.p_value, 1.0);
        assert_eq!(r.dof, 2);
        assert_eq!(r.rejects_at(0.05), Some(false));
        assert!(r.rank_warning.is_none());
    }

    #[test]
    fn wald_rejects_an_orthogonal_null() {
        let data = probit_like(500, &[1.0, -0.5, 0.25], 9);
        let est = estimate_centered(&data).unwrap();
        let cov = covariance_centered(&data, &est).unwrap();
        let d = &est.direction;
        let seed = DVector::from_vec(vec![0.0, 0.0, 1.0]);
        let ortho = (&seed - d * d.dot(&seed)).normalize();
        let r = wald_test(&est, &cov, &ortho, &[0.05]).unwrap();
        assert!(r.p_value < 0.05);
        assert_eq!(r.rejects_at(0.05), Some(true));
    }

    #[test]
    fn wald_is_blind_at_the_antipode() {
        // d − (−d) = 2d lies in the null space of Σ_β, so the quadratic form vanishes.
        let data = probit_like(500, &[1.0, -0.5, 0.25], 10);
        let est = estimate_centered(&data).unwrap();
        let cov = covariance_centered(&data, &est).unwrap();
        let r = wald_test(&est, &cov, &(-&est.direction), &[0.05]).unwrap();
        assert!(r.statistic < 1e-6);
    }

    #[test]
    fn wald_input_errors() {
        let data = probit_like(100, &[1.0, 1.0], 4);
        let est = estimate_centered(&data).unwrap();
        let cov = covariance_centered(&data, &est).unwrap();
        let long = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        assert!(matches!(wald_test(&est, &cov, &long, &[0.05]), Err(Error::InvalidNull(_))));
        let not_unit = DVector::from_vec(vec![1.0, 1.0]);
        assert!(matches!(wald_test(&est, &cov, &not_unit, &[0.05]), Err(Error::InvalidNull(_))));
    }

    #[test]
    fn wald_invariant_to_response_scale() {
        let data = probit_like(400, &[0.3, 1.0, -0.7], 21);
        let est = estimate_centered(&data).unwrap();
        let cov = covariance_centered(&data, &est).unwrap();
        let beta0 = DVector::from_vec(vec![0.3, 1.0, -0.7]).normalize();
        let base = wald_test(&est, &cov, &beta0, &[0.05]).unwrap();
        for c in [0.01, 3.0, 250.0] {
            let scaled = Dataset::new(data.x().clone(), data.y() * c).unwrap();
            let est = estimate_centered(&scaled).unwrap();
            let cov = covariance_centered(&scaled, &est).unwrap();
            let r = wald_test(&est, &cov, &beta0, &[0.05]).unwrap();
            assert!((r.statistic - base.statistic).abs() <= 1e-6 * base.statistic.max(1e-12));
        }
    }
}
