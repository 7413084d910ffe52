//! Closed-form least-squares direction estimators.
//!
//! For a single-index model `E[Y | X] = g(X'β)` with elliptical `X`,
//! `E[Y (X − μ)] = λ Σ β` with `λ > 0` whenever `g` is increasing, so
//! `Σ̂⁻¹ · (1/n) Σ Yᵢ (Xᵢ − X̄)` points along `β` up to sampling error.
//! The centered form works for any design mean; the uncentered form
//! drops `X̄` and is meant for mean-zero designs.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkit::{self, SymMatrix};

const DEGENERATE_REL_TOL: f64 = 1e-12;

/// Covariates (`n × p`, one row per observation) and a response vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: DMatrix<f64>,
    y: DVector<f64>,
}

impl Dataset {
    /// Checks shapes and finiteness. `n > p` is not enforced here; estimators
    /// report an under-determined design as a singular covariance.
    pub fn new(x: DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::DimensionMismatch(format!(
                "covariates have {} rows but the response has {} entries",
                x.nrows(),
                y.len()
            )));
        }
        if x.ncols() == 0 {
            return Err(Error::InvalidDataset("no covariates".into()));
        }
        if x.nrows() < 2 {
            return Err(Error::InsufficientData(format!(
                "need at least 2 observations, got {}",
                x.nrows()
            )));
        }
        if let Some((i, _)) = y.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidDataset(format!("non-finite response at row {i}")));
        }
        for i in 0..x.nrows() {
            for j in 0..x.ncols() {
                if !x[(i, j)].is_finite() {
                    return Err(Error::InvalidDataset(format!(
                        "non-finite covariate at row {i}, column {j}"
                    )));
                }
            }
        }
        Ok(Dataset { x, y })
    }

    /// Builds a dataset from row-major covariate values.
    pub fn from_rows(rows: &[Vec<f64>], y: &[f64]) -> Result<Self> {
        let p = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != p) {
            return Err(Error::DimensionMismatch("ragged covariate rows".into()));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::new(
            DMatrix::from_row_slice(rows.len(), p, &flat),
            DVector::from_column_slice(y),
        )
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn row(&self, i: usize) -> DVector<f64> {
        self.x.row(i).transpose()
    }

    pub fn x_mean(&self) -> DVector<f64> {
        self.x.row_mean().transpose()
    }

    pub fn y_mean(&self) -> f64 {
        self.y.mean()
    }

    /// True when every response is exactly 0 or 1.
    pub fn is_binary(&self) -> bool {
        self.y.iter().all(|&v| v == 0.0 || v == 1.0)
    }

    /// Largest per-column standard deviation; used as the covariate scale.
    pub(crate) fn column_scale(&self) -> f64 {
        let mean = self.x.row_mean();
        let n = self.n() as f64;
        (0..self.p())
            .map(|j| {
                let m = mean[j];
                (self.x.column(j).iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n).sqrt()
            })
            .fold(0.0, f64::max)
    }
}

/// Estimation method tags, spelled as on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "new")]
    LsCentered,
    #[serde(rename = "new-uncentered")]
    LsUncentered,
    #[serde(rename = "ms")]
    MaxScore,
    #[serde(rename = "lmrc")]
    Lmrc,
    #[serde(rename = "probit")]
    Probit,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::LsCentered,
        Method::LsUncentered,
        Method::MaxScore,
        Method::Lmrc,
        Method::Probit,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Method::LsCentered => "new",
            Method::LsUncentered => "new-uncentered",
            Method::MaxScore => "ms",
            Method::Lmrc => "lmrc",
            Method::Probit => "probit",
        }
    }

    /// Column label used in the comparison tables.
    pub fn label(self) -> &'static str {
        match self {
            Method::LsCentered => "New",
            Method::LsUncentered => "New (uncentered)",
            Method::MaxScore => "MS",
            Method::Lmrc => "LMRC",
            Method::Probit => "Standard",
        }
    }

    pub fn from_tag(s: &str) -> Option<Method> {
        Method::ALL.into_iter().find(|m| m.tag() == s)
    }

    pub fn is_least_squares(self) -> bool {
        matches!(self, Method::LsCentered | Method::LsUncentered)
    }

    /// Whether the method only makes sense for 0/1 responses.
    pub fn requires_binary(self) -> bool {
        matches!(self, Method::MaxScore | Method::Probit)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// A unit-norm direction estimate plus the diagnostics each method produces.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionEstimate {
    pub direction: DVector<f64>,
    pub method: Method,
    /// Plug-in `λ̂`; only the least-squares estimators define it.
    pub lambda_hat: Option<f64>,
    /// `γ̂ = Ȳ`.
    pub gamma_hat: f64,
    /// Norm of the estimate before normalization.
    pub raw_norm: f64,
    /// Achieved objective for maximum score (number of correct classifications).
    pub score: Option<f64>,
    pub iterations: Option<usize>,
}

impl DirectionEstimate {
    pub(crate) fn from_raw(raw: DVector<f64>, method: Method, gamma_hat: f64) -> Result<Self> {
        let raw_norm = raw.norm();
        if !(raw_norm > 0.0) || !raw_norm.is_finite() {
            return Err(Error::DegenerateDirection(format!(
                "unnormalized {method} estimate has norm {raw_norm}"
            )));
        }
        Ok(DirectionEstimate {
            direction: raw / raw_norm,
            method,
            lambda_hat: None,
            gamma_hat,
            raw_norm,
            score: None,
            iterations: None,
        })
    }

    pub fn p(&self) -> usize {
        self.direction.len()
    }
}

/// Centered least-squares direction `Σ̂⁻¹ Σ Yᵢ(Xᵢ − X̄)`, normalized.
pub fn estimate_centered(data: &Dataset) -> Result<DirectionEstimate> {
    estimate_ls(data, true)
}

/// Uncentered least-squares direction `Σ̂⁻¹ Σ Yᵢ Xᵢ`, normalized.
pub fn estimate_uncentered(data: &Dataset) -> Result<DirectionEstimate> {
    estimate_ls(data, false)
}

fn estimate_ls(data: &Dataset, centered: bool) -> Result<DirectionEstimate> {
    let (n, p) = (data.n(), data.p());
    if n <= p {
        return Err(Error::SingularCovariance);
    }
    let cov = numkit::sample_covariance(data.x())?;
    let chol = numkit::cholesky_factor(&cov).map_err(|_| Error::SingularCovariance)?;

    let offset = if centered { data.x_mean() } else { DVector::zeros(p) };
    let mut moment = DVector::<f64>::zeros(p);
    for i in 0..n {
        moment += (data.row(i) - &offset) * data.y()[i];
    }
    moment /= n as f64;

    let y_scale = data.y().amax();
    let threshold = DEGENERATE_REL_TOL * y_scale * data.column_scale();
    if moment.norm() <= threshold {
        return Err(Error::DegenerateDirection(format!(
            "response moment vector has norm {:e} (threshold {:e})",
            moment.norm(),
            threshold
        )));
    }

    let raw = numkit::cholesky_solve(&chol, &moment);
    let method = if centered { Method::LsCentered } else { Method::LsUncentered };
    let mut est = DirectionEstimate::from_raw(raw.clone(), method, data.y_mean())?;
    // (1/n) Σ Yᵢ d'Σ̂⁻¹X̃ᵢ = d'Σ̂⁻¹ moment
    est.lambda_hat = Some(est.direction.dot(&raw));
    Ok(est)
}

/// Cosine of the angle between two nonzero vectors.
pub fn cosine_to(direction: &DVector<f64>, truth: &DVector<f64>) -> Result<f64> {
    if direction.len() != truth.len() {
        return Err(Error::DimensionMismatch(format!(
            "direction has length {} but truth has length {}",
            direction.len(),
            truth.len()
        )));
    }
    let (a, b) = (direction.norm(), truth.norm());
    if a == 0.0 || b == 0.0 {
        return Err(Error::DegenerateDirection("cosine of a zero vector".into()));
    }
    Ok((direction.dot(truth) / (a * b)).clamp(-1.0, 1.0))
}

/// Covariance matrix helper shared by the inference module.
pub(crate) fn covariance_factor(data: &Dataset) -> Result<(SymMatrix, DMatrix<f64>)> {
    if data.n() <= data.p() {
        return Err(Error::SingularCovariance);
    }
    let cov = numkit::sample_covariance(data.x())?;
    let chol = numkit::cholesky_factor(&cov).map_err(|_| Error::SingularCovariance)?;
    Ok((cov, chol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn toy() -> Dataset {
        Dataset::from_rows(
            &[vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, -1.0]],
            &[1.0, 0.0, 0.0],
        )
        .unwrap()
    }

    #[test]
    fn centered_hand_example() {
        let est = estimate_centered(&toy()).unwrap();
        let s5 = 5f64.sqrt();
        assert_relative_eq!(est.direction[0], 2.0 / s5, epsilon = 1e-12);
        assert_relative_eq!(est.direction[1], -1.0 / s5, epsilon = 1e-12);
        assert_eq!(est.method, Method::LsCentered);
        assert_relative_eq!(est.gamma_hat, 1.0 / 3.0);
        // moment = (1/3)(1,0); Σ̂⁻¹ moment = (2,−1)/3, so λ̂ = √5/3.
        assert_relative_eq!(est.lambda_hat.unwrap(), s5 / 3.0, epsilon = 1e-12);
        assert_relative_eq!(est.raw_norm, s5 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn uncentered_matches_centered_when_mean_is_zero() {
        let c = estimate_centered(&toy()).unwrap();
        let u = estimate_uncentered(&toy()).unwrap();
        assert_relative_eq!(c.direction, u.direction, epsilon = 1e-12);
        assert_eq!(u.method, Method::LsUncentered);
    }

    #[test]
    fn constant_response_is_degenerate_for_centered_only() {
        let rows = vec![
            vec![1.0, 2.0],
            vec![2.0, 1.0],
            vec![3.0, 5.0],
            vec![4.0, 3.0],
        ];
        let data = Dataset::from_rows(&rows, &[2.5; 4]).unwrap();
        assert!(matches!(estimate_centered(&data), Err(Error::DegenerateDirection(_))));

        // Uncentered: Σ̂⁻¹ Σ c Xᵢ ∝ Σ̂⁻¹ X̄.
        let u = estimate_uncentered(&data).unwrap();
        let cov = numkit::sample_covariance(data.x()).unwrap();
        let want = numkit::pd_solve(&cov, &data.x_mean()).unwrap().normalize();
        assert_relative_eq!(u.direction, want, epsilon = 1e-12);
    }

    #[test]
    fn two_points_in_two_dimensions_is_singular() {
        let data = Dataset::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]], &[1.0, 0.0]).unwrap();
        assert_eq!(estimate_centered(&data), Err(Error::SingularCovariance));
        assert_eq!(estimate_uncentered(&data), Err(Error::SingularCovariance));
    }

    #[test]
    fn collinear_columns_are_singular() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, 2.0 * i as f64]).collect();
        let y: Vec<f64> = (0..10).map(|i| (i % 2) as f64).collect();
        let data = Dataset::from_rows(&rows, &y).unwrap();
        assert_eq!(estimate_centered(&data), Err(Error::SingularCovariance));
    }

    #[test]
    fn dataset_validation() {
        assert!(Dataset::from_rows(&[vec![1.0], vec![f64::NAN]], &[0.0, 1.0]).is_err());
        assert!(Dataset::from_rows(&[vec![1.0], vec![2.0]], &[0.0]).is_err());
        assert!(Dataset::from_rows(&[vec![1.0, 2.0], vec![2.0]], &[0.0, 1.0]).is_err());
        assert!(Dataset::from_rows(&[vec![1.0]], &[0.0]).is_err());
    }

    #[test]
    fn cosine_examples() {
        let v = DVector::from_vec(vec![0.3, -0.4, 1.2]);
        assert_relative_eq!(cosine_to(&v, &v).unwrap(), 1.0, epsilon = 1e-15);
        let e1 = DVector::from_vec(vec![1.0, 0.0]);
        let e2 = DVector::from_vec(vec![0.0, 1.0]);
        assert_eq!(cosine_to(&e1, &e2).unwrap(), 0.0);
        assert_eq!(cosine_to(&e1, &DVector::from_vec(vec![-2.0, 0.0])).unwrap(), -1.0);
        assert!(cosine_to(&e1, &DVector::zeros(2)).is_err());
        assert!(cosine_to(&e1, &v).is_err());
    }

    #[test]
    fn method_tags_round_trip() {
        for m in Method::ALL {
            assert_eq!(Method::from_tag(m.tag()), Some(m));
            let json = serde_json::to_string(&m).unwrap();
            assert_eq!(json, format!("\"{}\"", m.tag()));
        }
    }

    fn arb_dataset() -> impl Strategy<Value = Dataset> {
        (2usize..5, prop::collection::vec(-3.0f64..3.0, 200), prop::collection::vec(-2.0f64..2.0, 40))
            .prop_map(|(p, xs, ys)| {
                let n = 12 + p;
                let x = DMatrix::from_fn(n, p, |i, j| xs[(i * p + j) % xs.len()] + ((i * 7 + j * 3) % 5) as f64 * 0.1);
                let y = DVector::from_fn(n, |i, _| ys[i % ys.len()] + x[(i, 0)]);
                Dataset::new(x, y).unwrap()
            })
    }

    proptest! {
        #[test]
        fn unit_norm_and_invariances(data in arb_dataset(), c in 0.1f64..50.0, a in -10.0f64..10.0,
                                     perm_seed in 0u64..1000) {
            let Ok(base) = estimate_centered(&data) else { return Ok(()); };
            prop_assert!((base.direction.norm() - 1.0).abs() <= 1e-12);

            let scaled = Dataset::new(data.x().clone(), data.y() * c).unwrap();
            let est = estimate_centered(&scaled).unwrap();
            prop_assert!((&est.direction - &base.direction).amax() <= 1e-12);

            let shifted = Dataset::new(data.x().clone(), data.y().add_scalar(a)).unwrap();
            let est = estimate_centered(&shifted).unwrap();
            prop_assert!((&est.direction - &base.direction).amax() <= 1e-12);

            // Row permutation (a rotation by perm_seed) leaves the estimate unchanged.
            let n = data.n();
            let k = (perm_seed as usize) % n;
            let order: Vec<usize> = (0..n).map(|i| (i + k) % n).collect();
            let px = DMatrix::from_fn(n, data.p(), |i, j| data.x()[(order[i], j)]);
            let py = DVector::from_fn(n, |i, _| data.y()[order[i]]);
            let est = estimate_centered(&Dataset::new(px, py).unwrap()).unwrap();
            prop_assert!((&est.direction - &base.direction).amax() <= 1e-12);
        }

        #[test]
        fn affine_equivariance(data in arb_dataset(), entries in prop::collection::vec(-1.0f64..1.0, 16)) {
            let p = data.p();
            let Ok(base) = estimate_centered(&data) else { return Ok(()); };
            let a = DMatrix::from_fn(p, p, |i, j| entries[i * 4 + j] * 0.5) + DMatrix::identity(p, p) * 2.0;
            let Some(a_inv) = a.clone().try_inverse() else { return Ok(()); };
            let moved = Dataset::new(data.x() * a.transpose(), data.y().clone()).unwrap();
            let est = estimate_centered(&moved).unwrap();
            let mapped = (a_inv.transpose() * &base.direction).normalize();
            prop_assert!((&est.direction - &mapped).amax() <= 1e-8);
        }
    }
}
