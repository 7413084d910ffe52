//! Dense symmetric linear algebra for small dimensions (p up to a few dozen).
//!
//! Everything here works on `nalgebra` storage but the factorizations are
//! written out directly: covariance estimation, Cholesky, positive-definite
//! solves and a cyclic Jacobi eigensolver backing the Moore-Penrose inverse.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const SYMMETRY_TOL: f64 = 1e-10;
const JACOBI_OFFDIAG_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;

/// A finite, symmetric square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(DMatrix<f64>);

impl SymMatrix {
    /// Validates symmetry (to 1e-10 relative to the largest entry) and
    /// finiteness, then stores the exactly symmetrized matrix.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() || m.nrows() == 0 {
            return Err(Error::InvalidMatrix(format!(
                "expected a non-empty square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidMatrix("non-finite entry".into()));
        }
        let scale = m.amax().max(f64::MIN_POSITIVE);
        let dim = m.nrows();
        for i in 0..dim {
            for j in (i + 1)..dim {
                if (m[(i, j)] - m[(j, i)]).abs() > SYMMETRY_TOL * scale {
                    return Err(Error::InvalidMatrix(format!(
                        "not symmetric at ({i}, {j}): {} vs {}",
                        m[(i, j)],
                        m[(j, i)]
                    )));
                }
            }
        }
        Ok(Self::symmetrized(m))
    }

    pub(crate) fn symmetrized(m: DMatrix<f64>) -> Self {
        let t = m.transpose();
        SymMatrix((m + t) * 0.5)
    }

    pub fn identity(dim: usize) -> Self {
        SymMatrix(DMatrix::identity(dim, dim))
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        SymMatrix(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn diagonal(&self) -> DVector<f64> {
        self.0.diagonal()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn mul_vec(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.0 * v
    }

    pub fn scaled(&self, factor: f64) -> Self {
        SymMatrix(&self.0 * factor)
    }
}

/// Eigen-decomposition of a symmetric matrix; `vectors` holds eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

/// Centered second-moment matrix `(1/n) Σ (x_i − x̄)(x_i − x̄)'` of the rows of `x`.
pub fn sample_covariance(x: &DMatrix<f64>) -> Result<SymMatrix> {
    let n = x.nrows();
    if n < 2 {
        return Err(Error::InsufficientData(format!(
            "sample covariance needs at least 2 rows, got {n}"
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidMatrix("non-finite covariate value".into()));
    }
    let mean = x.row_mean();
    let mut centered = x.clone();
    for mut row in centered.row_iter_mut() {
        row -= &mean;
    }
    let cov = centered.tr_mul(&centered) / n as f64;
    Ok(SymMatrix::symmetrized(cov))
}

/// Lower-triangular `L` with `L L' = A`.
///
/// A pivot at or below `dim · eps · max diagonal` is treated as a loss of
/// positive definiteness.
pub fn cholesky_factor(a: &SymMatrix) -> Result<DMatrix<f64>> {
    let m = a.as_matrix();
    let dim = a.dim();
    let max_diag = m.diagonal().amax();
    let floor = dim as f64 * f64::EPSILON * max_diag;
    let mut l = DMatrix::<f64>::zeros(dim, dim);
    for j in 0..dim {
        let mut d = m[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > floor) {
            return Err(Error::SingularMatrix);
        }
        let ljj = d.sqrt();
        l[(j, j)] = ljj;
        for i in (j + 1)..dim {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / ljj;
        }
    }
    Ok(l)
}

/// Solves `A x = b` for symmetric positive-definite `A` through its Cholesky factor.
pub fn pd_solve(a: &SymMatrix, b: &DVector<f64>) -> Result<DVector<f64>> {
    if b.len() != a.dim() {
        return Err(Error::DimensionMismatch(format!(
            "matrix is {0}x{0} but right-hand side has length {1}",
            a.dim(),
            b.len()
        )));
    }
    let l = cholesky_factor(a)?;
    Ok(cholesky_solve(&l, b))
}

/// Solves `L L' x = b` given the lower Cholesky factor.
pub(crate) fn cholesky_solve(l: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let dim = l.nrows();
    let mut y = b.clone();
    for i in 0..dim {
        let mut s = y[i];
        for k in 0..i {
            s -= l[(i, k)] * y[k];
        }
        y[i] = s / l[(i, i)];
    }
    for i in (0..dim).rev() {
        let mut s = y[i];
        for k in (i + 1)..dim {
            s -= l[(k, i)] * y[k];
        }
        y[i] = s / l[(i, i)];
    }
    y
}

/// Cyclic Jacobi eigensolver; iterates until the off-diagonal Frobenius mass
/// is at most 1e-12 of the total.
pub fn symmetric_eigen(a: &SymMatrix) -> SymEigen {
    let dim = a.dim();
    let mut m = a.as_matrix().clone();
    let mut v = DMatrix::<f64>::identity(dim, dim);
    let total = m.norm();
    if total == 0.0 {
        return SymEigen {
            values: DVector::zeros(dim),
            vectors: v,
        };
    }
    for _ in 0..JACOBI_MAX_SWEEPS {
        if off_diagonal_norm(&m) <= JACOBI_OFFDIAG_TOL * total {
            break;
        }
        for p in 0..dim {
            for q in (p + 1)..dim {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..dim {
                    let akp = m[(k, p)];
                    let akq = m[(k, q)];
                    m[(k, p)] = c * akp - s * akq;
                    m[(k, q)] = s * akp + c * akq;
                }
                for k in 0..dim {
                    let apk = m[(p, k)];
                    let aqk = m[(q, k)];
                    m[(p, k)] = c * apk - s * aqk;
                    m[(q, k)] = s * apk + c * aqk;
                }
                m[(p, q)] = 0.0;
                m[(q, p)] = 0.0;
                for k in 0..dim {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    SymEigen {
        values: m.diagonal(),
        vectors: v,
    }
}

fn off_diagonal_norm(m: &DMatrix<f64>) -> f64 {
    let mut s = 0.0;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if i != j {
                s += m[(i, j)] * m[(i, j)];
            }
        }
    }
    s.sqrt()
}

/// Default relative cutoff for the numerical rank: `dim · eps`.
pub fn default_rank_tol(dim: usize) -> f64 {
    dim as f64 * f64::EPSILON
}

/// Moore-Penrose inverse of a symmetric matrix and its numerical rank.
///
/// Eigenvalues with `|λ| ≤ rel_tol · max|λ|` are dropped.
pub fn moore_penrose(a: &SymMatrix, rel_tol: f64) -> (SymMatrix, usize) {
    let dim = a.dim();
    let eig = symmetric_eigen(a);
    let max_abs = eig.values.amax();
    let cutoff = rel_tol * max_abs;
    let mut pinv = DMatrix::<f64>::zeros(dim, dim);
    let mut rank = 0;
    for (k, &lambda) in eig.values.iter().enumerate() {
        if max_abs == 0.0 || lambda.abs() <= cutoff {
            continue;
        }
        rank += 1;
        let u = eig.vectors.column(k);
        pinv += (u * u.transpose()) / lambda;
    }
    (SymMatrix::symmetrized(pinv), rank)
}
