//! Random variates for the simulation designs.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkit::{self, SymMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorLaw {
    StdNormal,
    /// Student t with one degree of freedom, i.e. standard Cauchy.
    T1Cauchy,
    /// `0.4·N(−3, 1) + 0.6·N(2, 2)` as a two-component mixture.
    NormalMixture,
    /// `0.4·Z₁ + 0.6·Z₂` with `Z₁ ~ N(−3, 1)`, `Z₂ ~ N(2, 2)` independent.
    NormalCombination,
}

/// How the second parameter of the mixture components is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MixtureScale {
    #[default]
    Variance,
    StdDev,
}

/// `Σ_ij = ρ^|i−j|`.
pub fn ar1_covariance(p: usize, rho: f64) -> Result<SymMatrix> {
    if p == 0 {
        return Err(Error::InvalidScenario("dimension must be positive".into()));
    }
    if !(rho.abs() < 1.0) {
        return Err(Error::InvalidScenario(format!("rho must lie in (-1, 1), got {rho}")));
    }
    let m = DMatrix::from_fn(p, p, |i, j| rho.powi(i.abs_diff(j) as i32));
    SymMatrix::new(m)
}

/// `s / ‖s‖` with `sᵢ ~ U(−1, 1)`, redrawn while `‖s‖ < 1e-8`.
pub fn draw_beta<R: Rng + ?Sized>(p: usize, rng: &mut R) -> DVector<f64> {
    loop {
        let s = DVector::from_fn(p, |_, _| rng.random_range(-1.0..1.0));
        let norm = s.norm();
        if norm >= 1e-8 {
            return s / norm;
        }
    }
}

pub fn draw_error<R: Rng + ?Sized>(law: ErrorLaw, size: usize, scale: MixtureScale, rng: &mut R) -> Vec<f64> {
    (0..size).map(|_| draw_one(law, scale, rng)).collect()
}

fn draw_one<R: Rng + ?Sized>(law: ErrorLaw, scale: MixtureScale, rng: &mut R) -> f64 {
    match law {
        ErrorLaw::StdNormal => StandardNormal.sample(rng),
        ErrorLaw::T1Cauchy => {
            // ratio of independent standard normals
            let num: f64 = StandardNormal.sample(rng);
            let den: f64 = StandardNormal.sample(rng);
            num / den
        }
        ErrorLaw::NormalMixture => {
            let z: f64 = StandardNormal.sample(rng);
            if rng.random_bool(0.4) {
                -3.0 + z
            } else {
                2.0 + second_sd(scale) * z
            }
        }
        ErrorLaw::NormalCombination => {
            let z1: f64 = StandardNormal.sample(rng);
            let z2: f64 = StandardNormal.sample(rng);
            0.4 * (-3.0 + z1) + 0.6 * (2.0 + second_sd(scale) * z2)
        }
    }
}

fn second_sd(scale: MixtureScale) -> f64 {
    match scale {
        MixtureScale::Variance => 2f64.sqrt(),
        MixtureScale::StdDev => 2.0,
    }
}

/// `n` rows drawn i.i.d. from `N(0, Σ)` given the lower Cholesky factor of `Σ`.
pub fn draw_gaussian_design<R: Rng + ?Sized>(n: usize, chol: &DMatrix<f64>, rng: &mut R) -> DMatrix<f64> {
    let p = chol.nrows();
    let mut x = DMatrix::zeros(n, p);
    let mut z = DVector::zeros(p);
    for i in 0..n {
        for v in z.iter_mut() {
            *v = StandardNormal.sample(rng);
        }
        let row = chol * &z;
        x.set_row(i, &row.transpose());
    }
    x
}

/// Cholesky factor of the AR(1) design covariance.
pub fn ar1_factor(p: usize, rho: f64) -> Result<DMatrix<f64>> {
    numkit::cholesky_factor(&ar1_covariance(p, rho)?)
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a tuple of words into a single 64-bit value.
pub fn mix_seed(parts: &[u64]) -> u64 {
    let mut state = 0x6A09_E667_F3BC_C909;
    let mut out = 0;
    for &p in parts {
        state ^= p;
        out = splitmix64(&mut state);
    }
    out
}

/// Independent generator for the `(seed, index, purpose)` substream.
pub fn substream(seed: u64, index: u64, purpose: u64) -> ChaCha8Rng {
    let mut state = mix_seed(&[seed, index, purpose]);
    let mut key = [0u8; 32];
    for chunk in key.chunks_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}
