//! Linearized maximum rank correlation: `normalize(Σ_{i<j} sign(Yᵢ − Yⱼ)(Xᵢ − Xⱼ))`.
//!
//! The pairwise sum collapses to `Σᵢ cᵢ Xᵢ` with
//! `cᵢ = #{j : Yⱼ < Yᵢ} − #{j : Yⱼ > Yᵢ}`, which a sort computes in
//! `O(n log n)`. Only the ordering of `Y` enters.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::estimator::{Dataset, DirectionEstimate, Method};

/// Net rank counts `cᵢ`.
pub fn rank_contrasts(y: &DVector<f64>) -> Vec<i64> {
    let n = y.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| y[a].total_cmp(&y[b]));
    let mut contrasts = vec![0i64; n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && y[order[end]] == y[order[start]] {
            end += 1;
        }
        let below = start as i64;
        let above = (n - end) as i64;
        for &i in &order[start..end] {
            contrasts[i] = below - above;
        }
        start = end;
    }
    contrasts
}

pub fn lmrc(data: &Dataset) -> Result<DirectionEstimate> {
    let contrasts = rank_contrasts(data.y());
    let mut raw = DVector::<f64>::zeros(data.p());
    for (i, &c) in contrasts.iter().enumerate() {
        if c != 0 {
            raw += data.row(i) * c as f64;
        }
    }
    let mass: f64 = contrasts.iter().map(|c| c.unsigned_abs() as f64).sum();
    let scale = data.x().amax();
    if raw.norm() <= 1e-12 * mass * scale || mass == 0.0 {
        return Err(Error::DegenerateDirection(
            "pairwise rank contrasts cancel (constant response?)".into(),
        ));
    }
    DirectionEstimate::from_raw(raw, Method::Lmrc, data.y_mean())
}
