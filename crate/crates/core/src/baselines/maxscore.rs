//! Manski's maximum score estimator.
//!
//! The objective counts correct classifications, `#{i : Yᵢ = 1{Xᵢ'b ≥ 0}}`,
//! which differs from `Σ (2Yᵢ − 1) 1{Xᵢ'b ≥ 0}` by the constant `#{Yᵢ = 0}`.
//! It is piecewise constant on the sphere, so the search restricts it to
//! great circles through the current point and maximizes each restriction
//! exactly: along `b(θ) = cos θ · b + sin θ · u` sample `i` flips
//! classification at the two angles where `Xᵢ'b(θ) = 0`, and a sweep over the
//! sorted flip angles visits every arc.

use std::f64::consts::{PI, TAU};

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::estimator::{Dataset, DirectionEstimate, Method};

/// Largest dimension accepted; the search budget needed grows quickly with `p`.
pub const MAX_SCORE_MAX_DIM: usize = 6;

const MIN_ARC: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MaxScoreConfig {
    pub n_random_starts: usize,
    pub refine_rounds: usize,
    pub seed: u64,
}

impl Default for MaxScoreConfig {
    fn default() -> Self {
        MaxScoreConfig {
            n_random_starts: 200,
            refine_rounds: 10,
            seed: 0,
        }
    }
}

/// Number of correct classifications of `b`.
pub fn max_score_objective(data: &Dataset, b: &DVector<f64>) -> usize {
    (0..data.n())
        .filter(|&i| {
            let positive = data.x().row(i).transpose().dot(b) >= 0.0;
            positive == (data.y()[i] == 1.0)
        })
        .count()
}

pub fn maximum_score(data: &Dataset, cfg: &MaxScoreConfig) -> Result<DirectionEstimate> {
    let (n, p) = (data.n(), data.p());
    if !data.is_binary() {
        return Err(Error::InvalidResponse("maximum score needs a 0/1 response".into()));
    }
    if p < 2 {
        return Err(Error::InvalidDataset("maximum score needs at least 2 covariates".into()));
    }
    if p > MAX_SCORE_MAX_DIM {
        return Err(Error::DimensionTooLarge { p, max: MAX_SCORE_MAX_DIM });
    }
    if cfg.n_random_starts == 0 {
        return Err(Error::InvalidDataset("maximum score needs at least one start".into()));
    }

    let rows: Vec<DVector<f64>> = (0..n).map(|i| data.row(i)).collect();
    let weights: Vec<i64> = data.y().iter().map(|&y| if y == 1.0 { 1 } else { -1 }).collect();
    let zeros = data.y().iter().filter(|&&y| y == 0.0).count() as i64;
    let search = Search { rows: &rows, weights: &weights };

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut best: Option<(i64, DVector<f64>)> = None;
    for _ in 0..cfg.n_random_starts {
        let start = random_unit(p, &mut rng);
        let (score, b) = search.refine(start, cfg.refine_rounds);
        if best.as_ref().is_none_or(|(s, _)| score > *s) {
            best = Some((score, b));
        }
    }
    let (weighted, b) = best.expect("at least one start");
    let mut est = DirectionEstimate::from_raw(b, Method::MaxScore, data.y_mean())?;
    est.score = Some((weighted + zeros) as f64);
    Ok(est)
}

fn random_unit(p: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
    loop {
        let v: DVector<f64> = DVector::from_fn(p, |_, _| StandardNormal.sample(rng));
        let norm = v.norm();
        if norm > 1e-8 {
            return v / norm;
        }
    }
}

struct Search<'a> {
    rows: &'a [DVector<f64>],
    weights: &'a [i64],
}

impl Search<'_> {
    fn weighted_score(&self, b: &DVector<f64>) -> i64 {
        self.rows
            .iter()
            .zip(self.weights)
            .filter(|(x, _)| x.dot(b) >= 0.0)
            .map(|(_, w)| w)
            .sum()
    }

    /// Coordinate-wise angular line searches until a full round makes no progress.
    fn refine(&self, mut b: DVector<f64>, rounds: usize) -> (i64, DVector<f64>) {
        let p = b.len();
        let mut score = self.weighted_score(&b);
        for _ in 0..rounds {
            let mut improved = false;
            for k in 0..p {
                let mut u = DVector::zeros(p);
                u[k] = 1.0;
                u -= &b * b[k];
                let norm = u.norm();
                if norm < 1e-8 {
                    continue;
                }
                u /= norm;
                if let Some((s, theta)) = self.best_on_circle(&b, &u) {
                    let candidate = (&b * theta.cos() + &u * theta.sin()).normalize();
                    // The arc midpoint can round onto a boundary; keep the move
                    // only if the improvement survives re-evaluation.
                    let check = self.weighted_score(&candidate);
                    if s > score && check > score {
                        b = candidate;
                        score = check;
                        improved = true;
                    }
                }
            }
            if !improved {
                break;
            }
        }
        (score, b)
    }

    /// Highest-scoring open arc on the great circle through `b` along `u`,
    /// returned as (score, midpoint angle). `None` when no sample changes sign.
    fn best_on_circle(&self, b: &DVector<f64>, u: &DVector<f64>) -> Option<(i64, f64)> {
        let mut events: Vec<(f64, i64)> = Vec::with_capacity(2 * self.rows.len());
        for (x, &w) in self.rows.iter().zip(self.weights) {
            let a = x.dot(b);
            let c = x.dot(u);
            if a == 0.0 && c == 0.0 {
                // orthogonal to the whole circle: counted at every angle
                continue;
            }
            // x'b(θ) = r cos(θ − φ) is nonnegative on [φ − π/2, φ + π/2].
            let phi = c.atan2(a);
            events.push(((phi - PI / 2.0).rem_euclid(TAU), w));
            events.push(((phi + PI / 2.0).rem_euclid(TAU), -w));
        }
        if events.is_empty() {
            return None;
        }
        events.sort_by(|l, r| l.0.total_cmp(&r.0));
        let m = events.len();

        // Start in the widest gap (possibly the wrap-around one) and sweep.
        let gap = |k: usize| {
            let next = if k + 1 == m { events[0].0 + TAU } else { events[k + 1].0 };
            next - events[k].0
        };
        let start = (0..m).max_by(|&i, &j| gap(i).total_cmp(&gap(j))).expect("non-empty");
        let mid = |k: usize| (events[k].0 + gap(k) / 2.0).rem_euclid(TAU);

        let theta0 = mid(start);
        let mut running = self.weighted_score(&(b * theta0.cos() + u * theta0.sin()));
        let mut best = (running, theta0);
        for step in 1..m {
            let k = (start + step) % m;
            running += events[k].1;
            if gap(k) > MIN_ARC && running > best.0 {
                best = (running, mid(k));
            }
        }
        Some(best)
    }
}
