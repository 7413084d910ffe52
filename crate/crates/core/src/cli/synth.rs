//! Synthetic stand-in for the firm-level export participation data: 1614
//! firms, a binary exporter indicator and eight covariates, one of them
//! binary and one the square of another. Generated from a probit model with
//! a known coefficient vector so the estimation pipeline can be checked end
//! to end.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::simulate::substream;

pub const RESPONSE: &str = "expd-ford";
pub const COVARIATES: [&str; 8] = ["lemp", "lprod", "lcapint", "intastr", "cmp", "cmp2", "ltastx", "sez"];
pub const DEFAULT_ROWS: usize = 1614;

/// Probit slopes used to generate the response, in `COVARIATES` order.
pub const TRUE_SLOPES: [f64; 8] = [0.76, 0.02, 0.15, -0.08, -0.12, 0.08, -0.18, 0.58];
pub const TRUE_INTERCEPT: f64 = -0.3;

#[derive(Debug, Clone)]
pub struct SyntheticFirms {
    /// Covariates in `COVARIATES` order.
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
}

impl SyntheticFirms {
    pub fn true_direction() -> DVector<f64> {
        DVector::from_column_slice(&TRUE_SLOPES).normalize()
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec![RESPONSE];
        header.extend(COVARIATES);
        w.write_record(&header).expect("in-memory write");
        for i in 0..self.x.nrows() {
            let mut rec = vec![format!("{}", self.y[i])];
            rec.extend(self.x.row(i).iter().map(|v| format!("{v:.6}")));
            w.write_record(&rec).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
    }
}

pub fn synthetic_firms(n: usize, seed: u64) -> SyntheticFirms {
    let mut rng = substream(seed, 0, 0x5eed);
    let mut x = DMatrix::zeros(n, 8);
    let mut y = DVector::zeros(n);
    let beta = DVector::from_column_slice(&TRUE_SLOPES);
    for i in 0..n {
        let mut z = [0.0f64; 6];
        for v in z.iter_mut() {
            *v = StandardNormal.sample(&mut rng);
        }
        // mildly correlated continuous covariates, standardized scale
        let lemp = z[0];
        let lprod = 0.4 * z[0] + 0.9165 * z[1];
        let lcapint = 0.3 * z[1] + 0.9539 * z[2];
        let intastr = 0.2 * z[2] + 0.9798 * z[3];
        let cmp = 0.25 * z[0] + 0.9682 * z[4];
        let ltastx = -0.3 * z[0] + 0.9539 * z[5];
        let cmp2 = cmp * cmp - 1.0;
        let sez = if rng.random_bool(0.35) { 1.0 } else { 0.0 };
        let row = [lemp, lprod, lcapint, intastr, cmp, cmp2, ltastx, sez];
        for (j, v) in row.iter().enumerate() {
            x[(i, j)] = *v;
        }
        let eps: f64 = StandardNormal.sample(&mut rng);
        let index = TRUE_INTERCEPT + x.row(i).transpose().dot(&beta);
        y[i] = if index + eps > 0.0 { 1.0 } else { 0.0 };
    }
    SyntheticFirms { x, y }
}
