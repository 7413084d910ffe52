use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::draws::{self, ErrorLaw, MixtureScale};
use crate::baselines::{self, MaxScoreConfig, MAX_SCORE_MAX_DIM};
use crate::error::{Error, Result};
use crate::estimator::{self, Dataset, DirectionEstimate, Method};

const PURPOSE_DATA: u64 = 1;
const PURPOSE_FIXED_BETA: u64 = 2;
const PURPOSE_MAX_SCORE: u64 = 3;

/// Data-generating designs: binary Cases I–III and continuous Cases 1–4.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Case {
    /// `Y = 1{X'β + ε > 0}`, `ε ~ N(0, 1)`
    #[serde(rename = "I")]
    I,
    /// `Y = 1{X'β + ε > 0}`, `ε ~ t(1)`
    #[serde(rename = "II")]
    II,
    /// `Y = 1{X'β + ε > 0}`, `ε ~ 0.4·N(−3, 1) + 0.6·N(2, 2)`
    #[serde(rename = "III")]
    III,
    /// `Y = X'β + ε`
    #[serde(rename = "C1", alias = "1")]
    C1,
    /// `Y = Φ(X'β) + ε`
    #[serde(rename = "C2", alias = "2")]
    C2,
    /// `Y = log(1 + exp(X'β)) + ε`
    #[serde(rename = "C3", alias = "3")]
    C3,
    /// `Y = 1 / (1 + exp(−X'β)) + ε`
    #[serde(rename = "C4", alias = "4")]
    C4,
}

impl Case {
    pub const ALL: [Case; 7] = [Case::I, Case::II, Case::III, Case::C1, Case::C2, Case::C3, Case::C4];

    pub fn name(self) -> &'static str {
        match self {
            Case::I => "I",
            Case::II => "II",
            Case::III => "III",
            Case::C1 => "C1",
            Case::C2 => "C2",
            Case::C3 => "C3",
            Case::C4 => "C4",
        }
    }

    pub fn from_name(s: &str) -> Option<Case> {
        Case::ALL.into_iter().find(|c| c.name() == s)
    }

    pub fn error_law(self) -> ErrorLaw {
        match self {
            Case::II => ErrorLaw::T1Cauchy,
            Case::III => ErrorLaw::NormalMixture,
            _ => ErrorLaw::StdNormal,
        }
    }

    pub fn is_binary(self) -> bool {
        matches!(self, Case::I | Case::II | Case::III)
    }

    /// Response for index value `X'β` and error draw `ε`.
    pub fn response(self, index: f64, eps: f64) -> f64 {
        match self {
            Case::I | Case::II | Case::III => (index + eps > 0.0) as u8 as f64,
            Case::C1 => index + eps,
            Case::C2 => baselines::norm_cdf(index) + eps,
            Case::C3 => softplus(index) + eps,
            Case::C4 => 1.0 / (1.0 + (-index).exp()) + eps,
        }
    }
}

fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn default_ms_starts() -> usize {
    MaxScoreConfig::default().n_random_starts
}

/// One simulation cell: design, sample size, repetitions and estimators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub case: Case,
    pub n: usize,
    pub p: usize,
    pub rho: f64,
    pub reps: usize,
    pub seed: u64,
    pub estimators: Vec<Method>,
    /// Draw `β` once per scenario instead of once per repetition.
    #[serde(default)]
    pub fixed_beta: bool,
    /// Read the mixture components' second parameter as a standard deviation.
    #[serde(default)]
    pub mixture_sd: bool,
    /// Read Case III's error as the weighted sum of the two normals rather
    /// than a mixture.
    #[serde(default)]
    pub mixture_sum: bool,
    #[serde(default = "default_ms_starts")]
    pub ms_starts: usize,
}

impl Scenario {
    pub fn new(case: Case, n: usize, p: usize, rho: f64, reps: usize, seed: u64, estimators: Vec<Method>) -> Self {
        Scenario {
            case,
            n,
            p,
            rho,
            reps,
            seed,
            estimators,
            fixed_beta: false,
            mixture_sd: false,
            mixture_sum: false,
            ms_starts: default_ms_starts(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidScenario(msg));
        if self.p == 0 {
            return bad("p must be positive".into());
        }
        if self.n <= self.p {
            return bad(format!("n ({}) must exceed p ({})", self.n, self.p));
        }
        if self.reps == 0 {
            return bad("reps must be at least 1".into());
        }
        if !(self.rho.abs() < 1.0) {
            return bad(format!("rho must lie in (-1, 1), got {}", self.rho));
        }
        if self.estimators.is_empty() {
            return bad("estimators must not be empty".into());
        }
        for (k, m) in self.estimators.iter().enumerate() {
            if self.estimators[..k].contains(m) {
                return bad(format!("estimator {m} listed twice"));
            }
            if m.requires_binary() && !self.case.is_binary() {
                return bad(format!("estimator {m} needs a binary case, got case {}", self.case));
            }
        }
        if self.estimators.contains(&Method::MaxScore) {
            if self.p > MAX_SCORE_MAX_DIM {
                return bad(format!("estimator ms supports p <= {MAX_SCORE_MAX_DIM}, got {}", self.p));
            }
            if self.ms_starts == 0 {
                return bad("ms_starts must be at least 1".into());
            }
        }
        Ok(())
    }

    fn error_law(&self) -> ErrorLaw {
        match self.case.error_law() {
            ErrorLaw::NormalMixture if self.mixture_sum => ErrorLaw::NormalCombination,
            law => law,
        }
    }

    fn mixture_scale(&self) -> MixtureScale {
        if self.mixture_sd {
            MixtureScale::StdDev
        } else {
            MixtureScale::Variance
        }
    }

    /// Maximum-score search settings for one repetition.
    pub fn max_score_config(&self, rep_index: usize) -> MaxScoreConfig {
        MaxScoreConfig {
            n_random_starts: self.ms_starts,
            seed: draws::mix_seed(&[self.seed, rep_index as u64, PURPOSE_MAX_SCORE]),
            ..MaxScoreConfig::default()
        }
    }
}

/// Draws the dataset and true unit direction for one repetition.
///
/// The stream depends only on `(seed, rep_index)`, so every estimator in a
/// cell sees the same data.
pub fn generate(scenario: &Scenario, rep_index: usize) -> Result<(Dataset, DVector<f64>)> {
    let chol = draws::ar1_factor(scenario.p, scenario.rho)?;
    generate_with_factor(scenario, rep_index, &chol)
}

pub(crate) fn generate_with_factor(
    scenario: &Scenario,
    rep_index: usize,
    chol: &DMatrix<f64>,
) -> Result<(Dataset, DVector<f64>)> {
    let mut rng = draws::substream(scenario.seed, rep_index as u64, PURPOSE_DATA);
    let beta = if scenario.fixed_beta {
        let mut fixed = draws::substream(scenario.seed, 0, PURPOSE_FIXED_BETA);
        draws::draw_beta(scenario.p, &mut fixed)
    } else {
        draws::draw_beta(scenario.p, &mut rng)
    };
    let x = draws::draw_gaussian_design(scenario.n, chol, &mut rng);
    let eps = draws::draw_error(scenario.error_law(), scenario.n, scenario.mixture_scale(), &mut rng);
    let index = &x * &beta;
    let y = DVector::from_fn(scenario.n, |i, _| scenario.case.response(index[i], eps[i]));
    Ok((Dataset::new(x, y)?, beta))
}

/// Runs one estimator with the settings the simulation engine uses.
pub fn run_estimator(method: Method, data: &Dataset, ms: &MaxScoreConfig) -> Result<DirectionEstimate> {
    match method {
        Method::LsCentered => estimator::estimate_centered(data),
        Method::LsUncentered => estimator::estimate_uncentered(data),
        Method::MaxScore => baselines::maximum_score(data, ms),
        Method::Lmrc => baselines::lmrc(data),
        Method::Probit => baselines::probit_mle(data, baselines::PROBIT_MAX_ITER, baselines::PROBIT_TOL),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scenario(case: Case, n: usize, p: usize) -> Scenario {
        Scenario::new(case, n, p, 0.3, 3, 42, vec![Method::LsCentered])
    }

    #[test]
    fn noiseless_threshold_response() {
        for t in [-2.0, -1e-9, 1e-9, 0.7] {
            assert_eq!(Case::I.response(t, 0.0), (t > 0.0) as u8 as f64);
        }
    }

    #[test]
    fn continuous_links() {
        assert_eq!(Case::C1.response(0.5, 0.25), 0.75);
        assert!((Case::C2.response(0.0, 0.0) - 0.5).abs() < 1e-15);
        assert!((Case::C3.response(0.0, 0.0) - 2f64.ln()).abs() < 1e-15);
        assert!((Case::C3.response(800.0, 0.0) - 800.0).abs() < 1e-9);
        assert!((Case::C4.response(0.0, 0.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn logistic_case_stays_in_unit_band() {
        let s = scenario(Case::C4, 500, 3);
        for rep in 0..5 {
            let (data, beta) = generate(&s, rep).unwrap();
            // reconstruct ε by replaying the stream
            let mut rng = draws::substream(s.seed, rep as u64, PURPOSE_DATA);
            let b = draws::draw_beta(3, &mut rng);
            assert_eq!(b, beta);
            let _ = draws::draw_gaussian_design(s.n, &draws::ar1_factor(3, s.rho).unwrap(), &mut rng);
            let eps = draws::draw_error(ErrorLaw::StdNormal, s.n, MixtureScale::Variance, &mut rng);
            for i in 0..s.n {
                let g = data.y()[i] - eps[i];
                assert!(g > 0.0 && g < 1.0);
            }
        }
    }

    #[test]
    fn exact_linear_model_is_recovered() {
        for p in [2usize, 3, 5, 10] {
            let s = scenario(Case::C1, 10 * p, p);
            let (data, beta) = generate(&s, 0).unwrap();
            let y = data.x() * &beta;
            let clean = Dataset::new(data.x().clone(), y).unwrap();
            let est = estimator::estimate_centered(&clean).unwrap();
            assert!(estimator::cosine_to(&est.direction, &beta).unwrap() > 1.0 - 1e-6);
        }
    }

    #[test]
    fn same_stream_regardless_of_estimators() {
        let mut a = scenario(Case::I, 60, 3);
        let mut b = a.clone();
        a.estimators = vec![Method::LsCentered];
        b.estimators = vec![Method::Probit, Method::Lmrc, Method::LsCentered];
        assert_eq!(generate(&a, 4).unwrap(), generate(&b, 4).unwrap());
        assert_ne!(generate(&a, 4).unwrap().1, generate(&a, 5).unwrap().1);
    }

    #[test]
    fn fixed_beta_is_shared_across_reps() {
        let mut s = scenario(Case::II, 40, 3);
        s.fixed_beta = true;
        let b0 = generate(&s, 0).unwrap().1;
        let b7 = generate(&s, 7).unwrap().1;
        assert_eq!(b0, b7);
    }

    #[test]
    fn validation_rules() {
        assert!(scenario(Case::I, 3, 3).validate().is_err());
        let mut s = scenario(Case::C2, 100, 3);
        s.estimators = vec![Method::Probit];
        assert!(s.validate().is_err());
        let mut s = scenario(Case::I, 100, 8);
        s.estimators = vec![Method::MaxScore];
        assert!(s.validate().is_err());
        let mut s = scenario(Case::I, 100, 3);
        s.rho = -1.0;
        assert!(s.validate().is_err());
        assert!(scenario(Case::III, 100, 3).validate().is_ok());
    }

    #[test]
    fn case_aliases_deserialize() {
        let c: Case = serde_json::from_str("\"4\"").unwrap();
        assert_eq!(c, Case::C4);
        let c: Case = serde_json::from_str("\"II\"").unwrap();
        assert_eq!(c, Case::II);
        assert!(serde_json::from_str::<Case>("\"V\"").is_err());
    }
}
