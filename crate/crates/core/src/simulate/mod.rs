//! Monte Carlo engine for the estimator comparison tables.
//!
//! Repetitions run in parallel on a rayon pool, but each one draws from its
//! own substream keyed by `(seed, rep_index)` and results are reduced in
//! repetition order, so tables are bit-identical for any thread count.

mod draws;
mod presets;
mod scenario;
mod table;

use std::collections::HashSet;
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;

pub use draws::{
    ar1_covariance, ar1_factor, draw_beta, draw_error, draw_gaussian_design, mix_seed, substream, ErrorLaw,
    MixtureScale,
};
pub use presets::{diff_against_reference, paper_reference, preset, PaperTable, ReferenceRow};
pub use scenario::{generate, run_estimator, Case, Scenario};
pub use table::{parse_csv, TableRow};

use crate::error::{Error, Result};
use crate::estimator::{self, Method};

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "DIRSET_THREADS";

/// Aggregate over repetitions for one (scenario, estimator) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub scenario: Scenario,
    pub method: Method,
    /// Mean cosine over successful repetitions; `None` if all failed.
    pub mean_cos: Option<f64>,
    /// Standard deviation of the cosine across successful repetitions.
    pub se_cos: Option<f64>,
    pub failures: usize,
    /// Per-repetition cosines in repetition order (`None` = estimator error).
    pub per_rep: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableMetadata {
    pub seed: u64,
    /// Seconds since the Unix epoch at completion.
    pub timestamp: u64,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationTable {
    pub cells: Vec<CellResult>,
    pub metadata: TableMetadata,
}

impl SimulationTable {
    pub fn cell(&self, case: Case, n: usize, p: usize, rho: f64, method: Method) -> Option<&CellResult> {
        self.cells.iter().find(|c| {
            c.method == method && c.scenario.case == case && c.scenario.n == n && c.scenario.p == p && c.scenario.rho == rho
        })
    }

    /// True if some cell has no successful repetition.
    pub fn any_cell_fully_failed(&self) -> bool {
        self.cells.iter().any(|c| c.mean_cos.is_none())
    }

    pub fn rows(&self) -> Vec<TableRow> {
        self.cells.iter().map(TableRow::from).collect()
    }

    pub fn to_csv(&self) -> String {
        table::write_csv(&self.rows())
    }

    pub fn to_markdown(&self) -> String {
        table::write_markdown(&self.rows(), Some(&self.metadata))
    }
}

/// Worker count from `DIRSET_THREADS`, if set to a positive integer.
pub fn threads_from_env() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse().ok().filter(|&t| t > 0)
}

/// Runs every scenario, honoring `DIRSET_THREADS`.
pub fn run_table(scenarios: &[Scenario]) -> Result<SimulationTable> {
    run_table_with_threads(scenarios, threads_from_env())
}

pub fn run_table_with_threads(scenarios: &[Scenario], threads: Option<usize>) -> Result<SimulationTable> {
    if scenarios.is_empty() {
        return Err(Error::InvalidScenario("no scenarios to run".into()));
    }
    let mut seen = HashSet::new();
    for s in scenarios {
        s.validate()?;
        for m in &s.estimators {
            if !seen.insert((s.case, s.n, s.p, s.rho.to_bits(), *m)) {
                return Err(Error::InvalidScenario(format!(
                    "duplicate cell: case {} n={} p={} rho={} method {m}",
                    s.case, s.n, s.p, s.rho
                )));
            }
        }
    }

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        builder = builder.num_threads(t);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidScenario(format!("cannot start worker pool: {e}")))?;

    let factors = scenarios
        .iter()
        .map(|s| ar1_factor(s.p, s.rho))
        .collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(usize, usize)> = scenarios
        .iter()
        .enumerate()
        .flat_map(|(si, s)| (0..s.reps).map(move |r| (si, r)))
        .collect();

    let outcomes: Vec<Result<Vec<Option<f64>>>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(si, rep)| {
                let s = &scenarios[si];
                let (data, beta) = scenario::generate_with_factor(s, rep, &factors[si])?;
                let ms = s.max_score_config(rep);
                Ok(s.estimators
                    .iter()
                    .map(|&m| {
                        run_estimator(m, &data, &ms)
                            .and_then(|est| estimator::cosine_to(&est.direction, &beta))
                            .ok()
                    })
                    .collect())
            })
            .collect()
    });

    let mut outcomes = outcomes.into_iter();
    let mut cells = Vec::new();
    for s in scenarios {
        let per_rep: Vec<Vec<Option<f64>>> = outcomes.by_ref().take(s.reps).collect::<Result<_>>()?;
        for (k, &method) in s.estimators.iter().enumerate() {
            let values: Vec<Option<f64>> = per_rep.iter().map(|r| r[k]).collect();
            cells.push(aggregate(s.clone(), method, values));
        }
    }

    let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    Ok(SimulationTable {
        cells,
        metadata: TableMetadata {
            seed: scenarios[0].seed,
            timestamp,
            version: env!("CARGO_PKG_VERSION").to_string(),
        },
    })
}

fn aggregate(scenario: Scenario, method: Method, per_rep: Vec<Option<f64>>) -> CellResult {
    let ok: Vec<f64> = per_rep.iter().flatten().copied().collect();
    let failures = per_rep.len() - ok.len();
    let (mean_cos, se_cos) = match ok.len() {
        0 => (None, None),
        1 => (Some(ok[0]), Some(0.0)),
        k => {
            let mean = ok.iter().sum::<f64>() / k as f64;
            let var = ok.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (k - 1) as f64;
            (Some(mean), Some(var.sqrt()))
        }
    };
    CellResult {
        scenario,
        method,
        mean_cos,
        se_cos,
        failures,
        per_rep,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(case: Case, n: usize, seed: u64, methods: Vec<Method>) -> Scenario {
        Scenario::new(case, n, 3, 0.0, 12, seed, methods)
    }

    #[test]
    fn identical_across_thread_counts() {
        let scenarios = vec![
            small(Case::I, 80, 7, vec![Method::LsCentered, Method::Lmrc, Method::Probit]),
            small(Case::C3, 60, 8, vec![Method::LsCentered, Method::Lmrc]),
        ];
        let one = run_table_with_threads(&scenarios, Some(1)).unwrap();
        let many = run_table_with_threads(&scenarios, Some(6)).unwrap();
        assert_eq!(one.cells, many.cells);
        assert_eq!(one.to_csv(), many.to_csv());
    }

    #[test]
    fn cells_respect_invariants() {
        let t = run_table_with_threads(&[small(Case::III, 100, 3, vec![Method::LsCentered, Method::Lmrc])], Some(2)).unwrap();
        assert_eq!(t.cells.len(), 2);
        for c in &t.cells {
            let m = c.mean_cos.unwrap();
            assert!((-1.0..=1.0).contains(&m));
            assert!(c.se_cos.unwrap() >= 0.0);
            assert!(c.failures <= c.scenario.reps);
            assert_eq!(c.per_rep.len(), c.scenario.reps);
        }
    }

    #[test]
    fn failures_are_counted_and_excluded() {
        let per_rep = vec![Some(0.9), None, Some(0.7), None];
        let c = aggregate(small(Case::I, 50, 1, vec![Method::Probit]), Method::Probit, per_rep);
        assert_eq!(c.failures, 2);
        assert!((c.mean_cos.unwrap() - 0.8).abs() < 1e-15);
        assert!((c.se_cos.unwrap() - 0.02f64.sqrt()).abs() < 1e-15);

        let c = aggregate(small(Case::I, 50, 1, vec![Method::Probit]), Method::Probit, vec![None; 3]);
        assert_eq!(c.failures, 3);
        assert_eq!(c.mean_cos, None);
    }

    #[test]
    fn rejects_duplicates_and_empty_input() {
        let s = small(Case::I, 50, 1, vec![Method::LsCentered]);
        assert!(run_table_with_threads(&[s.clone(), s], Some(1)).is_err());
        assert!(run_table_with_threads(&[], Some(1)).is_err());
    }
}
