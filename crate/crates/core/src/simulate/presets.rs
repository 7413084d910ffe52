//! Built-in scenario grids for the three published comparison tables, and
//! the bundled transcription of their values for side-by-side diffs.

use std::fmt;
use std::str::FromStr;

use super::table::render_markdown;
use super::{mix_seed, Case, Scenario, SimulationTable};
use crate::estimator::Method;

const REFERENCE_CSV: &str = include_str!("../../data/paper_reference.csv");

const RHO_FIVE: [f64; 5] = [-0.6, -0.3, 0.0, 0.3, 0.6];
const RHO_THREE: [f64; 3] = [-0.3, 0.0, 0.3];
const SAMPLE_SIZES: [usize; 3] = [100, 300, 500];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PaperTable {
    /// Binary Cases I–III, p = 3, all four estimators.
    Table1,
    /// Cauchy-error binary model at p = 10 and 15, n = 500.
    Table2,
    /// Continuous Cases 1–4, p = 3, least squares vs LMRC.
    Table3,
}

impl PaperTable {
    pub fn name(self) -> &'static str {
        match self {
            PaperTable::Table1 => "table1",
            PaperTable::Table2 => "table2",
            PaperTable::Table3 => "table3",
        }
    }
}

impl fmt::Display for PaperTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PaperTable {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "table1" => Ok(PaperTable::Table1),
            "table2" => Ok(PaperTable::Table2),
            "table3" => Ok(PaperTable::Table3),
            other => Err(format!("unknown table {other:?} (expected table1, table2 or table3)")),
        }
    }
}

/// Scenario grid for `table`; each cell gets its own seed derived from `seed`.
pub fn preset(table: PaperTable, seed: u64, reps: usize) -> Vec<Scenario> {
    let mut out = Vec::new();
    let mut push = |case: Case, n: usize, p: usize, rho: f64, estimators: Vec<Method>| {
        let cell_seed = mix_seed(&[seed, out.len() as u64]);
        out.push(Scenario::new(case, n, p, rho, reps, cell_seed, estimators));
    };
    match table {
        PaperTable::Table1 => {
            for case in [Case::I, Case::II, Case::III] {
                for n in SAMPLE_SIZES {
                    for rho in RHO_FIVE {
                        push(case, n, 3, rho, vec![Method::LsCentered, Method::MaxScore, Method::Lmrc, Method::Probit]);
                    }
                }
            }
        }
        PaperTable::Table2 => {
            for p in [10, 15] {
                for rho in RHO_FIVE {
                    push(Case::II, 500, p, rho, vec![Method::LsCentered, Method::Lmrc, Method::Probit]);
                }
            }
        }
        PaperTable::Table3 => {
            for n in SAMPLE_SIZES {
                for rho in RHO_THREE {
                    for case in [Case::C1, Case::C2, Case::C3, Case::C4] {
                        push(case, n, 3, rho, vec![Method::LsCentered, Method::Lmrc]);
                    }
                }
            }
        }
    }
    out
}

/// One published (cos, SE) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceRow {
    pub table: PaperTable,
    pub case: Case,
    pub n: usize,
    pub p: usize,
    pub rho: f64,
    pub method: Method,
    pub mean_cos: f64,
    pub se_cos: f64,
}

/// The bundled transcription of the published tables.
pub fn paper_reference() -> Vec<ReferenceRow> {
    let body: String = REFERENCE_CSV
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| format!("{l}\n"))
        .collect();
    let mut reader = csv::Reader::from_reader(body.as_bytes());
    reader
        .records()
        .map(|rec| {
            let rec = rec.expect("bundled reference parses");
            let f = |i: usize| rec.get(i).expect("bundled reference has 8 columns");
            ReferenceRow {
                table: f(0).parse().expect("known table"),
                case: Case::from_name(f(1)).expect("known case"),
                n: f(2).parse().expect("integer n"),
                p: f(3).parse().expect("integer p"),
                rho: f(4).parse().expect("numeric rho"),
                method: Method::from_tag(f(5)).expect("known method"),
                mean_cos: f(6).parse().expect("numeric cos"),
                se_cos: f(7).parse().expect("numeric se"),
            }
        })
        .collect()
}

/// Markdown table of simulated vs published values for every published cell.
pub fn diff_against_reference(table: PaperTable, sim: &SimulationTable) -> String {
    let header = ["case", "n", "p", "rho", "method", "cos", "published cos", "diff", "SE", "published SE"];
    let mut body = Vec::new();
    for r in paper_reference().into_iter().filter(|r| r.table == table) {
        let Some(cell) = sim.cell(r.case, r.n, r.p, r.rho, r.method) else {
            continue;
        };
        let f = |v: Option<f64>| v.map_or_else(|| "NA".into(), |x| format!("{x:.4}"));
        body.push([
            r.case.name().to_string(),
            r.n.to_string(),
            r.p.to_string(),
            format!("{:.1}", r.rho),
            r.method.label().to_string(),
            f(cell.mean_cos),
            format!("{:.4}", r.mean_cos),
            cell.mean_cos.map_or_else(|| "NA".into(), |m| format!("{:+.4}", m - r.mean_cos)),
            f(cell.se_cos),
            format!("{:.4}", r.se_cos),
        ]);
    }
    let mut out = format!(
        "Published values are a transcription of {table} from the original study, bundled for comparison only.\n\n"
    );
    out.push_str(&render_markdown(&header, &body));
    out
}
