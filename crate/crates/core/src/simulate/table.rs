//! CSV and markdown renderings of a simulation table.
//!
//! CSV columns, in order: `case,n,p,rho,method,mean_cos,se_cos,failures`.
//! Floats are written in shortest round-trip form and a cell with no
//! successful repetition has `NA` for `mean_cos` and `se_cos`.

use super::{Case, CellResult, TableMetadata};
use crate::error::{Error, Result};
use crate::estimator::Method;

pub const CSV_HEADER: [&str; 8] = ["case", "n", "p", "rho", "method", "mean_cos", "se_cos", "failures"];

/// Flat form of a [`CellResult`], as stored in CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub case: Case,
    pub n: usize,
    pub p: usize,
    pub rho: f64,
    pub method: Method,
    pub mean_cos: Option<f64>,
    pub se_cos: Option<f64>,
    pub failures: usize,
}

impl From<&CellResult> for TableRow {
    fn from(c: &CellResult) -> Self {
        TableRow {
            case: c.scenario.case,
            n: c.scenario.n,
            p: c.scenario.p,
            rho: c.scenario.rho,
            method: c.method,
            mean_cos: c.mean_cos,
            se_cos: c.se_cos,
            failures: c.failures,
        }
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}

pub(crate) fn write_csv(rows: &[TableRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for r in rows {
        w.write_record([
            r.case.name().to_string(),
            r.n.to_string(),
            r.p.to_string(),
            r.rho.to_string(),
            r.method.tag().to_string(),
            fmt_opt(r.mean_cos),
            fmt_opt(r.se_cos),
            r.failures.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
}

pub fn parse_csv(text: &str) -> Result<Vec<TableRow>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::InvalidDataset(format!("table header: {e}")))?
        .clone();
    if headers.iter().ne(CSV_HEADER) {
        return Err(Error::InvalidDataset(format!(
            "unexpected table header {:?}",
            headers.iter().collect::<Vec<_>>()
        )));
    }
    let mut rows = Vec::new();
    for (k, rec) in reader.records().enumerate() {
        let line = k + 2;
        let rec = rec.map_err(|e| Error::InvalidDataset(format!("line {line}: {e}")))?;
        let field = |i: usize| rec.get(i).unwrap_or("");
        let bad = |col: &str, v: &str| Error::InvalidDataset(format!("line {line}, column {col}: cannot parse {v:?}"));
        let num = |i: usize| -> Result<f64> { field(i).parse().map_err(|_| bad(CSV_HEADER[i], field(i))) };
        let int = |i: usize| -> Result<usize> { field(i).parse().map_err(|_| bad(CSV_HEADER[i], field(i))) };
        let opt = |i: usize| -> Result<Option<f64>> {
            if field(i) == "NA" {
                Ok(None)
            } else {
                num(i).map(Some)
            }
        };
        rows.push(TableRow {
            case: Case::from_name(field(0)).ok_or_else(|| bad("case", field(0)))?,
            n: int(1)?,
            p: int(2)?,
            rho: num(3)?,
            method: Method::from_tag(field(4)).ok_or_else(|| bad("method", field(4)))?,
            mean_cos: opt(5)?,
            se_cos: opt(6)?,
            failures: int(7)?,
        });
    }
    Ok(rows)
}

fn fmt4(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| format!("{x:.4}"))
}

/// Renders rows as an aligned markdown table.
pub(crate) fn write_markdown(rows: &[TableRow], meta: Option<&TableMetadata>) -> String {
    let header = ["case", "n", "p", "rho", "method", "cos", "SE", "failures"];
    let body: Vec<[String; 8]> = rows
        .iter()
        .map(|r| {
            [
                r.case.name().to_string(),
                r.n.to_string(),
                r.p.to_string(),
                format!("{:.1}", r.rho),
                r.method.label().to_string(),
                fmt4(r.mean_cos),
                fmt4(r.se_cos),
                r.failures.to_string(),
            ]
        })
        .collect();
    let mut out = String::new();
    if let Some(m) = meta {
        out.push_str(&format!(
            "<!-- dirset {} | seed {} | generated at unix time {} -->\n\n",
            m.version, m.seed, m.timestamp
        ));
    }
    out.push_str(&render_markdown(&header, &body));
    out
}

pub(crate) fn render_markdown<const N: usize>(header: &[&str; N], body: &[[String; N]]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in body {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: Vec<String>| -> String {
        let padded: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, &w)| format!("{c:>w$}"))
            .collect();
        format!("| {} |\n", padded.join(" | "))
    };
    let mut out = line(header.iter().map(|h| h.to_string()).collect());
    out.push_str(&format!(
        "|{}|\n",
        widths.iter().map(|&w| format!("{}:", "-".repeat(w + 1))).collect::<Vec<_>>().join("|")
    ));
    for row in body {
        out.push_str(&line(row.to_vec()));
    }
    out
}
