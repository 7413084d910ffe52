//! Loading an estimation dataset from a CSV file.

use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};

use super::CliError;
use crate::estimator::Dataset;

/// Which columns of which file make up the dataset.
#[derive(Debug, Clone)]
pub struct CsvDataset {
    pub path: PathBuf,
    pub response_column: String,
    /// Empty means every column other than the response.
    pub covariate_columns: Vec<String>,
    pub header: bool,
}

/// A parsed dataset together with the covariate names in column order.
#[derive(Debug, Clone)]
pub struct LoadedData {
    pub data: Dataset,
    pub covariates: Vec<String>,
}

impl CsvDataset {
    pub fn load(&self) -> Result<LoadedData, CliError> {
        let text = std::fs::read_to_string(&self.path)
            .map_err(|e| CliError::Input(format!("cannot read {}: {e}", self.path.display())))?;
        self.parse(&text, &self.path)
    }

    pub fn parse(&self, text: &str, origin: &Path) -> Result<LoadedData, CliError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(self.header)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());

        let records: Vec<csv::StringRecord> = reader
            .records()
            .collect::<Result<_, _>>()
            .map_err(|e| CliError::Input(format!("{}: malformed CSV: {e}", origin.display())))?;
        let names: Vec<String> = if self.header {
            reader
                .headers()
                .map_err(|e| CliError::Input(format!("{}: malformed header: {e}", origin.display())))?
                .iter()
                .map(str::to_string)
                .collect()
        } else {
            let width = records.first().map_or(0, |r| r.len());
            (1..=width).map(|k| format!("col{k}")).collect()
        };

        let find = |name: &str| {
            names.iter().position(|n| n == name).ok_or_else(|| CliError::Parse {
                row: None,
                column: name.to_string(),
                message: format!("column not found (available: {})", names.join(", ")),
            })
        };
        let response_idx = find(&self.response_column)?;
        let covariates: Vec<String> = if self.covariate_columns.is_empty() {
            names.iter().filter(|n| **n != self.response_column).cloned().collect()
        } else {
            self.covariate_columns.clone()
        };
        if covariates.is_empty() {
            return Err(CliError::Input("no covariate columns selected".into()));
        }
        if covariates.contains(&self.response_column) {
            return Err(CliError::Input(format!(
                "response column {:?} is also listed as a covariate",
                self.response_column
            )));
        }
        let cov_idx: Vec<usize> = covariates.iter().map(|c| find(c)).collect::<Result<_, _>>()?;

        let n = records.len();
        let p = cov_idx.len();
        let mut x = DMatrix::zeros(n, p);
        let mut y = DVector::zeros(n);
        for (r, rec) in records.iter().enumerate() {
            let value = |idx: usize| -> Result<f64, CliError> {
                let raw = rec.get(idx).unwrap_or("");
                match raw.parse::<f64>() {
                    Ok(v) if v.is_finite() => Ok(v),
                    _ => Err(CliError::Parse {
                        row: Some(r + 1),
                        column: names[idx].clone(),
                        message: format!("cannot parse {raw:?} as a finite number"),
                    }),
                }
            };
            y[r] = value(response_idx)?;
            for (j, &idx) in cov_idx.iter().enumerate() {
                x[(r, j)] = value(idx)?;
            }
        }
        let data = Dataset::new(x, y).map_err(CliError::from)?;
        Ok(LoadedData { data, covariates })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(response: &str, covariates: &[&str]) -> CsvDataset {
        CsvDataset {
            path: PathBuf::from("mem.csv"),
            response_column: response.into(),
            covariate_columns: covariates.iter().map(|s| s.to_string()).collect(),
            header: true,
        }
    }

    const TEXT: &str = "y,a,b\n1,1,0\n0,0,1\n0,-1,-1\n";

    #[test]
    fn loads_selected_columns() {
        let d = spec("y", &["b", "a"]).parse(TEXT, Path::new("mem.csv")).unwrap();
        assert_eq!(d.covariates, vec!["b", "a"]);
        assert_eq!(d.data.x()[(0, 1)], 1.0);
        assert_eq!(d.data.y()[0], 1.0);
        let all = spec("y", &[]).parse(TEXT, Path::new("mem.csv")).unwrap();
        assert_eq!(all.covariates, vec!["a", "b"]);
    }

    #[test]
    fn missing_column_is_named() {
        let err = spec("y", &["a", "zzz"]).parse(TEXT, Path::new("mem.csv")).unwrap_err();
        assert!(err.to_string().contains("zzz"), "{err}");
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn bad_value_reports_row_and_column() {
        let text = "y,a,b\n1,1,0\n0,oops,1\n0,-1,-1\n";
        let err = spec("y", &[]).parse(text, Path::new("mem.csv")).unwrap_err().to_string();
        assert!(err.contains("row 2") && err.contains("'a'") && err.contains("oops"), "{err}");
    }

    #[test]
    fn response_cannot_be_a_covariate() {
        assert!(spec("y", &["y", "a"]).parse(TEXT, Path::new("mem.csv")).is_err());
    }

    #[test]
    fn headerless_columns_are_numbered() {
        let mut s = spec("col1", &[]);
        s.header = false;
        let d = s.parse("1,1,0\n0,0,1\n0,-1,-1\n", Path::new("mem.csv")).unwrap();
        assert_eq!(d.covariates, vec!["col2", "col3"]);
        assert_eq!(d.data.n(), 3);
    }
}
