//! Input data: the response-bearing [`Dataset`], evaluated [`FeatureMatrix`]
//! values and CSV ingestion.

use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};
use crate::expr::Expression;
use crate::types::RankPermutation;

/// An `N x d` design with a strictly tie-free response.
///
/// Columns are stored contiguously since every consumer (split search,
/// rank statistics) scans one column at a time.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    columns: Vec<Vec<f64>>,
    y: Vec<f64>,
    column_names: Vec<String>,
}

impl Dataset {
    /// Builds a dataset from row-major inputs.
    ///
    /// An empty `names` slice yields the default names `x1, x2, ...`.
    pub fn from_rows(rows: &[Vec<f64>], y: Vec<f64>, names: &[String]) -> Result<Self> {
        if rows.len() != y.len() {
            return Err(Error::DimensionMismatch(format!("{} rows but {} responses", rows.len(), y.len())));
        }
        let d = rows.first().map_or(0, Vec::len);
        let mut columns = vec![Vec::with_capacity(rows.len()); d];
        for (i, row) in rows.iter().enumerate() {
            if row.len() != d {
                return Err(Error::DimensionMismatch(format!("row {i} has {} columns, expected {d}", row.len())));
            }
            for (col, &v) in columns.iter_mut().zip(row) {
                col.push(v);
            }
        }
        Self::from_columns(columns, y, names)
    }

    /// Builds a dataset from column-major inputs.
    pub fn from_columns(columns: Vec<Vec<f64>>, y: Vec<f64>, names: &[String]) -> Result<Self> {
        let n = y.len();
        if n == 0 {
            return Err(Error::DimensionMismatch("no rows".into()));
        }
        if columns.is_empty() {
            return Err(Error::DimensionMismatch("no input columns".into()));
        }
        for (k, col) in columns.iter().enumerate() {
            if col.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "column {k} has {} rows but there are {n} responses",
                    col.len()
                )));
            }
            if let Some(row) = col.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite { row, column: k });
            }
        }
        if let Some(row) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row, column: columns.len() });
        }
        check_no_ties(&y)?;
        let column_names = if names.is_empty() {
            (1..=columns.len()).map(|k| format!("x{k}")).collect()
        } else if names.len() == columns.len() {
            names.to_vec()
        } else {
            return Err(Error::DimensionMismatch(format!("{} names for {} columns", names.len(), columns.len())));
        };
        Ok(Self { columns, y, column_names })
    }

    pub fn n_rows(&self) -> usize {
        self.y.len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn column(&self, k: usize) -> &[f64] {
        &self.columns[k]
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[i]).collect()
    }

    /// Restricts the dataset to the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        let columns = self.columns.iter().map(|c| rows.iter().map(|&i| c[i]).collect()).collect();
        let y = rows.iter().map(|&i| self.y[i]).collect();
        Self::from_columns(columns, y, &self.column_names)
    }

    /// The permutation listing rows by ascending response.
    pub fn sort_by_response(&self) -> RankPermutation {
        sort_by_response(&self.y)
    }
}

/// Orders indices so that `y[order[0]] < y[order[1]] < ...`.
pub fn sort_by_response(y: &[f64]) -> RankPermutation {
    let mut order: Vec<usize> = (0..y.len()).collect();
    order.sort_by(|&a, &b| y[a].total_cmp(&y[b]).then(a.cmp(&b)));
    RankPermutation::from_order_unchecked(order)
}

/// Rejects exact ties; reports the first tied pair in sorted order.
pub(crate) fn check_no_ties(y: &[f64]) -> Result<()> {
    let order = sort_by_response(y);
    for w in order.as_slice().windows(2) {
        if y[w[0]] == y[w[1]] {
            let (first, second) = (w[0].min(w[1]), w[0].max(w[1]));
            return Err(Error::TiesInResponse { first, second, value: y[first] });
        }
    }
    Ok(())
}

/// `N x q` evaluated symbolic features, one expression per column.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    columns: Vec<Vec<f64>>,
    exprs: Vec<Expression>,
}

impl FeatureMatrix {
    /// Evaluates every expression row-wise on the dataset inputs.
    ///
    /// Fails if an expression references a missing column.
    pub fn evaluate(ds: &Dataset, exprs: Vec<Expression>) -> Result<Self> {
        if exprs.is_empty() {
            return Err(Error::NoFeatures);
        }
        let mut columns = Vec::with_capacity(exprs.len());
        for e in &exprs {
            e.check_arity(ds.n_cols())?;
            columns.push(e.eval_columns(ds.columns()));
        }
        Ok(Self { columns, exprs })
    }

    /// Wraps already evaluated columns. Lengths must agree.
    pub fn from_parts(columns: Vec<Vec<f64>>, exprs: Vec<Expression>) -> Result<Self> {
        if columns.is_empty() || columns.len() != exprs.len() {
            return Err(Error::DimensionMismatch(format!("{} columns for {} expressions", columns.len(), exprs.len())));
        }
        let n = columns[0].len();
        if columns.iter().any(|c| c.len() != n) {
            return Err(Error::DimensionMismatch("ragged feature columns".into()));
        }
        Ok(Self { columns, exprs })
    }

    pub fn n_rows(&self) -> usize {
        self.columns[0].len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j]
    }

    pub fn exprs(&self) -> &[Expression] {
        &self.exprs
    }

    /// Canonical expression strings, usable as CSV headers.
    pub fn names(&self) -> Vec<String> {
        self.exprs.iter().map(ToString::to_string).collect()
    }
}

/// Reads a CSV with a header row, taking `response` as `y` and every other
/// column as an input.
pub fn read_csv<P: AsRef<Path>>(path: P, response: &str) -> Result<Dataset> {
    let file =
        std::fs::File::open(path.as_ref()).map_err(|e| Error::Csv(format!("{}: {e}", path.as_ref().display())))?;
    read_csv_from(file, response)
}

pub fn read_csv_from<R: Read>(reader: R, response: &str) -> Result<Dataset> {
    let table = read_table(reader)?;
    let y_idx = table.column_index(response)?;
    let mut names = Vec::new();
    let mut columns = Vec::new();
    for (k, name) in table.headers.iter().enumerate() {
        if k != y_idx {
            names.push(name.clone());
            columns.push(table.columns[k].clone());
        }
    }
    let y = table.columns[y_idx].clone();
    Dataset::from_columns(columns, y, &names)
}

/// A numeric CSV table held column-major.
#[derive(Debug, Clone)]
pub struct Table {
    pub headers: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl Table {
    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.headers.iter().position(|h| h == name).ok_or_else(|| Error::Csv(format!("no column named {name:?}")))
    }
}

/// Parses a headered, all-numeric CSV. Diagnostics carry 1-based line numbers.
pub fn read_table<R: Read>(reader: R) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let headers: Vec<String> =
        rdr.headers().map_err(|e| Error::Csv(e.to_string()))?.iter().map(str::to_owned).collect();
    if headers.is_empty() {
        return Err(Error::Csv("empty header".into()));
    }
    let mut columns = vec![Vec::new(); headers.len()];
    for (i, record) in rdr.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| Error::Csv(format!("row {line}: {e}")))?;
        if record.len() != headers.len() {
            return Err(Error::Csv(format!("row {line}: expected {} fields, found {}", headers.len(), record.len())));
        }
        for (k, field) in record.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                Error::Csv(format!("row {line}: field {:?} in column {:?} is not a number", field, headers[k]))
            })?;
            columns[k].push(v);
        }
    }
    Ok(Table { headers, columns })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_dataset() {
        let ds = Dataset::from_rows(&[vec![1.0], vec![2.0]], vec![3.0, 4.0], &[]).unwrap();
        assert_eq!((ds.n_rows(), ds.n_cols()), (2, 1));
        assert_eq!(ds.column_names(), ["x1"]);
    }

    #[test]
    fn ties_rejected() {
        let err = Dataset::from_rows(&[vec![1.0], vec![2.0]], vec![3.0, 3.0], &[]).unwrap_err();
        assert!(matches!(err, Error::TiesInResponse { first: 0, second: 1, .. }));
    }

    #[test]
    fn row_count_mismatch() {
        let err = Dataset::from_rows(&[vec![1.0, 2.0]], vec![1.0, 5.0], &[]).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch(_)));
    }

    #[test]
    fn non_finite_rejected() {
        let err = Dataset::from_rows(&[vec![f64::NAN], vec![2.0]], vec![1.0, 5.0], &[]).unwrap_err();
        assert_eq!(err, Error::NonFinite { row: 0, column: 0 });
    }

    #[test]
    fn sorted_order() {
        assert_eq!(sort_by_response(&[5.0, 2.1, 1.0, 2.0, 4.0]).as_slice(), [2, 3, 1, 4, 0]);
        assert_eq!(sort_by_response(&[1.0, 2.0, 3.0]).as_slice(), [0, 1, 2]);
        assert_eq!(sort_by_response(&[3.0, 1.0, 2.0]).as_slice(), [1, 2, 0]);
    }

    #[test]
    fn csv_roundtrip() {
        let text = "a, y, b\n1, 10, 0.5\n2, 20, 0.25\n";
        let ds = read_csv_from(text.as_bytes(), "y").unwrap();
        assert_eq!(ds.column_names(), ["a", "b"]);
        assert_eq!(ds.y(), [10.0, 20.0]);
        assert_eq!(ds.column(1), [0.5, 0.25]);
    }

    #[test]
    fn csv_bad_field_names_row() {
        let text = "a,y\n1,2\n3,oops\n";
        let err = read_csv_from(text.as_bytes(), "y").unwrap_err();
        match err {
            Error::Csv(msg) => assert!(msg.contains("row 3"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn csv_missing_response() {
        assert!(matches!(read_csv_from("a,b\n1,2\n".as_bytes(), "y"), Err(Error::Csv(_))));
    }
}
