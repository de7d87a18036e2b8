//! Dataset ingestion from delimited text and the Pearson correlation matrix
//! that serves as the sufficient statistic for all Gaussian CI tests.

use std::fmt::Write as _;
use std::fs::File;
use std::io::Read;
use std::path::Path;

use thiserror::Error;

#[derive(Error, Debug)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error("row {row} has {found} fields, expected {expected}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("value {value:?} at row {row}, column {column:?} is not a finite number")]
    BadCell {
        row: usize,
        column: String,
        value: String,
    },
    #[error("duplicate column name {name:?}")]
    DuplicateName { name: String },
    #[error("empty column name at position {index}")]
    EmptyName { index: usize },
    #[error("need at least 2 samples, got {n}")]
    TooFewSamples { n: usize },
    #[error("need at least 2 variables, got {p}")]
    TooFewVariables { p: usize },
    #[error("column {name:?} has zero sample variance")]
    ZeroVariance { name: String },
    #[error("correlation matrix violates {0}")]
    InvalidCorrelation(&'static str),
}

/// Samples-by-variables numeric matrix with named columns. Immutable after
/// construction; columns are stored contiguously.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    names: Vec<String>,
    /// Column-major, length n * p.
    values: Vec<f64>,
    n: usize,
    p: usize,
}

impl Dataset {
    /// Builds a dataset from columns, enforcing the type invariants:
    /// distinct non-empty names, all cells finite, n >= 2, p >= 2.
    pub fn from_columns(names: Vec<String>, columns: Vec<Vec<f64>>) -> Result<Self, DataError> {
        let p = names.len();
        if p < 2 {
            return Err(DataError::TooFewVariables { p });
        }
        assert_eq!(columns.len(), p, "one column per name");
        let n = columns[0].len();
        if n < 2 {
            return Err(DataError::TooFewSamples { n });
        }
        check_names(&names)?;
        let mut values = Vec::with_capacity(n * p);
        for (j, col) in columns.iter().enumerate() {
            assert_eq!(col.len(), n, "columns must share one length");
            for (i, &v) in col.iter().enumerate() {
                if !v.is_finite() {
                    return Err(DataError::BadCell {
                        row: i + 1,
                        column: names[j].clone(),
                        value: v.to_string(),
                    });
                }
                values.push(v);
            }
        }
        Ok(Dataset {
            names,
            values,
            n,
            p,
        })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.values[j * self.n..(j + 1) * self.n]
    }

    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.values[col * self.n + row]
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// New dataset whose column `j` is this dataset's column `perm[j]`.
    pub fn with_permuted_columns(&self, perm: &[usize]) -> Dataset {
        assert_eq!(perm.len(), self.p);
        let names = perm.iter().map(|&j| self.names[j].clone()).collect();
        let columns = perm.iter().map(|&j| self.column(j).to_vec()).collect();
        Dataset::from_columns(names, columns).expect("permutation preserves invariants")
    }

    /// Columns standardized to zero mean and unit sample variance.
    pub fn zscored(&self) -> Result<Dataset, DataError> {
        let mut columns = Vec::with_capacity(self.p);
        for j in 0..self.p {
            let col = self.column(j);
            let mean = col.iter().sum::<f64>() / self.n as f64;
            let ss: f64 = col.iter().map(|&v| (v - mean) * (v - mean)).sum();
            let sd = (ss / (self.n - 1) as f64).sqrt();
            if sd == 0.0 {
                return Err(DataError::ZeroVariance {
                    name: self.names[j].clone(),
                });
            }
            columns.push(col.iter().map(|&v| (v - mean) / sd).collect());
        }
        Dataset::from_columns(self.names.clone(), columns)
    }

    /// Renders the dataset back to delimited text with a header row.
    pub fn to_delimited(&self, delimiter: char) -> String {
        let mut out = String::new();
        out.push_str(&self.names.join(&delimiter.to_string()));
        out.push('\n');
        for i in 0..self.n {
            for j in 0..self.p {
                if j > 0 {
                    out.push(delimiter);
                }
                let _ = write!(out, "{}", self.value(i, j));
            }
            out.push('\n');
        }
        out
    }
}

fn check_names(names: &[String]) -> Result<(), DataError> {
    for (i, name) in names.iter().enumerate() {
        if name.is_empty() {
            return Err(DataError::EmptyName { index: i + 1 });
        }
        if names[..i].contains(name) {
            return Err(DataError::DuplicateName { name: name.clone() });
        }
    }
    Ok(())
}

/// Reads a delimited numeric matrix (rows = samples, columns = variables)
/// from `path`. Column order is preserved exactly as on disk. Without a
/// header row the columns are named `V1..Vp`.
pub fn load_dataset(
    path: impl AsRef<Path>,
    delimiter: char,
    has_header: bool,
) -> Result<Dataset, DataError> {
    let path = path.as_ref();
    let mut text = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|source| DataError::Io {
            path: path.display().to_string(),
            source,
        })?;
    parse_dataset(&text, delimiter, has_header)
}

/// Parses delimited text into a dataset; see [`load_dataset`].
pub fn parse_dataset(text: &str, delimiter: char, has_header: bool) -> Result<Dataset, DataError> {
    let mut delim_buf = [0u8; 1];
    assert!(
        delimiter.is_ascii(),
        "delimiter must be a single-byte character"
    );
    delimiter.encode_utf8(&mut delim_buf);

    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delim_buf[0])
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());

    let mut records = reader.records();
    let names: Vec<String>;
    let mut first_data: Option<csv::StringRecord> = None;
    let first = records
        .next()
        .ok_or_else(|| DataError::Malformed("input is empty".into()))?
        .map_err(csv_error)?;
    if has_header {
        names = first.iter().map(str::to_string).collect();
        check_names(&names)?;
    } else {
        names = (1..=first.len()).map(|j| format!("V{j}")).collect();
        first_data = Some(first);
    }
    let p = names.len();
    if p < 2 {
        return Err(DataError::TooFewVariables { p });
    }

    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); p];
    let mut row = 0usize;
    let mut push_record = |record: csv::StringRecord, row: usize| -> Result<(), DataError> {
        if record.len() != p {
            return Err(DataError::RaggedRow {
                row,
                expected: p,
                found: record.len(),
            });
        }
        for (j, field) in record.iter().enumerate() {
            let parsed = field.trim().parse::<f64>();
            match parsed {
                Ok(v) if v.is_finite() => columns[j].push(v),
                _ => {
                    return Err(DataError::BadCell {
                        row,
                        column: names[j].clone(),
                        value: field.to_string(),
                    })
                }
            }
        }
        Ok(())
    };

    if let Some(record) = first_data {
        row += 1;
        push_record(record, row)?;
    }
    for record in records {
        row += 1;
        push_record(record.map_err(csv_error)?, row)?;
    }
    Dataset::from_columns(names, columns)
}

fn csv_error(e: csv::Error) -> DataError {
    DataError::Malformed(e.to_string())
}

/// Immutable p-by-p Pearson correlation matrix plus the sample count it was
/// computed from. Safe to share read-only across workers.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    p: usize,
    n: usize,
    r: Vec<f64>,
}

impl CorrelationMatrix {
    /// Wraps a raw row-major matrix, validating symmetry, unit diagonal and
    /// the [-1, 1] range.
    pub fn new(r: Vec<f64>, p: usize, n: usize) -> Result<Self, DataError> {
        assert_eq!(r.len(), p * p);
        for i in 0..p {
            if r[i * p + i] != 1.0 {
                return Err(DataError::InvalidCorrelation("unit diagonal"));
            }
            for j in 0..p {
                let v = r[i * p + j];
                if !v.is_finite() || v.abs() > 1.0 {
                    return Err(DataError::InvalidCorrelation("entries in [-1, 1]"));
                }
                if v != r[j * p + i] {
                    return Err(DataError::InvalidCorrelation("symmetry"));
                }
            }
        }
        Ok(CorrelationMatrix { p, n, r })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn r(&self, i: usize, j: usize) -> f64 {
        self.r[i * self.p + j]
    }
}

/// Pearson correlation of every column pair, computed once in double
/// precision; CI tests never touch the raw data afterwards.
pub fn correlations(d: &Dataset) -> Result<CorrelationMatrix, DataError> {
    let (n, p) = (d.n(), d.p());
    let nf = n as f64;
    let mut centered: Vec<Vec<f64>> = Vec::with_capacity(p);
    let mut norms = Vec::with_capacity(p);
    for j in 0..p {
        let col = d.column(j);
        let mean = col.iter().sum::<f64>() / nf;
        let c: Vec<f64> = col.iter().map(|&v| v - mean).collect();
        let ss: f64 = c.iter().map(|&v| v * v).sum();
        let scale = col.iter().fold(0.0f64, |m, &v| m.max(v.abs())).max(1e-300);
        if ss <= nf * (f64::EPSILON * scale).powi(2) {
            return Err(DataError::ZeroVariance {
                name: d.names()[j].clone(),
            });
        }
        centered.push(c);
        norms.push(ss.sqrt());
    }
    let mut r = vec![0.0; p * p];
    for i in 0..p {
        r[i * p + i] = 1.0;
        for j in i + 1..p {
            let dot: f64 = centered[i]
                .iter()
                .zip(&centered[j])
                .map(|(&a, &b)| a * b)
                .sum();
            let v = (dot / (norms[i] * norms[j])).clamp(-1.0, 1.0);
            r[i * p + j] = v;
            r[j * p + i] = v;
        }
    }
    CorrelationMatrix::new(r, p, n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_csv_with_header() {
        let d = parse_dataset("a,b\n1,2\n2,4\n3,6\n", ',', true).unwrap();
        assert_eq!(d.names(), &["a".to_string(), "b".to_string()]);
        assert_eq!(d.n(), 3);
        assert_eq!(d.p(), 2);
        assert_eq!(d.column(1), &[2.0, 4.0, 6.0]);
    }

    #[test]
    fn headerless_columns_get_default_names() {
        let d = parse_dataset("1 2\n3 4\n", ' ', false).unwrap();
        assert_eq!(d.names(), &["V1".to_string(), "V2".to_string()]);
        assert_eq!(d.n(), 2);
    }

    #[test]
    fn nan_cell_is_rejected_with_location() {
        let err = parse_dataset("a,b\n1,2\n2,NaN\n3,6\n", ',', true).unwrap_err();
        match err {
            DataError::BadCell { row, column, value } => {
                assert_eq!(row, 2);
                assert_eq!(column, "b");
                assert_eq!(value, "NaN");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn infinity_and_garbage_cells_are_rejected() {
        assert!(matches!(
            parse_dataset("a,b\n1,inf\n2,3\n", ',', true),
            Err(DataError::BadCell { row: 1, .. })
        ));
        assert!(matches!(
            parse_dataset("a,b\n1,zz\n2,3\n", ',', true),
            Err(DataError::BadCell { row: 1, .. })
        ));
    }

    #[test]
    fn ragged_row_is_rejected() {
        let err = parse_dataset("a,b\n1,2\n3\n", ',', true).unwrap_err();
        assert!(matches!(
            err,
            DataError::RaggedRow {
                row: 2,
                expected: 2,
                found: 1
            }
        ));
    }

    #[test]
    fn duplicate_header_names_are_rejected() {
        assert!(matches!(
            parse_dataset("a,a\n1,2\n3,4\n", ',', true),
            Err(DataError::DuplicateName { .. })
        ));
    }

    #[test]
    fn crlf_input_parses() {
        let d = parse_dataset("a,b\r\n1,2\r\n3,4\r\n", ',', true).unwrap();
        assert_eq!(d.n(), 2);
        assert_eq!(d.value(1, 1), 4.0);
    }

    #[test]
    fn size_floors_are_enforced() {
        assert!(matches!(
            parse_dataset("a,b\n1,2\n", ',', true),
            Err(DataError::TooFewSamples { n: 1 })
        ));
        assert!(matches!(
            parse_dataset("a\n1\n2\n", ',', true),
            Err(DataError::TooFewVariables { p: 1 })
        ));
    }

    #[test]
    fn perfect_linear_dependence_gives_unit_correlation() {
        let d = Dataset::from_columns(
            vec!["a".into(), "b".into()],
            vec![vec![1.0, 2.0, 3.0], vec![2.0, 4.0, 6.0]],
        )
        .unwrap();
        let c = correlations(&d).unwrap();
        assert!((c.r(0, 1) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn negated_column_gives_minus_one() {
        let d = Dataset::from_columns(
            vec!["a".into(), "b".into()],
            vec![vec![1.0, -2.0, 3.5], vec![-1.0, 2.0, -3.5]],
        )
        .unwrap();
        let c = correlations(&d).unwrap();
        assert!((c.r(0, 1) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_variance_column_is_named() {
        let d = Dataset::from_columns(
            vec!["a".into(), "flat".into()],
            vec![vec![1.0, 2.0, 3.0], vec![5.0, 5.0, 5.0]],
        )
        .unwrap();
        match correlations(&d).unwrap_err() {
            DataError::ZeroVariance { name } => assert_eq!(name, "flat"),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn correlation_matrix_validation() {
        assert!(CorrelationMatrix::new(vec![1.0, 0.5, 0.5, 1.0], 2, 10).is_ok());
        assert!(CorrelationMatrix::new(vec![1.0, 0.5, 0.4, 1.0], 2, 10).is_err());
        assert!(CorrelationMatrix::new(vec![0.9, 0.5, 0.5, 1.0], 2, 10).is_err());
        assert!(CorrelationMatrix::new(vec![1.0, 1.5, 1.5, 1.0], 2, 10).is_err());
    }
}
