//! Columnar numeric datasets.
//!
//! A [`Dataset`] is an immutable, ordered set of named `f64` columns of equal
//! length. Binary variables are stored as 0/1. Row subsets are materialized
//! copies, so a subset never aliases its parent.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use indexmap::IndexMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TabularError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("no rows")]
    NoRows,
    #[error("ragged row {row}: expected {expected} fields, found {found}")]
    Ragged {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("cannot parse {value:?} as a finite number at row {row}, column {column:?}")]
    Parse {
        row: usize,
        column: String,
        value: String,
    },
    #[error("unknown column {name:?}; available columns: {}", available.join(", "))]
    UnknownColumn { name: String, available: Vec<String> },
    #[error("row index {index} out of range for dataset with {n_rows} rows")]
    RowOutOfRange { index: usize, n_rows: usize },
    #[error("duplicate column name {0:?}")]
    DuplicateColumn(String),
    #[error("column names must be non-empty")]
    EmptyColumnName,
    #[error("column {name:?} has {len} entries, expected {n_rows}")]
    LengthMismatch {
        name: String,
        len: usize,
        n_rows: usize,
    },
}

/// Immutable columnar table of numeric data.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    columns: IndexMap<String, Vec<f64>>,
    n_rows: usize,
}

impl Dataset {
    /// Builds a dataset from `(name, values)` pairs, in order.
    pub fn from_columns<I, S>(columns: I) -> Result<Self, TabularError>
    where
        I: IntoIterator<Item = (S, Vec<f64>)>,
        S: Into<String>,
    {
        let mut map = IndexMap::new();
        let mut n_rows = None;
        for (name, values) in columns {
            let name = name.into();
            if name.is_empty() {
                return Err(TabularError::EmptyColumnName);
            }
            let expected = *n_rows.get_or_insert(values.len());
            if values.len() != expected {
                return Err(TabularError::LengthMismatch {
                    name,
                    len: values.len(),
                    n_rows: expected,
                });
            }
            if map.contains_key(&name) {
                return Err(TabularError::DuplicateColumn(name));
            }
            map.insert(name, values);
        }
        Ok(Self {
            columns: map,
            n_rows: n_rows.unwrap_or(0),
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn column_names(&self) -> impl Iterator<Item = &str> {
        self.columns.keys().map(String::as_str)
    }

    pub fn has_column(&self, name: &str) -> bool {
        self.columns.contains_key(name)
    }

    pub fn column(&self, name: &str) -> Result<&[f64], TabularError> {
        self.columns
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| TabularError::UnknownColumn {
                name: name.to_string(),
                available: self.columns.keys().cloned().collect(),
            })
    }

    /// Rows `idx`, in `idx` order. Duplicated indices are allowed.
    pub fn select_rows(&self, idx: &[usize]) -> Result<Self, TabularError> {
        if let Some(&bad) = idx.iter().find(|&&i| i >= self.n_rows) {
            return Err(TabularError::RowOutOfRange {
                index: bad,
                n_rows: self.n_rows,
            });
        }
        let columns = self
            .columns
            .iter()
            .map(|(name, values)| (name.clone(), idx.iter().map(|&i| values[i]).collect()))
            .collect();
        Ok(Self {
            columns,
            n_rows: idx.len(),
        })
    }

    /// Returns a copy with `name` appended, or replaced in place if it exists.
    pub fn with_column(&self, name: &str, values: Vec<f64>) -> Result<Self, TabularError> {
        if name.is_empty() {
            return Err(TabularError::EmptyColumnName);
        }
        if values.len() != self.n_rows && !(self.columns.is_empty() && self.n_rows == 0) {
            return Err(TabularError::LengthMismatch {
                name: name.to_string(),
                len: values.len(),
                n_rows: self.n_rows,
            });
        }
        let mut out = self.clone();
        out.n_rows = values.len();
        out.columns.insert(name.to_string(), values);
        Ok(out)
    }

    /// Values of row `i`, in column order.
    pub fn row(&self, i: usize) -> Result<Vec<f64>, TabularError> {
        if i >= self.n_rows {
            return Err(TabularError::RowOutOfRange {
                index: i,
                n_rows: self.n_rows,
            });
        }
        Ok(self.columns.values().map(|c| c[i]).collect())
    }
}

/// Reads a comma-separated file of finite numbers.
///
/// Without a header, columns are named `V1`, `V2`, ... . Row numbers in
/// errors are 1-based and count data rows only.
pub fn read_csv(path: impl AsRef<Path>, header: bool) -> Result<Dataset, TabularError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| TabularError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_csv_from(file, header)
}

pub fn read_csv_from<R: Read>(reader: R, header: bool) -> Result<Dataset, TabularError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut records = rdr.records();

    let names: Vec<String>;
    let mut columns: Vec<Vec<f64>>;
    let mut row = 0usize;

    let first = match records.next() {
        Some(r) => r?,
        None => return Err(TabularError::NoRows),
    };
    if header {
        names = first.iter().map(str::to_string).collect();
        columns = vec![Vec::new(); names.len()];
    } else {
        names = (1..=first.len()).map(|i| format!("V{i}")).collect();
        columns = vec![Vec::new(); names.len()];
        row += 1;
        push_record(&first, row, &names, &mut columns)?;
    }
    for record in records {
        let record = record?;
        row += 1;
        push_record(&record, row, &names, &mut columns)?;
    }
    if row == 0 {
        return Err(TabularError::NoRows);
    }
    Dataset::from_columns(names.into_iter().zip(columns))
}

fn push_record(
    record: &csv::StringRecord,
    row: usize,
    names: &[String],
    columns: &mut [Vec<f64>],
) -> Result<(), TabularError> {
    if record.len() != names.len() {
        return Err(TabularError::Ragged {
            row,
            expected: names.len(),
            found: record.len(),
        });
    }
    for ((cell, name), col) in record.iter().zip(names).zip(columns.iter_mut()) {
        let value = cell
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| TabularError::Parse {
                row,
                column: name.clone(),
                value: cell.to_string(),
            })?;
        col.push(value);
    }
    Ok(())
}

/// Writes the dataset with a header row. Floats use the shortest
/// representation that parses back to the same value.
pub fn write_csv<W: Write>(data: &Dataset, writer: W) -> Result<(), TabularError> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(data.column_names())?;
    for i in 0..data.n_rows() {
        wtr.write_record(data.columns.values().map(|c| c[i].to_string()))?;
    }
    wtr.flush().map_err(|source| TabularError::Io {
        path: "<writer>".into(),
        source,
    })?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn small() -> Dataset {
        read_csv_from("y,d\n1,0\n2,1\n3,0".as_bytes(), true).unwrap()
    }

    #[test]
    fn parses_header_csv() {
        let d = small();
        assert_eq!(d.n_rows(), 3);
        assert_eq!(d.column("y").unwrap(), &[1.0, 2.0, 3.0]);
        assert_eq!(d.column("d").unwrap(), &[0.0, 1.0, 0.0]);
        assert_eq!(d.column_names().collect::<Vec<_>>(), ["y", "d"]);
    }

    #[test]
    fn headerless_names() {
        let d = read_csv_from("1,2\n3,4\n".as_bytes(), false).unwrap();
        assert_eq!(d.column("V2").unwrap(), &[2.0, 4.0]);
    }

    #[test]
    fn empty_file_has_no_rows() {
        assert!(matches!(read_csv_from("".as_bytes(), true), Err(TabularError::NoRows)));
        assert!(matches!(read_csv_from("y,d\n".as_bytes(), true), Err(TabularError::NoRows)));
    }

    #[test]
    fn bad_cell_names_row() {
        let err = read_csv_from("y,d\n1,0\nabc,1\n".as_bytes(), true).unwrap_err();
        match &err {
            TabularError::Parse { row, column, value } => {
                assert_eq!((*row, column.as_str(), value.as_str()), (2, "y", "abc"));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(err.to_string().contains("row 2"));
    }

    #[test]
    fn ragged_and_missing() {
        assert!(matches!(
            read_csv_from("y,d\n1\n".as_bytes(), true),
            Err(TabularError::Ragged { row: 1, .. })
        ));
        assert!(matches!(
            read_csv_from("y,d\n1,\n".as_bytes(), true),
            Err(TabularError::Parse { .. })
        ));
        assert!(matches!(
            read_csv("/nonexistent/file.csv", true),
            Err(TabularError::Io { .. })
        ));
    }

    #[test]
    fn select_rows_cases() {
        let d = small();
        let sub = d.select_rows(&[0, 2]).unwrap();
        assert_eq!(sub.column("y").unwrap(), &[1.0, 3.0]);
        assert_eq!(d.select_rows(&[0, 1, 2]).unwrap(), d);
        let empty = d.select_rows(&[]).unwrap();
        assert_eq!(empty.n_rows(), 0);
        assert_eq!(empty.column_names().collect::<Vec<_>>(), ["y", "d"]);
        assert!(empty.column("d").unwrap().is_empty());
        assert!(matches!(
            d.select_rows(&[3]),
            Err(TabularError::RowOutOfRange { index: 3, n_rows: 3 })
        ));
    }

    #[test]
    fn unknown_column_lists_names() {
        let msg = small().column("z").unwrap_err().to_string();
        assert!(msg.contains("\"z\"") && msg.contains("y, d"), "{msg}");
    }

    #[test]
    fn construction_invariants() {
        assert!(matches!(
            Dataset::from_columns([("a", vec![1.0]), ("a", vec![2.0])]),
            Err(TabularError::DuplicateColumn(_))
        ));
        assert!(matches!(
            Dataset::from_columns([("a", vec![1.0]), ("b", vec![])]),
            Err(TabularError::LengthMismatch { .. })
        ));
        assert!(matches!(
            Dataset::from_columns([("", vec![1.0])]),
            Err(TabularError::EmptyColumnName)
        ));
    }

    proptest! {
        #[test]
        fn select_rows_composes(
            n in 1usize..20,
            a in proptest::collection::vec(0usize..1000, 0..30),
            b in proptest::collection::vec(0usize..1000, 0..30),
        ) {
            let d = Dataset::from_columns([
                ("x", (0..n).map(|i| i as f64).collect::<Vec<_>>()),
                ("z", (0..n).map(|i| (i * i) as f64 + 0.5).collect()),
            ]).unwrap();
            let a: Vec<usize> = a.into_iter().map(|i| i % n).collect();
            if a.is_empty() { return Ok(()); }
            let b: Vec<usize> = b.into_iter().map(|i| i % a.len()).collect();
            let composed: Vec<usize> = b.iter().map(|&j| a[j]).collect();
            let lhs = d.select_rows(&a).unwrap().select_rows(&b).unwrap();
            prop_assert_eq!(lhs, d.select_rows(&composed).unwrap());
        }

        #[test]
        fn csv_round_trip(values in proptest::collection::vec(
            (-1e12f64..1e12, proptest::num::f64::NORMAL), 1..20)) {
            let d = Dataset::from_columns([
                ("a", values.iter().map(|v| v.0).collect::<Vec<_>>()),
                ("b", values.iter().map(|v| v.1).collect()),
            ]).unwrap();
            let mut buf = Vec::new();
            write_csv(&d, &mut buf).unwrap();
            let back = read_csv_from(buf.as_slice(), true).unwrap();
            prop_assert_eq!(back, d);
        }
    }
}
