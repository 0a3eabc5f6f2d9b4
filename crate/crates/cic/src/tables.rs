//! Labeled square matrices (scores, truth) and flat pair tables.

use std::io::{Read, Write};
use std::path::Path;

use cic_core::Matrix;

use crate::io::{fmt_f64, DataError};

/// A square table with matching row and column labels. Missing cells
/// (empty or `NA`) read as NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledMatrix {
    pub names: Vec<String>,
    pub values: Matrix,
}

impl LabeledMatrix {
    pub fn new(names: Vec<String>, values: Matrix) -> Self {
        assert_eq!(values.shape(), (names.len(), names.len()));
        Self { names, values }
    }

    /// Off-diagonal entries as booleans (nonzero is true).
    pub fn to_bool(&self) -> Vec<Vec<bool>> {
        let n = self.names.len();
        (0..n)
            .map(|i| (0..n).map(|j| i != j && self.values[(i, j)] != 0.0 && !self.values[(i, j)].is_nan()).collect())
            .collect()
    }

    pub fn from_bool(names: Vec<String>, m: &[Vec<bool>]) -> Self {
        let n = names.len();
        let mut values = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                values[(i, j)] = if m[i][j] { 1.0 } else { 0.0 };
            }
        }
        Self { names, values }
    }
}

/// Writes `,name1,...` then `name_i,v_i1,...`. NaN cells (the diagonal of a
/// score table) are written empty.
pub fn write_matrix<W: Write>(m: &LabeledMatrix, out: W, integers: bool) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec![String::new()];
    header.extend(m.names.iter().cloned());
    w.write_record(&header)?;
    for (i, name) in m.names.iter().enumerate() {
        let mut rec = vec![name.clone()];
        for v in m.values.row(i) {
            rec.push(if v.is_nan() {
                String::new()
            } else if integers {
                format!("{}", *v as i64)
            } else {
                fmt_f64(*v)
            });
        }
        w.write_record(&rec)?;
    }
    w.flush()
}

pub fn save_matrix(m: &LabeledMatrix, path: &Path, integers: bool) -> Result<(), DataError> {
    let file = std::fs::File::create(path).map_err(|source| DataError::Io {
        path: path.to_owned(),
        source,
    })?;
    write_matrix(m, std::io::BufWriter::new(file), integers).map_err(|source| DataError::Io {
        path: path.to_owned(),
        source,
    })
}

pub fn read_matrix<R: Read>(reader: R) -> Result<LabeledMatrix, DataError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut rows: Vec<Vec<String>> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| DataError::Format {
            row: rows.len() + 1,
            column: None,
            message: e.to_string(),
        })?;
        if rec.iter().all(|c| c.trim().is_empty()) {
            continue;
        }
        rows.push(rec.iter().map(|c| c.trim().to_owned()).collect());
    }
    if rows.is_empty() {
        return Err(DataError::Empty);
    }
    let names: Vec<String> = rows[0][1..].to_vec();
    let n = names.len();
    if rows.len() != n + 1 {
        return Err(DataError::Format {
            row: rows.len(),
            column: None,
            message: format!("expected {n} labeled rows, found {}", rows.len() - 1),
        });
    }
    let mut values = Matrix::zeros(n, n);
    for (i, row) in rows[1..].iter().enumerate() {
        let r = i + 2;
        if row.len() != n + 1 {
            return Err(DataError::Format {
                row: r,
                column: None,
                message: format!("expected {} fields, found {}", n + 1, row.len()),
            });
        }
        if row[0] != names[i] {
            return Err(DataError::Format {
                row: r,
                column: Some(1),
                message: format!("row label `{}` does not match column label `{}`", row[0], names[i]),
            });
        }
        for (j, cell) in row[1..].iter().enumerate() {
            values[(i, j)] = if cell.is_empty() || cell.eq_ignore_ascii_case("na") {
                f64::NAN
            } else {
                cell.parse().map_err(|_| DataError::Format {
                    row: r,
                    column: Some(j + 2),
                    message: format!("`{cell}` is not a number"),
                })?
            };
        }
    }
    Ok(LabeledMatrix { names, values })
}

pub fn load_matrix(path: &Path) -> Result<LabeledMatrix, DataError> {
    let file = std::fs::File::open(path).map_err(|source| DataError::Io {
        path: path.to_owned(),
        source,
    })?;
    read_matrix(std::io::BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_with_missing_diagonal() {
        let mut values = Matrix::from_rows(&[[f64::NAN, 0.25], [1.0 / 3.0, f64::NAN]]).unwrap();
        let m = LabeledMatrix::new(vec!["a".into(), "b".into()], values.clone());
        let mut buf = Vec::new();
        write_matrix(&m, &mut buf, false).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with(",a,b\na,,2.5000000000000000e-1\n"), "{text}");
        let back = read_matrix(text.as_bytes()).unwrap();
        assert_eq!(back.names, m.names);
        values[(0, 0)] = 0.0;
        assert!(back.values[(0, 0)].is_nan());
        assert_eq!(back.values[(1, 0)], 1.0 / 3.0);
    }

    #[test]
    fn label_mismatch() {
        let e = read_matrix(",a,b\na,0,1\nc,0,0\n".as_bytes()).unwrap_err();
        assert!(matches!(e, DataError::Format { row: 3, column: Some(1), .. }), "{e:?}");
    }

    #[test]
    fn bool_tables() {
        let t = read_matrix(",a,b\na,0,1\nb,0,0\n".as_bytes()).unwrap();
        assert_eq!(t.to_bool(), vec![vec![false, true], vec![false, false]]);
        let mut buf = Vec::new();
        write_matrix(&LabeledMatrix::from_bool(t.names.clone(), &t.to_bool()), &mut buf, true).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), ",a,b\na,0,1\nb,0,0\n");
    }
}
