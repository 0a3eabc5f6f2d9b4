//! CSV and DREAM4 time-series files.

use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::{Path, PathBuf};

use cic_core::{Matrix, TimeSeries};

/// Failures while reading or writing data files. Row numbers count file
/// records from 1, header included; columns count from 1.
#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("row {row}{}: {message}", column.map(|c| format!(", column {c}")).unwrap_or_default())]
    Format {
        row: usize,
        column: Option<usize>,
        message: String,
    },
    #[error("no data rows")]
    Empty,
    #[error(transparent)]
    Core(#[from] cic_core::Error),
}

impl DataError {
    fn format(row: usize, column: Option<usize>, message: impl Into<String>) -> Self {
        DataError::Format {
            row,
            column,
            message: message.into(),
        }
    }
}

fn open(path: &Path) -> Result<BufReader<File>, DataError> {
    File::open(path).map(BufReader::new).map_err(|source| DataError::Io {
        path: path.to_owned(),
        source,
    })
}

fn from_csv_error(e: csv::Error) -> DataError {
    let row = e.position().map(|p| p.record() as usize + 1).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(source) => DataError::Io {
            path: PathBuf::new(),
            source,
        },
        other => DataError::format(row, None, format!("{other:?}")),
    }
}

/// Records of a delimited file with 1-based record numbers; blank lines
/// are skipped.
fn records<R: Read>(reader: R, delimiter: u8) -> Result<Vec<(usize, Vec<String>)>, DataError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .delimiter(delimiter)
        .from_reader(reader);
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(from_csv_error)?;
        let row = rec.position().map(|p| p.line() as usize).unwrap_or(out.len() + 1);
        if rec.iter().all(|c| c.trim().is_empty()) {
            continue;
        }
        out.push((row, rec.iter().map(|c| c.trim().to_owned()).collect()));
    }
    Ok(out)
}

fn parse_cell(cell: &str, row: usize, column: usize) -> Result<f64, DataError> {
    let v: f64 = cell
        .parse()
        .map_err(|_| DataError::format(row, Some(column), format!("`{cell}` is not a number")))?;
    if !v.is_finite() {
        return Err(DataError::format(row, Some(column), format!("`{cell}` is not finite")));
    }
    Ok(v)
}

fn numeric_rows(rows: &[(usize, Vec<String>)], width: usize, skip: usize) -> Result<Vec<f64>, DataError> {
    let mut data = Vec::with_capacity(rows.len() * width);
    for (row, cells) in rows {
        if cells.len() != width + skip {
            return Err(DataError::format(
                *row,
                None,
                format!("expected {} fields, found {}", width + skip, cells.len()),
            ));
        }
        for (j, cell) in cells.iter().enumerate().skip(skip) {
            data.push(parse_cell(cell, *row, j + 1)?);
        }
    }
    Ok(data)
}

fn default_names(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("v{i}")).collect()
}

/// Comma-separated numeric table, optionally with one header row.
/// Columns are named `v1..vn` without a header.
pub fn read_csv<R: Read>(reader: R, has_header: bool) -> Result<TimeSeries, DataError> {
    let mut rows = records(reader, b',')?;
    let names = if has_header {
        if rows.is_empty() {
            return Err(DataError::Empty);
        }
        rows.remove(0).1
    } else {
        match rows.first() {
            Some((_, first)) => default_names(first.len()),
            None => return Err(DataError::Empty),
        }
    };
    if rows.is_empty() {
        return Err(DataError::Empty);
    }
    let width = names.len();
    let data = numeric_rows(&rows, width, 0)?;
    let values = Matrix::from_vec(rows.len(), width, data)?;
    Ok(TimeSeries::single(names, values)?)
}

pub fn load_csv(path: &Path, has_header: bool) -> Result<TimeSeries, DataError> {
    read_csv(open(path)?, has_header).map_err(|e| with_path(e, path))
}

/// DREAM4 time-series table: tab- or comma-separated, header row whose
/// first field contains `time`. A new segment starts wherever the time
/// value does not increase. The time column is dropped.
pub fn read_dream4<R: Read>(mut reader: R) -> Result<TimeSeries, DataError> {
    let mut text = String::new();
    reader.read_to_string(&mut text).map_err(|source| DataError::Io {
        path: PathBuf::new(),
        source,
    })?;
    let first = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
    let delimiter = if first.contains('\t') { b'\t' } else { b',' };
    let mut rows = records(text.as_bytes(), delimiter)?;
    if rows.is_empty() {
        return Err(DataError::Empty);
    }
    let (header_row, header) = rows.remove(0);
    if !header.first().is_some_and(|h| h.to_ascii_lowercase().contains("time")) {
        return Err(DataError::format(header_row, Some(1), "first column must be a Time column"));
    }
    if rows.is_empty() {
        return Err(DataError::Empty);
    }
    let names: Vec<String> = header[1..].to_vec();
    let width = names.len();
    let mut times = Vec::with_capacity(rows.len());
    for (row, cells) in &rows {
        let cell = cells.first().map(String::as_str).unwrap_or("");
        times.push(parse_cell(cell, *row, 1)?);
    }
    let data = numeric_rows(&rows, width, 1)?;
    let mut segments = Vec::new();
    let mut start = 0;
    for i in 1..times.len() {
        if times[i] <= times[i - 1] {
            segments.push(start..i);
            start = i;
        }
    }
    segments.push(start..times.len());
    let values = Matrix::from_vec(rows.len(), width, data)?;
    Ok(TimeSeries::new(names, values, segments)?)
}

pub fn load_dream4(path: &Path) -> Result<TimeSeries, DataError> {
    read_dream4(open(path)?).map_err(|e| with_path(e, path))
}

fn with_path(e: DataError, path: &Path) -> DataError {
    match e {
        DataError::Io { path: p, source } if p.as_os_str().is_empty() => DataError::Io {
            path: path.to_owned(),
            source,
        },
        other => other,
    }
}

/// A float at 17 significant digits, which round-trips exactly.
pub fn fmt_f64(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    format!("{v:.16e}")
}

/// Header plus one row per time step. Segment boundaries are not recorded.
pub fn write_csv<W: Write>(series: &TimeSeries, out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(series.names())?;
    for row in series.values().row_iter() {
        w.write_record(row.iter().map(|v| fmt_f64(*v)))?;
    }
    w.flush()
}

pub fn export_csv(series: &TimeSeries, path: &Path) -> Result<(), DataError> {
    let io_err = |source| DataError::Io {
        path: path.to_owned(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    write_csv(series, std::io::BufWriter::new(file)).map_err(io_err)
}
