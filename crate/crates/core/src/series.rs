//! Labeled multivariate time series with replicate segments.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::ops::Range;

use num_traits::Float;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Rows are time steps, columns are variables. `segments` mark independent
/// replicate trajectories as half-open row ranges.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    names: Vec<String>,
    values: Matrix,
    segments: Vec<Range<usize>>,
}

impl TimeSeries {
    pub fn new(names: Vec<String>, values: Matrix, segments: Vec<Range<usize>>) -> Result<Self> {
        if values.cols() != names.len() {
            return Err(Error::Shape {
                context: "TimeSeries::new",
                expected: (values.rows(), names.len()),
                found: values.shape(),
            });
        }
        if values.rows() == 0 {
            return Err(Error::Empty);
        }
        for (i, n) in names.iter().enumerate() {
            if n.is_empty() {
                return Err(Error::InvalidConfig(format!("column {} has an empty name", i + 1)));
            }
            if names[..i].contains(n) {
                return Err(Error::InvalidConfig(format!("duplicate column name `{n}`")));
            }
        }
        if let Some((r, c)) = first_non_finite(&values) {
            return Err(Error::Degenerate(format!(
                "non-finite value at row {}, column `{}`",
                r + 1,
                names[c]
            )));
        }
        let mut next = 0;
        for s in &segments {
            if s.start != next || s.end <= s.start {
                return Err(Error::InvalidConfig(format!(
                    "segments must be non-empty, ordered and contiguous; got {}..{}",
                    s.start, s.end
                )));
            }
            next = s.end;
        }
        if next != values.rows() {
            return Err(Error::InvalidConfig(format!(
                "segments cover {next} of {} rows",
                values.rows()
            )));
        }
        Ok(Self {
            names,
            values,
            segments,
        })
    }

    /// A series made of one replicate.
    pub fn single(names: Vec<String>, values: Matrix) -> Result<Self> {
        let n = values.rows();
        Self::new(names, values, alloc::vec![0..n])
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    pub fn segments(&self) -> &[Range<usize>] {
        &self.segments
    }

    pub fn len(&self) -> usize {
        self.values.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.rows() == 0
    }

    pub fn width(&self) -> usize {
        self.names.len()
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::UnknownColumn(name.into()))
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        Ok(self.values.column(self.column_index(name)?))
    }

    /// The named columns, in the given order, with the same segments.
    pub fn select_columns(&self, names: &[&str]) -> Result<Self> {
        let idx = names
            .iter()
            .map(|n| self.column_index(n))
            .collect::<Result<Vec<_>>>()?;
        let mut data = Vec::with_capacity(self.len() * idx.len());
        for r in self.values.row_iter() {
            data.extend(idx.iter().map(|&j| r[j]));
        }
        Self::new(
            idx.iter().map(|&j| self.names[j].clone()).collect(),
            Matrix::from_vec(self.len(), idx.len(), data)?,
            self.segments.clone(),
        )
    }

    /// Same data under new labels.
    pub fn relabel(&self, names: Vec<String>) -> Result<Self> {
        Self::new(names, self.values.clone(), self.segments.clone())
    }

    /// Standardizes every column to sample mean 0 and sample standard
    /// deviation 1, pooling all segments.
    pub fn zscore(&self) -> Result<Self> {
        let n = self.values.rows();
        if n < 2 {
            return Err(Error::Degenerate("z-score needs at least two rows".into()));
        }
        let means = self.values.column_means();
        let mut sds = alloc::vec![0.0; self.width()];
        for r in self.values.row_iter() {
            for ((acc, v), m) in sds.iter_mut().zip(r).zip(&means) {
                *acc += (v - m) * (v - m);
            }
        }
        for (j, sd) in sds.iter_mut().enumerate() {
            *sd = Float::sqrt(*sd / (n - 1) as f64);
            let scale = Float::abs(means[j]).max(1.0);
            if !(*sd > 1e-12 * scale) {
                return Err(Error::Degenerate(format!(
                    "column `{}` has zero variance",
                    self.names[j]
                )));
            }
        }
        let mut values = self.values.clone();
        for i in 0..n {
            for (j, v) in values.row_mut(i).iter_mut().enumerate() {
                *v = (*v - means[j]) / sds[j];
            }
        }
        Ok(Self {
            names: self.names.clone(),
            values,
            segments: self.segments.clone(),
        })
    }
}

fn first_non_finite(m: &Matrix) -> Option<(usize, usize)> {
    m.as_slice()
        .iter()
        .position(|v| !v.is_finite())
        .map(|k| (k / m.cols(), k % m.cols()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn zscore_of_small_column() {
        let m = Matrix::from_rows(&[[1.0], [2.0], [3.0]]).unwrap();
        let z = TimeSeries::single(names(&["a"]), m).unwrap().zscore().unwrap();
        let col = z.column("a").unwrap();
        assert!((col[0] + 1.0).abs() < 1e-15);
        assert!(col[1].abs() < 1e-15);
        assert!((col[2] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn constant_column_is_degenerate() {
        let m = Matrix::from_rows(&[[1.0, 5.0], [2.0, 5.0], [3.0, 5.0]]).unwrap();
        let err = TimeSeries::single(names(&["a", "b"]), m)
            .unwrap()
            .zscore()
            .unwrap_err();
        match err {
            Error::Degenerate(msg) => assert!(msg.contains("`b`")),
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn zscore_idempotent_and_keeps_segments() {
        let rows: Vec<[f64; 2]> = (0..40)
            .map(|i| [(i as f64 * 0.37).sin() * 3.0 + 1.0, (i as f64).sqrt()])
            .collect();
        let ts = TimeSeries::new(
            names(&["u", "v"]),
            Matrix::from_rows(&rows).unwrap(),
            vec![0..15, 15..40],
        )
        .unwrap();
        let once = ts.zscore().unwrap();
        let twice = once.zscore().unwrap();
        assert_eq!(once.segments(), ts.segments());
        for (a, b) in once.values().as_slice().iter().zip(twice.values().as_slice()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn invariants_are_enforced() {
        let m = Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap();
        assert!(TimeSeries::single(names(&["a", "a"]), m.clone()).is_err());
        assert!(TimeSeries::single(names(&["a", ""]), m.clone()).is_err());
        assert!(TimeSeries::new(names(&["a", "b"]), m.clone(), vec![0..1]).is_err());
        assert!(TimeSeries::new(names(&["a", "b"]), m.clone(), vec![1..2, 0..1]).is_err());
        let bad = Matrix::from_rows(&[[1.0, f64::NAN]]).unwrap();
        assert!(TimeSeries::single(names(&["a", "b"]), bad).is_err());
        assert_eq!(
            TimeSeries::single(names(&["a", "b"]), m).unwrap().column_index("c"),
            Err(Error::UnknownColumn("c".into()))
        );
    }
}
