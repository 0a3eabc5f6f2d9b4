//! Delay-embedding pairs `(X_{t-1}, Y_t)` built per segment.
//!
//! For order `p` and lag `τ` the effect row at anchor `t` is
//! `(y_t, y_{t-τ}, …, y_{t-pτ})` and the cause row is
//! `(x_{t-1}, x_{t-1-τ}, …, x_{t-1-pτ})`. The one-step offset between
//! cause and effect is fixed.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::series::TimeSeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields, default))]
pub struct EmbeddingConfig {
    /// Embedding order `p`; vectors have `p + 1` coordinates.
    pub order: usize,
    pub lag: usize,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        Self { order: 7, lag: 1 }
    }
}

impl EmbeddingConfig {
    pub fn new(order: usize, lag: usize) -> Result<Self> {
        let cfg = Self { order, lag };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.order < 1 {
            return Err(Error::InvalidConfig("embedding order must be at least 1".into()));
        }
        if self.lag < 1 {
            return Err(Error::InvalidConfig("embedding lag must be at least 1".into()));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.order + 1
    }

    /// Span in rows from the oldest cause coordinate to the anchor.
    fn span(&self) -> usize {
        self.order * self.lag + 1
    }

    /// Minimum segment length that yields at least one row.
    pub fn min_segment_len(&self) -> usize {
        self.span() + 1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedPairDataset {
    /// Row `k` holds `X_{t-1}` for anchor `sample_times[k]`.
    pub cause_rows: Matrix,
    /// Row `k` holds `Y_t` for anchor `sample_times[k]`.
    pub effect_rows: Matrix,
    /// Zero-based row index of each anchor in the source series.
    pub sample_times: Vec<usize>,
}

impl EmbeddedPairDataset {
    pub fn len(&self) -> usize {
        self.sample_times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sample_times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.cause_rows.cols()
    }

    /// Subset of rows in the given order.
    pub fn select(&self, idx: &[usize]) -> Self {
        Self {
            cause_rows: self.cause_rows.select_rows(idx),
            effect_rows: self.effect_rows.select_rows(idx),
            sample_times: idx.iter().map(|&i| self.sample_times[i]).collect(),
        }
    }
}

/// Embeds `cause_col` as `X_{t-1}` and `effect_col` as `Y_t`. Rows never
/// straddle a segment boundary.
pub fn embed_pair(
    series: &TimeSeries,
    cause_col: &str,
    effect_col: &str,
    cfg: &EmbeddingConfig,
) -> Result<EmbeddedPairDataset> {
    cfg.validate()?;
    let ci = series.column_index(cause_col)?;
    let ei = series.column_index(effect_col)?;
    let values = series.values();
    let dim = cfg.dim();
    let span = cfg.span();

    for (k, seg) in series.segments().iter().enumerate() {
        if seg.len() < cfg.min_segment_len() {
            return Err(Error::ShortSegment {
                segment: k,
                length: seg.len(),
                required: cfg.min_segment_len(),
            });
        }
    }
    let n: usize = series
        .segments()
        .iter()
        .map(|s| s.len() - span)
        .sum();

    let mut cause = Vec::with_capacity(n * dim);
    let mut effect = Vec::with_capacity(n * dim);
    let mut times = Vec::with_capacity(n);
    for seg in series.segments() {
        for t in seg.start + span..seg.end {
            for j in 0..dim {
                effect.push(values[(t - j * cfg.lag, ei)]);
            }
            for j in 0..dim {
                cause.push(values[(t - 1 - j * cfg.lag, ci)]);
            }
            times.push(t);
        }
    }
    Ok(EmbeddedPairDataset {
        cause_rows: Matrix::from_vec(n, dim, cause)?,
        effect_rows: Matrix::from_vec(n, dim, effect)?,
        sample_times: times,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::{String, ToString};
    use alloc::vec;

    fn series(x: &[f64], y: &[f64], segments: Vec<core::ops::Range<usize>>) -> TimeSeries {
        let rows: Vec<[f64; 2]> = x.iter().zip(y).map(|(&a, &b)| [a, b]).collect();
        let names: Vec<String> = vec!["x".to_string(), "y".to_string()];
        TimeSeries::new(names, Matrix::from_rows(&rows).unwrap(), segments).unwrap()
    }

    #[test]
    fn index_formula_small_case() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let y = [10.0, 20.0, 30.0, 40.0, 50.0];
        let ds = embed_pair(&series(&x, &y, vec![0..5]), "x", "y", &EmbeddingConfig::new(2, 1).unwrap())
            .unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.effect_rows.row(0), &[40.0, 30.0, 20.0]);
        assert_eq!(ds.cause_rows.row(0), &[3.0, 2.0, 1.0]);
        assert_eq!(ds.effect_rows.row(1), &[50.0, 40.0, 30.0]);
        assert_eq!(ds.cause_rows.row(1), &[4.0, 3.0, 2.0]);
        assert_eq!(ds.sample_times, vec![3, 4]);
    }

    #[test]
    fn segments_are_not_crossed() {
        let x: Vec<f64> = (0..10).map(f64::from).collect();
        let y: Vec<f64> = (0..10).map(|v| f64::from(v) * 10.0).collect();
        let ts = series(&x, &y, vec![0..5, 5..10]);
        let ds = embed_pair(&ts, "x", "y", &EmbeddingConfig::new(2, 1).unwrap()).unwrap();
        assert_eq!(ds.len(), 4);
        assert_eq!(ds.sample_times, vec![3, 4, 8, 9]);
        for k in 0..ds.len() {
            let t = ds.sample_times[k];
            let seg_start = if t >= 5 { 5.0 } else { 0.0 };
            assert!(ds.cause_rows.row(k).iter().all(|&v| v >= seg_start));
        }
    }

    #[test]
    fn short_segment_and_unknown_column() {
        let ts = series(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0], vec![0..3]);
        let cfg = EmbeddingConfig::new(2, 1).unwrap();
        assert_eq!(
            embed_pair(&ts, "x", "y", &cfg),
            Err(Error::ShortSegment { segment: 0, length: 3, required: 4 })
        );
        assert_eq!(
            embed_pair(&ts, "x", "w", &cfg),
            Err(Error::UnknownColumn("w".into()))
        );
    }

    #[test]
    fn lag_spacing() {
        let x: Vec<f64> = (0..8).map(f64::from).collect();
        let ts = series(&x, &x, vec![0..8]);
        let ds = embed_pair(&ts, "x", "y", &EmbeddingConfig::new(2, 2).unwrap()).unwrap();
        assert_eq!(ds.len(), 8 - 5);
        assert_eq!(ds.effect_rows.row(0), &[5.0, 3.0, 1.0]);
        assert_eq!(ds.cause_rows.row(0), &[4.0, 2.0, 0.0]);
    }

    #[test]
    fn invalid_config() {
        assert!(EmbeddingConfig::new(0, 1).is_err());
        assert!(EmbeddingConfig::new(1, 0).is_err());
    }
}
