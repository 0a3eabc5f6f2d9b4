use alloc::vec::Vec;

use super::roc::roc_auc;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Threshold {
    Fixed(f64),
    /// `q`-th quantile of the scores, linearly interpolated.
    Quantile(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalSummary {
    /// Absent when the labels hold a single class.
    pub auroc: Option<f64>,
    pub accuracy: f64,
    /// Zero when nothing is predicted positive; see `no_positive_predictions`.
    pub precision: f64,
    pub threshold: f64,
    pub threshold_rule: Threshold,
    pub confusion: Confusion,
    pub no_positive_predictions: bool,
}

/// Linear-interpolation quantile of unsorted values (`q` in `[0, 1]`).
pub fn quantile(values: &[f64], q: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Empty);
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::InvalidConfig("quantile must lie in [0, 1]".into()));
    }
    let mut v: Vec<f64> = values.to_vec();
    v.sort_by(f64::total_cmp);
    let h = (v.len() - 1) as f64 * q;
    let lo = h as usize;
    let hi = (lo + 1).min(v.len() - 1);
    Ok(v[lo] + (h - lo as f64) * (v[hi] - v[lo]))
}

/// Predicts positive iff `score >= threshold`.
pub fn classify_at(scores: &[f64], labels: &[bool], rule: Threshold) -> Result<EvalSummary> {
    if scores.len() != labels.len() {
        return Err(Error::Shape {
            context: "classify_at",
            expected: (labels.len(), 1),
            found: (scores.len(), 1),
        });
    }
    let threshold = match rule {
        Threshold::Fixed(t) => t,
        Threshold::Quantile(q) => quantile(scores, q)?,
    };
    let mut c = Confusion::default();
    for (&s, &l) in scores.iter().zip(labels) {
        match (s >= threshold, l) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, false) => c.tn += 1,
            (false, true) => c.fn_ += 1,
        }
    }
    let n = c.total();
    let accuracy = if n == 0 { 0.0 } else { (c.tp + c.tn) as f64 / n as f64 };
    let predicted = c.tp + c.fp;
    let precision = if predicted == 0 { 0.0 } else { c.tp as f64 / predicted as f64 };
    let auroc = match roc_auc(scores, labels) {
        Ok(r) => Some(r.auroc),
        Err(Error::OneClass) => None,
        Err(e) => return Err(e),
    };
    Ok(EvalSummary {
        auroc,
        accuracy,
        precision,
        threshold,
        threshold_rule: rule,
        confusion: c,
        no_positive_predictions: predicted == 0,
    })
}
