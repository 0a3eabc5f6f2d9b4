use alloc::vec::Vec;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
    /// Positives are scores `>= threshold`.
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    pub auroc: f64,
    /// Starts at `(0, 0)` with an infinite threshold and ends at `(1, 1)`.
    pub points: Vec<RocPoint>,
}

fn check(scores: &[f64], labels: &[bool]) -> Result<(usize, usize)> {
    if scores.len() != labels.len() {
        return Err(Error::Shape {
            context: "roc_auc",
            expected: (labels.len(), 1),
            found: (scores.len(), 1),
        });
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::Degenerate("scores must be finite".into()));
    }
    let pos = labels.iter().filter(|l| **l).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::OneClass);
    }
    Ok((pos, neg))
}

/// Area under the ROC curve as the Mann–Whitney statistic with midranks
/// for ties, plus one ROC point per distinct threshold.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<RocCurve> {
    let (pos, neg) = check(scores, labels)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // midranks, 1-based
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let mid = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            if labels[k] {
                rank_sum_pos += mid;
            }
        }
        i = j + 1;
    }
    let (p, n) = (pos as f64, neg as f64);
    let auroc = (rank_sum_pos - p * (p + 1.0) / 2.0) / (p * n);

    let mut points = Vec::with_capacity(scores.len() + 1);
    points.push(RocPoint {
        fpr: 0.0,
        tpr: 0.0,
        threshold: f64::INFINITY,
    });
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut k = order.len();
    while k > 0 {
        let s = scores[order[k - 1]];
        while k > 0 && scores[order[k - 1]] == s {
            if labels[order[k - 1]] {
                tp += 1;
            } else {
                fp += 1;
            }
            k -= 1;
        }
        points.push(RocPoint {
            fpr: fp as f64 / n,
            tpr: tp as f64 / p,
            threshold: s,
        });
    }
    Ok(RocCurve {
        auroc: auroc.clamp(0.0, 1.0),
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn perfect_and_tied() {
        let labels = [true, false, true, false, false];
        let scores: Vec<f64> = labels.iter().map(|&l| if l { 1.0 } else { 0.0 }).collect();
        assert_eq!(roc_auc(&scores, &labels).unwrap().auroc, 1.0);
        assert_eq!(roc_auc(&[0.3; 5], &labels).unwrap().auroc, 0.5);
    }

    #[test]
    fn one_class() {
        assert_eq!(roc_auc(&[0.1, 0.2], &[true, true]), Err(Error::OneClass));
    }

    #[test]
    fn curve_endpoints() {
        let r = roc_auc(&[0.9, 0.1, 0.4, 0.4], &[true, false, false, true]).unwrap();
        let last = r.points.last().unwrap();
        assert_eq!((last.fpr, last.tpr), (1.0, 1.0));
        assert_eq!(r.points.len(), 4);
        assert_eq!(r.points[1], RocPoint { fpr: 0.0, tpr: 0.5, threshold: 0.9 });
        assert_eq!(r.points[2], RocPoint { fpr: 0.5, tpr: 1.0, threshold: 0.4 });
        // trapezoid area under the emitted points equals the rank statistic
        let area: f64 = r
            .points
            .windows(2)
            .map(|w| (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) / 2.0)
            .sum();
        assert!((area - r.auroc).abs() < 1e-15);
        assert_eq!(r.auroc, 0.875);
    }

    #[test]
    fn nan_rejected() {
        assert!(roc_auc(&[f64::NAN, 0.1], &[true, false]).is_err());
        let _ = vec![0];
    }
}
