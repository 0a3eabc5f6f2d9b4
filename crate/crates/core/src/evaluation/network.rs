use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use num_traits::Float;

use super::classify::{classify_at, EvalSummary, Threshold};
use crate::cic::Verdict;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Directed scores for every ordered pair; `scores[(i, j)]` rates `i → j`
/// (row = cause, column = effect). Diagonal entries are ignored and their
/// verdicts are `None`; detectors without a verdict rule leave every
/// verdict `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredNetwork {
    pub names: Vec<String>,
    pub scores: Matrix,
    pub verdicts: Vec<Vec<Option<Verdict>>>,
}

impl ScoredNetwork {
    pub fn new(names: Vec<String>, scores: Matrix, verdicts: Vec<Vec<Option<Verdict>>>) -> Result<Self> {
        let n = names.len();
        if scores.shape() != (n, n) || verdicts.len() != n || verdicts.iter().any(|r| r.len() != n) {
            return Err(Error::Shape {
                context: "ScoredNetwork",
                expected: (n, n),
                found: scores.shape(),
            });
        }
        for i in 0..n {
            if verdicts[i][i].is_some() {
                return Err(Error::InvalidConfig("diagonal verdicts must be empty".into()));
            }
            for j in 0..n {
                if i == j {
                    continue;
                }
                let s = scores[(i, j)];
                if !(0.0..=1.0).contains(&s) {
                    return Err(Error::InvalidConfig(format!(
                        "score {s} for {} -> {} outside [0, 1]",
                        names[i], names[j]
                    )));
                }
            }
        }
        Ok(Self {
            names,
            scores,
            verdicts,
        })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Off-diagonal pairs `(i, j)` in row-major order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.len();
        (0..n).flat_map(move |i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
    }

    pub fn off_diagonal_scores(&self) -> Vec<f64> {
        self.pairs().map(|(i, j)| self.scores[(i, j)]).collect()
    }

    pub fn off_diagonal_labels(&self, truth: &[Vec<bool>]) -> Result<Vec<bool>> {
        let n = self.len();
        if truth.len() != n || truth.iter().any(|r| r.len() != n) {
            return Err(Error::Shape {
                context: "truth matrix",
                expected: (n, n),
                found: (truth.len(), truth.first().map_or(0, |r| r.len())),
            });
        }
        Ok(self.pairs().map(|(i, j)| truth[i][j]).collect())
    }

    /// Scores every ordered pair against a direct-cause truth matrix;
    /// confounded pairs count as negatives.
    pub fn evaluate(&self, truth: &[Vec<bool>], rule: Threshold) -> Result<EvalSummary> {
        let labels = self.off_diagonal_labels(truth)?;
        classify_at(&self.off_diagonal_scores(), &labels, rule)
    }

    /// Confounder-detection evaluation over unordered pairs `i < j` using
    /// [`confounder_score`].
    pub fn evaluate_confounders(
        &self,
        confounded: &[Vec<bool>],
        m: f64,
        upper: f64,
        rule: Threshold,
    ) -> Result<EvalSummary> {
        let n = self.len();
        self.off_diagonal_labels(confounded)?;
        let mut scores = Vec::new();
        let mut labels = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                scores.push(confounder_score(self.scores[(i, j)], self.scores[(j, i)], m, upper));
                labels.push(confounded[i][j]);
            }
        }
        classify_at(&scores, &labels, rule)
    }
}

/// Closeness of both directional scores to the middle of the `(m, M)` band:
/// `min` over directions of `1 − 2|s − (m+M)/2| / (M − m)`, clipped to `[0, 1]`.
pub fn confounder_score(s_xy: f64, s_yx: f64, m: f64, upper: f64) -> f64 {
    let mid = (m + upper) / 2.0;
    let band = |s: f64| 1.0 - 2.0 * Float::abs(s - mid) / (upper - m);
    band(s_xy).min(band(s_yx)).clamp(0.0, 1.0)
}
