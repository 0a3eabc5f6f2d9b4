use alloc::vec::Vec;

use num_traits::Float;

use crate::error::{Error, Result};
use crate::evaluation::pearson;

/// Minimum final skill for a cross-map to count as converged.
pub const CONVERGENCE_SKILL: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct CcmResult {
    pub library_sizes: Vec<usize>,
    /// Cross-map correlation at each library size.
    pub skills: Vec<f64>,
    pub converged: bool,
}

impl CcmResult {
    pub fn final_skill(&self) -> f64 {
        self.skills.last().copied().unwrap_or(0.0)
    }

    /// Skill mapped into `[0, 1]`.
    pub fn normalized(&self) -> f64 {
        self.final_skill().max(0.0)
    }
}

/// Shadow-manifold points `(v_t, v_{t-τ}, …, v_{t-(E-1)τ})`, one per row.
fn shadow(v: &[f64], e: usize, tau: usize) -> Vec<Vec<f64>> {
    let start = (e - 1) * tau;
    (start..v.len())
        .map(|t| (0..e).map(|j| v[t - j * tau]).collect())
        .collect()
}

/// Cross-maps `target` from the shadow manifold of `manifold_src`. High
/// converging skill indicates that `target` drives `manifold_src`.
///
/// The library of size `L` is the first `L` manifold points; every manifold
/// point is predicted from its `E + 1` nearest library neighbours (itself
/// excluded) with weights `exp(-d_i / d_min)`. Ties go to the lower index.
pub fn cross_map(
    target: &[f64],
    manifold_src: &[f64],
    e: usize,
    tau: usize,
    library_sizes: &[usize],
) -> Result<CcmResult> {
    if e < 1 || tau < 1 {
        return Err(Error::InvalidConfig("CCM needs E ≥ 1 and tau ≥ 1".into()));
    }
    if target.len() != manifold_src.len() {
        return Err(Error::Shape {
            context: "ccm",
            expected: (manifold_src.len(), 1),
            found: (target.len(), 1),
        });
    }
    if library_sizes.is_empty() || library_sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidConfig(
            "library sizes must be non-empty and strictly increasing".into(),
        ));
    }
    let k = e + 1;
    let offset = (e - 1) * tau;
    let points = if manifold_src.len() > offset {
        shadow(manifold_src, e, tau)
    } else {
        Vec::new()
    };
    let max_lib = *library_sizes.last().expect("non-empty");
    if library_sizes[0] < k + 1 || max_lib > points.len() {
        return Err(Error::ShortSeries {
            length: points.len(),
            required: max_lib.max(k + 1),
        });
    }
    let truth: Vec<f64> = target[offset..].to_vec();

    let mut skills = Vec::with_capacity(library_sizes.len());
    let mut nearest: Vec<(f64, usize)> = Vec::with_capacity(k + 1);
    let mut preds = Vec::with_capacity(points.len());
    for &lib in library_sizes {
        preds.clear();
        for (q, qp) in points.iter().enumerate() {
            nearest.clear();
            for (i, lp) in points[..lib].iter().enumerate() {
                if i == q {
                    continue;
                }
                let d = Float::sqrt(
                    qp.iter().zip(lp).map(|(a, b)| (a - b) * (a - b)).sum::<f64>(),
                );
                insert_neighbor(&mut nearest, (d, i), k);
            }
            preds.push(weighted_estimate(&nearest, &truth));
        }
        skills.push(pearson(&preds, &truth).unwrap_or(0.0).clamp(-1.0, 1.0));
    }
    let last = *skills.last().expect("non-empty");
    let converged = last > CONVERGENCE_SKILL && (skills.len() == 1 || last > skills[0]);
    Ok(CcmResult {
        library_sizes: library_sizes.to_vec(),
        skills,
        converged,
    })
}

/// Keeps the `k` closest `(distance, index)` pairs sorted ascending; an
/// equal distance never displaces an earlier index.
fn insert_neighbor(nearest: &mut Vec<(f64, usize)>, cand: (f64, usize), k: usize) {
    if nearest.len() == k && cand.0 >= nearest[k - 1].0 {
        return;
    }
    let pos = nearest.partition_point(|n| n.0 <= cand.0);
    nearest.insert(pos, cand);
    nearest.truncate(k);
}

fn weighted_estimate(nearest: &[(f64, usize)], truth: &[f64]) -> f64 {
    let d_min = nearest[0].0;
    let mut num = 0.0;
    let mut den = 0.0;
    for &(d, i) in nearest {
        let w = if d_min > 0.0 {
            Float::exp(-d / d_min)
        } else if d == 0.0 {
            1.0
        } else {
            0.0
        };
        num += w * truth[i];
        den += w;
    }
    num / den
}

/// Both cross-map directions for a pair `(x, y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CcmPair {
    /// Estimates `x` from `M_y`; evidence for `x → y`.
    pub x_to_y: CcmResult,
    /// Estimates `y` from `M_x`; evidence for `y → x`.
    pub y_to_x: CcmResult,
}

pub fn ccm(x: &[f64], y: &[f64], e: usize, tau: usize, library_sizes: &[usize]) -> Result<CcmPair> {
    Ok(CcmPair {
        x_to_y: cross_map(x, y, e, tau, library_sizes)?,
        y_to_x: cross_map(y, x, e, tau, library_sizes)?,
    })
}

/// Evenly spaced library sizes from `lo` to `hi` inclusive.
pub fn library_grid(lo: usize, hi: usize, steps: usize) -> Vec<usize> {
    if steps <= 1 || hi <= lo {
        return alloc::vec![hi];
    }
    let mut v: Vec<usize> = (0..steps)
        .map(|i| lo + (hi - lo) * i / (steps - 1))
        .collect();
    v.dedup();
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn logistic(n: usize, x0: f64) -> Vec<f64> {
        let mut v = Vec::with_capacity(n);
        let mut x = x0;
        for _ in 0..n {
            v.push(x);
            x = 3.8 * x * (1.0 - x);
        }
        v
    }

    #[test]
    fn neighbor_ties_prefer_lower_index() {
        let mut n = Vec::new();
        insert_neighbor(&mut n, (1.0, 3), 2);
        insert_neighbor(&mut n, (1.0, 5), 2);
        insert_neighbor(&mut n, (1.0, 7), 2);
        assert_eq!(n, vec![(1.0, 3), (1.0, 5)]);
        insert_neighbor(&mut n, (0.5, 9), 2);
        assert_eq!(n, vec![(0.5, 9), (1.0, 3)]);
    }

    #[test]
    fn lagged_copy_maps_back() {
        let x = logistic(600, 0.31);
        let mut y = vec![0.5];
        y.extend_from_slice(&x[..599]);
        let r = cross_map(&x, &y, 3, 1, &[50, 200, 500]).unwrap();
        assert!(r.final_skill() > 0.95, "{:?}", r.skills);
        assert!(r.converged);
    }

    #[test]
    fn library_too_large() {
        let x = logistic(50, 0.2);
        assert!(matches!(
            cross_map(&x, &x, 3, 1, &[10, 100]),
            Err(Error::ShortSeries { .. })
        ));
        assert!(cross_map(&x, &x, 3, 1, &[20, 10]).is_err());
    }

    #[test]
    fn grid() {
        assert_eq!(library_grid(10, 100, 4), vec![10, 40, 70, 100]);
        assert_eq!(library_grid(10, 100, 1), vec![100]);
    }
}
