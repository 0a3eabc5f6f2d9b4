use alloc::format;

use nalgebra::{DMatrix, SymmetricEigen};
use num_traits::Float;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

const RIDGE: f64 = 1e-8;

/// Pearson correlation; `None` when either input has zero variance.
pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return None;
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa <= 0.0 || sbb <= 0.0 {
        return None;
    }
    Some(sab / Float::sqrt(saa * sbb))
}

/// Sum of Pearson correlations over every (shared column, candidate column)
/// pair. Not bounded by 1 when more than one pair is summed.
pub fn aggregate_corr(shared: &Matrix, candidate: &Matrix) -> Result<f64> {
    check_rows(shared, candidate)?;
    if shared.rows() < 3 {
        return Err(Error::ShortSeries {
            length: shared.rows(),
            required: 3,
        });
    }
    let mut total = 0.0;
    for i in 0..shared.cols() {
        let a = shared.column(i);
        for j in 0..candidate.cols() {
            let b = candidate.column(j);
            total += pearson(&a, &b).ok_or_else(|| {
                Error::Degenerate(format!("constant column (shared {i} or candidate {j})"))
            })?;
        }
    }
    Ok(total)
}

fn check_rows(a: &Matrix, b: &Matrix) -> Result<()> {
    if a.rows() != b.rows() {
        return Err(Error::Shape {
            context: "correlation blocks",
            expected: (a.rows(), b.cols()),
            found: b.shape(),
        });
    }
    Ok(())
}

fn centered(m: &Matrix) -> DMatrix<f64> {
    let means = m.column_means();
    DMatrix::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)] - means[j])
}

/// `S^{-1/2}` of a symmetric positive definite block after a relative ridge.
fn inv_sqrt(s: DMatrix<f64>) -> Result<DMatrix<f64>> {
    let d = s.nrows();
    let scale = s.trace() / d as f64;
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::Rank);
    }
    let ridged = s + DMatrix::identity(d, d) * (RIDGE * scale);
    let eig = SymmetricEigen::new(ridged);
    let max = eig.eigenvalues.max();
    if eig.eigenvalues.iter().any(|&l| !(l > 1e-12 * max)) {
        return Err(Error::Rank);
    }
    let inv = eig.eigenvalues.map(|l| 1.0 / Float::sqrt(l));
    Ok(&eig.eigenvectors * DMatrix::from_diagonal(&inv) * eig.eigenvectors.transpose())
}

/// First canonical correlation between the column spaces of two blocks:
/// the top singular value of `Σaa^{-1/2} Σab Σbb^{-1/2}`, clamped to `[0, 1]`.
pub fn canonical_corr(shared: &Matrix, candidate: &Matrix) -> Result<f64> {
    check_rows(shared, candidate)?;
    let n = shared.rows();
    if n <= shared.cols() + candidate.cols() || shared.cols() == 0 || candidate.cols() == 0 {
        return Err(Error::Rank);
    }
    let a = centered(shared);
    let b = centered(candidate);
    let denom = (n - 1) as f64;
    let saa = a.transpose() * &a / denom;
    let sbb = b.transpose() * &b / denom;
    let sab = a.transpose() * &b / denom;
    let m = inv_sqrt(saa)? * sab * inv_sqrt(sbb)?;
    let sv = m.singular_values();
    Ok(sv.max().clamp(0.0, 1.0))
}
