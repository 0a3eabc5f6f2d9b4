//! Diagonal Gaussian posteriors and the latent-space penalties.

use alloc::vec::Vec;

use num_traits::Float;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{shape_err, Result};
use crate::matrix::Matrix;

/// Rows are samples; `σ = exp(log_sigma)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPosterior {
    pub mu: Matrix,
    pub log_sigma: Matrix,
}

impl GaussianPosterior {
    pub fn new(mu: Matrix, log_sigma: Matrix) -> Result<Self> {
        if mu.shape() != log_sigma.shape() {
            return shape_err("GaussianPosterior", mu.shape(), log_sigma.shape());
        }
        Ok(Self { mu, log_sigma })
    }

    pub fn batch(&self) -> usize {
        self.mu.rows()
    }

    pub fn dim(&self) -> usize {
        self.mu.cols()
    }

    pub fn sigma(&self) -> Matrix {
        self.log_sigma.map(Float::exp)
    }

    /// Mean over rows of the Euclidean norm of `mu`.
    pub fn mean_norm(&self) -> f64 {
        if self.batch() == 0 {
            return 0.0;
        }
        self.mu
            .row_iter()
            .map(|r| Float::sqrt(r.iter().map(|v| v * v).sum::<f64>()))
            .sum::<f64>()
            / self.batch() as f64
    }
}

/// Standard-normal draws with the given shape.
pub fn standard_normal<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Matrix {
    let data = (0..rows * cols).map(|_| rng.sample(StandardNormal)).collect();
    Matrix::from_vec(rows, cols, data).expect("sized above")
}

/// `z = μ + σ ⊙ ε` for a given noise matrix.
pub fn reparameterize_with(post: &GaussianPosterior, eps: &Matrix) -> Result<Matrix> {
    if eps.shape() != post.mu.shape() {
        return shape_err("reparameterize", post.mu.shape(), eps.shape());
    }
    let mut z = post.mu.clone();
    for ((zv, ls), e) in z
        .as_mut_slice()
        .iter_mut()
        .zip(post.log_sigma.as_slice())
        .zip(eps.as_slice())
    {
        *zv += Float::exp(*ls) * e;
    }
    Ok(z)
}

/// `z = μ + σ ⊙ ε` with `ε ~ N(0, I)` drawn from `rng`.
pub fn reparameterize<R: Rng + ?Sized>(post: &GaussianPosterior, rng: &mut R) -> Matrix {
    let eps = standard_normal(post.batch(), post.dim(), rng);
    reparameterize_with(post, &eps).expect("shapes match by construction")
}

/// `KL(q ‖ N(0, I))`, summed over dimensions and averaged over rows.
pub fn kl_to_standard_normal(post: &GaussianPosterior) -> f64 {
    let b = post.batch();
    if b == 0 {
        return 0.0;
    }
    let mut total = 0.0;
    for (m, ls) in post.mu.as_slice().iter().zip(post.log_sigma.as_slice()) {
        let s2 = Float::exp(2.0 * ls);
        total += 0.5 * (m * m + s2 - 1.0 - 2.0 * ls);
    }
    total / b as f64
}

/// Gradient of [`kl_to_standard_normal`] scaled by `weight`, written into
/// `(d_mu, d_log_sigma)`.
pub(crate) fn kl_grad(post: &GaussianPosterior, weight: f64, d_mu: &mut Matrix, d_ls: &mut Matrix) {
    let inv_b = weight / post.batch() as f64;
    for (((m, ls), gm), gl) in post
        .mu
        .as_slice()
        .iter()
        .zip(post.log_sigma.as_slice())
        .zip(d_mu.as_mut_slice())
        .zip(d_ls.as_mut_slice())
    {
        *gm += inv_b * m;
        *gl += inv_b * (Float::exp(2.0 * ls) - 1.0);
    }
}

/// Norm floor below which [`ortho`] treats a vector as zero.
pub const ORTHO_EPS: f64 = 1e-12;

/// Squared cosine similarity `(u·v)² / (‖u‖² ‖v‖²)`; `None` when either
/// norm is below [`ORTHO_EPS`].
pub fn ortho(u: &[f64], v: &[f64]) -> Option<f64> {
    debug_assert_eq!(u.len(), v.len());
    let a: f64 = u.iter().map(|x| x * x).sum();
    let b: f64 = v.iter().map(|x| x * x).sum();
    if Float::sqrt(a) < ORTHO_EPS || Float::sqrt(b) < ORTHO_EPS {
        return None;
    }
    let s: f64 = u.iter().zip(v).map(|(x, y)| x * y).sum();
    Some((s * s / (a * b)).min(1.0))
}

/// Row-averaged [`ortho`]. Degenerate rows contribute zero and are counted.
pub fn ortho_batch(u: &Matrix, v: &Matrix) -> Result<(f64, usize)> {
    if u.shape() != v.shape() {
        return shape_err("ortho_batch", u.shape(), v.shape());
    }
    let mut total = 0.0;
    let mut degenerate = 0;
    for (ru, rv) in u.row_iter().zip(v.row_iter()) {
        match ortho(ru, rv) {
            Some(o) => total += o,
            None => degenerate += 1,
        }
    }
    let b = u.rows().max(1) as f64;
    Ok((total / b, degenerate))
}

/// Adds `weight · ∂ortho_batch/∂(u, v)` to `(du, dv)`.
pub(crate) fn ortho_batch_grad(u: &Matrix, v: &Matrix, weight: f64, du: &mut Matrix, dv: &mut Matrix) {
    let scale = weight / u.rows().max(1) as f64;
    for i in 0..u.rows() {
        let (ru, rv) = (u.row(i), v.row(i));
        let a: f64 = ru.iter().map(|x| x * x).sum();
        let b: f64 = rv.iter().map(|x| x * x).sum();
        if Float::sqrt(a) < ORTHO_EPS || Float::sqrt(b) < ORTHO_EPS {
            continue;
        }
        let s: f64 = ru.iter().zip(rv).map(|(x, y)| x * y).sum();
        let f = s * s / (a * b);
        let cu = 2.0 * s / (a * b);
        let gu = du.row_mut(i);
        for k in 0..ru.len() {
            gu[k] += scale * (cu * rv[k] - 2.0 * f / a * ru[k]);
        }
        let gv = dv.row_mut(i);
        for k in 0..rv.len() {
            gv[k] += scale * (cu * ru[k] - 2.0 * f / b * rv[k]);
        }
    }
}

/// Mean squared error over all entries.
pub fn mse(a: &Matrix, b: &Matrix) -> Result<f64> {
    if a.shape() != b.shape() {
        return shape_err("mse", a.shape(), b.shape());
    }
    let n = a.as_slice().len().max(1) as f64;
    Ok(a
        .as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        / n)
}

/// `weight · ∂mse(a, b)/∂a`; the gradient with respect to `b` is its negation.
pub(crate) fn mse_grad(a: &Matrix, b: &Matrix, weight: f64) -> Matrix {
    let n = a.as_slice().len().max(1) as f64;
    let data: Vec<f64> = a
        .as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| weight * 2.0 * (x - y) / n)
        .collect();
    Matrix::from_vec(a.rows(), a.cols(), data).expect("same shape")
}
