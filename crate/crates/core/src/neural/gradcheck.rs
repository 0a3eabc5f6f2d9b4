use alloc::vec::Vec;

use num_traits::Float;

/// Outcome of a central-difference gradient check.
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheck {
    pub max_rel_error: f64,
    /// Parameter index attaining the maximum.
    pub worst_index: usize,
    pub analytic: Vec<f64>,
    pub numeric: Vec<f64>,
}

/// Compares the analytic gradient of `value_and_grad` at `params` with
/// central differences of step `h`. The per-coordinate error is
/// `|a - d| / max(|a|, |d|, 1e-12)`.
pub fn grad_check<F>(mut value_and_grad: F, params: &[f64], h: f64) -> GradCheck
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let (_, analytic) = value_and_grad(params);
    let mut probe = params.to_vec();
    let mut numeric = Vec::with_capacity(params.len());
    for i in 0..params.len() {
        let orig = probe[i];
        probe[i] = orig + h;
        let plus = value_and_grad(&probe).0;
        probe[i] = orig - h;
        let minus = value_and_grad(&probe).0;
        probe[i] = orig;
        numeric.push((plus - minus) / (2.0 * h));
    }
    let mut worst = (0.0, 0);
    for (i, (a, d)) in analytic.iter().zip(&numeric).enumerate() {
        let denom = Float::abs(*a).max(Float::abs(*d)).max(1e-12);
        let err = Float::abs(a - d) / denom;
        if err > worst.0 || err.is_nan() {
            worst = (err, i);
        }
    }
    GradCheck {
        max_rel_error: worst.0,
        worst_index: worst.1,
        analytic,
        numeric,
    }
}
