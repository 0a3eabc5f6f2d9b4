use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use num_traits::Float;

use super::special::f_sf;
use crate::error::{Error, Result};

/// Score ceiling in `-log10 p` units.
pub const MAX_SCORE: f64 = 16.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrangerResult {
    pub f_statistic: f64,
    pub p_value: f64,
    /// `-log10 p`, capped at [`MAX_SCORE`].
    pub score: f64,
    pub df_num: usize,
    pub df_den: usize,
}

impl GrangerResult {
    /// Score mapped into `[0, 1]`.
    pub fn normalized(&self) -> f64 {
        (self.score / MAX_SCORE).min(1.0)
    }
}

/// F-test of whether lags of `x` improve an AR(`order`) model of `y`.
pub fn granger(x: &[f64], y: &[f64], order: usize) -> Result<GrangerResult> {
    if order == 0 {
        return Err(Error::InvalidConfig("Granger order must be at least 1".into()));
    }
    if x.len() != y.len() {
        return Err(Error::Shape {
            context: "granger",
            expected: (y.len(), 1),
            found: (x.len(), 1),
        });
    }
    if x.len() <= 10 * order {
        return Err(Error::ShortSeries {
            length: x.len(),
            required: 10 * order + 1,
        });
    }
    let n = x.len() - order;
    let response = DVector::from_iterator(n, y[order..].iter().copied());
    let restricted = design(x, y, order, false);
    let full = design(x, y, order, true);
    let rss_r = rss(&restricted, &response)?;
    let rss_f = rss(&full, &response)?;
    let df_num = order;
    let df_den = n - 2 * order - 1;
    let f = if rss_f <= 0.0 {
        f64::INFINITY
    } else {
        ((rss_r - rss_f).max(0.0) / df_num as f64) / (rss_f / df_den as f64)
    };
    let p = f_sf(f, df_num as f64, df_den as f64).clamp(0.0, 1.0);
    let score = if p <= 0.0 {
        MAX_SCORE
    } else {
        (-Float::log10(p)).clamp(0.0, MAX_SCORE)
    };
    Ok(GrangerResult {
        f_statistic: f,
        p_value: p,
        score,
        df_num,
        df_den,
    })
}

fn design(x: &[f64], y: &[f64], order: usize, with_x: bool) -> DMatrix<f64> {
    let n = x.len() - order;
    let cols = 1 + order + if with_x { order } else { 0 };
    DMatrix::from_fn(n, cols, |r, c| {
        let t = r + order;
        match c {
            0 => 1.0,
            c if c <= order => y[t - c],
            c => x[t - (c - order)],
        }
    })
}

fn rss(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<f64> {
    let qr = a.clone().qr();
    let r = qr.r();
    let diag: Vec<f64> = r.diagonal().iter().map(|v| Float::abs(*v)).collect();
    let max = diag.iter().copied().fold(0.0, f64::max);
    if diag.iter().any(|d| *d <= 1e-9 * max) {
        return Err(Error::Singular("collinear regressors"));
    }
    let qtb = qr.q().transpose() * b;
    let coef = r
        .solve_upper_triangular(&qtb)
        .ok_or(Error::Singular("least-squares solve failed"))?;
    let resid = b - a * coef;
    Ok(resid.dot(&resid))
}
