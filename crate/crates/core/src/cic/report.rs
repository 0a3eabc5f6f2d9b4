use alloc::vec::Vec;

use super::config::CicConfig;
use super::train::{train, TrainedModel};
use crate::embedding::{embed_pair, EmbeddingConfig};
use crate::error::Result;
use crate::matrix::Matrix;
use crate::series::TimeSeries;

/// Directional verdict read off a CIC score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Verdict {
    NonCausal,
    Confounded,
    Causal,
}

impl Verdict {
    /// `[0, m]` is non-causal, `(m, upper)` confounded, `[upper, 1]` causal.
    pub fn from_score(score: f64, m: f64, upper: f64) -> Self {
        if score <= m {
            Verdict::NonCausal
        } else if score < upper {
            Verdict::Confounded
        } else {
            Verdict::Causal
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::NonCausal => "non-causal",
            Verdict::Confounded => "confounded",
            Verdict::Causal => "causal",
        }
    }
}

/// Reconstruction errors (MSE against the cause windows) of `D_x` fed
/// with posterior means.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ReconDiagnostics {
    /// Private and shared latents.
    pub full: f64,
    /// Shared latent only, private block zeroed.
    pub shared_only: f64,
    /// Private latent only, shared block zeroed.
    pub private_only: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CicReport {
    pub score: f64,
    pub norm_private: f64,
    pub norm_shared: f64,
    pub verdict: Verdict,
    /// Shared posterior means from the cause encoder, one row per sample.
    pub shared_series: Matrix,
    pub sample_times: Vec<usize>,
    pub loss_history: Vec<f64>,
    pub diagnostics: ReconDiagnostics,
}

/// Norm floor below which both norms count as zero and the score is 0.
const NORM_FLOOR: f64 = 1e-12;

/// `norm_shared / (norm_private + norm_shared)`, 0 when both vanish.
pub fn cic_score(norm_private: f64, norm_shared: f64) -> f64 {
    if norm_private < NORM_FLOOR && norm_shared < NORM_FLOOR {
        return 0.0;
    }
    (norm_shared / (norm_private + norm_shared)).clamp(0.0, 1.0)
}

/// Scores a trained model on `data`.
pub fn cic_index(trained: &TrainedModel, data: &crate::embedding::EmbeddedPairDataset) -> Result<CicReport> {
    let model = &trained.model;
    let cfg = &trained.config;
    let x = &data.cause_rows;
    let (private, shared) = model.encode_x(x)?;
    let norm_private = private.mean_norm();
    let norm_shared = shared.mean_norm();
    let score = cic_score(norm_private, norm_shared);
    let zero_p = Matrix::zeros(x.rows(), model.d_private());
    let zero_s = Matrix::zeros(x.rows(), model.d_shared());
    let mse = super::posterior::mse;
    let diagnostics = ReconDiagnostics {
        full: mse(&model.decode_x(&private.mu, &shared.mu)?, x)?,
        shared_only: mse(&model.decode_x(&zero_p, &shared.mu)?, x)?,
        private_only: mse(&model.decode_x(&private.mu, &zero_s)?, x)?,
    };
    Ok(CicReport {
        score,
        norm_private,
        norm_shared,
        verdict: Verdict::from_score(score, cfg.m, cfg.upper_m),
        shared_series: shared.mu,
        sample_times: data.sample_times.clone(),
        loss_history: trained.loss_history.clone(),
        diagnostics,
    })
}

/// Both directional fits for one pair of columns.
#[derive(Debug, Clone, PartialEq)]
pub struct PairInference {
    pub report_xy: CicReport,
    pub report_yx: CicReport,
    pub model_xy: TrainedModel,
    pub model_yx: TrainedModel,
}

impl PairInference {
    /// Both directions land in the confounded band.
    pub fn confounded(&self) -> bool {
        self.report_xy.verdict == Verdict::Confounded && self.report_yx.verdict == Verdict::Confounded
    }
}

/// Z-scores the two columns, then fits `x → y` with `cfg.seed` and
/// `y → x` with `cfg.seed + 1`.
pub fn infer_pair(
    series: &TimeSeries,
    x_col: &str,
    y_col: &str,
    emb: &EmbeddingConfig,
    cfg: &CicConfig,
) -> Result<PairInference> {
    let pair = series.select_columns(&[x_col, y_col])?.zscore()?;
    let (x, y) = (&pair.names()[0], &pair.names()[1]);
    let (report_xy, model_xy) = fit_direction(&pair, x, y, emb, cfg.clone())?;
    let cfg_yx = CicConfig {
        seed: cfg.seed.wrapping_add(1),
        ..cfg.clone()
    };
    let (report_yx, model_yx) = fit_direction(&pair, y, x, emb, cfg_yx)?;
    Ok(PairInference {
        report_xy,
        report_yx,
        model_xy,
        model_yx,
    })
}

/// Fits one direction on an already normalized series.
pub fn fit_direction(
    series: &TimeSeries,
    cause: &str,
    effect: &str,
    emb: &EmbeddingConfig,
    cfg: CicConfig,
) -> Result<(CicReport, TrainedModel)> {
    let data = embed_pair(series, cause, effect, emb)?;
    let trained = train(&data, &cfg)?;
    Ok((cic_index(&trained, &data)?, trained))
}

/// The shared latent trajectory of a directional fit.
pub fn reconstruct_confounder(report: &CicReport) -> &Matrix {
    &report.shared_series
}
