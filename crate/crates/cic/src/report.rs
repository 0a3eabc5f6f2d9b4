//! JSON and CSV renderings of inference results.

use cic_core::cic::{CicReport, PairInference, ReconDiagnostics, Verdict};
use serde::Serialize;

use crate::io::fmt_f64;

#[derive(Debug, Clone, Serialize)]
pub struct DirectionJson {
    pub cause: String,
    pub effect: String,
    pub score: f64,
    pub norm_private: f64,
    pub norm_shared: f64,
    pub verdict: Verdict,
    pub diagnostics: ReconDiagnostics,
    pub samples: usize,
    pub loss_history: Vec<f64>,
}

impl DirectionJson {
    pub fn new(cause: &str, effect: &str, r: &CicReport) -> Self {
        Self {
            cause: cause.into(),
            effect: effect.into(),
            score: r.score,
            norm_private: r.norm_private,
            norm_shared: r.norm_shared,
            verdict: r.verdict,
            diagnostics: r.diagnostics,
            samples: r.shared_series.rows(),
            loss_history: r.loss_history.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PairJson {
    pub x: String,
    pub y: String,
    pub m: f64,
    #[serde(rename = "M")]
    pub upper_m: f64,
    pub xy: DirectionJson,
    pub yx: DirectionJson,
    /// Both directions fall in the confounded band.
    pub confounder: bool,
}

impl PairJson {
    pub fn new(x: &str, y: &str, p: &PairInference) -> Self {
        Self {
            x: x.into(),
            y: y.into(),
            m: p.model_xy.config.m,
            upper_m: p.model_xy.config.upper_m,
            xy: DirectionJson::new(x, y, &p.report_xy),
            yx: DirectionJson::new(y, x, &p.report_yx),
            confounder: p.confounded(),
        }
    }
}

/// `t,shared1,...` with `t` the effect time index of each sample.
pub fn shared_series_csv(r: &CicReport) -> String {
    let mut s = String::from("t");
    for k in 1..=r.shared_series.cols() {
        s.push_str(&format!(",shared{k}"));
    }
    s.push('\n');
    for (t, row) in r.sample_times.iter().zip(r.shared_series.row_iter()) {
        s.push_str(&t.to_string());
        for v in row {
            s.push(',');
            s.push_str(&fmt_f64(*v));
        }
        s.push('\n');
    }
    s
}

/// `epoch,loss_xy,loss_yx`; a direction that stopped early leaves blanks.
pub fn loss_csv(xy: &[f64], yx: &[f64]) -> String {
    let mut s = String::from("epoch,loss_xy,loss_yx\n");
    let cell = |h: &[f64], e: usize| h.get(e).map(|v| fmt_f64(*v)).unwrap_or_default();
    for e in 0..xy.len().max(yx.len()) {
        s.push_str(&format!("{},{},{}\n", e + 1, cell(xy, e), cell(yx, e)));
    }
    s
}
