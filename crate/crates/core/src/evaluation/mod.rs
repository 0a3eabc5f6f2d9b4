//! Network scoring against ground truth and confounder-reconstruction metrics.

mod classify;
mod corr;
mod network;
mod roc;

pub use classify::{classify_at, quantile, Confusion, EvalSummary, Threshold};
pub use corr::{aggregate_corr, canonical_corr, pearson};
pub use network::{confounder_score, ScoredNetwork};
pub use roc::{roc_auc, RocCurve, RocPoint};
