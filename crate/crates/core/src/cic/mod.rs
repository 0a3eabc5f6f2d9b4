//! The dual variational autoencoder and the CIC index.

mod config;
mod model;
mod posterior;
mod report;
mod train;

pub use config::CicConfig;
pub use model::{BatchNoise, CicModel, LatentSplit, LossParts};
pub use posterior::{
    kl_to_standard_normal, mse, ortho, ortho_batch, reparameterize, reparameterize_with, standard_normal,
    GaussianPosterior, ORTHO_EPS,
};
pub use report::{
    cic_index, cic_score, fit_direction, infer_pair, reconstruct_confounder, CicReport, PairInference,
    ReconDiagnostics, Verdict,
};
pub use train::{train, TrainedModel};
