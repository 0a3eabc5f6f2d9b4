//! Reference detectors: linear Granger causality and convergent cross mapping.

mod ccm;
mod granger;
pub mod special;

pub use ccm::{ccm, cross_map, library_grid, CcmPair, CcmResult, CONVERGENCE_SKILL};
pub use granger::{granger, GrangerResult, MAX_SCORE};
