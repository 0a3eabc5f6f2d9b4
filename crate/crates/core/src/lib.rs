//! Causal inference from time series through a dual variational
//! autoencoder that separates each variable's private dynamics from the
//! dynamics it shares with a partner, plus the baselines, benchmark
//! systems and scoring used to evaluate it.
#![cfg_attr(not(feature = "std"), no_std)]
// Segment lists are vectors of ranges; NaN-aware comparisons are negated on purpose.
#![allow(clippy::single_range_in_vec_init, clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

pub mod baselines;
pub mod benchmarks;
pub mod cic;
pub mod embedding;
pub mod error;
pub mod evaluation;
pub mod matrix;
pub mod neural;
pub mod series;

pub use error::{Error, Result};
pub use matrix::Matrix;
pub use series::TimeSeries;
