//! Small dense-network engine: tanh MLPs, exact reverse-mode gradients,
//! Adam, and a finite-difference checker.

mod adam;
mod gradcheck;
mod mlp;

pub use adam::AdamState;
pub use gradcheck::{grad_check, GradCheck};
pub use mlp::{Activation, Dense, Mlp, MlpGrads, Tape};
pub(crate) use mlp::{next_line, parse_num};
