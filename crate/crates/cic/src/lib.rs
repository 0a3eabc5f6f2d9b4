//! File formats and the command-line front end for `cic-core`.
#![allow(clippy::needless_range_loop)]
#![allow(clippy::single_range_in_vec_init)]

pub mod cli;
pub mod config;
pub mod io;
pub mod report;
pub mod seed;
pub mod tables;
