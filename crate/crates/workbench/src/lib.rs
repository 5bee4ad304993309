//! Batch workbench for length and Laplace spectra: a `liouville` binary
//! whose subcommands write CSV tables and a `summary.json` per job.

// `!(x > 0.0)` rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cache;
pub mod commands;
pub mod config;
pub mod error;
pub mod metric_file;
pub mod output;
pub mod suite;
