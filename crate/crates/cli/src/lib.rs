//! Experiment driver for manifold-guided dataset distillation: JSON
//! configs, seeded runs with on-disk artifacts, ablation sweeps and SVG
//! figures.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ablate;
pub mod config;
pub mod plot;
pub mod run;
pub mod svg;

pub use config::ExperimentConfig;
