//! Derandomized model-X knockoffs with e-values.
//!
//! This crate implements FDR-controlled variable selection by aggregating
//! knockoff runs through e-values. A single knockoff filter run is sensitive
//! to the random draw of the knockoff matrix; here each run is converted into
//! a vector of e-values, the e-values are averaged over independent runs, and
//! the e-BH procedure is applied to the average. The aggregated selection
//! keeps finite-sample FDR control at the target level while removing most of
//! the run-to-run variability.
//!
//! The main entry points are:
//!
//! - [`filter::derandomized_knockoffs`]: the full pipeline for model-X
//!   Gaussian designs,
//! - [`filter::knockoff_filter`] and [`filter::ebh`]: the classic single-run
//!   filter and the e-BH procedure it is equivalent to,
//! - [`extensions`]: fixed-X designs, multi-environment filters, side
//!   information (weighted and adaptively screened e-values), and a
//!   robustness diagnostic for misspecified knockoff samplers,
//! - [`harness`]: a reproducible simulation harness with power/FDR and
//!   selection-variability metrics,
//! - [`ingest`]: CSV loading and cleaning plus a real-data pipeline.
//!
//! Every randomized operation takes an explicit [`numerics::RngStream`], so
//! results are reproducible bit-for-bit and independent of thread scheduling.
//!
//! Run `cargo run --example <name>` for end-to-end demonstrations; see the
//! `examples/` directory, one per major capability.

pub mod error;
pub mod extensions;
pub mod filter;
pub mod harness;
pub mod ingest;
pub mod knockoffs;
pub mod numerics;
pub mod stats;

pub mod cli;

pub use error::{Error, Result};
