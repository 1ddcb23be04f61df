//! Semisupervised adversarial active learning for node classification on
//! attributed graphs.
//!
//! A two-layer GCN embeds every node; a discriminator with `K` class logits
//! and an implicit zero "unlabeled" logit learns to separate the
//! pseudo-labeled pool from the pseudo-unlabeled one. The node the
//! discriminator finds least labeled-looking is queried next.
//!
//! Module map:
//! - [`graph_data`]: bundles on disk, synthetic graphs, normalization, splits
//! - [`numerics`]: matrices, kernels, Adam, random streams, gradient checks
//! - [`embedder`]: the GCN and its hand-derived backward pass
//! - [`pool`]: confidence-based pool tuning
//! - [`discriminator`]: the semisupervised discriminator and its losses
//! - [`engine`]: the active-learning loop, baselines, ablations, final evaluation
//! - [`metrics`]: confusion tables, Micro/Macro-F1, aggregation
//! - [`experiment`]: seeded experiment grids, sweeps, timing, CSV/JSON output

pub mod diagnostics;
pub mod discriminator;
pub mod embedder;
pub mod engine;
pub mod error;
pub mod experiment;
pub mod graph_data;
pub mod metrics;
pub mod numerics;
pub mod pool;

pub use error::{Error, Result};
