//! Unsupervised attributed-graph clustering with Deep Modularity Networks.
//!
//! The crate bundles:
//!
//! - [`graph`]: CSR graphs, symmetric normalization and sparse products,
//! - [`nn`]: the dense kernels (SeLU, softmax, dropout) with analytic
//!   gradients and Adam,
//! - [`dmon`]: the model, its modularity + collapse objective and training,
//! - [`metrics`]: modularity, conductance, NMI and pairwise F1,
//! - [`adcsbm`]: the attributed degree-corrected SBM benchmark generator,
//! - [`baselines`]: k-means++ and spectral modularity maximization,
//! - [`pipeline`]: one call per clustering method,
//! - [`cli`]: the `generate` / `cluster` / `sweep` / `eval` commands.

pub mod adcsbm;
pub mod baselines;
pub mod cli;
pub mod dmon;
pub mod error;
pub mod graph;
pub mod io;
pub mod metrics;
pub mod nn;
pub mod pipeline;

pub use error::{Error, Result};
pub use graph::{NormalizedAdjacency, SparseGraph};
pub use metrics::{HardPartition, MetricsReport};
