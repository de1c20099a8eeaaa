//! One entry point per clustering method, shared by the command-line tool,
//! the examples and the benchmark harness.

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::baselines::{kmeans, spectral_modularity};
use crate::dmon::{harden, train, DmonModel, LossBreakdown, Propagated, TrainConfig};
use crate::error::{Error, Result};
use crate::graph::SparseGraph;
use crate::metrics::HardPartition;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Dmon,
    Kmeans,
    Spectral,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Dmon, Method::Kmeans, Method::Spectral];

    pub fn name(self) -> &'static str {
        match self {
            Method::Dmon => "dmon",
            Method::Kmeans => "kmeans",
            Method::Spectral => "spectral",
        }
    }

    pub fn needs_features(self) -> bool {
        !matches!(self, Method::Spectral)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown method `{s}`")))
    }
}

/// Hyperparameters of a DMoN run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DmonSettings {
    pub hidden: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub dropout: f64,
}

impl DmonSettings {
    pub const HIDDEN_REAL: usize = 512;
    pub const HIDDEN_SYNTHETIC: usize = 64;

    /// Settings for small synthetic graphs.
    pub fn synthetic() -> Self {
        DmonSettings {
            hidden: Self::HIDDEN_SYNTHETIC,
            ..Self::default()
        }
    }
}

impl Default for DmonSettings {
    fn default() -> Self {
        DmonSettings {
            hidden: Self::HIDDEN_REAL,
            epochs: 200,
            learning_rate: 1e-3,
            dropout: 0.5,
        }
    }
}

const KMEANS_MAX_ITERS: usize = 300;

// weights come from stream 0 of the run seed; dropout masks from a generator
// seeded with the run seed offset by 2^32
const INIT_STREAM: u64 = 0;
const DROPOUT_SEED_OFFSET: u64 = 1 << 32;

#[derive(Debug, Clone)]
pub struct DmonRun {
    pub model: DmonModel,
    pub history: Vec<LossBreakdown>,
    pub partition: HardPartition,
}

/// Initializes, trains and hardens a DMoN model with `k` output clusters.
pub fn fit_dmon(
    graph: &SparseGraph,
    features: &Array2<f64>,
    k: usize,
    settings: &DmonSettings,
    seed: u64,
) -> Result<DmonRun> {
    let inputs = Propagated::new(&graph.normalized_adjacency(), features.clone())?;
    let mut init_rng = ChaCha8Rng::seed_from_u64(seed);
    init_rng.set_stream(INIT_STREAM);
    let mut model = DmonModel::new(
        features.ncols(),
        settings.hidden,
        k,
        settings.dropout,
        &mut init_rng,
    )?;
    let config = TrainConfig {
        epochs: settings.epochs,
        learning_rate: settings.learning_rate,
        seed: seed.wrapping_add(DROPOUT_SEED_OFFSET),
    };
    let history = train(&mut model, graph, &inputs, &config)?;
    let partition = harden(&model.predict(&inputs)?);
    Ok(DmonRun {
        model,
        history,
        partition,
    })
}

/// Result of one method run. `history` is only filled for DMoN.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub partition: HardPartition,
    pub history: Option<Vec<LossBreakdown>>,
}

/// Runs `method` with `k` clusters. k-means reads only the features,
/// spectral only the graph.
pub fn run_method(
    method: Method,
    graph: &SparseGraph,
    features: Option<&Array2<f64>>,
    k: usize,
    settings: &DmonSettings,
    seed: u64,
) -> Result<RunOutcome> {
    let require_features =
        || features.ok_or_else(|| Error::Config(format!("method `{method}` needs node features")));
    match method {
        Method::Dmon => {
            let run = fit_dmon(graph, require_features()?, k, settings, seed)?;
            Ok(RunOutcome {
                partition: run.partition,
                history: Some(run.history),
            })
        }
        Method::Kmeans => {
            let x = require_features()?;
            if x.nrows() != graph.num_nodes() {
                return Err(Error::Shape(format!(
                    "{} feature rows for {} nodes",
                    x.nrows(),
                    graph.num_nodes()
                )));
            }
            Ok(RunOutcome {
                partition: kmeans(x.view(), k, seed, KMEANS_MAX_ITERS)?.assignments,
                history: None,
            })
        }
        Method::Spectral => Ok(RunOutcome {
            partition: spectral_modularity(graph, k, seed)?,
            history: None,
        }),
    }
}
