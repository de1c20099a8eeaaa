//! Attributed degree-corrected stochastic block model (ADC-SBM).
//!
//! Graph memberships are uniform over `k` blocks. Edge counts between
//! blocks are Poisson with means chosen so that the expected mean degree is
//! `avg_degree` and the expected number of neighbours outside a node's own
//! block is `d_out`. Endpoints are drawn inside each block proportionally to
//! power-law degree propensities. Features are a Gaussian mixture whose
//! components match, nest within, or group the graph blocks.

use std::path::Path;

use ndarray::Array2;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::SparseGraph;
use crate::io;
use crate::metrics::HardPartition;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureMode {
    /// One feature cluster per graph cluster.
    Matched,
    /// Each graph cluster split into `k_f / k` feature clusters.
    Nested,
    /// Runs of `k / k_f` consecutive graph clusters share a feature cluster.
    Grouped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdcSbmConfig {
    pub n: usize,
    pub k: usize,
    pub avg_degree: f64,
    pub d_out: f64,
    pub d_min: f64,
    pub d_max: f64,
    pub alpha: f64,
    pub num_features: usize,
    pub k_f: usize,
    pub feature_mode: FeatureMode,
    /// Standard deviation of the feature cluster centers.
    pub center_std: f64,
    /// Standard deviation of features around their center.
    pub within_std: f64,
    pub seed: u64,
    /// Read `d_out` as the expected degree into each foreign block rather
    /// than the total over all of them.
    #[serde(default)]
    pub d_out_per_cluster: bool,
}

impl Default for AdcSbmConfig {
    fn default() -> Self {
        AdcSbmConfig {
            n: 1000,
            k: 4,
            avg_degree: 20.0,
            d_out: 2.0,
            d_min: 2.0,
            d_max: 4.0,
            alpha: 2.0,
            num_features: 32,
            k_f: 4,
            feature_mode: FeatureMode::Matched,
            center_std: 3.0,
            within_std: 1.0,
            seed: 0,
            d_out_per_cluster: false,
        }
    }
}

impl AdcSbmConfig {
    /// Expected number of a node's neighbours outside its own block.
    pub fn total_d_out(&self) -> f64 {
        if self.d_out_per_cluster {
            self.d_out * self.k.saturating_sub(1) as f64
        } else {
            self.d_out
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.k < 2 {
            return fail(format!("need k >= 2, got {}", self.k));
        }
        if self.n < self.k {
            return fail(format!("n = {} is smaller than k = {}", self.n, self.k));
        }
        if !(self.avg_degree > 0.0) {
            return fail(format!(
                "average degree must be positive, got {}",
                self.avg_degree
            ));
        }
        if !(self.d_out >= 0.0 && self.total_d_out() <= self.avg_degree) {
            return fail(format!(
                "total out-degree {} must lie in [0, d = {}]",
                self.total_d_out(),
                self.avg_degree
            ));
        }
        if !(self.d_min > 0.0 && self.d_min <= self.d_max) {
            return fail(format!(
                "need 0 < d_min <= d_max, got {} and {}",
                self.d_min, self.d_max
            ));
        }
        if self.k_f == 0 || self.num_features == 0 {
            return fail("feature dimension and k_f must be positive".into());
        }
        if self.center_std < 0.0 || self.within_std < 0.0 {
            return fail("standard deviations must be non-negative".into());
        }
        match self.feature_mode {
            FeatureMode::Matched if self.k_f != self.k => fail(format!(
                "matched features need k_f = k, got {} vs {}",
                self.k_f, self.k
            )),
            FeatureMode::Nested if !self.k_f.is_multiple_of(self.k) => fail(format!(
                "nested features need k_f multiple of k, got {} vs {}",
                self.k_f, self.k
            )),
            FeatureMode::Grouped if !self.k.is_multiple_of(self.k_f) => fail(format!(
                "grouped features need k multiple of k_f, got {} vs {}",
                self.k, self.k_f
            )),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticInstance {
    pub graph: SparseGraph,
    pub features: Array2<f64>,
    pub graph_labels: HardPartition,
    pub feature_labels: HardPartition,
}

// independent random streams per generation stage
const MEMBERSHIP_STREAM: u64 = 0;
const GRAPH_STREAM: u64 = 1;
const FEATURE_STREAM: u64 = 2;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Sample from the density proportional to `x^-alpha` on `[lo, hi]` by
/// inverting its CDF.
pub fn sample_truncated_power_law<R: Rng + ?Sized>(
    lo: f64,
    hi: f64,
    alpha: f64,
    rng: &mut R,
) -> f64 {
    if lo == hi {
        return lo;
    }
    let u: f64 = rng.random();
    if (alpha - 1.0).abs() < 1e-12 {
        lo * (hi / lo).powf(u)
    } else {
        let e = 1.0 - alpha;
        let (a, b) = (lo.powf(e), hi.powf(e));
        (a + u * (b - a)).powf(1.0 / e)
    }
}

/// Expected edge counts between blocks given realized block sizes:
/// `n_r (d - d_out) / 2` inside block `r` and `d_out (n_r + n_s) / (2 (k - 1))`
/// between blocks `r != s`.
pub fn block_edge_means(sizes: &[usize], avg_degree: f64, d_out: f64) -> Array2<f64> {
    let k = sizes.len();
    let mut means = Array2::zeros((k, k));
    for r in 0..k {
        for s in 0..k {
            means[[r, s]] = if r == s {
                sizes[r] as f64 * (avg_degree - d_out) / 2.0
            } else {
                d_out * (sizes[r] + sizes[s]) as f64 / (2.0 * (k - 1) as f64)
            };
        }
    }
    means
}

fn poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> Result<u64> {
    if mean <= 0.0 {
        return Ok(0);
    }
    let dist =
        Poisson::new(mean).map_err(|e| Error::Config(format!("poisson mean {mean}: {e}")))?;
    Ok(dist.sample(rng) as u64)
}

pub fn generate(cfg: &AdcSbmConfig) -> Result<SyntheticInstance> {
    cfg.validate()?;
    let mut membership_rng = stream(cfg.seed, MEMBERSHIP_STREAM);
    let labels: Vec<usize> = (0..cfg.n)
        .map(|_| membership_rng.random_range(0..cfg.k))
        .collect();
    let graph_labels = HardPartition::new(labels, cfg.k)?;

    let mut graph_rng = stream(cfg.seed, GRAPH_STREAM);
    let propensity: Vec<f64> = (0..cfg.n)
        .map(|_| sample_truncated_power_law(cfg.d_min, cfg.d_max, cfg.alpha, &mut graph_rng))
        .collect();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); cfg.k];
    for (node, &c) in graph_labels.assignments().iter().enumerate() {
        members[c].push(node);
    }
    let samplers: Vec<Option<WeightedIndex<f64>>> = members
        .iter()
        .map(|block| {
            if block.is_empty() {
                None
            } else {
                WeightedIndex::new(block.iter().map(|&i| propensity[i])).ok()
            }
        })
        .collect();
    let sizes: Vec<usize> = members.iter().map(Vec::len).collect();
    let means = block_edge_means(&sizes, cfg.avg_degree, cfg.total_d_out());
    let mut edges = Vec::new();
    for r in 0..cfg.k {
        for s in r..cfg.k {
            let count = poisson(means[[r, s]], &mut graph_rng)?;
            let (Some(sr), Some(ss)) = (&samplers[r], &samplers[s]) else {
                continue;
            };
            for _ in 0..count {
                let u = members[r][sr.sample(&mut graph_rng)];
                let v = members[s][ss.sample(&mut graph_rng)];
                edges.push((u, v));
            }
        }
    }
    let (graph, stats) = SparseGraph::from_edges(cfg.n, edges)?;
    log::debug!(
        "adc-sbm seed {}: {} edges, {} multi-edges collapsed, {} self-loops dropped",
        cfg.seed,
        graph.num_edges(),
        stats.duplicates,
        stats.self_loops
    );

    let mut feature_rng = stream(cfg.seed, FEATURE_STREAM);
    let (features, feature_labels) = sample_features(&graph_labels, cfg, &mut feature_rng)?;
    Ok(SyntheticInstance {
        graph,
        features,
        graph_labels,
        feature_labels,
    })
}

/// Derives feature memberships from graph memberships, draws `k_f` centers
/// from `N(0, center_std² I)` and each node's features from
/// `N(center, within_std² I)`.
pub fn sample_features<R: Rng + ?Sized>(
    graph_labels: &HardPartition,
    cfg: &AdcSbmConfig,
    rng: &mut R,
) -> Result<(Array2<f64>, HardPartition)> {
    cfg.validate()?;
    if graph_labels.num_clusters() != cfg.k {
        return Err(Error::Config(format!(
            "graph labels have {} clusters, config says {}",
            graph_labels.num_clusters(),
            cfg.k
        )));
    }
    let feature_ids: Vec<usize> = match cfg.feature_mode {
        FeatureMode::Matched => graph_labels.assignments().to_vec(),
        FeatureMode::Nested => {
            let split = cfg.k_f / cfg.k;
            graph_labels
                .assignments()
                .iter()
                .map(|&c| c * split + rng.random_range(0..split))
                .collect()
        }
        FeatureMode::Grouped => {
            let group = cfg.k / cfg.k_f;
            graph_labels
                .assignments()
                .iter()
                .map(|&c| c / group)
                .collect()
        }
    };
    let feature_labels = HardPartition::new(feature_ids, cfg.k_f)?;

    let s = cfg.num_features;
    let standard = Normal::new(0.0, 1.0).expect("unit normal");
    let centers =
        Array2::from_shape_simple_fn((cfg.k_f, s), || cfg.center_std * standard.sample(rng));
    let mut features = Array2::zeros((graph_labels.len(), s));
    for (i, mut row) in features.rows_mut().into_iter().enumerate() {
        let center = centers.row(feature_labels.cluster_of(i));
        for (x, &mu) in row.iter_mut().zip(center.iter()) {
            *x = mu + cfg.within_std * standard.sample(rng);
        }
    }
    Ok((features, feature_labels))
}

/// Value of `d_out` at which `d_in - d_out = k √d` with `d_in = d - d_out`,
/// clamped at zero.
pub fn detectability_threshold(cfg: &AdcSbmConfig) -> f64 {
    let d = cfg.avg_degree;
    ((d - cfg.k as f64 * d.sqrt()) / 2.0).max(0.0)
}

/// The swept parameter of a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweptParameter {
    DOut,
    CenterStd,
    AvgDegree,
    DMax,
}

impl SweptParameter {
    pub fn name(self) -> &'static str {
        match self {
            SweptParameter::DOut => "d_out",
            SweptParameter::CenterStd => "center_std",
            SweptParameter::AvgDegree => "avg_degree",
            SweptParameter::DMax => "d_max",
        }
    }
}

/// One of the six benchmark sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Scenario(u8);

impl Scenario {
    pub fn new(id: u8) -> Result<Self> {
        if (1..=6).contains(&id) {
            Ok(Scenario(id))
        } else {
            Err(Error::Config(format!(
                "scenario must be in 1..=6, got {id}"
            )))
        }
    }

    pub fn id(self) -> u8 {
        self.0
    }

    pub fn parameter(self) -> SweptParameter {
        match self.0 {
            1 => SweptParameter::DOut,
            2..=4 => SweptParameter::CenterStd,
            5 => SweptParameter::AvgDegree,
            _ => SweptParameter::DMax,
        }
    }

    /// Sweep endpoints and whether the grid is log-spaced.
    pub fn range(self) -> (f64, f64, bool) {
        match self.parameter() {
            SweptParameter::DOut => (2.0, 5.0, false),
            SweptParameter::CenterStd => (1e-2, 1e1, true),
            SweptParameter::AvgDegree => (4.0, 128.0, true),
            SweptParameter::DMax => (4.0, 1024.0, true),
        }
    }

    pub fn grid(self, points: usize) -> Vec<f64> {
        let (lo, hi, log) = self.range();
        if points <= 1 {
            return vec![lo];
        }
        let last = (points - 1) as f64;
        (0..points)
            .map(|i| {
                let t = i as f64 / last;
                if i == 0 {
                    lo
                } else if i == points - 1 {
                    hi
                } else if log {
                    (lo.ln() + t * (hi.ln() - lo.ln())).exp()
                } else {
                    lo + t * (hi - lo)
                }
            })
            .collect()
    }

    /// `base` with the swept parameter set to `value` and this scenario's
    /// feature layout.
    pub fn configure(self, base: &AdcSbmConfig, value: f64) -> AdcSbmConfig {
        let mut cfg = base.clone();
        match self.0 {
            2 => {
                cfg.feature_mode = FeatureMode::Matched;
                cfg.k_f = cfg.k;
            }
            3 => {
                cfg.feature_mode = FeatureMode::Nested;
                cfg.k_f = 2 * cfg.k;
            }
            4 => {
                cfg.feature_mode = FeatureMode::Grouped;
                cfg.k_f = (cfg.k / 2).max(1);
            }
            _ => {}
        }
        match self.parameter() {
            SweptParameter::DOut => cfg.d_out = value,
            SweptParameter::CenterStd => cfg.center_std = value,
            SweptParameter::AvgDegree => cfg.avg_degree = value,
            SweptParameter::DMax => cfg.d_max = value,
        }
        cfg
    }
}

/// A grid point of a sweep with its configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub scenario: u8,
    pub point: usize,
    pub param: f64,
    pub seed: u64,
    pub config: AdcSbmConfig,
}

/// Configurations for every grid point and seed, ordered by point then
/// seed. Seeds are `base.seed .. base.seed + seeds`, shared across points.
pub fn scenario_cells(
    scenario: Scenario,
    grid_points: usize,
    seeds: usize,
    base: &AdcSbmConfig,
) -> Result<Vec<SweepCell>> {
    let mut cells = Vec::with_capacity(grid_points * seeds);
    for (point, param) in scenario.grid(grid_points).into_iter().enumerate() {
        for j in 0..seeds as u64 {
            let mut config = scenario.configure(base, param);
            config.seed = base.seed + j;
            config.validate()?;
            cells.push(SweepCell {
                scenario: scenario.id(),
                point,
                param,
                seed: config.seed,
                config,
            });
        }
    }
    Ok(cells)
}

/// Generates every instance of a sweep around the default configuration.
pub fn scenario_sweep(
    scenario: u8,
    grid_points: usize,
    seeds: usize,
) -> Result<Vec<(SweepCell, SyntheticInstance)>> {
    let scenario = Scenario::new(scenario)?;
    scenario_cells(scenario, grid_points, seeds, &AdcSbmConfig::default())?
        .into_iter()
        .map(|cell| {
            let instance = generate(&cell.config)?;
            Ok((cell, instance))
        })
        .collect()
}

/// Writes `edges.tsv`, `features.csv`, `graph_labels.txt`,
/// `feature_labels.txt` and `config.json` into `dir`, creating it if needed.
pub fn write_instance(
    dir: impl AsRef<Path>,
    cfg: &AdcSbmConfig,
    instance: &SyntheticInstance,
) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    io::write_edge_list(dir.join(io::EDGES_FILE), &instance.graph)?;
    io::write_features(dir.join(io::FEATURES_FILE), &instance.features)?;
    io::write_partition(dir.join(io::GRAPH_LABELS_FILE), &instance.graph_labels)?;
    io::write_partition(dir.join(io::FEATURE_LABELS_FILE), &instance.feature_labels)?;
    let json = serde_json::to_string_pretty(cfg)?;
    io::write_string(&dir.join(io::CONFIG_FILE), &format!("{json}\n"))
}
