//! Clustering quality: graph-level scores (modularity, conductance) and
//! label agreement scores (NMI, pairwise F1).

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::SparseGraph;

/// Hard cluster assignment: one id in `[0, k)` per node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HardPartition {
    assignments: Vec<usize>,
    k: usize,
}

impl HardPartition {
    pub fn new(assignments: Vec<usize>, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Config("partition needs at least one cluster".into()));
        }
        if let Some(&bad) = assignments.iter().find(|&&c| c >= k) {
            return Err(Error::Config(format!("cluster id {bad} not below k = {k}")));
        }
        Ok(HardPartition { assignments, k })
    }

    /// Uses `max id + 1` as the cluster count.
    pub fn from_labels(assignments: Vec<usize>) -> Self {
        let k = assignments.iter().max().map_or(1, |&c| c + 1);
        HardPartition { assignments, k }
    }

    pub fn single_cluster(n: usize) -> Self {
        HardPartition {
            assignments: vec![0; n],
            k: 1,
        }
    }

    pub fn singletons(n: usize) -> Self {
        HardPartition {
            assignments: (0..n).collect(),
            k: n.max(1),
        }
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    pub fn num_clusters(&self) -> usize {
        self.k
    }

    pub fn assignments(&self) -> &[usize] {
        &self.assignments
    }

    pub fn cluster_of(&self, node: usize) -> usize {
        self.assignments[node]
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &c in &self.assignments {
            sizes[c] += 1;
        }
        sizes
    }

    pub fn num_nonempty(&self) -> usize {
        self.sizes().iter().filter(|&&s| s > 0).count()
    }

    pub(crate) fn set(&mut self, node: usize, cluster: usize) {
        debug_assert!(cluster < self.k);
        self.assignments[node] = cluster;
    }
}

fn check_aligned(g: &SparseGraph, p: &HardPartition) -> Result<()> {
    if g.num_nodes() != p.len() {
        return Err(Error::Shape(format!(
            "partition has {} entries for a graph of {} nodes",
            p.len(),
            g.num_nodes()
        )));
    }
    Ok(())
}

/// Per-cluster internal edge ends (twice the internal edge count) and
/// degree volume.
fn cluster_tallies(g: &SparseGraph, p: &HardPartition) -> (Vec<f64>, Vec<f64>) {
    let mut internal = vec![0.0; p.num_clusters()];
    let mut volume = vec![0.0; p.num_clusters()];
    for u in 0..g.num_nodes() {
        let c = p.cluster_of(u);
        volume[c] += g.degrees()[u];
        internal[c] += g
            .neighbors(u)
            .iter()
            .filter(|&&v| p.cluster_of(v) == c)
            .count() as f64;
    }
    (internal, volume)
}

/// Newman modularity, accumulated per cluster as
/// `internal_ends / 2m - (volume / 2m)^2`.
pub fn modularity(g: &SparseGraph, p: &HardPartition) -> Result<f64> {
    check_aligned(g, p)?;
    if g.num_edges() == 0 {
        return Err(Error::UndefinedMetric(
            "modularity of a graph without edges",
        ));
    }
    let two_m = 2.0 * g.num_edges() as f64;
    let (internal, volume) = cluster_tallies(g, p);
    Ok(internal
        .iter()
        .zip(&volume)
        .map(|(&e, &vol)| e / two_m - (vol / two_m).powi(2))
        .sum())
}

/// Literal double sum over all ordered node pairs. Quadratic; for
/// validation only.
pub fn brute_force_modularity(g: &SparseGraph, p: &HardPartition) -> Result<f64> {
    const MAX_NODES: usize = 2000;
    check_aligned(g, p)?;
    if g.num_nodes() > MAX_NODES {
        return Err(Error::Config(format!(
            "brute-force modularity is limited to {MAX_NODES} nodes"
        )));
    }
    if g.num_edges() == 0 {
        return Err(Error::UndefinedMetric(
            "modularity of a graph without edges",
        ));
    }
    let two_m = 2.0 * g.num_edges() as f64;
    let d = g.degrees();
    let n = g.num_nodes();
    let mut q = 0.0;
    for i in 0..n {
        for j in 0..n {
            if p.cluster_of(i) != p.cluster_of(j) {
                continue;
            }
            let a_ij = if g.has_edge(i, j) { 1.0 } else { 0.0 };
            q += a_ij - d[i] * d[j] / two_m;
        }
    }
    Ok(q / two_m)
}

/// Unweighted mean over non-empty clusters of `cut / (2 m_S + cut)`.
/// A cluster with no incident edges scores 0.
pub fn mean_conductance(g: &SparseGraph, p: &HardPartition) -> Result<f64> {
    check_aligned(g, p)?;
    let (internal, volume) = cluster_tallies(g, p);
    let sizes = p.sizes();
    let mut total = 0.0;
    let mut count = 0usize;
    for c in 0..p.num_clusters() {
        if sizes[c] == 0 {
            continue;
        }
        count += 1;
        // volume = 2 m_S + cut
        let cut = volume[c] - internal[c];
        if volume[c] > 0.0 {
            total += cut / volume[c];
        }
    }
    Ok(if count == 0 {
        0.0
    } else {
        total / count as f64
    })
}

struct Contingency {
    n: f64,
    cells: BTreeMap<(usize, usize), usize>,
    rows: BTreeMap<usize, usize>,
    cols: BTreeMap<usize, usize>,
}

impl Contingency {
    fn new(a: &HardPartition, b: &HardPartition) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::Shape(format!(
                "partitions have different lengths ({} vs {})",
                a.len(),
                b.len()
            )));
        }
        let mut cells = BTreeMap::new();
        let mut rows = BTreeMap::new();
        let mut cols = BTreeMap::new();
        for (&x, &y) in a.assignments().iter().zip(b.assignments()) {
            *cells.entry((x, y)).or_insert(0) += 1;
            *rows.entry(x).or_insert(0) += 1;
            *cols.entry(y).or_insert(0) += 1;
        }
        Ok(Contingency {
            n: a.len() as f64,
            cells,
            rows,
            cols,
        })
    }

    /// Identical up to relabeling iff every row and column of the table has
    /// exactly one non-zero cell.
    fn is_bijection(&self) -> bool {
        self.cells.len() == self.rows.len() && self.cells.len() == self.cols.len()
    }

    fn entropy(&self, margin: &BTreeMap<usize, usize>) -> f64 {
        margin
            .values()
            .map(|&c| {
                let p = c as f64 / self.n;
                -p * p.ln()
            })
            .sum()
    }
}

/// Normalized mutual information, normalized by the arithmetic mean of the
/// two entropies (natural log).
pub fn nmi(pred: &HardPartition, truth: &HardPartition) -> Result<f64> {
    let table = Contingency::new(pred, truth)?;
    if table.is_bijection() {
        return Ok(1.0);
    }
    let h_pred = table.entropy(&table.rows);
    let h_truth = table.entropy(&table.cols);
    if h_pred == 0.0 || h_truth == 0.0 {
        return Ok(0.0);
    }
    let mut mi = 0.0;
    for (&(x, y), &count) in &table.cells {
        let nij = count as f64;
        let ai = table.rows[&x] as f64;
        let bj = table.cols[&y] as f64;
        mi += nij / table.n * (table.n * nij / (ai * bj)).ln();
    }
    Ok((mi / (0.5 * (h_pred + h_truth))).clamp(0.0, 1.0))
}

fn pairs(count: usize) -> f64 {
    let c = count as f64;
    c * (c - 1.0) / 2.0
}

/// F1 over unordered node pairs, where a pair is positive when both nodes
/// share a cluster. Counted from the contingency table.
pub fn pairwise_f1(pred: &HardPartition, truth: &HardPartition) -> Result<f64> {
    let table = Contingency::new(pred, truth)?;
    let both: f64 = table.cells.values().map(|&c| pairs(c)).sum();
    let pred_pos: f64 = table.rows.values().map(|&c| pairs(c)).sum();
    let true_pos: f64 = table.cols.values().map(|&c| pairs(c)).sum();
    let precision = if pred_pos > 0.0 { both / pred_pos } else { 0.0 };
    let recall = if true_pos > 0.0 { both / true_pos } else { 0.0 };
    if precision + recall == 0.0 {
        return Ok(0.0);
    }
    Ok(2.0 * precision * recall / (precision + recall))
}

/// Scores of one clustering, each multiplied by 100. Label scores are absent
/// when no ground truth was available.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub conductance: f64,
    pub modularity: f64,
    pub nmi: Option<f64>,
    pub pairwise_f1: Option<f64>,
}

pub const METRICS_CSV_HEADER: &str = "conductance,modularity,nmi,f1";

impl MetricsReport {
    pub fn evaluate(
        g: &SparseGraph,
        pred: &HardPartition,
        truth: Option<&HardPartition>,
    ) -> Result<Self> {
        let (nmi, pairwise_f1) = match truth {
            Some(t) => (
                Some(100.0 * nmi(pred, t)?),
                Some(100.0 * pairwise_f1(pred, t)?),
            ),
            None => (None, None),
        };
        Ok(MetricsReport {
            conductance: 100.0 * mean_conductance(g, pred)?,
            modularity: 100.0 * modularity(g, pred)?,
            nmi,
            pairwise_f1,
        })
    }

    /// Header plus a single row, one decimal place.
    pub fn to_csv(&self) -> String {
        format!("{METRICS_CSV_HEADER}\n{}\n", self.csv_row())
    }

    fn csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.1}")).unwrap_or_default();
        format!(
            "{:.1},{:.1},{},{}",
            self.conductance,
            self.modularity,
            opt(self.nmi),
            opt(self.pairwise_f1)
        )
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let bad = |msg: &str| Error::Parse {
            path: "<metrics csv>".into(),
            line: 2,
            msg: msg.to_string(),
        };
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some(METRICS_CSV_HEADER) {
            return Err(Error::Parse {
                path: "<metrics csv>".into(),
                line: 1,
                msg: format!("expected header `{METRICS_CSV_HEADER}`"),
            });
        }
        let row = lines.next().ok_or_else(|| bad("missing data row"))?;
        let fields: Vec<&str> = row.trim().split(',').collect();
        if fields.len() != 4 {
            return Err(bad("expected 4 fields"));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|e| bad(&e.to_string()));
        let opt = |s: &str| {
            if s.is_empty() {
                Ok(None)
            } else {
                num(s).map(Some)
            }
        };
        Ok(MetricsReport {
            conductance: num(fields[0])?,
            modularity: num(fields[1])?,
            nmi: opt(fields[2])?,
            pairwise_f1: opt(fields[3])?,
        })
    }
}

/// Mean and sample standard deviation of per-run reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub mean: MetricsReport,
    pub std: MetricsReport,
    pub runs: Vec<MetricsReport>,
}

impl MetricsSummary {
    pub fn aggregate(runs: Vec<MetricsReport>) -> Result<Self> {
        if runs.is_empty() {
            return Err(Error::Config("no runs to aggregate".into()));
        }
        fn stats(values: &[f64]) -> (f64, f64) {
            let n = values.len() as f64;
            let mean = values.iter().sum::<f64>() / n;
            let var = if values.len() > 1 {
                values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
            } else {
                0.0
            };
            (mean, var.sqrt())
        }
        fn opt_stats(values: Vec<Option<f64>>) -> (Option<f64>, Option<f64>) {
            let present: Option<Vec<f64>> = values.into_iter().collect();
            match present {
                Some(v) => {
                    let (m, s) = stats(&v);
                    (Some(m), Some(s))
                }
                None => (None, None),
            }
        }
        let (cm, cs) = stats(&runs.iter().map(|r| r.conductance).collect::<Vec<_>>());
        let (qm, qs) = stats(&runs.iter().map(|r| r.modularity).collect::<Vec<_>>());
        let (nm, ns) = opt_stats(runs.iter().map(|r| r.nmi).collect());
        let (fm, fs) = opt_stats(runs.iter().map(|r| r.pairwise_f1).collect());
        Ok(MetricsSummary {
            mean: MetricsReport {
                conductance: cm,
                modularity: qm,
                nmi: nm,
                pairwise_f1: fm,
            },
            std: MetricsReport {
                conductance: cs,
                modularity: qs,
                nmi: ns,
                pairwise_f1: fs,
            },
            runs,
        })
    }

    /// `stat` column followed by the report columns; one row for the mean and
    /// one for the standard deviation.
    pub fn to_csv(&self) -> String {
        let mut out = format!("stat,{METRICS_CSV_HEADER}\n");
        let _ = writeln!(out, "mean,{}", self.mean.csv_row());
        let _ = writeln!(out, "std,{}", self.std.csv_row());
        out
    }
}
