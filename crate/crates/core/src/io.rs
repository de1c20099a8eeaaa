//! Readers and writers for the on-disk formats: edge lists, feature CSVs,
//! label/partition files and dataset directories.

use std::fs;
use std::io::{BufRead, BufReader, Read};
use std::path::{Path, PathBuf};

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::graph::{BuildStats, SparseGraph};
use crate::metrics::HardPartition;

fn open(path: &Path) -> Result<fs::File> {
    fs::File::open(path).map_err(|e| Error::io(path, e))
}

/// Parses `u v` pairs, one per line. Blank lines and lines starting with `#`
/// are skipped. Returns the pairs and the largest node id seen.
pub fn parse_edge_list<R: Read>(reader: R, origin: &Path) -> Result<Vec<(usize, usize)>> {
    let mut edges = Vec::new();
    for (idx, line) in BufReader::new(reader).lines().enumerate() {
        let line = line.map_err(|e| Error::io(origin, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let parse_err = |msg: String| Error::Parse {
            path: origin.to_path_buf(),
            line: idx + 1,
            msg,
        };
        let mut fields = trimmed.split_whitespace();
        let mut next_id = || -> Result<usize> {
            let field = fields
                .next()
                .ok_or_else(|| parse_err("expected two node ids".into()))?;
            field
                .parse::<usize>()
                .map_err(|e| parse_err(format!("bad node id `{field}`: {e}")))
        };
        let u = next_id()?;
        let v = next_id()?;
        if fields.next().is_some() {
            return Err(parse_err("expected exactly two node ids".into()));
        }
        edges.push((u, v));
    }
    Ok(edges)
}

/// Loads an undirected edge list. Without `n_hint` the node count is the
/// largest id plus one.
pub fn load_edge_list(path: impl AsRef<Path>, n_hint: Option<usize>) -> Result<SparseGraph> {
    let path = path.as_ref();
    let edges = parse_edge_list(open(path)?, path)?;
    let n = n_hint.unwrap_or_else(|| edges.iter().map(|&(u, v)| u.max(v) + 1).max().unwrap_or(0));
    let (graph, stats) = SparseGraph::from_edges(n, edges)?;
    report_build_stats(path, &stats);
    Ok(graph)
}

fn report_build_stats(path: &Path, stats: &BuildStats) {
    if stats.self_loops > 0 {
        log::warn!(
            "{}: dropped {} self-loop(s)",
            path.display(),
            stats.self_loops
        );
    }
    if stats.duplicates > 0 {
        log::info!(
            "{}: collapsed {} duplicate edge(s)",
            path.display(),
            stats.duplicates
        );
    }
}

/// Writes each undirected edge once as `u<TAB>v` with `u < v`.
pub fn write_edge_list(path: impl AsRef<Path>, graph: &SparseGraph) -> Result<()> {
    let mut out = String::with_capacity(graph.num_edges() * 10);
    for (u, v) in graph.edges() {
        out.push_str(&format!("{u}\t{v}\n"));
    }
    write_string(path.as_ref(), &out)
}

/// Dense numeric CSV, one node per row.
pub fn load_features(path: impl AsRef<Path>, has_header: bool) -> Result<Array2<f64>> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .trim(csv::Trim::All)
        .from_reader(open(path)?);
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (idx, record) in reader.records().enumerate() {
        let line = idx + 1 + usize::from(has_header);
        let record = record.map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line,
            msg: e.to_string(),
        })?;
        if *cols.get_or_insert(record.len()) != record.len() {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                msg: format!("expected {} columns, found {}", cols.unwrap(), record.len()),
            });
        }
        for field in record.iter() {
            data.push(field.parse::<f64>().map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line,
                msg: format!("bad value `{field}`: {e}"),
            })?);
        }
        rows += 1;
    }
    Array2::from_shape_vec((rows, cols.unwrap_or(0)), data).map_err(|e| Error::Shape(e.to_string()))
}

pub fn write_features(path: impl AsRef<Path>, features: &Array2<f64>) -> Result<()> {
    let mut out = String::new();
    for row in features.rows() {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    write_string(path.as_ref(), &out)
}

/// One non-negative integer per line, aligned with node index.
pub fn load_partition(path: impl AsRef<Path>) -> Result<HardPartition> {
    let path = path.as_ref();
    let mut ids = Vec::new();
    for (idx, line) in BufReader::new(open(path)?).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        ids.push(trimmed.parse::<usize>().map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: idx + 1,
            msg: format!("bad label `{trimmed}`: {e}"),
        })?);
    }
    Ok(HardPartition::from_labels(ids))
}

pub fn write_partition(path: impl AsRef<Path>, partition: &HardPartition) -> Result<()> {
    let mut out = String::with_capacity(partition.len() * 3);
    for c in partition.assignments() {
        out.push_str(&format!("{c}\n"));
    }
    write_string(path.as_ref(), &out)
}

pub(crate) fn write_string(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub(crate) fn read_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub const EDGES_FILE: &str = "edges.tsv";
pub const FEATURES_FILE: &str = "features.csv";
pub const GRAPH_LABELS_FILE: &str = "graph_labels.txt";
pub const FEATURE_LABELS_FILE: &str = "feature_labels.txt";
pub const CONFIG_FILE: &str = "config.json";

/// Graph plus whatever node data a dataset directory provides.
///
/// Layout: `edges.tsv` (or `edges.txt`), optional `features.csv`, optional
/// `graph_labels.txt` (or `labels.txt`), and `config.json` for synthetic
/// instances.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub graph: SparseGraph,
    pub features: Option<Array2<f64>>,
    pub labels: Option<HardPartition>,
    pub synthetic: bool,
}

fn first_existing(dir: &Path, names: &[&str]) -> Option<PathBuf> {
    names.iter().map(|n| dir.join(n)).find(|p| p.is_file())
}

impl Dataset {
    pub fn load(dir: impl AsRef<Path>, features_header: bool) -> Result<Self> {
        let dir = dir.as_ref();
        let edges = first_existing(dir, &[EDGES_FILE, "edges.txt"]).ok_or_else(|| {
            Error::Config(format!("no {EDGES_FILE} or edges.txt in {}", dir.display()))
        })?;
        let features = first_existing(dir, &[FEATURES_FILE])
            .map(|p| load_features(p, features_header))
            .transpose()?;
        let labels = first_existing(dir, &[GRAPH_LABELS_FILE, "labels.txt"])
            .map(load_partition)
            .transpose()?;
        let n_hint = features
            .as_ref()
            .map(|f| f.nrows())
            .or(labels.as_ref().map(|l| l.len()));
        if let (Some(f), Some(l)) = (&features, &labels) {
            if f.nrows() != l.len() {
                return Err(Error::Shape(format!(
                    "{} feature rows but {} labels",
                    f.nrows(),
                    l.len()
                )));
            }
        }
        let graph = load_edge_list(edges, n_hint)?;
        Ok(Dataset {
            graph,
            features,
            labels,
            synthetic: dir.join(CONFIG_FILE).is_file(),
        })
    }
}
