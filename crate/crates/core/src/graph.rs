//! Undirected graphs in compressed sparse row form and the sparse kernels
//! built on them.

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};

/// Counts of input irregularities dropped while building a [`SparseGraph`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BuildStats {
    pub self_loops: usize,
    pub duplicates: usize,
}

/// Immutable, simple, undirected, unweighted graph.
///
/// Both directions of every edge are stored, column indices are sorted within
/// each row and the degree vector is cached at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseGraph {
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    degrees: Vec<f64>,
    num_edges: usize,
}

impl SparseGraph {
    /// Builds a graph on `n` nodes. Edge direction is ignored, duplicates are
    /// collapsed and self-loops dropped.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<(Self, BuildStats)>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut stats = BuildStats::default();
        let mut pairs = Vec::new();
        for (u, v) in edges {
            for id in [u, v] {
                if id >= n {
                    return Err(Error::NodeOutOfBounds { id, n });
                }
            }
            if u == v {
                stats.self_loops += 1;
                continue;
            }
            pairs.push((u.min(v), u.max(v)));
        }
        pairs.sort_unstable();
        let before = pairs.len();
        pairs.dedup();
        stats.duplicates = before - pairs.len();

        let mut counts = vec![0usize; n + 1];
        for &(u, v) in &pairs {
            counts[u + 1] += 1;
            counts[v + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let row_offsets = counts;
        let mut cursor = row_offsets.clone();
        let mut col_indices = vec![0usize; 2 * pairs.len()];
        for &(u, v) in &pairs {
            col_indices[cursor[u]] = v;
            cursor[u] += 1;
            col_indices[cursor[v]] = u;
            cursor[v] += 1;
        }
        for i in 0..n {
            col_indices[row_offsets[i]..row_offsets[i + 1]].sort_unstable();
        }
        let degrees = (0..n)
            .map(|i| (row_offsets[i + 1] - row_offsets[i]) as f64)
            .collect();
        let graph = SparseGraph {
            row_offsets,
            col_indices,
            degrees,
            num_edges: pairs.len(),
        };
        Ok((graph, stats))
    }

    pub fn num_nodes(&self) -> usize {
        self.degrees.len()
    }

    /// Number of undirected edges `m`.
    pub fn num_edges(&self) -> usize {
        self.num_edges
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    pub fn degree(&self, node: usize) -> usize {
        self.row_offsets[node + 1] - self.row_offsets[node]
    }

    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.col_indices[self.row_offsets[node]..self.row_offsets[node + 1]]
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    /// Each undirected edge once, as `(u, v)` with `u < v`, in row order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.num_nodes()).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .filter(move |&&v| v > u)
                .map(move |&v| (u, v))
        })
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.neighbors(u).binary_search(&v).is_ok()
    }

    /// Dense adjacency matrix. Intended for tests and small graphs.
    pub fn to_dense(&self) -> Array2<f64> {
        let n = self.num_nodes();
        let mut a = Array2::zeros((n, n));
        for u in 0..n {
            for &v in self.neighbors(u) {
                a[[u, v]] = 1.0;
            }
        }
        a
    }

    /// Symmetric normalization `D^{-1/2} A D^{-1/2}` without added self-loops.
    pub fn normalized_adjacency(&self) -> NormalizedAdjacency {
        // every stored entry joins two nodes of positive degree, so isolated
        // nodes simply have empty rows
        let d = &self.degrees;
        let mut values = Vec::with_capacity(self.col_indices.len());
        for u in 0..self.num_nodes() {
            for &v in self.neighbors(u) {
                values.push((d[u] * d[v]).sqrt().recip());
            }
        }
        NormalizedAdjacency {
            row_offsets: self.row_offsets.clone(),
            col_indices: self.col_indices.clone(),
            values,
        }
    }
}

/// `D^{-1/2} A D^{-1/2}` sharing the sparsity pattern of its source graph.
/// Isolated nodes get a zero row.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedAdjacency {
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl NormalizedAdjacency {
    pub fn num_nodes(&self) -> usize {
        self.row_offsets.len() - 1
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `(column, value)` pairs of one row.
    pub fn row(&self, node: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_offsets[node]..self.row_offsets[node + 1];
        self.col_indices[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let n = self.num_nodes();
        let mut a = Array2::zeros((n, n));
        for u in 0..n {
            for (v, w) in self.row(u) {
                a[[u, v]] = w;
            }
        }
        a
    }
}

/// A square sparse operator usable as the left factor of [`spmm`].
pub trait SparseOperator {
    fn dim(&self) -> usize;

    /// Calls `f(column, value)` for every stored entry of `row`, in column order.
    fn for_each_in_row<F: FnMut(usize, f64)>(&self, row: usize, f: F);
}

impl SparseOperator for SparseGraph {
    fn dim(&self) -> usize {
        self.num_nodes()
    }

    fn for_each_in_row<F: FnMut(usize, f64)>(&self, row: usize, mut f: F) {
        for &v in self.neighbors(row) {
            f(v, 1.0);
        }
    }
}

impl SparseOperator for NormalizedAdjacency {
    fn dim(&self) -> usize {
        self.num_nodes()
    }

    fn for_each_in_row<F: FnMut(usize, f64)>(&self, row: usize, mut f: F) {
        for (v, w) in self.row(row) {
            f(v, w);
        }
    }
}

/// Sparse-dense product `op · x`. Accumulation runs over each row's columns
/// in ascending order, so the result is deterministic.
pub fn spmm<S: SparseOperator>(op: &S, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    let n = op.dim();
    if x.nrows() != n {
        return Err(Error::Shape(format!(
            "sparse operator is {n}x{n} but dense operand has {} rows",
            x.nrows()
        )));
    }
    let mut out = Array2::zeros((n, x.ncols()));
    for (i, mut out_row) in out.rows_mut().into_iter().enumerate() {
        op.for_each_in_row(i, |j, w| out_row.scaled_add(w, &x.row(j)));
    }
    Ok(out)
}

/// Sparse matrix-vector product `op · x`.
pub fn spmv<S: SparseOperator>(op: &S, x: &[f64]) -> Result<Vec<f64>> {
    let n = op.dim();
    if x.len() != n {
        return Err(Error::Shape(format!(
            "sparse operator is {n}x{n} but vector has length {}",
            x.len()
        )));
    }
    Ok((0..n)
        .map(|i| {
            let mut acc = 0.0;
            op.for_each_in_row(i, |j, w| acc += w * x[j]);
            acc
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn triangle() -> SparseGraph {
        SparseGraph::from_edges(3, [(0, 1), (1, 2), (2, 0)])
            .unwrap()
            .0
    }

    #[test]
    fn triangle_structure() {
        let g = triangle();
        assert_eq!(g.num_nodes(), 3);
        assert_eq!(g.num_edges(), 3);
        assert_eq!(g.degrees(), &[2.0, 2.0, 2.0]);
        assert_eq!(g.neighbors(1), &[0, 2]);
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 1), (0, 2), (1, 2)]);
    }

    #[test]
    fn duplicates_and_self_loops_are_dropped() {
        let (g, stats) = SparseGraph::from_edges(2, [(0, 1), (1, 0), (0, 0)]).unwrap();
        assert_eq!(g.num_edges(), 1);
        assert_eq!(
            stats,
            BuildStats {
                self_loops: 1,
                duplicates: 1
            }
        );
        assert!(g.has_edge(1, 0));
    }

    #[test]
    fn out_of_bounds_node() {
        let err = SparseGraph::from_edges(2, [(0, 2)]).unwrap_err();
        assert!(matches!(err, Error::NodeOutOfBounds { id: 2, n: 2 }));
    }

    #[test]
    fn normalized_values() {
        let edge = SparseGraph::from_edges(2, [(0, 1)]).unwrap().0;
        assert_eq!(edge.normalized_adjacency().values(), &[1.0, 1.0]);
        assert!(triangle()
            .normalized_adjacency()
            .values()
            .iter()
            .all(|&w| w == 0.5));
        let star = SparseGraph::from_edges(5, (1..5).map(|leaf| (0, leaf)))
            .unwrap()
            .0;
        let norm = star.normalized_adjacency();
        for (_, w) in norm.row(0) {
            assert!((w - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn isolated_node_row_is_zero() {
        let g = SparseGraph::from_edges(3, [(0, 1)]).unwrap().0;
        let norm = g.normalized_adjacency();
        assert_eq!(norm.row(2).count(), 0);
        let x = Array2::ones((3, 2));
        let y = spmm(&norm, x.view()).unwrap();
        assert_eq!(y.row(2).to_vec(), vec![0.0, 0.0]);
    }

    #[test]
    fn spmm_row_sums_and_zero() {
        let g = triangle();
        let ones = Array2::ones((3, 1));
        assert_eq!(spmm(&g, ones.view()).unwrap(), array![[2.0], [2.0], [2.0]]);
        let zeros = Array2::zeros((3, 4));
        assert_eq!(
            spmm(&g, zeros.view()).unwrap(),
            Array2::<f64>::zeros((3, 4))
        );
    }

    #[test]
    fn spmm_shape_mismatch() {
        let x = Array2::ones((4, 1));
        assert!(matches!(spmm(&triangle(), x.view()), Err(Error::Shape(_))));
        assert!(spmv(&triangle(), &[1.0]).is_err());
    }
}
