#![allow(dead_code)]

use dmon::{HardPartition, SparseGraph};
use ndarray::Array2;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Erdos-Renyi graph; retries until it has at least one edge.
pub fn random_graph<R: Rng>(n: usize, p: f64, rng: &mut R) -> SparseGraph {
    loop {
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                if rng.random_bool(p) {
                    edges.push((u, v));
                }
            }
        }
        if !edges.is_empty() {
            return SparseGraph::from_edges(n, edges).unwrap().0;
        }
    }
}

pub fn random_partition<R: Rng>(n: usize, k: usize, rng: &mut R) -> HardPartition {
    HardPartition::new((0..n).map(|_| rng.random_range(0..k)).collect(), k).unwrap()
}

pub fn random_matrix<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || rng.random_range(-1.0..1.0))
}

/// Two disjoint cliques of `size` nodes each, nodes `0..size` first.
pub fn two_cliques(size: usize) -> SparseGraph {
    let mut edges = Vec::new();
    for offset in [0, size] {
        for u in 0..size {
            for v in u + 1..size {
                edges.push((offset + u, offset + v));
            }
        }
    }
    SparseGraph::from_edges(2 * size, edges).unwrap().0
}

/// Triangles {0,1,2} and {3,4,5} joined by the edge 2-3.
pub fn bridged_triangles() -> SparseGraph {
    SparseGraph::from_edges(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (2, 3)])
        .unwrap()
        .0
}

/// Random simple graph on 2..=max_n nodes with at least one edge.
pub fn arb_graph(max_n: usize) -> impl Strategy<Value = SparseGraph> {
    (2..=max_n, 0.05f64..0.9, any::<u64>())
        .prop_map(|(n, p, seed)| random_graph(n, p, &mut rng(seed)))
}

/// A graph together with a partition of its nodes into at most `max_k` labels.
pub fn arb_graph_and_partition(
    max_n: usize,
    max_k: usize,
) -> impl Strategy<Value = (SparseGraph, HardPartition)> {
    (arb_graph(max_n), 1..=max_k, any::<u64>()).prop_map(|(g, k, seed)| {
        let p = random_partition(g.num_nodes(), k, &mut rng(seed));
        (g, p)
    })
}

/// Two label vectors over the same 2..=max_n nodes.
pub fn arb_label_pair(
    max_n: usize,
    max_k: usize,
) -> impl Strategy<Value = (Vec<usize>, Vec<usize>)> {
    (2..=max_n).prop_flat_map(move |n| {
        (
            proptest::collection::vec(0..max_k, n),
            proptest::collection::vec(0..max_k, n),
        )
    })
}

/// Applies a label permutation derived from `seed`.
pub fn relabel(labels: &[usize], k: usize, seed: u64) -> Vec<usize> {
    use rand::seq::SliceRandom;
    let mut perm: Vec<usize> = (0..k).collect();
    perm.shuffle(&mut rng(seed));
    labels.iter().map(|&c| perm[c]).collect()
}

/// Dense modularity matrix built from scratch.
pub fn dense_b(g: &SparseGraph) -> Array2<f64> {
    let a = g.to_dense();
    let d: Vec<f64> = a.rows().into_iter().map(|r| r.sum()).collect();
    let two_m: f64 = d.iter().sum();
    Array2::from_shape_fn(a.dim(), |(i, j)| a[[i, j]] - d[i] * d[j] / two_m)
}

/// Largest elementwise relative error `|a - b| / max(|a|, |b|, floor)`.
pub fn max_relative_error(analytic: &[f64], numeric: &[f64], floor: f64) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, b)| (a - b).abs() / a.abs().max(b.abs()).max(floor))
        .fold(0.0, f64::max)
}

/// Compares DMoN parameter gradients with central differences of the total
/// objective (evaluation mode, so dropout is inactive). Returns the largest
/// relative error over all parameters.
pub fn dmon_gradient_error(
    graph: &SparseGraph,
    inputs: &dmon::dmon::Propagated,
    model: &dmon::dmon::DmonModel,
    step: f64,
) -> f64 {
    use dmon::nn::Mode;
    let mut r = rng(0);
    let (_, grads, _) = model
        .objective_and_gradients(graph, inputs, Mode::Eval, &mut r)
        .unwrap();
    let analytic = [
        &grads.gcn_weight,
        &grads.skip_weight,
        &grads.out_weight,
        &grads.out_bias,
    ];
    let objective = |m: &dmon::dmon::DmonModel| {
        m.objective_and_gradients(graph, inputs, Mode::Eval, &mut rng(0))
            .unwrap()
            .0
            .total
    };
    let mut worst: f64 = 0.0;
    for (p, grad) in analytic.iter().enumerate() {
        let mut numeric = Vec::with_capacity(grad.len());
        for idx in 0..grad.len() {
            let mut plus = model.clone();
            let mut minus = model.clone();
            let (r, c) = (idx / grad.ncols(), idx % grad.ncols());
            plus.parameters_mut()[p][[r, c]] += step;
            minus.parameters_mut()[p][[r, c]] -= step;
            numeric.push((objective(&plus) - objective(&minus)) / (2.0 * step));
        }
        let flat: Vec<f64> = grad.iter().copied().collect();
        worst = worst.max(max_relative_error(&flat, &numeric, 1e-6));
    }
    worst
}
