//! Graph-only baseline: leading eigenvectors of the modularity matrix by
//! block power iteration, k-means on the spectral embedding, then greedy
//! single-node refinement.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::kmeans::kmeans_best_of;
use crate::error::{Error, Result};
use crate::graph::{spmm, spmv, SparseGraph};
use crate::metrics::HardPartition;

fn two_m(g: &SparseGraph) -> Result<f64> {
    if g.num_edges() == 0 {
        return Err(Error::UndefinedMetric(
            "modularity matrix of a graph without edges",
        ));
    }
    Ok(2.0 * g.num_edges() as f64)
}

/// `B x = A x - (dᵀx) d / 2m` without forming `B`.
pub fn modularity_matvec(g: &SparseGraph, x: &[f64]) -> Result<Vec<f64>> {
    let two_m = two_m(g)?;
    let mut out = spmv(g, x)?;
    let d = g.degrees();
    let coeff = d.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() / two_m;
    for (o, &di) in out.iter_mut().zip(d) {
        *o -= coeff * di;
    }
    Ok(out)
}

/// Column-wise [`modularity_matvec`] for an `n × r` block.
pub fn modularity_matmul(g: &SparseGraph, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    let two_m = two_m(g)?;
    let d = ArrayView1::from(g.degrees());
    let mut out = spmm(g, x)?;
    let coeffs = x.t().dot(&d) / two_m;
    out -= &d.insert_axis(Axis(1)).dot(&coeffs.insert_axis(Axis(0)));
    Ok(out)
}

/// Orthonormalizes the columns in place with two passes of modified
/// Gram-Schmidt. A column that vanishes is replaced by a random direction.
fn orthonormalize<R: Rng + ?Sized>(q: &mut Array2<f64>, rng: &mut R) {
    let cols = q.ncols();
    for j in 0..cols {
        for attempt in 0..3 {
            for _ in 0..2 {
                for i in 0..j {
                    let (prev, mut cur) =
                        q.multi_slice_mut((ndarray::s![.., i], ndarray::s![.., j]));
                    let proj = prev.dot(&cur);
                    cur.scaled_add(-proj, &prev);
                }
            }
            let norm = q.column(j).dot(&q.column(j)).sqrt();
            if norm > 1e-12 || attempt == 2 {
                q.column_mut(j).mapv_inplace(|v| v / norm.max(1e-300));
                break;
            }
            q.column_mut(j)
                .mapv_inplace(|_| rng.random_range(-1.0..1.0));
        }
    }
}

/// Eigen-decomposition of a small symmetric matrix by cyclic Jacobi
/// rotations. Eigenvalues are returned in descending order with matching
/// eigenvector columns.
pub fn symmetric_eigen(a: &Array2<f64>) -> (Vec<f64>, Array2<f64>) {
    let n = a.nrows();
    let mut m = a.clone();
    let mut v = Array2::<f64>::eye(n);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[[i, j]] * m[[i, j]])
            .sum();
        let scale: f64 = m.iter().map(|x| x * x).sum::<f64>().max(1e-300);
        if off <= 1e-30 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[[p, q]];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[[q, q]] - m[[p, p]]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[[k, p]];
                    let mkq = m[[k, q]];
                    m[[k, p]] = c * mkp - s * mkq;
                    m[[k, q]] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[[p, k]];
                    let mqk = m[[q, k]];
                    m[[p, k]] = c * mpk - s * mqk;
                    m[[q, k]] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[[k, p]];
                    let vkq = v[[k, q]];
                    v[[k, p]] = c * vkp - s * vkq;
                    v[[k, q]] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[[j, j]].total_cmp(&m[[i, i]]));
    let values = order.iter().map(|&i| m[[i, i]]).collect();
    let mut vectors = Array2::zeros((n, n));
    for (dst, &src) in order.iter().enumerate() {
        vectors.column_mut(dst).assign(&v.column(src));
    }
    (values, vectors)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenOptions {
    /// Convergence threshold on the largest residual `‖B v - λ v‖`,
    /// relative to the spectral shift.
    pub tolerance: f64,
    pub max_iters: usize,
    pub seed: u64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions {
            tolerance: 1e-8,
            max_iters: 20_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Eigenpairs {
    /// Descending.
    pub values: Vec<f64>,
    /// `n × count`, orthonormal columns.
    pub vectors: Array2<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Largest (algebraic) eigenpairs of the modularity matrix by orthogonal
/// block power iteration on `B + σI`, where `σ` bounds `-λ_min(B)`, with a
/// Rayleigh-Ritz rotation before every convergence check.
pub fn modularity_eigenpairs(
    g: &SparseGraph,
    count: usize,
    options: &EigenOptions,
) -> Result<Eigenpairs> {
    let n = g.num_nodes();
    let two_m = two_m(g)?;
    if count == 0 || count > n {
        return Err(Error::Config(format!(
            "cannot compute {count} eigenpairs of an {n}-node graph"
        )));
    }
    let d = g.degrees();
    let max_degree = d.iter().copied().fold(0.0, f64::max);
    let shift = max_degree + d.iter().map(|x| x * x).sum::<f64>() / two_m;

    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut q = Array2::from_shape_simple_fn((n, count), || rng.random_range(-1.0..1.0));
    orthonormalize(&mut q, &mut rng);
    let check_every = 10;
    let mut best_residual = f64::INFINITY;
    let mut best = (vec![0.0; count], q.clone());
    for iter in 1..=options.max_iters {
        let bq = modularity_matmul(g, q.view())?;
        if iter % check_every == 0 || iter == options.max_iters {
            let projected = q.t().dot(&bq);
            let sym = (&projected + &projected.t()) * 0.5;
            let (ritz_values, ritz_vectors) = symmetric_eigen(&sym);
            let rotated = q.dot(&ritz_vectors);
            let b_rotated = bq.dot(&ritz_vectors);
            let mut residual: f64 = 0.0;
            for (j, &lambda) in ritz_values.iter().enumerate() {
                let r = &b_rotated.column(j) - &(&rotated.column(j) * lambda);
                residual = residual.max(r.dot(&r).sqrt());
            }
            if residual < best_residual {
                best_residual = residual;
                best = (ritz_values.clone(), rotated.clone());
            }
            if residual <= options.tolerance * shift {
                return Ok(Eigenpairs {
                    values: ritz_values,
                    vectors: rotated,
                    iterations: iter,
                    converged: true,
                });
            }
            q = b_rotated + &(&rotated * shift);
        } else {
            q = bq + &(&q * shift);
        }
        orthonormalize(&mut q, &mut rng);
    }
    log::warn!(
        "block power iteration did not converge in {} iterations (residual {best_residual:.3e}); using best iterate",
        options.max_iters
    );
    Ok(Eigenpairs {
        values: best.0,
        vectors: best.1,
        iterations: options.max_iters,
        converged: false,
    })
}

/// Modularity change from moving node `i` out of `from` into `to`, given the
/// number of its neighbours in each and the clusters' degree volumes.
#[inline]
fn move_gain(
    m: f64,
    degree: f64,
    links_from: f64,
    links_to: f64,
    vol_from: f64,
    vol_to: f64,
) -> f64 {
    (links_to - links_from) / m - degree * (vol_to - vol_from + degree) / (2.0 * m * m)
}

/// Repeatedly moves single nodes to the neighbouring cluster with the largest
/// positive modularity gain until a full pass makes no move or `max_passes`
/// passes have run.
pub fn greedy_refine(
    g: &SparseGraph,
    p: &HardPartition,
    max_passes: usize,
) -> Result<HardPartition> {
    if g.num_nodes() != p.len() {
        return Err(Error::Shape(format!(
            "partition has {} entries for a graph of {} nodes",
            p.len(),
            g.num_nodes()
        )));
    }
    let mut out = p.clone();
    if g.num_edges() == 0 {
        return Ok(out);
    }
    let m = g.num_edges() as f64;
    let d = g.degrees();
    let mut volume = vec![0.0; p.num_clusters()];
    for (i, &c) in p.assignments().iter().enumerate() {
        volume[c] += d[i];
    }
    let mut links: Vec<(usize, f64)> = Vec::new();
    for _pass in 0..max_passes {
        let mut moved = false;
        for i in 0..g.num_nodes() {
            let own = out.cluster_of(i);
            links.clear();
            for &j in g.neighbors(i) {
                let c = out.cluster_of(j);
                match links.iter_mut().find(|(cl, _)| *cl == c) {
                    Some((_, count)) => *count += 1.0,
                    None => links.push((c, 1.0)),
                }
            }
            let links_own = links.iter().find(|(c, _)| *c == own).map_or(0.0, |l| l.1);
            let mut best: Option<(usize, f64)> = None;
            for &(c, count) in &links {
                if c == own {
                    continue;
                }
                let gain = move_gain(m, d[i], links_own, count, volume[own], volume[c]);
                if gain > 1e-12 && best.is_none_or(|(_, g)| gain > g) {
                    best = Some((c, gain));
                }
            }
            if let Some((target, _)) = best {
                volume[own] -= d[i];
                volume[target] += d[i];
                out.set(i, target);
                moved = true;
            }
        }
        if !moved {
            break;
        }
    }
    Ok(out)
}

/// Rows of the leading `k - 1` modularity eigenvectors, each scaled to unit
/// length.
pub fn spectral_embedding(g: &SparseGraph, k: usize, seed: u64) -> Result<Array2<f64>> {
    let options = EigenOptions {
        seed,
        ..EigenOptions::default()
    };
    let pairs = modularity_eigenpairs(g, k - 1, &options)?;
    let mut embedding = pairs.vectors;
    for mut row in embedding.rows_mut() {
        let norm = row.dot(&row).sqrt();
        if norm > 0.0 {
            row.mapv_inplace(|v| v / norm);
        }
    }
    Ok(embedding)
}

/// Spectral modularity maximization into `k` clusters.
pub fn spectral_modularity(g: &SparseGraph, k: usize, seed: u64) -> Result<HardPartition> {
    const KMEANS_RESTARTS: usize = 10;
    const REFINE_PASSES: usize = 100;
    two_m(g)?;
    let n = g.num_nodes();
    if k == 0 || k > n {
        return Err(Error::Config(format!(
            "cannot split {n} nodes into {k} clusters"
        )));
    }
    if k == 1 {
        return Ok(HardPartition::single_cluster(n));
    }
    let embedding = spectral_embedding(g, k, seed)?;
    let clusters = kmeans_best_of(embedding.view(), k, seed, 300, KMEANS_RESTARTS)?;
    greedy_refine(g, &clusters.assignments, REFINE_PASSES)
}

/// Dense `B`. Test and example helper for small graphs.
pub fn dense_modularity_matrix(g: &SparseGraph) -> Result<Array2<f64>> {
    let two_m = two_m(g)?;
    let d = Array1::from(g.degrees().to_vec());
    let outer = d
        .view()
        .insert_axis(Axis(1))
        .dot(&d.view().insert_axis(Axis(0)));
    Ok(g.to_dense() - outer / two_m)
}
