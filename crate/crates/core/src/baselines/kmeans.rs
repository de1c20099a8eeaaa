use ndarray::{Array2, ArrayView1, ArrayView2};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::metrics::HardPartition;

#[derive(Debug, Clone)]
pub struct KMeansResult {
    pub centers: Array2<f64>,
    pub assignments: HardPartition,
    /// Total squared distance of points to their assigned centers.
    pub inertia: f64,
    /// Inertia after every assignment step, starting with the seeding.
    pub inertia_history: Vec<f64>,
    pub converged: bool,
}

fn sq_dist(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// k-means++ seeding: first center uniform, each further center drawn with
/// probability proportional to its squared distance from the chosen set.
pub fn kmeans_plus_plus<R: Rng + ?Sized>(
    x: ArrayView2<'_, f64>,
    k: usize,
    rng: &mut R,
) -> Array2<f64> {
    let n = x.nrows();
    let mut centers = Array2::zeros((k, x.ncols()));
    let first = rng.random_range(0..n);
    centers.row_mut(0).assign(&x.row(first));
    let mut nearest: Vec<f64> = (0..n).map(|i| sq_dist(x.row(i), x.row(first))).collect();
    for c in 1..k {
        let pick = match WeightedIndex::new(&nearest) {
            Ok(dist) => dist.sample(rng),
            // every point coincides with a chosen center
            Err(_) => rng.random_range(0..n),
        };
        centers.row_mut(c).assign(&x.row(pick));
        for (i, best) in nearest.iter_mut().enumerate() {
            *best = best.min(sq_dist(x.row(i), x.row(pick)));
        }
    }
    centers
}

/// Assigns each point to its nearest center (lowest index on ties). Returns
/// whether any assignment changed and the resulting inertia.
fn assign(
    x: ArrayView2<'_, f64>,
    centers: &Array2<f64>,
    labels: &mut [usize],
    distances: &mut [f64],
) -> (bool, f64) {
    let mut changed = false;
    let mut inertia = 0.0;
    for (i, point) in x.rows().into_iter().enumerate() {
        let (mut best, mut best_d) = (0, f64::INFINITY);
        for (c, center) in centers.rows().into_iter().enumerate() {
            let d = sq_dist(point, center);
            if d < best_d {
                best = c;
                best_d = d;
            }
        }
        changed |= labels[i] != best;
        labels[i] = best;
        distances[i] = best_d;
        inertia += best_d;
    }
    (changed, inertia)
}

/// Lloyd iterations from k-means++ seeds until the assignment stops changing
/// or `max_iters` updates have run. An empty cluster takes over the point
/// farthest from its current center.
pub fn kmeans(
    x: ArrayView2<'_, f64>,
    k: usize,
    seed: u64,
    max_iters: usize,
) -> Result<KMeansResult> {
    let (n, s) = x.dim();
    if k == 0 || k > n {
        return Err(Error::Config(format!(
            "k-means needs 1 <= k <= n, got k = {k}, n = {n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = kmeans_plus_plus(x, k, &mut rng);
    let mut labels = vec![usize::MAX; n];
    let mut distances = vec![0.0; n];
    let (_, mut inertia) = assign(x, &centers, &mut labels, &mut distances);
    let mut history = vec![inertia];
    let mut converged = false;
    for _ in 0..max_iters {
        let mut sums = Array2::<f64>::zeros((k, s));
        let mut counts = vec![0usize; k];
        for (i, &c) in labels.iter().enumerate() {
            sums.row_mut(c).scaled_add(1.0, &x.row(i));
            counts[c] += 1;
        }
        for c in 0..k {
            if counts[c] > 0 {
                centers
                    .row_mut(c)
                    .assign(&(&sums.row(c) / counts[c] as f64));
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                continue;
            }
            let far = (0..n)
                .filter(|&i| counts[labels[i]] > 1)
                .max_by(|&a, &b| distances[a].total_cmp(&distances[b]).then(b.cmp(&a)));
            if let Some(i) = far {
                counts[labels[i]] -= 1;
                counts[c] = 1;
                labels[i] = c;
                distances[i] = 0.0;
                centers.row_mut(c).assign(&x.row(i));
            }
        }
        let (changed, new_inertia) = assign(x, &centers, &mut labels, &mut distances);
        inertia = new_inertia;
        history.push(inertia);
        if !changed {
            converged = true;
            break;
        }
    }
    Ok(KMeansResult {
        centers,
        assignments: HardPartition::new(labels, k)?,
        inertia,
        inertia_history: history,
        converged,
    })
}

/// Best of `restarts` seeded runs by inertia.
pub fn kmeans_best_of(
    x: ArrayView2<'_, f64>,
    k: usize,
    seed: u64,
    max_iters: usize,
    restarts: usize,
) -> Result<KMeansResult> {
    let mut best: Option<KMeansResult> = None;
    for r in 0..restarts.max(1) as u64 {
        let run = kmeans(
            x,
            k,
            seed.wrapping_mul(1_000_003).wrapping_add(r),
            max_iters,
        )?;
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}
