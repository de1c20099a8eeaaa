//! Compares the hand-derived DMoN gradients with central finite differences
//! on a small random graph.
//!
//! cargo run --example gradient_check

use dmon::dmon::{DmonModel, Propagated};
use dmon::nn::Mode;
use dmon::SparseGraph;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> dmon::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let n = 8;
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random_bool(0.4) {
                edges.push((u, v));
            }
        }
    }
    let (graph, _) = SparseGraph::from_edges(n, edges)?;
    let x = Array2::from_shape_simple_fn((n, 5), || rng.random_range(-1.0..1.0));
    let inputs = Propagated::new(&graph.normalized_adjacency(), x)?;
    let model = DmonModel::new(5, 4, 3, 0.0, &mut rng)?;

    let objective = |m: &DmonModel| -> dmon::Result<f64> {
        let (b, _, _) = m.objective_and_gradients(&graph, &inputs, Mode::Eval, &mut rng.clone())?;
        Ok(b.total)
    };
    let (_, grads, _) =
        model.objective_and_gradients(&graph, &inputs, Mode::Eval, &mut rng.clone())?;
    let analytic = [
        &grads.gcn_weight,
        &grads.skip_weight,
        &grads.out_weight,
        &grads.out_bias,
    ];
    let names = ["W", "W_skip", "W_out", "b"];

    let h = 1e-5;
    for (p, (grad, name)) in analytic.iter().zip(names).enumerate() {
        let mut worst: f64 = 0.0;
        for ((r, c), &g) in grad.indexed_iter() {
            let mut plus = model.clone();
            let mut minus = model.clone();
            plus.parameters_mut()[p][[r, c]] += h;
            minus.parameters_mut()[p][[r, c]] -= h;
            let numeric = (objective(&plus)? - objective(&minus)?) / (2.0 * h);
            worst = worst.max((g - numeric).abs() / g.abs().max(numeric.abs()).max(1e-6));
        }
        println!(
            "{name:<7} {:>2}x{:<2} max relative error {worst:.2e}",
            grad.nrows(),
            grad.ncols()
        );
    }
    Ok(())
}
