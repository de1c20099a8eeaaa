mod common;

use common::*;
use dmon::dmon::{
    collapse_regularizer, harden, loss, modularity_loss, train, DmonModel, Propagated,
    SoftAssignment, TrainConfig,
};
use dmon::metrics::{brute_force_modularity, modularity};
use dmon::nn::softmax_rows;
use dmon::pipeline::{fit_dmon, DmonSettings};
use ndarray::Array2;
use proptest::prelude::*;
use rand_distr::{Distribution, StandardNormal};

fn random_soft<R: rand::Rng>(n: usize, k: usize, rng: &mut R) -> SoftAssignment {
    SoftAssignment::from_logits(random_matrix(n, k, rng).mapv(|x| 3.0 * x).view())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hard_loss_is_negative_modularity((g, p) in arb_graph_and_partition(50, 6)) {
        let (value, _) = modularity_loss(&g, &SoftAssignment::one_hot(&p)).unwrap();
        let q = brute_force_modularity(&g, &p).unwrap();
        prop_assert!((value + q).abs() <= 1e-10, "{} vs {}", value, -q);
        prop_assert!((value + modularity(&g, &p).unwrap()).abs() <= 1e-10);
    }

    #[test]
    fn loss_invariant_to_row_shift_of_logits((g, k, seed) in (arb_graph(30), 2usize..6, any::<u64>())) {
        let mut r = rng(seed);
        let logits = random_matrix(g.num_nodes(), k, &mut r);
        let shift = random_matrix(g.num_nodes(), 1, &mut r).mapv(|x| 50.0 * x);
        let shifted = &logits + &shift;
        let a = loss(&g, &SoftAssignment::from_logits(logits.view())).unwrap().0;
        let b = loss(&g, &SoftAssignment::from_logits(shifted.view())).unwrap().0;
        prop_assert!((a.total - b.total).abs() <= 1e-12);
        prop_assert!((a.modularity_term - b.modularity_term).abs() <= 1e-12);
    }

    #[test]
    fn collapse_in_range((n, k, seed) in (1usize..60, 2usize..20, any::<u64>())) {
        let c = random_soft(n, k, &mut rng(seed));
        let (value, _) = collapse_regularizer(&c).unwrap();
        let top = (k as f64).sqrt() - 1.0;
        prop_assert!(value >= -1e-12 && value <= top + 1e-12, "{} not in [0, {}]", value, top);
    }

    #[test]
    fn loss_breakdown_adds_up((g, k, seed) in (arb_graph(30), 2usize..6, any::<u64>())) {
        let c = random_soft(g.num_nodes(), k, &mut rng(seed));
        let (b, grad) = loss(&g, &c).unwrap();
        prop_assert!((b.total - b.modularity_term - b.collapse_term).abs() <= 1e-15);
        let (_, gm) = modularity_loss(&g, &c).unwrap();
        let (_, gc) = collapse_regularizer(&c).unwrap();
        prop_assert!((&grad - &(&gm + &gc)).iter().all(|x| x.abs() <= 1e-15));
    }

    #[test]
    fn softmax_rows_are_stochastic(seed in any::<u64>()) {
        let x = random_matrix(20, 7, &mut rng(seed)).mapv(|v| 500.0 * v);
        let c = softmax_rows(x.view());
        for row in c.rows() {
            prop_assert!((row.sum() - 1.0).abs() <= 1e-12);
            prop_assert!(row.iter().all(|&v| v >= 0.0));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn parameter_gradients_match_finite_differences(
        (g, s, h, k, seed) in (arb_graph(12), 1usize..5, 1usize..5, 2usize..4, any::<u64>())
    ) {
        let mut r = rng(seed);
        let x = random_matrix(g.num_nodes(), s, &mut r);
        let inputs = Propagated::new(&g.normalized_adjacency(), x).unwrap();
        let model = DmonModel::new(s, h, k, 0.0, &mut r).unwrap();
        let err = dmon_gradient_error(&g, &inputs, &model, 1e-5);
        prop_assert!(err <= 1e-5, "max relative error {}", err);
    }
}

fn gaussian_features(n: usize, s: usize, seed: u64) -> Array2<f64> {
    let mut r = rng(seed);
    Array2::from_shape_simple_fn((n, s), || StandardNormal.sample(&mut r))
}

fn clique_settings() -> DmonSettings {
    DmonSettings::synthetic()
}

#[test]
fn cliques_with_constant_features_cannot_split() {
    let g = two_cliques(10);
    let features = Array2::ones((20, 8));
    for seed in 0..3 {
        let run = fit_dmon(&g, &features, 2, &clique_settings(), seed).unwrap();
        assert_eq!(run.history.len(), 200);
        // without dropout every node sees the same input, so all rows of C agree
        let inputs = Propagated::new(&g.normalized_adjacency(), features.clone()).unwrap();
        let c = run.model.predict(&inputs).unwrap();
        let (value, _) = modularity_loss(&g, &c).unwrap();
        assert!(value.abs() <= 1e-12, "{value}");
        assert_eq!(run.partition.num_nonempty(), 1);
    }
}

#[test]
fn cliques_with_random_features_reach_optimum() {
    let g = two_cliques(10);
    let mut hits = 0;
    let mut finals = Vec::new();
    for seed in 0..10 {
        let features = gaussian_features(20, 16, 100 + seed);
        let run = fit_dmon(&g, &features, 2, &clique_settings(), seed).unwrap();
        let last = run.history.last().unwrap().modularity_term;
        finals.push(last);
        if last <= -0.45 {
            hits += 1;
        }
    }
    assert!(hits >= 8, "final modularity terms {finals:?}");
}

#[test]
fn zero_epochs_leave_model_unchanged() {
    let g = two_cliques(4);
    let x = gaussian_features(8, 3, 1);
    let inputs = Propagated::new(&g.normalized_adjacency(), x).unwrap();
    let mut model = DmonModel::new(3, 4, 2, 0.5, &mut rng(2)).unwrap();
    let before = model.clone();
    let history = train(
        &mut model,
        &g,
        &inputs,
        &TrainConfig {
            epochs: 0,
            ..TrainConfig::default()
        },
    )
    .unwrap();
    assert!(history.is_empty());
    assert_eq!(model, before);
}

#[test]
fn training_is_bit_reproducible() {
    let g = random_graph(40, 0.15, &mut rng(5));
    let x = gaussian_features(40, 6, 6);
    let settings = DmonSettings {
        epochs: 30,
        ..DmonSettings::synthetic()
    };
    let a = fit_dmon(&g, &x, 3, &settings, 11).unwrap();
    let b = fit_dmon(&g, &x, 3, &settings, 11).unwrap();
    assert_eq!(a.model, b.model);
    assert_eq!(a.history, b.history);
    let c = fit_dmon(&g, &x, 3, &settings, 12).unwrap();
    assert_ne!(a.model, c.model);
}

#[test]
fn checkpoint_preserves_predictions() {
    let g = random_graph(30, 0.2, &mut rng(8));
    let x = gaussian_features(30, 5, 9);
    let settings = DmonSettings {
        epochs: 10,
        hidden: 8,
        ..DmonSettings::default()
    };
    let run = fit_dmon(&g, &x, 3, &settings, 0).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    run.model.save(&path).unwrap();
    let loaded = DmonModel::load(&path).unwrap();
    let inputs = Propagated::new(&g.normalized_adjacency(), x).unwrap();
    assert_eq!(
        loaded.predict(&inputs).unwrap(),
        run.model.predict(&inputs).unwrap()
    );
    assert_eq!(harden(&loaded.predict(&inputs).unwrap()), run.partition);
}

#[test]
fn triangles_loss_reference_values() {
    let triangles =
        dmon::SparseGraph::from_edges(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)])
            .unwrap()
            .0;
    let p = dmon::HardPartition::new(vec![0, 0, 0, 1, 1, 1], 2).unwrap();
    let (b, _) = loss(&triangles, &SoftAssignment::one_hot(&p)).unwrap();
    assert!((b.modularity_term + 0.5).abs() <= 1e-15);
    assert!(b.collapse_term.abs() <= 1e-15);
    let (value, _) = modularity_loss(&bridged_triangles(), &SoftAssignment::one_hot(&p)).unwrap();
    assert!((value + 5.0 / 14.0).abs() <= 1e-12);
}
