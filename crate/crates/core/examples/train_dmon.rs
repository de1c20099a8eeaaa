//! Trains DMoN on a default ADC-SBM instance and prints the objective as it
//! falls, then the recovered clustering.
//!
//! cargo run --release --example train_dmon -- [seed]

use dmon::adcsbm::{generate, AdcSbmConfig};
use dmon::dmon::{harden, orthogonality_diagnostic, train, DmonModel, Propagated, TrainConfig};
use dmon::metrics::MetricsReport;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> dmon::Result<()> {
    let seed: u64 = std::env::args()
        .nth(1)
        .map_or(0, |s| s.parse().expect("seed"));
    let cfg = AdcSbmConfig {
        seed,
        ..AdcSbmConfig::default()
    };
    let inst = generate(&cfg)?;

    let inputs = Propagated::new(&inst.graph.normalized_adjacency(), inst.features.clone())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut model = DmonModel::new(cfg.num_features, 64, cfg.k, 0.5, &mut rng)?;

    let history = train(
        &mut model,
        &inst.graph,
        &inputs,
        &TrainConfig {
            seed,
            ..TrainConfig::default()
        },
    )?;
    println!(
        "{:>6}{:>10}{:>12}{:>10}",
        "epoch", "total", "modularity", "collapse"
    );
    for (epoch, b) in history
        .iter()
        .enumerate()
        .filter(|(e, _)| e % 20 == 0 || *e == history.len() - 1)
    {
        println!(
            "{epoch:>6}{:>10.4}{:>12.4}{:>10.4}",
            b.total, b.modularity_term, b.collapse_term
        );
    }

    let c = model.predict(&inputs)?;
    let sizes: Vec<String> = c.soft_sizes().iter().map(|s| format!("{s:.1}")).collect();
    println!("\nsoft cluster sizes   [{}]", sizes.join(", "));
    println!("orthogonality gap    {:.3}", orthogonality_diagnostic(&c));

    let partition = harden(&c);
    print!(
        "\n{}",
        MetricsReport::evaluate(&inst.graph, &partition, Some(&inst.graph_labels))?.to_csv()
    );
    Ok(())
}
