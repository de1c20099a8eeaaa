//! Scores a few partitions of two triangles joined by a bridge.
//!
//! cargo run --example modularity_metrics

use dmon::metrics::{mean_conductance, modularity, nmi, pairwise_f1, MetricsReport};
use dmon::{HardPartition, SparseGraph};

fn main() -> dmon::Result<()> {
    let (graph, _) =
        SparseGraph::from_edges(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (2, 3)])?;
    let truth = HardPartition::new(vec![0, 0, 0, 1, 1, 1], 2)?;

    let candidates = [
        ("triangles", truth.clone()),
        (
            "one node off",
            HardPartition::new(vec![0, 0, 1, 1, 1, 1], 2)?,
        ),
        ("single cluster", HardPartition::single_cluster(6)),
        ("singletons", HardPartition::singletons(6)),
    ];

    println!(
        "{:<16}{:>12}{:>13}{:>8}{:>8}",
        "partition", "modularity", "conductance", "nmi", "f1"
    );
    for (name, p) in &candidates {
        println!(
            "{name:<16}{:>12.4}{:>13.4}{:>8.3}{:>8.3}",
            modularity(&graph, p)?,
            mean_conductance(&graph, p)?,
            nmi(p, &truth)?,
            pairwise_f1(p, &truth)?,
        );
    }

    // the report layout used by the command-line tool (values x100)
    print!(
        "\n{}",
        MetricsReport::evaluate(&graph, &truth, Some(&truth))?.to_csv()
    );
    Ok(())
}
