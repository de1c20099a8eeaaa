//! Clusters a dataset directory (edges.tsv or edges.txt, optional
//! features.csv and labels) with every applicable method and prints the
//! mean and standard deviation over seeds.
//!
//! cargo run --release --example cluster_dataset -- <dir> [k] [seeds]

use dmon::io::Dataset;
use dmon::metrics::{MetricsReport, MetricsSummary};
use dmon::pipeline::{run_method, DmonSettings, Method};

fn main() -> dmon::Result<()> {
    let mut args = std::env::args().skip(1);
    let dir = args
        .next()
        .expect("usage: cluster_dataset <dir> [k] [seeds]");
    let k: usize = args.next().map_or(16, |s| s.parse().expect("k"));
    let seeds: u64 = args.next().map_or(3, |s| s.parse().expect("seeds"));

    let data = Dataset::load(&dir, false)?;
    let settings = if data.synthetic {
        DmonSettings::synthetic()
    } else {
        DmonSettings::default()
    };
    println!(
        "{dir}: n={} m={} features={} labels={}",
        data.graph.num_nodes(),
        data.graph.num_edges(),
        data.features.as_ref().map_or(0, |f| f.ncols()),
        data.labels.is_some()
    );

    for method in Method::ALL {
        if method.needs_features() && data.features.is_none() {
            println!("{method:<9} skipped (no features)");
            continue;
        }
        let runs = (0..seeds)
            .map(|seed| {
                let out = run_method(
                    method,
                    &data.graph,
                    data.features.as_ref(),
                    k,
                    &settings,
                    seed,
                )?;
                MetricsReport::evaluate(&data.graph, &out.partition, data.labels.as_ref())
            })
            .collect::<dmon::Result<Vec<_>>>()?;
        let summary = MetricsSummary::aggregate(runs)?;
        println!("{method}");
        print!("{}", summary.to_csv());
    }
    Ok(())
}
