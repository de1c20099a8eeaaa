//! Samples an ADC-SBM instance and prints its statistics. Pass a directory to
//! also write the instance files there.
//!
//! cargo run --example generate_adcsbm -- [out_dir] [d_out]

use dmon::adcsbm::{detectability_threshold, generate, write_instance, AdcSbmConfig};
use dmon::metrics::modularity;

fn main() -> dmon::Result<()> {
    let mut args = std::env::args().skip(1);
    let out_dir = args.next();
    let d_out = args
        .next()
        .map(|s| s.parse().expect("d_out must be a number"));

    let mut cfg = AdcSbmConfig::default();
    if let Some(d) = d_out {
        cfg.d_out = d;
    }
    let inst = generate(&cfg)?;
    let g = &inst.graph;

    let cross = g
        .edges()
        .filter(|&(u, v)| inst.graph_labels.cluster_of(u) != inst.graph_labels.cluster_of(v))
        .count();
    let max_degree = (0..g.num_nodes()).map(|i| g.degree(i)).max().unwrap_or(0);

    println!("nodes            {}", g.num_nodes());
    println!("edges            {}", g.num_edges());
    println!(
        "mean degree      {:.2}",
        2.0 * g.num_edges() as f64 / g.num_nodes() as f64
    );
    println!("max degree       {max_degree}");
    println!("cluster sizes    {:?}", inst.graph_labels.sizes());
    println!(
        "inter-cluster    {:.3} of edges",
        cross as f64 / g.num_edges() as f64
    );
    println!("planted Q        {:.3}", modularity(g, &inst.graph_labels)?);
    println!("threshold d_out  {:.3}", detectability_threshold(&cfg));

    if let Some(dir) = out_dir {
        write_instance(&dir, &cfg, &inst)?;
        println!("wrote {dir}");
    }
    Ok(())
}
