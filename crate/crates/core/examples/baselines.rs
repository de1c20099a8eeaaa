//! Feature-only k-means and graph-only spectral clustering on the same
//! instance, at a strong and a weak graph signal.
//!
//! cargo run --release --example baselines

use dmon::adcsbm::{generate, AdcSbmConfig};
use dmon::baselines::{kmeans, modularity_eigenpairs, spectral_modularity, EigenOptions};
use dmon::metrics::{modularity, nmi};

fn main() -> dmon::Result<()> {
    for d_out in [2.0, 5.0, 12.0] {
        let cfg = AdcSbmConfig {
            d_out,
            ..AdcSbmConfig::default()
        };
        let inst = generate(&cfg)?;

        let eig = modularity_eigenpairs(&inst.graph, cfg.k - 1, &EigenOptions::default())?;
        let values: Vec<String> = eig.values.iter().map(|v| format!("{v:.2}")).collect();
        println!(
            "d_out = {d_out}: top eigenvalues of B [{}] after {} iterations",
            values.join(", "),
            eig.iterations
        );

        let km = kmeans(inst.features.view(), cfg.k, 0, 300)?;
        let sp = spectral_modularity(&inst.graph, cfg.k, 0)?;
        println!(
            "  k-means   nmi {:.3}  Q {:.3}  ({} Lloyd steps)",
            nmi(&km.assignments, &inst.graph_labels)?,
            modularity(&inst.graph, &km.assignments)?,
            km.inertia_history.len() - 1
        );
        println!(
            "  spectral  nmi {:.3}  Q {:.3}",
            nmi(&sp, &inst.graph_labels)?,
            modularity(&inst.graph, &sp)?
        );
    }
    Ok(())
}
