//! Runs every method across one benchmark scenario and prints the long-format
//! table the `sweep` command writes.
//!
//! cargo run --release --example scenario_sweep -- [scenario] [points] [seeds]

use dmon::adcsbm::{AdcSbmConfig, Scenario};
use dmon::cli::sweep_rows;
use dmon::pipeline::{DmonSettings, Method};

fn main() -> dmon::Result<()> {
    let arg = |i: usize, default: usize| {
        std::env::args()
            .nth(i)
            .map_or(default, |s| s.parse().expect("integer argument"))
    };
    let scenario = Scenario::new(arg(1, 1) as u8)?;
    let (points, seeds) = (arg(2, 4), arg(3, 2));

    let rows = sweep_rows(
        scenario,
        points,
        seeds,
        &Method::ALL,
        &AdcSbmConfig::default(),
        &DmonSettings::synthetic(),
    )?;

    println!(
        "scenario {}, swept parameter {}",
        scenario.id(),
        scenario.parameter().name()
    );
    println!(
        "{:>10}{:>6}{:>10}{:>8}{:>8}",
        "param", "seed", "method", "nmi", "Q"
    );
    for r in rows {
        println!(
            "{:>10.3}{:>6}{:>10}{:>8.3}{:>8.3}",
            r.param, r.seed, r.method, r.nmi, r.modularity
        );
    }
    Ok(())
}
