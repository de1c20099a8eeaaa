//! Command-line front end: `generate`, `cluster`, `sweep` and `eval`.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use crate::adcsbm::{self, AdcSbmConfig, FeatureMode, Scenario, SweepCell};
use crate::dmon::loss_history_csv;
use crate::error::{Error, Result};
use crate::io::{self, Dataset};
use crate::metrics::{self, HardPartition, MetricsReport, MetricsSummary};
use crate::pipeline::{run_method, DmonSettings, Method};

#[derive(Debug, Parser)]
#[command(
    name = "dmon",
    version,
    about = "Deep Modularity Networks for attributed graph clustering"
)]
pub struct Cli {
    /// Base random seed.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Run single-threaded so that repeated runs are byte-identical.
    #[arg(long, global = true)]
    pub deterministic: bool,

    /// Where results are written (each command has its own default).
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample ADC-SBM instances.
    Generate(GenerateArgs),
    /// Cluster a dataset directory over several seeds.
    Cluster(ClusterArgs),
    /// Run every method over one benchmark scenario.
    Sweep(SweepArgs),
    /// Score an existing partition file.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
pub struct GeneratorArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    /// Expected mean degree.
    #[arg(long)]
    pub avg_degree: Option<f64>,
    /// Expected number of neighbours outside a node's own cluster.
    #[arg(long)]
    pub d_out: Option<f64>,
    /// Interpret --d-out per foreign cluster instead of in total.
    #[arg(long)]
    pub d_out_per_cluster: bool,
    #[arg(long)]
    pub d_min: Option<f64>,
    #[arg(long)]
    pub d_max: Option<f64>,
    /// Power-law exponent of the degree propensities.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub num_features: Option<usize>,
    /// Number of feature clusters.
    #[arg(long)]
    pub k_f: Option<usize>,
    #[arg(long, value_enum)]
    pub feature_mode: Option<FeatureModeArg>,
    /// Standard deviation of feature cluster centers.
    #[arg(long)]
    pub center_std: Option<f64>,
    /// Standard deviation of features around their center.
    #[arg(long)]
    pub within_std: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FeatureModeArg {
    Matched,
    Nested,
    Grouped,
}

impl From<FeatureModeArg> for FeatureMode {
    fn from(m: FeatureModeArg) -> Self {
        match m {
            FeatureModeArg::Matched => FeatureMode::Matched,
            FeatureModeArg::Nested => FeatureMode::Nested,
            FeatureModeArg::Grouped => FeatureMode::Grouped,
        }
    }
}

impl GeneratorArgs {
    /// Defaults overridden by any flag that was given.
    pub fn config(&self, seed: u64) -> AdcSbmConfig {
        let mut c = AdcSbmConfig {
            seed,
            ..AdcSbmConfig::default()
        };
        if let Some(v) = self.n {
            c.n = v;
        }
        if let Some(v) = self.k {
            c.k = v;
            if self.k_f.is_none() && c.feature_mode == FeatureMode::Matched {
                c.k_f = v;
            }
        }
        if let Some(v) = self.avg_degree {
            c.avg_degree = v;
        }
        if let Some(v) = self.d_out {
            c.d_out = v;
        }
        c.d_out_per_cluster = self.d_out_per_cluster;
        if let Some(v) = self.d_min {
            c.d_min = v;
        }
        if let Some(v) = self.d_max {
            c.d_max = v;
        }
        if let Some(v) = self.alpha {
            c.alpha = v;
        }
        if let Some(v) = self.num_features {
            c.num_features = v;
        }
        if let Some(v) = self.k_f {
            c.k_f = v;
        }
        if let Some(v) = self.feature_mode {
            c.feature_mode = v.into();
        }
        if let Some(v) = self.center_std {
            c.center_std = v;
        }
        if let Some(v) = self.within_std {
            c.within_std = v;
        }
        c
    }
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Use the default configuration (n=1000, k=4, d=20, d_out=2).
    #[arg(long, conflicts_with = "scenario")]
    pub defaults: bool,

    /// Generate a whole benchmark scenario (1-6) instead of one instance.
    #[arg(long)]
    pub scenario: Option<u8>,

    /// Grid points of the scenario sweep.
    #[arg(long, default_value_t = 7, requires = "scenario")]
    pub points: usize,

    /// Seeds per grid point.
    #[arg(long, default_value_t = 1, requires = "scenario")]
    pub seeds: usize,

    #[command(flatten)]
    pub generator: GeneratorArgs,
}

#[derive(Debug, Args)]
pub struct TrainingArgs {
    /// Hidden width (default 512, or 64 for synthetic instances).
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long, default_value_t = 200)]
    pub epochs: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    #[arg(long, default_value_t = 0.5)]
    pub dropout: f64,
}

impl TrainingArgs {
    fn settings(&self, synthetic: bool) -> DmonSettings {
        DmonSettings {
            hidden: self.hidden.unwrap_or(if synthetic {
                DmonSettings::HIDDEN_SYNTHETIC
            } else {
                DmonSettings::HIDDEN_REAL
            }),
            epochs: self.epochs,
            learning_rate: self.lr,
            dropout: self.dropout,
        }
    }
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    /// Dataset or instance directory.
    #[arg(long)]
    pub input: PathBuf,

    #[arg(long, value_parser = parse_method, default_value = "dmon")]
    pub method: Method,

    /// Number of clusters.
    #[arg(long, default_value_t = 16)]
    pub k: usize,

    /// Number of runs, with seeds `seed .. seed + seeds`.
    #[arg(long, default_value_t = 10)]
    pub seeds: usize,

    /// The feature CSV starts with a header row.
    #[arg(long)]
    pub features_header: bool,

    #[command(flatten)]
    pub training: TrainingArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Benchmark scenario, 1-6.
    #[arg(long)]
    pub scenario: u8,

    #[arg(long, default_value_t = 7)]
    pub points: usize,

    #[arg(long, default_value_t = 3)]
    pub seeds: usize,

    /// Comma-separated subset of dmon,kmeans,spectral.
    #[arg(long, value_parser = parse_method, value_delimiter = ',', default_value = "dmon,kmeans,spectral")]
    pub methods: Vec<Method>,

    /// Interpret d_out per foreign cluster instead of in total.
    #[arg(long)]
    pub d_out_per_cluster: bool,

    #[command(flatten)]
    pub training: TrainingArgs,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Dataset directory supplying the graph and, if present, labels.
    #[arg(long)]
    pub input: PathBuf,

    /// Partition file, one cluster id per line.
    #[arg(long)]
    pub partition: PathBuf,
}

fn parse_method(s: &str) -> std::result::Result<Method, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Runs a parsed command line.
pub fn run(cli: &Cli) -> Result<()> {
    let threads = if cli.deterministic { 1 } else { 0 };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| match &cli.command {
        Command::Generate(args) => cmd_generate(cli, args),
        Command::Cluster(args) => cmd_cluster(cli, args),
        Command::Sweep(args) => cmd_sweep(cli, args),
        Command::Eval(args) => cmd_eval(cli, args),
    })
}

fn out_dir(cli: &Cli, default: &str) -> PathBuf {
    cli.out_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from(default))
}

fn write_report(path: &Path, format: Format, report: &MetricsReport) -> Result<()> {
    let body = match format {
        Format::Csv => report.to_csv(),
        Format::Json => format!("{}\n", serde_json::to_string_pretty(report)?),
    };
    io::write_string(path, &body)
}

fn cmd_generate(cli: &Cli, args: &GenerateArgs) -> Result<()> {
    let dir = out_dir(cli, "adcsbm");
    let base = args.generator.config(cli.seed);
    let Some(id) = args.scenario else {
        base.validate()?;
        let instance = adcsbm::generate(&base)?;
        adcsbm::write_instance(&dir, &base, &instance)?;
        print_instance(&dir, &instance.graph);
        return Ok(());
    };
    let cells = adcsbm::scenario_cells(Scenario::new(id)?, args.points, args.seeds, &base)?;
    let written: Vec<(PathBuf, usize, usize)> = cells
        .par_iter()
        .map(|cell| {
            let instance = adcsbm::generate(&cell.config)?;
            let path = dir.join(cell_dir_name(cell));
            adcsbm::write_instance(&path, &cell.config, &instance)?;
            Ok((path, instance.graph.num_nodes(), instance.graph.num_edges()))
        })
        .collect::<Result<_>>()?;
    for (path, n, m) in written {
        println!(
            "{}: n={n} m={m} mean_degree={:.3}",
            path.display(),
            mean_degree(n, m)
        );
    }
    Ok(())
}

fn cell_dir_name(cell: &SweepCell) -> String {
    format!(
        "scenario{}_point{:02}_seed{}",
        cell.scenario, cell.point, cell.seed
    )
}

fn mean_degree(n: usize, m: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        2.0 * m as f64 / n as f64
    }
}

fn print_instance(dir: &Path, g: &crate::SparseGraph) {
    println!(
        "{}: n={} m={} mean_degree={:.3}",
        dir.display(),
        g.num_nodes(),
        g.num_edges(),
        mean_degree(g.num_nodes(), g.num_edges())
    );
}

fn cmd_cluster(cli: &Cli, args: &ClusterArgs) -> Result<()> {
    if args.seeds == 0 {
        return Err(Error::Config("--seeds must be at least 1".into()));
    }
    let data = Dataset::load(&args.input, args.features_header)?;
    if args.method.needs_features() && data.features.is_none() {
        return Err(Error::Config(format!(
            "method `{}` needs {} in {}",
            args.method,
            io::FEATURES_FILE,
            args.input.display()
        )));
    }
    if data.labels.is_none() {
        log::warn!(
            "no labels in {}; reporting graph metrics only",
            args.input.display()
        );
    }
    let settings = args.training.settings(data.synthetic);
    let dir = out_dir(cli, "results");
    let seeds: Vec<u64> = (0..args.seeds as u64).map(|i| cli.seed + i).collect();
    let reports: Vec<MetricsReport> = seeds
        .par_iter()
        .map(|&seed| {
            let outcome = run_method(
                args.method,
                &data.graph,
                data.features.as_ref(),
                args.k,
                &settings,
                seed,
            )?;
            let report =
                MetricsReport::evaluate(&data.graph, &outcome.partition, data.labels.as_ref())?;
            let seed_dir = dir.join(format!("seed_{seed}"));
            io::write_partition(seed_dir.join("partition.txt"), &outcome.partition)?;
            write_report(
                &seed_dir.join(format!("metrics.{}", cli.format.extension())),
                cli.format,
                &report,
            )?;
            if let Some(history) = &outcome.history {
                io::write_string(
                    &seed_dir.join("loss_history.csv"),
                    &loss_history_csv(history),
                )?;
            }
            log::info!(
                "seed {seed}: {}",
                report.to_csv().lines().nth(1).unwrap_or_default()
            );
            Ok(report)
        })
        .collect::<Result<_>>()?;
    let summary = MetricsSummary::aggregate(reports)?;
    write_report(
        &dir.join(format!("metrics.{}", cli.format.extension())),
        cli.format,
        &summary.mean,
    )?;
    let summary_body = match cli.format {
        Format::Csv => summary.to_csv(),
        Format::Json => format!("{}\n", serde_json::to_string_pretty(&summary)?),
    };
    io::write_string(
        &dir.join(format!("metrics_summary.{}", cli.format.extension())),
        &summary_body,
    )?;
    print!("{}", summary.mean.to_csv());
    Ok(())
}

/// One line of a sweep table. Scores are fractions in [0, 1] except
/// modularity, which may be negative.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub scenario: u8,
    pub param: f64,
    pub seed: u64,
    pub method: Method,
    pub nmi: f64,
    pub f1: f64,
    pub modularity: f64,
    pub conductance: f64,
    /// Detectability threshold of the cell's configuration (scenario 1 only).
    pub threshold: Option<f64>,
}

pub fn sweep_rows(
    scenario: Scenario,
    points: usize,
    seeds: usize,
    methods: &[Method],
    base: &AdcSbmConfig,
    settings: &DmonSettings,
) -> Result<Vec<SweepRow>> {
    let cells = adcsbm::scenario_cells(scenario, points, seeds, base)?;
    let per_cell: Vec<Vec<SweepRow>> = cells
        .par_iter()
        .map(|cell| {
            let instance = adcsbm::generate(&cell.config)?;
            let k = cell.config.k;
            methods
                .iter()
                .map(|&method| {
                    let outcome = run_method(
                        method,
                        &instance.graph,
                        Some(&instance.features),
                        k,
                        settings,
                        cell.seed,
                    )?;
                    let p = &outcome.partition;
                    let truth = &instance.graph_labels;
                    Ok(SweepRow {
                        scenario: cell.scenario,
                        param: cell.param,
                        seed: cell.seed,
                        method,
                        nmi: metrics::nmi(p, truth)?,
                        f1: metrics::pairwise_f1(p, truth)?,
                        modularity: metrics::modularity(&instance.graph, p)?,
                        conductance: metrics::mean_conductance(&instance.graph, p)?,
                        threshold: (scenario.id() == 1)
                            .then(|| adcsbm::detectability_threshold(&cell.config)),
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(per_cell.into_iter().flatten().collect())
}

fn cmd_sweep(cli: &Cli, args: &SweepArgs) -> Result<()> {
    if args.methods.is_empty() {
        return Err(Error::Config("no methods selected".into()));
    }
    let scenario = Scenario::new(args.scenario)?;
    let base = AdcSbmConfig {
        seed: cli.seed,
        d_out_per_cluster: args.d_out_per_cluster,
        ..AdcSbmConfig::default()
    };
    let rows = sweep_rows(
        scenario,
        args.points,
        args.seeds,
        &args.methods,
        &base,
        &args.training.settings(true),
    )?;
    let path = out_dir(cli, "results").join(format!(
        "sweep_scenario{}.{}",
        scenario.id(),
        cli.format.extension()
    ));
    let body = match cli.format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for row in &rows {
                w.serialize(row)
                    .map_err(|e| Error::Config(format!("serializing sweep row: {e}")))?;
            }
            let bytes = w
                .into_inner()
                .map_err(|e| Error::Config(format!("serializing sweep table: {e}")))?;
            String::from_utf8(bytes).expect("csv output is utf-8")
        }
        Format::Json => format!("{}\n", serde_json::to_string_pretty(&rows)?),
    };
    io::write_string(&path, &body)?;
    println!("{}: {} rows", path.display(), rows.len());
    Ok(())
}

fn cmd_eval(cli: &Cli, args: &EvalArgs) -> Result<()> {
    let data = Dataset::load(&args.input, false)?;
    let partition: HardPartition = io::load_partition(&args.partition)?;
    if partition.len() != data.graph.num_nodes() {
        return Err(Error::Shape(format!(
            "partition has {} entries, graph has {} nodes",
            partition.len(),
            data.graph.num_nodes()
        )));
    }
    let report = MetricsReport::evaluate(&data.graph, &partition, data.labels.as_ref())?;
    if let Some(dir) = &cli.out_dir {
        write_report(
            &dir.join(format!("metrics.{}", cli.format.extension())),
            cli.format,
            &report,
        )?;
    }
    match cli.format {
        Format::Csv => print!("{}", report.to_csv()),
        Format::Json => println!("{}", serde_json::to_string_pretty(&report)?),
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn command_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn generator_flags_override_defaults() {
        let cli = Cli::parse_from([
            "dmon", "--seed", "4", "generate", "--k", "8", "--d-out", "3",
        ]);
        let Command::Generate(args) = &cli.command else {
            panic!("expected generate");
        };
        let cfg = args.generator.config(cli.seed);
        assert_eq!((cfg.k, cfg.k_f, cfg.d_out, cfg.seed), (8, 8, 3.0, 4));
        assert_eq!(cfg.n, 1000);
    }

    #[test]
    fn methods_list() {
        let cli = Cli::parse_from([
            "dmon",
            "sweep",
            "--scenario",
            "1",
            "--methods",
            "kmeans,spectral",
        ]);
        let Command::Sweep(args) = &cli.command else {
            panic!("expected sweep");
        };
        assert_eq!(args.methods, vec![Method::Kmeans, Method::Spectral]);
        assert!(
            Cli::try_parse_from(["dmon", "cluster", "--input", "x", "--method", "louvain"])
                .is_err()
        );
    }

    #[test]
    fn sweep_row_count_and_order() {
        let base = AdcSbmConfig {
            n: 120,
            ..AdcSbmConfig::default()
        };
        let settings = DmonSettings {
            epochs: 5,
            ..DmonSettings::synthetic()
        };
        let rows = sweep_rows(
            Scenario::new(1).unwrap(),
            3,
            2,
            &Method::ALL,
            &base,
            &settings,
        )
        .unwrap();
        assert_eq!(rows.len(), 3 * 2 * 3);
        assert!(rows.windows(2).all(|w| w[0].param <= w[1].param));
        assert!(rows.iter().all(|r| r.threshold.is_some()));
    }
}
