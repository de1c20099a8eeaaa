//! Acceptance suite. Prints one line per criterion and exits non-zero if any
//! criterion fails. Data-dependent criteria are skipped unless the dataset
//! directory is available (`DMON_CORA_DIR`, default `<workspace>/data/cora`).

mod common;

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use common::*;
use dmon::adcsbm::{generate, AdcSbmConfig};
use dmon::baselines::{modularity_matvec, spectral_modularity};
use dmon::dmon::{collapse_regularizer, modularity_loss, DmonModel, Propagated, SoftAssignment};
use dmon::io::Dataset;
use dmon::metrics::{brute_force_modularity, modularity, nmi, MetricsReport, MetricsSummary};
use dmon::pipeline::{fit_dmon, run_method, DmonSettings, Method};
use dmon::HardPartition;
use ndarray::Array2;
use rand::Rng;

enum Verdict {
    Pass(String),
    Fail(String),
    Skip(String),
}

use Verdict::*;

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Pass(detail)
    } else {
        Fail(detail)
    }
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len().is_multiple_of(2) {
        0.5 * (v[mid - 1] + v[mid])
    } else {
        v[mid]
    }
}

fn gradient_check() -> Verdict {
    let start = Instant::now();
    let mut r = rng(2024);
    let g = random_graph(8, 0.4, &mut r);
    let x = random_matrix(8, 5, &mut r);
    let inputs = Propagated::new(&g.normalized_adjacency(), x).unwrap();
    let model = DmonModel::new(5, 4, 3, 0.0, &mut r).unwrap();
    let err = dmon_gradient_error(&g, &inputs, &model, 1e-5);
    let elapsed = start.elapsed();
    check(
        err <= 1e-5 && elapsed < Duration::from_secs(1),
        format!(
            "max relative error {err:.2e} (limit 1e-5), {:.3}s (limit 1s)",
            elapsed.as_secs_f64()
        ),
    )
}

fn modularity_oracle() -> Verdict {
    let mut r = rng(7);
    let mut worst_loss: f64 = 0.0;
    let mut worst_metric: f64 = 0.0;
    for _ in 0..100 {
        let n = r.random_range(2..=50);
        let g = random_graph(n, r.random_range(0.05..0.6), &mut r);
        let p = random_partition(n, r.random_range(1..=8), &mut r);
        let oracle = brute_force_modularity(&g, &p).unwrap();
        let (value, _) = modularity_loss(&g, &SoftAssignment::one_hot(&p)).unwrap();
        worst_loss = worst_loss.max((-value - oracle).abs());
        worst_metric = worst_metric.max((modularity(&g, &p).unwrap() - oracle).abs());
    }
    check(
        worst_loss <= 1e-10 && worst_metric <= 1e-10,
        format!(
            "100 pairs, max |Δ| loss {worst_loss:.1e}, metric {worst_metric:.1e} (limit 1e-10)"
        ),
    )
}

fn matvec_identity() -> Verdict {
    let mut r = rng(11);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let n = r.random_range(2..=30);
        let g = random_graph(n, r.random_range(0.05..0.7), &mut r);
        let x: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
        let fast = modularity_matvec(&g, &x).unwrap();
        let dense = dense_b(&g).dot(&ndarray::Array1::from(x));
        for (a, b) in fast.iter().zip(dense.iter()) {
            worst = worst.max((a - b).abs());
        }
    }
    check(
        worst <= 1e-12,
        format!("50 graphs, max |Δ| {worst:.1e} (limit 1e-12)"),
    )
}

fn collapse_endpoints() -> Verdict {
    let mut worst: f64 = 0.0;
    for k in [2usize, 4, 16] {
        let n = 3 * k;
        let balanced = HardPartition::new((0..n).map(|i| i % k).collect(), k).unwrap();
        let (b, _) = collapse_regularizer(&SoftAssignment::one_hot(&balanced)).unwrap();
        let (u, _) = collapse_regularizer(&SoftAssignment::uniform(n, k)).unwrap();
        let mut collapsed = Array2::zeros((n, k));
        collapsed.column_mut(0).fill(1.0);
        let (c, _) = collapse_regularizer(&SoftAssignment::new(collapsed).unwrap()).unwrap();
        worst = worst
            .max(b.abs())
            .max(u.abs())
            .max((c - ((k as f64).sqrt() - 1.0)).abs());
    }
    check(
        worst <= 1e-12,
        format!("k ∈ {{2, 4, 16}}, max deviation {worst:.1e} (limit 1e-12)"),
    )
}

struct Comparison {
    dmon: Vec<f64>,
    spectral: Vec<f64>,
    collapsed: usize,
}

fn compare_on(base: &AdcSbmConfig, seeds: u64) -> Comparison {
    let settings = DmonSettings::synthetic();
    let mut out = Comparison {
        dmon: Vec::new(),
        spectral: Vec::new(),
        collapsed: 0,
    };
    for seed in 0..seeds {
        let inst = generate(&AdcSbmConfig {
            seed,
            ..base.clone()
        })
        .unwrap();
        let run = fit_dmon(&inst.graph, &inst.features, base.k, &settings, seed).unwrap();
        if run.partition.num_nonempty() < 2 {
            out.collapsed += 1;
        }
        out.dmon
            .push(nmi(&run.partition, &inst.graph_labels).unwrap());
        let sp = spectral_modularity(&inst.graph, base.k, seed).unwrap();
        out.spectral.push(nmi(&sp, &inst.graph_labels).unwrap());
    }
    out
}

fn planted_recovery() -> Verdict {
    let start = Instant::now();
    let c = compare_on(&AdcSbmConfig::default(), 10);
    let elapsed = start.elapsed();
    let dmon_median = median(&c.dmon);
    let spectral_min = c.spectral.iter().copied().fold(f64::INFINITY, f64::min);
    check(
        dmon_median >= 0.85
            && c.collapsed == 0
            && spectral_min >= 0.9
            && elapsed < Duration::from_secs(300),
        format!(
            "DMoN median NMI {dmon_median:.3} (≥ 0.85), collapsed runs {}, spectral min NMI {spectral_min:.3} (≥ 0.9), {:.1}s (< 300s)",
            c.collapsed,
            elapsed.as_secs_f64()
        ),
    )
}

fn scenario_one_contrast() -> Verdict {
    let at = |per_cluster: bool| {
        compare_on(
            &AdcSbmConfig {
                d_out: 5.0,
                d_out_per_cluster: per_cluster,
                ..AdcSbmConfig::default()
            },
            10,
        )
    };
    let c = at(false);
    let (dm, sm) = (median(&c.dmon), median(&c.spectral));
    let ok = dm - sm >= 0.2;
    let mut detail = format!(
        "d_out = 5: DMoN median NMI {dm:.3}, spectral median {sm:.3}, gap {:.3} (≥ 0.2)",
        dm - sm
    );
    if !ok {
        // the same comparison with d_out counted per foreign cluster
        let alt = at(true);
        let (adm, asm) = (median(&alt.dmon), median(&alt.spectral));
        detail.push_str(&format!(
            "; with d_out per foreign cluster: DMoN {adm:.3}, spectral {asm:.3}, gap {:.3}",
            adm - asm
        ));
    }
    check(ok, detail)
}

fn cora_dir() -> Option<PathBuf> {
    let dir = std::env::var_os("DMON_CORA_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/cora"));
    dir.is_dir().then_some(dir)
}

fn load_cora() -> Result<Dataset, Verdict> {
    let Some(dir) = cora_dir() else {
        return Err(Skip(
            "dataset not found; set DMON_CORA_DIR to a directory with edges, features.csv and labels".into(),
        ));
    };
    let data =
        Dataset::load(&dir, false).map_err(|e| Fail(format!("loading {}: {e}", dir.display())))?;
    if data.features.is_none() || data.labels.is_none() {
        return Err(Fail(format!("{} lacks features or labels", dir.display())));
    }
    Ok(data)
}

fn within(value: Option<f64>, target: f64, tol: f64) -> bool {
    value.is_some_and(|v| (v - target).abs() <= tol)
}

fn cora_reproduction() -> Verdict {
    let data = match load_cora() {
        Ok(d) => d,
        Err(v) => return v,
    };
    let start = Instant::now();
    let settings = DmonSettings::default();
    let runs: Vec<MetricsReport> = (0..10)
        .map(|seed| {
            let out = run_method(
                Method::Dmon,
                &data.graph,
                data.features.as_ref(),
                16,
                &settings,
                seed,
            )
            .unwrap();
            MetricsReport::evaluate(&data.graph, &out.partition, data.labels.as_ref()).unwrap()
        })
        .collect();
    let elapsed = start.elapsed();
    let mean = MetricsSummary::aggregate(runs).unwrap().mean;
    let (n, m) = (data.graph.num_nodes(), data.graph.num_edges());
    check(
        within(Some(mean.modularity), 76.5, 5.0)
            && within(Some(mean.conductance), 12.2, 5.0)
            && within(mean.nmi, 48.8, 6.0)
            && within(mean.pairwise_f1, 48.8, 6.0)
            && elapsed < Duration::from_secs(600),
        format!(
            "n={n} m={m}: C {:.1} (12.2±5), Q {:.1} (76.5±5), NMI {:.1} (48.8±6), F1 {:.1} (48.8±6), {:.0}s (< 600s)",
            mean.conductance,
            mean.modularity,
            mean.nmi.unwrap_or(f64::NAN),
            mean.pairwise_f1.unwrap_or(f64::NAN),
            elapsed.as_secs_f64()
        ),
    )
}

fn cora_kmeans() -> Verdict {
    let data = match load_cora() {
        Ok(d) => d,
        Err(v) => return v,
    };
    let settings = DmonSettings::default();
    let scores: Vec<f64> = (0..10)
        .map(|seed| {
            let out = run_method(
                Method::Kmeans,
                &data.graph,
                data.features.as_ref(),
                16,
                &settings,
                seed,
            )
            .unwrap();
            100.0 * nmi(&out.partition, data.labels.as_ref().unwrap()).unwrap()
        })
        .collect();
    let mean = scores.iter().sum::<f64>() / scores.len() as f64;
    check(
        (mean - 18.5).abs() <= 5.0,
        format!("mean NMI {mean:.1} (18.5±5)"),
    )
}

fn tree_bytes(root: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_path_buf();
                out.push((rel, std::fs::read(&path).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn cli_determinism() -> Verdict {
    let tmp = tempfile::tempdir().unwrap();
    let run = |out: &Path, args: &[&str]| {
        let status = Command::new(env!("CARGO_BIN_EXE_dmon"))
            .args([
                "--seed",
                "5",
                "--deterministic",
                "--out-dir",
                out.to_str().unwrap(),
            ])
            .args(args)
            .output()
            .unwrap();
        assert!(
            status.status.success(),
            "{}",
            String::from_utf8_lossy(&status.stderr)
        );
    };
    let mut files = 0;
    for trial in ["a", "b"] {
        let root = tmp.path().join(trial);
        let inst = root.join("instance");
        run(&inst, &["generate", "--defaults"]);
        let input = inst.to_str().unwrap();
        for method in ["dmon", "kmeans", "spectral"] {
            run(
                &root.join(method),
                &[
                    "cluster", "--input", input, "--method", method, "--k", "4", "--seeds", "2",
                    "--epochs", "50",
                ],
            );
        }
        run(
            &root.join("sweep"),
            &[
                "sweep",
                "--scenario",
                "1",
                "--points",
                "2",
                "--seeds",
                "1",
                "--epochs",
                "30",
            ],
        );
    }
    let a = tree_bytes(&tmp.path().join("a"));
    let b = tree_bytes(&tmp.path().join("b"));
    files += a.len();
    let same = a == b;
    check(
        same && files > 0,
        format!("{files} output files, byte-identical: {same}"),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Verdict); 9] = [
        ("gradient correctness", gradient_check),
        ("modularity oracle equivalence", modularity_oracle),
        ("matvec identity", matvec_identity),
        ("collapse endpoints", collapse_endpoints),
        ("planted recovery, strong signal", planted_recovery),
        ("scenario-1 contrast at d_out = 5", scenario_one_contrast),
        ("Cora reproduction", cora_reproduction),
        ("k-means baseline on Cora", cora_kmeans),
        ("CLI determinism", cli_determinism),
    ];
    let mut failed = Vec::new();
    for (i, (name, criterion)) in criteria.iter().enumerate() {
        let id = i + 1;
        let start = Instant::now();
        let verdict = std::panic::catch_unwind(criterion).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Fail(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        let (tag, detail) = match verdict {
            Pass(d) => ("PASS", d),
            Fail(d) => {
                failed.push(id);
                ("FAIL", d)
            }
            Skip(d) => ("SKIP", d),
        };
        println!("criterion {id} [{name}]: {tag} - {detail} [{secs:.1}s]");
    }
    if failed.is_empty() {
        println!("acceptance: all criteria passed or skipped");
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
