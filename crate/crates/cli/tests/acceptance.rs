//! Acceptance gate: one PASS/FAIL/SKIP line per criterion.
//!
//! Criteria that need the real field dataset read a pipeline config from
//! `TROOP_BABOON_CONFIG` and are skipped when it is unset.

#[path = "../../core/tests/support/mod.rs"]
mod support;

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use troop_core::classifier::{Hyperparameters, MajorityTrainer};
use troop_core::evaluation::{accuracy, cross_validate, weighted_f1, CvReport, EvaluationProtocol, Metric};
use troop_core::pipeline::{self, Dataset, FeatureConfig};
use troop_core::proximity::{pagerank, PageRankConfig, ProximityConfig, ProximityGraph};
use troop_core::segmentation::{segment, select_resolution, SegmentationConfig};
use troop_core::synthetic::{generate, ScenarioConfig};
use troop_core::trajectory::{EntityTimeSeries, Fix, TrajectorySet};

use support::{accuracy_oracle, pagerank_oracle, weighted_f1_oracle};

const BABOON_ENV: &str = "TROOP_BABOON_CONFIG";
const SEEDS: std::ops::RangeInclusive<u64> = 1..=5;

enum Verdict {
    Pass(String),
    Fail(String),
    Skip(String),
}

type Check = fn() -> Verdict;

fn within(limit: Duration, elapsed: Duration, v: Verdict) -> Verdict {
    match v {
        Verdict::Pass(msg) if elapsed > limit => Verdict::Fail(format!("{msg}; took {elapsed:?} > {limit:?}")),
        v => v,
    }
}

fn verdict(ok: bool, msg: String) -> Verdict {
    if ok {
        Verdict::Pass(msg)
    } else {
        Verdict::Fail(msg)
    }
}

fn metric_oracles() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for case in 0..1000 {
        let len = rng.random_range(1..=50);
        let classes = rng.random_range(1..=8);
        let mut draw = |_| format!("c{}", rng.random_range(0..classes));
        let predicted: Vec<String> = (0..len).map(&mut draw).collect();
        let actual: Vec<String> = (0..len).map(&mut draw).collect();
        let (a, f) = (accuracy(&predicted, &actual).unwrap(), weighted_f1(&predicted, &actual).unwrap());
        if a != accuracy_oracle(&predicted, &actual) || f != weighted_f1_oracle(&predicted, &actual) {
            return Verdict::Fail(format!("case {case} differs"));
        }
    }
    Verdict::Pass("1000 cases bit-identical".into())
}

fn pagerank_oracles() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for g in 0..100 {
        let n = rng.random_range(1..=12);
        let mut w = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let v = if rng.random_bool(0.4) { 0.0 } else { rng.random::<f64>() };
                w[i * n + j] = v;
                w[j * n + i] = v;
            }
        }
        let nodes = (0..n).map(|i| format!("n{i}")).collect();
        let graph = ProximityGraph::from_weights(nodes, w.clone(), ProximityConfig::default()).unwrap();
        let got = pagerank(&graph, &PageRankConfig::default()).unwrap().scores;
        let want = pagerank_oracle(n, &w, ProximityConfig::default().binarize_at, 0.85);
        let err = got.iter().zip(&want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let sum: f64 = got.iter().sum();
        worst = worst.max(err);
        if err > 1e-8 || (sum - 1.0).abs() > 1e-9 {
            return Verdict::Fail(format!("graph {g} (n={n}): l_inf {err:e}, sum {sum}"));
        }
    }
    Verdict::Pass(format!("100 graphs, worst l_inf {worst:.2e}"))
}

fn partition_case(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let period = [1i64, 2, 5][rng.random_range(0..3)];
    let epoch = rng.random_range(-1000..1000) * period;
    let slots = rng.random_range(2..400);
    let resolution = period * rng.random_range(1..=slots.min(60));
    let entities: Vec<EntityTimeSeries> = (0..rng.random_range(1..4))
        .map(|e| {
            let fixes = (0..slots)
                .filter(|&k| e == 0 && k == 0 || rng.random_bool(0.8))
                .map(|k| Fix::new(epoch + k * period, 0.0, 0.0))
                .collect();
            EntityTimeSeries::new(format!("e{e}"), fixes).unwrap()
        })
        .filter(|s| !s.is_empty())
        .collect();
    let set = TrajectorySet::new(entities, epoch, period).unwrap();
    if set.span() < resolution {
        return match segment(&set, SegmentationConfig::new(resolution)) {
            Err(_) => Ok(()),
            Ok(_) => Err("window longer than span accepted".into()),
        };
    }
    let ws = segment(&set, SegmentationConfig::new(resolution)).map_err(|e| e.to_string())?;
    let t = ws.windows.len() as i64;
    if t != set.span() / resolution {
        return Err(format!("{t} windows for span {} at {resolution}", set.span()));
    }
    for (i, w) in ws.windows.iter().enumerate() {
        let contiguous = i == 0 || ws.windows[i - 1].end == w.start;
        if w.start != epoch + i as i64 * resolution || w.end - w.start != resolution || !contiguous {
            return Err(format!("window {i} is [{}, {})", w.start, w.end));
        }
    }
    let end = epoch + t * resolution;
    for (e, s) in set.entities().iter().enumerate() {
        let mut seen = 0;
        for w in &ws.windows {
            let fixes = w.slice(e, s);
            if fixes.iter().any(|f| f.timestamp < w.start || f.timestamp >= w.end) {
                return Err(format!("window {} holds an outside fix", w.index));
            }
            seen += fixes.len();
        }
        if seen != s.samples().iter().filter(|f| f.timestamp < end).count() {
            return Err(format!("entity {e}: fixes not conserved"));
        }
    }
    Ok(())
}

fn segmentation_partitions() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for case in 0..200 {
        if let Err(e) = partition_case(&mut rng) {
            return Verdict::Fail(format!("case {case}: {e}"));
        }
    }
    Verdict::Pass("200 random spans".into())
}

fn cohesion(seed: u64) -> Dataset {
    let (trajectories, labels) = generate(&ScenarioConfig::cohesion(seed)).unwrap();
    Dataset { trajectories, labels }
}

fn protocol(seed: u64) -> EvaluationProtocol {
    EvaluationProtocol { seed, ..Default::default() }
}

fn hyperparameters(seed: u64) -> Hyperparameters {
    Hyperparameters { seed, ..Default::default() }
}

/// Per fold, the fraction of test rows carrying the training majority class
/// (ties to the lexicographically smallest label).
fn fold_majority_fractions(report: &CvReport) -> Vec<f64> {
    (0..report.folds.len())
        .map(|i| {
            let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
            for (j, f) in report.folds.iter().enumerate() {
                if j != i {
                    for t in &f.actual {
                        *counts.entry(t).or_default() += 1;
                    }
                }
            }
            let top = *counts.values().max().unwrap();
            let label = counts.iter().find(|(_, &n)| n == top).unwrap().0;
            let test = &report.folds[i].actual;
            test.iter().filter(|t| t == label).count() as f64 / test.len() as f64
        })
        .collect()
}

fn majority_identity() -> Verdict {
    for seed in SEEDS {
        let matrix = pipeline::features_at_resolution(&cohesion(seed), 60, &FeatureConfig::default()).unwrap();
        let report = cross_validate(&matrix, &protocol(seed), &MajorityTrainer).unwrap();
        let reported = &report.metric(Metric::Accuracy).unwrap().per_fold;
        if *reported != fold_majority_fractions(&report) {
            return Verdict::Fail(format!("seed {seed}: per-fold majority accuracy differs from counting"));
        }
    }
    Verdict::Pass("synthetic seeds 1-5, every fold exact".into())
}

type FieldRows = Option<Result<Vec<(String, f64, f64)>, String>>;

/// Runs the binary once on the field-data config at 60 s; returns
/// `(model, acc%, wf1%)` rows.
fn field_rows() -> &'static FieldRows {
    static ROWS: OnceLock<FieldRows> = OnceLock::new();
    ROWS.get_or_init(run_field)
}

fn run_field() -> FieldRows {
    let config = std::env::var_os(BABOON_ENV)?;
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_troop"))
        .arg("--config")
        .arg(&config)
        .args(["run", "--resolution", "60", "--output-dir"])
        .arg(dir.path())
        .output()
        .unwrap();
    if !out.status.success() {
        return Some(Err(String::from_utf8_lossy(&out.stderr).trim().to_string()));
    }
    let report: Value = serde_json::from_slice(&std::fs::read(dir.path().join("report.json")).unwrap()).unwrap();
    let rows = report["rows"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| {
            let pct = |k: &str| r[k].as_f64().unwrap_or(f64::NAN) * 100.0;
            (r["model"].as_str().unwrap().to_string(), pct("acc_mean"), pct("wf1_mean"))
        })
        .collect();
    Some(Ok(rows))
}

fn row<'a>(rows: &'a [(String, f64, f64)], model: &str) -> &'a (String, f64, f64) {
    rows.iter().find(|r| r.0 == model).expect("model row")
}

fn majority_on_field_data() -> Verdict {
    match field_rows() {
        None => Verdict::Skip(format!("{BABOON_ENV} unset")),
        Some(Err(e)) => Verdict::Fail(e.clone()),
        Some(Ok(rows)) => {
            let (_, acc, wf1) = *row(rows, pipeline::MAJORITY_ROW);
            verdict(
                (acc - 36.5).abs() <= 0.5 && (wf1 - 17.8).abs() <= 0.5,
                format!("majority accuracy {acc:.2}%, weighted F1 {wf1:.2}%"),
            )
        }
    }
}

fn network_lift() -> Verdict {
    let mut lifts = Vec::new();
    for seed in SEEDS {
        let outcome =
            pipeline::run(&cohesion(seed), 60, &FeatureConfig::default(), &protocol(seed), &hyperparameters(seed), true)
                .unwrap();
        let with = outcome.ensemble.metric(Metric::Accuracy).unwrap().mean;
        let without = outcome.ablation.as_ref().unwrap().metric(Metric::Accuracy).unwrap().mean;
        lifts.push(100.0 * (with - without));
    }
    let mean = lifts.iter().sum::<f64>() / lifts.len() as f64;
    let each: Vec<String> = lifts.iter().map(|l| format!("{l:.1}")).collect();
    verdict(mean >= 5.0, format!("mean lift {mean:.2} points (per seed {})", each.join(", ")))
}

fn sweep_prefers_bout_length() -> Verdict {
    let picks: Vec<i64> = SEEDS
        .map(|seed| {
            let table = pipeline::sweep(
                &cohesion(seed),
                &[60, 600],
                &FeatureConfig::default(),
                &protocol(seed),
                &hyperparameters(seed),
                seed,
            )
            .unwrap();
            select_resolution(&table).unwrap()
        })
        .collect();
    let hits = picks.iter().filter(|&&r| r == 60).count();
    verdict(hits >= 4, format!("selected 60 s on {hits}/5 seeds {picks:?}"))
}

fn determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let troop = |args: &[&str], threads: Option<&str>| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_troop"));
        c.env_remove("TROOP_CONFIG").args(args);
        if let Some(t) = threads {
            c.args(["--threads", t]);
        }
        c.output().unwrap()
    };
    let p = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    let gen = troop(&["generate", "--output-dir", &p("data"), "--set", "synthetic.duration=1800", "--seed", "3"], None);
    if !gen.status.success() {
        return Verdict::Fail("generate failed".into());
    }
    let (t, l) = (p("data/trajectories.csv"), p("data/labels.csv"));
    let runs = [("a", None), ("b", Some("1")), ("c", Some("3"))];
    for (name, threads) in runs {
        let args = ["run", "--trajectories", &t, "--labels", &l, "--seed", "3", "--output-dir", &p(name)];
        if !troop(&args, threads).status.success() {
            return Verdict::Fail(format!("run {name} failed"));
        }
    }
    let files = ["results.csv", "report.json", "model.json", "feature_importance.csv", "feature_schema.csv", "sweep.csv"];
    for f in files {
        let read = |d: &str| std::fs::read(Path::new(&p(d)).join(f)).unwrap();
        if read("a") != read("b") || read("a") != read("c") {
            return Verdict::Fail(format!("{f} differs between thread counts"));
        }
    }
    Verdict::Pass(format!("{} files byte-identical across default, 1 and 3 threads", files.len()))
}

fn field_lift() -> Verdict {
    match field_rows() {
        None => Verdict::Skip(format!("{BABOON_ENV} unset; headline figures need the field dataset")),
        Some(Err(e)) => Verdict::Fail(e.clone()),
        Some(Ok(rows)) => {
            let (_, ours, _) = *row(rows, pipeline::ENSEMBLE_ROW);
            let (_, base, _) = *row(rows, pipeline::MAJORITY_ROW);
            verdict(ours - base >= 20.0, format!("ensemble {ours:.2}% vs majority {base:.2}%"))
        }
    }
}

fn main() {
    let fast = Duration::from_secs(5);
    let slow = Duration::from_secs(180);
    let untimed = Duration::MAX;
    let criteria: [(&str, &str, Duration, Check); 9] = [
        ("1", "metric oracle equivalence", fast, metric_oracles),
        ("2", "pagerank oracle equivalence", fast, pagerank_oracles),
        ("3", "segmentation partition suite", fast, segmentation_partitions),
        ("4", "majority baseline identity", untimed, majority_identity),
        ("4", "majority baseline on field data", untimed, majority_on_field_data),
        ("5", "network lift on cohesion scenario", slow, network_lift),
        ("6", "resolution sweep sanity", slow, sweep_prefers_bout_length),
        ("7", "determinism across thread counts", untimed, determinism),
        ("8", "field data ensemble over majority", untimed, field_lift),
    ];
    let mut failed = 0;
    for (id, name, limit, check) in criteria {
        let start = Instant::now();
        let v = check();
        let elapsed = start.elapsed();
        let (tag, msg) = match within(limit, elapsed, v) {
            Verdict::Pass(m) => ("PASS", m),
            Verdict::Fail(m) => {
                failed += 1;
                ("FAIL", m)
            }
            Verdict::Skip(m) => ("SKIP", m),
        };
        println!("{tag} [{id}] {name}: {msg} ({:.2}s)", elapsed.as_secs_f64());
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
