use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use troop_core::classifier::TrainedModel;
use troop_core::evaluation::CvReport;
use troop_core::kinematics::KinematicFeatures;
use troop_core::pipeline::{self, Dataset, ResultRow};
use troop_core::segmentation::{candidate_resolutions, select_resolution, ResolutionRow, ResolutionScoreTable};
use troop_core::synthetic;
use troop_core::trajectory::{
    load_trajectories, read_labels, validate_alignment, write_labels, write_trajectories, AlignmentReport,
    IngestReport, LabelSet, LoadedTrajectories,
};

use crate::config::PipelineConfig;
use crate::error::{CliError, CliResult};
use crate::output::{OutputDir, Provenance};

pub const TRAJECTORIES_FILE: &str = "trajectories.csv";
pub const LABELS_FILE: &str = "labels.csv";
pub const SCENARIO_FILE: &str = "scenario.json";
pub const VALIDATION_FILE: &str = "validation.json";
pub const SWEEP_CSV: &str = "sweep.csv";
pub const SWEEP_JSON: &str = "sweep.json";
pub const RESULTS_CSV: &str = "results.csv";
pub const REPORT_JSON: &str = "report.json";
pub const IMPORTANCE_CSV: &str = "feature_importance.csv";
pub const SCHEMA_CSV: &str = "feature_schema.csv";
pub const MODEL_JSON: &str = "model.json";

fn output_dir(config: &PipelineConfig) -> CliResult<OutputDir> {
    OutputDir::create(
        &config.output_dir,
        Provenance {
            seed: config.seed,
            config_sha256: config.hash(),
        },
    )
}

fn require<'a>(path: &'a Option<std::path::PathBuf>, key: &str) -> CliResult<&'a Path> {
    path.as_deref().ok_or_else(|| CliError::Config(format!("`{key}` is required")))
}

fn load_inputs(config: &PipelineConfig) -> CliResult<(LoadedTrajectories, Option<LabelSet>)> {
    let path = require(&config.input.trajectories, "input.trajectories")?;
    let mut loaded = load_trajectories(path, &config.input.schema)?;
    if config.input.max_gap > 0 {
        let (filled, count) = loaded.trajectories.interpolate_gaps(config.input.max_gap);
        loaded.trajectories = filled;
        loaded.report.gaps_filled = count;
    }
    let labels = match &config.input.labels {
        Some(p) => {
            let file = File::open(p).map_err(|e| troop_core::Error::Io {
                path: p.clone(),
                source: e,
            })?;
            let labels = read_labels(file, config.input.label_resolution, config.input.label_origin)?;
            labels.cross_check(&loaded.trajectories)?;
            Some(labels)
        }
        None => None,
    };
    Ok((loaded, labels))
}

fn load_dataset(config: &PipelineConfig) -> CliResult<Dataset> {
    require(&config.input.labels, "input.labels")?;
    let (loaded, labels) = load_inputs(config)?;
    Ok(Dataset {
        trajectories: loaded.trajectories,
        labels: labels.expect("required above"),
    })
}

#[derive(Debug, Serialize)]
struct ValidationReport<'a> {
    entities: usize,
    total_fixes: usize,
    sample_period: i64,
    epoch: i64,
    span: i64,
    ingest: &'a IngestReport,
    alignment: Option<AlignmentReport>,
}

pub fn validate(config: &PipelineConfig, out: &mut dyn Write) -> CliResult<()> {
    config.validate()?;
    let (loaded, labels) = load_inputs(config)?;
    let t = &loaded.trajectories;
    let alignment = labels.as_ref().map(|l| validate_alignment(t, l));
    let report = ValidationReport {
        entities: t.len(),
        total_fixes: t.total_fixes(),
        sample_period: t.sample_period(),
        epoch: t.epoch(),
        span: t.span(),
        ingest: &loaded.report,
        alignment,
    };
    let dir = output_dir(config)?;
    dir.json(VALIDATION_FILE, "validation", &report)?;
    let _ = writeln!(
        out,
        "{} entities, {} fixes, sample period {} s, span {} s",
        report.entities, report.total_fixes, report.sample_period, report.span
    );
    let _ = writeln!(
        out,
        "rows read {}, rejected {} ({} duplicates), gaps filled {}",
        loaded.report.rows_read, loaded.report.rows_rejected, loaded.report.duplicates, loaded.report.gaps_filled
    );
    if let Some(a) = &report.alignment {
        let cov: Vec<f64> = a.entities.values().map(|c| c.coverage).collect();
        let min = cov.iter().copied().fold(f64::INFINITY, f64::min);
        let mean = cov.iter().sum::<f64>() / cov.len().max(1) as f64;
        let _ = writeln!(
            out,
            "label coverage: min {:.1}%, mean {:.1}%; {} annotations, {} orphaned",
            100.0 * min,
            100.0 * mean,
            a.total_annotations,
            a.orphans.len()
        );
    }
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SweepReport {
    pub candidates: Vec<i64>,
    pub rows: Vec<ResolutionRow>,
    pub selected: Option<i64>,
}

fn run_sweep(config: &PipelineConfig, dataset: &Dataset, dir: &OutputDir) -> CliResult<(ResolutionScoreTable, i64)> {
    let r = &config.resolution;
    let candidates = candidate_resolutions(
        r.min,
        r.max,
        r.step,
        dataset.trajectories.sample_period(),
        dataset.labels.label_resolution(),
    )?;
    let table = pipeline::sweep(
        dataset,
        &candidates,
        &config.feature_config(),
        &config.evaluation,
        &config.classifier,
        config.seed,
    )?;
    let selected = select_resolution(&table);
    dir.csv(SWEEP_CSV, |buf| table.write_csv(buf))?;
    dir.json(
        SWEEP_JSON,
        "sweep",
        &SweepReport {
            candidates,
            rows: table.rows.clone(),
            selected: selected.as_ref().ok().copied(),
        },
    )?;
    Ok((table, selected?))
}

pub fn sweep(config: &PipelineConfig, out: &mut dyn Write) -> CliResult<()> {
    config.validate()?;
    let dataset = load_dataset(config)?;
    let dir = output_dir(config)?;
    let (table, selected) = run_sweep(config, &dataset, &dir)?;
    let _ = write!(out, "{}", render_sweep(&table.rows));
    let _ = writeln!(out, "selected resolution: {selected} s");
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RunReport {
    pub config: PipelineConfig,
    pub resolution: i64,
    /// `fixed` or `sweep`.
    pub resolution_source: String,
    pub rows: Vec<ResultRow>,
    pub majority: CvReport,
    pub ensemble: CvReport,
    pub ablation: Option<CvReport>,
    pub feature_names: Vec<String>,
    pub feature_importance: Vec<(String, f64)>,
    pub n_rows: usize,
    pub n_windows: usize,
}

pub fn run(config: &PipelineConfig, out: &mut dyn Write) -> CliResult<()> {
    config.validate()?;
    let dataset = load_dataset(config)?;
    let dir = output_dir(config)?;
    let (resolution, source) = match config.resolution.fixed {
        Some(r) => (r, "fixed"),
        None => (run_sweep(config, &dataset, &dir)?.1, "sweep"),
    };
    let outcome = pipeline::run(
        &dataset,
        resolution,
        &config.feature_config(),
        &config.evaluation,
        &config.classifier,
        config.ablate_network,
    )?;

    dir.csv(RESULTS_CSV, |buf| write_results(&outcome.rows, buf))?;
    dir.csv(IMPORTANCE_CSV, |buf| write_importance(&outcome.feature_importance, buf))?;
    dir.csv(SCHEMA_CSV, |buf| write_schema(&outcome.feature_names, buf))?;
    let mut model: TrainedModel = outcome.model.clone();
    model.metadata.insert("seed".into(), config.seed.to_string());
    model.metadata.insert("config_sha256".into(), dir.provenance().config_sha256.clone());
    model.metadata.insert("resolution_s".into(), resolution.to_string());
    dir.raw(MODEL_JSON, &(model.to_json()? + "\n"))?;
    let report = RunReport {
        // The output location does not affect results and is left out.
        config: PipelineConfig {
            output_dir: Default::default(),
            ..config.clone()
        },
        resolution,
        resolution_source: source.into(),
        rows: outcome.rows,
        majority: outcome.majority,
        ensemble: outcome.ensemble,
        ablation: outcome.ablation,
        feature_names: outcome.feature_names,
        feature_importance: outcome.feature_importance,
        n_rows: outcome.n_rows,
        n_windows: outcome.n_windows,
    };
    dir.json(REPORT_JSON, "run", &report)?;
    let _ = writeln!(
        out,
        "resolution {resolution} s ({source}); {} rows over {} windows",
        report.n_rows, report.n_windows
    );
    let _ = write!(out, "{}", render_results(&report.rows));
    Ok(())
}

pub fn generate(config: &PipelineConfig, out: &mut dyn Write) -> CliResult<()> {
    config.synthetic.validate()?;
    let (trajectories, labels) = synthetic::generate(&config.synthetic)?;
    let dir = output_dir(config)?;
    let t = dir.csv(TRAJECTORIES_FILE, |buf| write_trajectories(&trajectories, buf))?;
    let l = dir.csv(LABELS_FILE, |buf| write_labels(&labels, buf))?;
    dir.json(SCENARIO_FILE, "scenario", &config.synthetic)?;
    let _ = writeln!(
        out,
        "wrote {} ({} entities, {} fixes) and {} ({} annotations at {} s)",
        t.display(),
        trajectories.len(),
        trajectories.total_fixes(),
        l.display(),
        labels.len(),
        labels.label_resolution()
    );
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ReportFormat {
    Markdown,
    Csv,
}

/// Re-renders the table stored in a `run` or `sweep` JSON report.
pub fn report(path: &Path, format: ReportFormat, out: &mut dyn Write) -> CliResult<()> {
    let text = std::fs::read_to_string(path).map_err(|e| troop_core::Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let doc: Value = serde_json::from_str(&text).map_err(|e| troop_core::Error::MalformedRow {
        line: e.line(),
        reason: e.to_string(),
    })?;
    let field = |name: &str| doc.get(name).cloned().unwrap_or(Value::Null);
    let bad = |e: serde_json::Error| troop_core::Error::MalformedRow {
        line: 0,
        reason: format!("{}: {e}", path.display()),
    };
    let rendered = match doc.get("kind").and_then(Value::as_str) {
        Some("run") => {
            let rows: Vec<ResultRow> = serde_json::from_value(field("rows")).map_err(bad)?;
            match format {
                ReportFormat::Markdown => render_results(&rows),
                ReportFormat::Csv => to_string(|b| write_results(&rows, b)),
            }
        }
        Some("sweep") => {
            let rows: Vec<ResolutionRow> = serde_json::from_value(field("rows")).map_err(bad)?;
            match format {
                ReportFormat::Markdown => render_sweep(&rows),
                ReportFormat::Csv => to_string(|b| ResolutionScoreTable { rows: rows.clone() }.write_csv(b)),
            }
        }
        other => {
            return Err(troop_core::Error::MalformedRow {
                line: 0,
                reason: format!("{}: unsupported report kind {other:?}", path.display()),
            }
            .into())
        }
    };
    let _ = write!(out, "{rendered}");
    Ok(())
}

fn to_string<F: FnOnce(&mut Vec<u8>) -> troop_core::Result<()>>(f: F) -> String {
    let mut buf = Vec::new();
    f(&mut buf).expect("in-memory write");
    String::from_utf8(buf).expect("utf-8")
}

pub const RESULTS_HEADER: [&str; 6] = ["model", "n_features", "acc_mean", "acc_std", "wf1_mean", "wf1_std"];

pub fn write_results(rows: &[ResultRow], buf: &mut Vec<u8>) -> troop_core::Result<()> {
    let mut w = csv::Writer::from_writer(buf);
    w.write_record(RESULTS_HEADER)?;
    for r in rows {
        w.write_record([
            r.model.clone(),
            r.n_features.to_string(),
            format!("{:?}", r.acc_mean),
            format!("{:?}", r.acc_std),
            format!("{:?}", r.wf1_mean),
            format!("{:?}", r.wf1_std),
        ])?;
    }
    w.flush().map_err(|e| troop_core::Error::Io {
        path: RESULTS_CSV.into(),
        source: e,
    })
}

fn write_importance(importance: &[(String, f64)], buf: &mut Vec<u8>) -> troop_core::Result<()> {
    let total: f64 = importance.iter().map(|(_, g)| g).sum();
    let mut w = csv::Writer::from_writer(buf);
    w.write_record(["rank", "feature", "gain", "share"])?;
    for (i, (name, gain)) in importance.iter().enumerate() {
        let share = if total > 0.0 { gain / total } else { 0.0 };
        w.write_record([(i + 1).to_string(), name.clone(), format!("{gain:?}"), format!("{share:?}")])?;
    }
    w.flush().map_err(|e| troop_core::Error::Io {
        path: IMPORTANCE_CSV.into(),
        source: e,
    })
}

fn write_schema(names: &[String], buf: &mut Vec<u8>) -> troop_core::Result<()> {
    let mut w = csv::Writer::from_writer(buf);
    w.write_record(["index", "feature", "family"])?;
    for (i, name) in names.iter().enumerate() {
        let family = if KinematicFeatures::NAMES.contains(&name.as_str()) { "kinematic" } else { "network" };
        w.write_record([i.to_string(), name.clone(), family.to_string()])?;
    }
    w.flush().map_err(|e| troop_core::Error::Io {
        path: SCHEMA_CSV.into(),
        source: e,
    })
}

fn pct(v: Option<f64>) -> String {
    match v {
        Some(x) if x.is_finite() => format!("{:.2}", 100.0 * x),
        _ => "-".into(),
    }
}

/// Mean ± std in percentage points.
pub fn render_results(rows: &[ResultRow]) -> String {
    let mut s = String::from("| model | features | accuracy | weighted F1 |\n|---|---|---|---|\n");
    for r in rows {
        s += &format!(
            "| {} | {} | {} ± {} | {} ± {} |\n",
            r.model,
            r.n_features,
            pct(Some(r.acc_mean)),
            pct(Some(r.acc_std)),
            pct(Some(r.wf1_mean)),
            pct(Some(r.wf1_std))
        );
    }
    s
}

pub fn render_sweep(rows: &[ResolutionRow]) -> String {
    let mut s = String::from("| resolution (s) | accuracy | weighted F1 | combined | status |\n|---|---|---|---|---|\n");
    for r in rows {
        let status = match &r.status {
            troop_core::segmentation::RowStatus::Ok => "ok".to_string(),
            troop_core::segmentation::RowStatus::Failed(m) => format!("failed: {m}"),
        };
        s += &format!(
            "| {} | {} ± {} | {} ± {} | {} | {} |\n",
            r.resolution,
            pct(r.accuracy_mean),
            pct(r.accuracy_std),
            pct(r.wf1_mean),
            pct(r.wf1_std),
            pct(r.combined_score),
            status
        );
    }
    s
}
