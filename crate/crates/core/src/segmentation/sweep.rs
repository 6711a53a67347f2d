use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::{CvReport, Metric};
use crate::rng::derive_seed;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowStatus {
    Ok,
    Failed(String),
}

impl RowStatus {
    pub fn is_ok(&self) -> bool {
        matches!(self, RowStatus::Ok)
    }
}

/// Cross-validated scores at one candidate resolution. Score fields are
/// `None` when the row failed or the metric was not requested.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolutionRow {
    pub resolution: i64,
    pub accuracy_mean: Option<f64>,
    pub accuracy_std: Option<f64>,
    pub wf1_mean: Option<f64>,
    pub wf1_std: Option<f64>,
    /// Unweighted mean of the available metric means.
    pub combined_score: Option<f64>,
    pub status: RowStatus,
}

impl ResolutionRow {
    pub fn from_report(resolution: i64, report: &CvReport) -> Self {
        let acc = report.metric(Metric::Accuracy);
        let wf1 = report.metric(Metric::WeightedF1);
        let means: Vec<f64> = [acc, wf1].iter().flatten().map(|m| m.mean).collect();
        ResolutionRow {
            resolution,
            accuracy_mean: acc.map(|m| m.mean),
            accuracy_std: acc.map(|m| m.std),
            wf1_mean: wf1.map(|m| m.mean),
            wf1_std: wf1.map(|m| m.std),
            combined_score: (!means.is_empty()).then(|| means.iter().sum::<f64>() / means.len() as f64),
            status: RowStatus::Ok,
        }
    }

    pub fn failed(resolution: i64, error: &Error) -> Self {
        ResolutionRow {
            resolution,
            accuracy_mean: None,
            accuracy_std: None,
            wf1_mean: None,
            wf1_std: None,
            combined_score: None,
            status: RowStatus::Failed(error.to_string()),
        }
    }
}

/// Rows in ascending resolution order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolutionScoreTable {
    pub rows: Vec<ResolutionRow>,
}

pub const SWEEP_CSV_HEADER: [&str; 7] = [
    "resolution_s",
    "accuracy_mean",
    "accuracy_std",
    "wf1_mean",
    "wf1_std",
    "combined_score",
    "status",
];

impl ResolutionScoreTable {
    /// Empty cells mark missing scores; `status` is `ok` or `failed: <reason>`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut csv = csv::Writer::from_writer(writer);
        csv.write_record(SWEEP_CSV_HEADER)?;
        let cell = |v: Option<f64>| v.map(|x| format!("{x:?}")).unwrap_or_default();
        for r in &self.rows {
            let status = match &r.status {
                RowStatus::Ok => "ok".to_string(),
                RowStatus::Failed(msg) => format!("failed: {msg}"),
            };
            csv.write_record([
                r.resolution.to_string(),
                cell(r.accuracy_mean),
                cell(r.accuracy_std),
                cell(r.wf1_mean),
                cell(r.wf1_std),
                cell(r.combined_score),
                status,
            ])?;
        }
        csv.flush().map_err(|e| Error::io("<sweep table>", e))?;
        Ok(())
    }
}

/// Evaluates every candidate with `evaluate(resolution, seed)`.
///
/// Candidates run in parallel, each with a seed derived from
/// `(master_seed, resolution)`. A failing candidate yields a failed row and
/// the sweep continues.
pub fn sweep_resolutions<F>(candidates: &[i64], master_seed: u64, evaluate: F) -> Result<ResolutionScoreTable>
where
    F: Fn(i64, u64) -> Result<CvReport> + Sync,
{
    let mut sorted = candidates.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.is_empty() {
        return Err(Error::EmptyCandidateSet);
    }
    let rows = sorted
        .par_iter()
        .map(|&res| match evaluate(res, derive_seed(master_seed, res as u64)) {
            Ok(report) => ResolutionRow::from_report(res, &report),
            Err(e) => ResolutionRow::failed(res, &e),
        })
        .collect();
    Ok(ResolutionScoreTable { rows })
}

/// Resolution with the highest combined score; ties go to the smallest.
pub fn select_resolution(table: &ResolutionScoreTable) -> Result<i64> {
    let mut best: Option<(i64, f64)> = None;
    for row in &table.rows {
        let Some(score) = row.combined_score.filter(|_| row.status.is_ok()) else {
            continue;
        };
        best = match best {
            Some((r, s)) if s > score || (s == score && r <= row.resolution) => Some((r, s)),
            _ => Some((row.resolution, score)),
        };
    }
    best.map(|(r, _)| r).ok_or(Error::AllCandidatesFailed)
}
