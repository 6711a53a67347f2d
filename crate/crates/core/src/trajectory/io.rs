use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use chrono::{DateTime, NaiveDateTime};
use serde::{Deserialize, Serialize};

use super::{EntityTimeSeries, Fix, TrajectorySet};
use crate::error::{Error, Result};

const EARTH_RADIUS_M: f64 = 6_371_008.8;

/// Relative jitter tolerated before a timestamp is considered off-grid.
const GRID_TOLERANCE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoordinateSystem {
    /// `x`/`y` are already projected meters.
    #[default]
    Planar,
    /// `x` is longitude and `y` latitude in degrees; projected to a local
    /// equirectangular plane about the dataset centroid.
    LonLat,
}

/// Column-name configuration for trajectory CSV files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrajectorySchema {
    pub timestamp: String,
    pub id: String,
    pub x: String,
    pub y: String,
    /// Optional validity column; read when present in the header.
    pub valid: String,
    pub coordinates: CoordinateSystem,
    /// Grid spacing in seconds; inferred from the data when absent.
    pub sample_period: Option<i64>,
}

impl Default for TrajectorySchema {
    fn default() -> Self {
        TrajectorySchema {
            timestamp: "timestamp".into(),
            id: "id".into(),
            x: "x".into(),
            y: "y".into(),
            valid: "valid".into(),
            coordinates: CoordinateSystem::Planar,
            sample_period: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityIngest {
    pub fixes: usize,
    /// Fraction of grid slots in the dataset span holding a fix.
    pub coverage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestReport {
    pub rows_read: usize,
    /// Unparseable rows plus duplicates.
    pub rows_rejected: usize,
    pub duplicates: usize,
    pub gaps_filled: usize,
    pub entities: BTreeMap<String, EntityIngest>,
}

#[derive(Debug, Clone)]
pub struct LoadedTrajectories {
    pub trajectories: TrajectorySet,
    pub report: IngestReport,
}

pub fn load_trajectories(path: impl AsRef<Path>, schema: &TrajectorySchema) -> Result<LoadedTrajectories> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_trajectories(file, schema)
}

struct RawRow {
    timestamp: f64,
    x: f64,
    y: f64,
    valid: bool,
}

fn column(headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| Error::MissingColumn(name.to_string()))
}

pub(crate) fn parse_timestamp(raw: &str) -> Option<f64> {
    let raw = raw.trim();
    if let Ok(v) = raw.parse::<f64>() {
        return v.is_finite().then_some(v);
    }
    if let Ok(dt) = DateTime::parse_from_rfc3339(raw) {
        return Some(dt.timestamp() as f64 + f64::from(dt.timestamp_subsec_nanos()) * 1e-9);
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f"] {
        if let Ok(dt) = NaiveDateTime::parse_from_str(raw, fmt) {
            let utc = dt.and_utc();
            return Some(utc.timestamp() as f64 + f64::from(utc.timestamp_subsec_nanos()) * 1e-9);
        }
    }
    None
}

fn parse_valid(raw: &str) -> Option<bool> {
    match raw.trim() {
        "" | "1" | "true" | "True" | "TRUE" => Some(true),
        "0" | "false" | "False" | "FALSE" => Some(false),
        _ => None,
    }
}

fn infer_period(rows: &[(String, Vec<RawRow>)]) -> i64 {
    let mut diffs: Vec<f64> = Vec::new();
    for (_, entity_rows) in rows {
        let mut ts: Vec<f64> = entity_rows.iter().map(|r| r.timestamp).collect();
        ts.sort_by(f64::total_cmp);
        diffs.extend(ts.windows(2).map(|w| w[1] - w[0]).filter(|d| *d > 0.5));
    }
    if diffs.is_empty() {
        return 1;
    }
    diffs.sort_by(f64::total_cmp);
    (diffs[diffs.len() / 2].round() as i64).max(1)
}

/// Parses a trajectory CSV from any reader.
pub fn read_trajectories<R: Read>(reader: R, schema: &TrajectorySchema) -> Result<LoadedTrajectories> {
    let mut csv = csv::ReaderBuilder::new().flexible(true).comment(Some(b'#')).from_reader(reader);
    let headers = csv.headers()?.clone();
    let ts_col = column(&headers, &schema.timestamp)?;
    let id_col = column(&headers, &schema.id)?;
    let x_col = column(&headers, &schema.x)?;
    let y_col = column(&headers, &schema.y)?;
    let valid_col = column(&headers, &schema.valid).ok();

    let mut rows_read = 0;
    let mut rows_rejected = 0;
    let mut order: HashMap<String, usize> = HashMap::new();
    let mut grouped: Vec<(String, Vec<RawRow>)> = Vec::new();

    for record in csv.records() {
        rows_read += 1;
        let parsed = record.ok().and_then(|rec| {
            let id = rec.get(id_col)?.trim();
            if id.is_empty() {
                return None;
            }
            let timestamp = parse_timestamp(rec.get(ts_col)?)?;
            let x: f64 = rec.get(x_col)?.trim().parse().ok()?;
            let y: f64 = rec.get(y_col)?.trim().parse().ok()?;
            if !(x.is_finite() && y.is_finite()) {
                return None;
            }
            let valid = match valid_col {
                Some(c) => parse_valid(rec.get(c).unwrap_or(""))?,
                None => true,
            };
            Some((id.to_string(), RawRow { timestamp, x, y, valid }))
        });
        match parsed {
            Some((id, row)) => {
                let slot = *order.entry(id.clone()).or_insert_with(|| {
                    grouped.push((id, Vec::new()));
                    grouped.len() - 1
                });
                grouped[slot].1.push(row);
            }
            None => rows_rejected += 1,
        }
    }
    if grouped.is_empty() {
        return Err(Error::EmptyInput);
    }

    if schema.coordinates == CoordinateSystem::LonLat {
        project_equirectangular(&mut grouped);
    }

    let period = match schema.sample_period {
        Some(p) if p > 0 => p,
        Some(p) => {
            return Err(Error::InvalidConfig(format!(
                "sample period must be positive, got {p}"
            )))
        }
        None => infer_period(&grouped),
    };
    let min_ts = grouped
        .iter()
        .flat_map(|(_, r)| r.iter().map(|row| row.timestamp))
        .fold(f64::INFINITY, f64::min);
    let epoch = min_ts.round() as i64;

    let mut duplicates = 0;
    let mut entities = Vec::with_capacity(grouped.len());
    for (id, entity_rows) in grouped {
        let mut fixes = Vec::with_capacity(entity_rows.len());
        for row in entity_rows {
            let offset = (row.timestamp - epoch as f64) / period as f64;
            let k = offset.round();
            let snapped = epoch as f64 + k * period as f64;
            if (row.timestamp - snapped).abs() > GRID_TOLERANCE * period as f64 + 1e-9 {
                return Err(Error::IrregularSampling {
                    entity: id,
                    timestamp: row.timestamp,
                    period,
                });
            }
            fixes.push(Fix {
                timestamp: epoch + k as i64 * period,
                x: row.x,
                y: row.y,
                valid: row.valid,
            });
        }
        // Stable sort keeps file order among equal timestamps, so dedup keeps the first row.
        fixes.sort_by_key(|f| f.timestamp);
        let before = fixes.len();
        fixes.dedup_by_key(|f| f.timestamp);
        duplicates += before - fixes.len();
        entities.push(EntityTimeSeries::new(id, fixes)?);
    }
    rows_rejected += duplicates;

    let trajectories = TrajectorySet::new(entities, epoch, period)?;
    let slots = (trajectories.span() / period).max(1) as f64;
    let entities = trajectories
        .entities()
        .iter()
        .map(|e| {
            (
                e.entity_id.clone(),
                EntityIngest {
                    fixes: e.len(),
                    coverage: e.len() as f64 / slots,
                },
            )
        })
        .collect();
    Ok(LoadedTrajectories {
        trajectories,
        report: IngestReport {
            rows_read,
            rows_rejected,
            duplicates,
            gaps_filled: 0,
            entities,
        },
    })
}

fn project_equirectangular(grouped: &mut [(String, Vec<RawRow>)]) {
    let (mut sum_lon, mut sum_lat, mut n) = (0.0, 0.0, 0usize);
    for row in grouped.iter().flat_map(|(_, r)| r.iter()) {
        sum_lon += row.x;
        sum_lat += row.y;
        n += 1;
    }
    let lon0 = sum_lon / n as f64;
    let lat0 = sum_lat / n as f64;
    let cos_lat0 = lat0.to_radians().cos();
    for row in grouped.iter_mut().flat_map(|(_, r)| r.iter_mut()) {
        let x = EARTH_RADIUS_M * (row.x - lon0).to_radians() * cos_lat0;
        let y = EARTH_RADIUS_M * (row.y - lat0).to_radians();
        row.x = x;
        row.y = y;
    }
}

/// Writes the canonical CSV form (`timestamp,id,x,y,valid`), entity by entity.
///
/// Coordinates use the shortest representation that parses back to the same
/// `f64`, so a reload reproduces the set exactly.
pub fn write_trajectories<W: Write>(set: &TrajectorySet, writer: W) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record(["timestamp", "id", "x", "y", "valid"])?;
    for series in set.entities() {
        for fix in series.samples() {
            csv.write_record([
                fix.timestamp.to_string(),
                series.entity_id.clone(),
                format!("{:?}", fix.x),
                format!("{:?}", fix.y),
                if fix.valid { "true" } else { "false" }.to_string(),
            ])?;
        }
    }
    csv.flush().map_err(|e| Error::io("<writer>", e))?;
    Ok(())
}
