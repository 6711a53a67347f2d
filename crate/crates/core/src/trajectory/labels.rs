use std::collections::BTreeSet;
use std::fmt;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::io::parse_timestamp;
use super::TrajectorySet;
use crate::error::{Error, Result};

/// Literal id that applies an annotation to every entity.
pub const GROUP_SENTINEL: &str = "group";

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "String", into = "String")]
pub enum LabelTarget {
    Group,
    Entity(String),
}

impl From<String> for LabelTarget {
    fn from(id: String) -> Self {
        if id == GROUP_SENTINEL {
            LabelTarget::Group
        } else {
            LabelTarget::Entity(id)
        }
    }
}

impl From<LabelTarget> for String {
    fn from(t: LabelTarget) -> Self {
        t.to_string()
    }
}

impl fmt::Display for LabelTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LabelTarget::Group => f.write_str(GROUP_SENTINEL),
            LabelTarget::Entity(id) => f.write_str(id),
        }
    }
}

impl LabelTarget {
    pub fn applies_to(&self, entity_id: &str) -> bool {
        match self {
            LabelTarget::Group => true,
            LabelTarget::Entity(id) => id == entity_id,
        }
    }
}

/// A behavior observed over `[start, start + label_resolution)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Annotation {
    pub target: LabelTarget,
    pub start: i64,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelSet {
    annotations: Vec<Annotation>,
    label_resolution: i64,
    origin: i64,
    classes: BTreeSet<String>,
}

impl LabelSet {
    /// Validates grid alignment against `origin` and sorts by start time.
    pub fn new(mut annotations: Vec<Annotation>, label_resolution: i64, origin: i64) -> Result<Self> {
        if label_resolution <= 0 {
            return Err(Error::InvalidResolution {
                resolution: label_resolution,
                reason: "label resolution must be positive".into(),
            });
        }
        if let Some(bad) = annotations
            .iter()
            .find(|a| (a.start - origin).rem_euclid(label_resolution) != 0)
        {
            return Err(Error::MisalignedAnnotation {
                timestamp: bad.start,
                resolution: label_resolution,
            });
        }
        annotations.sort_by_key(|a| a.start);
        let classes = annotations.iter().map(|a| a.label.clone()).collect();
        Ok(LabelSet {
            annotations,
            label_resolution,
            origin,
            classes,
        })
    }

    pub fn empty(label_resolution: i64) -> Self {
        LabelSet {
            annotations: Vec::new(),
            label_resolution,
            origin: 0,
            classes: BTreeSet::new(),
        }
    }

    pub fn annotations(&self) -> &[Annotation] {
        &self.annotations
    }

    pub fn label_resolution(&self) -> i64 {
        self.label_resolution
    }

    pub fn origin(&self) -> i64 {
        self.origin
    }

    pub fn classes(&self) -> &BTreeSet<String> {
        &self.classes
    }

    pub fn len(&self) -> usize {
        self.annotations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.annotations.is_empty()
    }

    /// Annotations whose start falls in `[start, end)`, in time order.
    pub fn in_range(&self, start: i64, end: i64) -> &[Annotation] {
        let lo = self.annotations.partition_point(|a| a.start < start);
        let hi = self.annotations.partition_point(|a| a.start < end);
        &self.annotations[lo..hi]
    }

    /// Fails with `UnknownEntity` on the first annotation naming an id the
    /// trajectories do not contain.
    pub fn cross_check(&self, trajectories: &TrajectorySet) -> Result<()> {
        for a in &self.annotations {
            if let LabelTarget::Entity(id) = &a.target {
                if trajectories.entity(id).is_none() {
                    return Err(Error::UnknownEntity(id.clone()));
                }
            }
        }
        Ok(())
    }
}

/// Loads a label CSV (`timestamp,id,label`) on a grid anchored at Unix time 0.
pub fn load_labels(path: impl AsRef<Path>, resolution: i64) -> Result<LabelSet> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_labels(file, resolution, 0)
}

pub fn read_labels<R: Read>(reader: R, resolution: i64, origin: i64) -> Result<LabelSet> {
    let mut csv = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(reader);
    let headers = csv.headers()?.clone();
    if headers.iter().all(|h| h.trim().is_empty()) {
        return LabelSet::new(Vec::new(), resolution, origin);
    }
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let (ts_col, id_col, label_col) = (find("timestamp")?, find("id")?, find("label")?);

    let mut annotations = Vec::new();
    for (i, record) in csv.records().enumerate() {
        let line = i + 2;
        let rec = record?;
        let field = |c: usize| rec.get(c).map(str::trim).unwrap_or("");
        let ts = parse_timestamp(field(ts_col)).ok_or_else(|| Error::MalformedRow {
            line,
            reason: format!("bad timestamp `{}`", field(ts_col)),
        })?;
        let start = ts.round() as i64;
        if (ts - start as f64).abs() > 1e-6 {
            return Err(Error::MisalignedAnnotation {
                timestamp: start,
                resolution,
            });
        }
        let (id, label) = (field(id_col), field(label_col));
        if id.is_empty() || label.is_empty() {
            return Err(Error::MalformedRow {
                line,
                reason: "empty id or label".into(),
            });
        }
        annotations.push(Annotation {
            target: LabelTarget::from(id.to_string()),
            start,
            label: label.to_string(),
        });
    }
    LabelSet::new(annotations, resolution, origin)
}

pub fn write_labels<W: Write>(labels: &LabelSet, writer: W) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record(["timestamp", "id", "label"])?;
    for a in labels.annotations() {
        csv.write_record([a.start.to_string(), a.target.to_string(), a.label.clone()])?;
    }
    csv.flush().map_err(|e| Error::io("<writer>", e))?;
    Ok(())
}
