//! Multi-entity GPS trajectories and behavioral annotations.
//!
//! A [`TrajectorySet`] holds one [`EntityTimeSeries`] per tracked animal, all
//! snapped to a shared timestamp grid `epoch + k * sample_period`. Timestamps
//! are integer UTC seconds and coordinates are planar meters.

mod alignment;
mod gaps;
mod io;
mod labels;

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use alignment::{validate_alignment, AlignmentReport, EntityCoverage};
pub use gaps::interpolate_gaps;
pub use io::{
    load_trajectories, read_trajectories, write_trajectories, CoordinateSystem, IngestReport,
    LoadedTrajectories, TrajectorySchema,
};
pub use labels::{
    load_labels, read_labels, write_labels, Annotation, LabelSet, LabelTarget, GROUP_SENTINEL,
};

/// One observation of an entity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fix {
    pub timestamp: i64,
    pub x: f64,
    pub y: f64,
    /// `false` for fixes synthesized by gap interpolation.
    pub valid: bool,
}

impl Fix {
    pub fn new(timestamp: i64, x: f64, y: f64) -> Self {
        Fix {
            timestamp,
            x,
            y,
            valid: true,
        }
    }

    pub fn distance(&self, other: &Fix) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityTimeSeries {
    pub entity_id: String,
    samples: Vec<Fix>,
}

impl EntityTimeSeries {
    /// Builds a series, rejecting unsorted or duplicate timestamps and
    /// non-finite coordinates on valid fixes.
    pub fn new(entity_id: impl Into<String>, samples: Vec<Fix>) -> Result<Self> {
        let entity_id = entity_id.into();
        if entity_id.is_empty() {
            return Err(Error::InvalidConfig("empty entity id".into()));
        }
        for pair in samples.windows(2) {
            if pair[1].timestamp <= pair[0].timestamp {
                return Err(Error::InvalidConfig(format!(
                    "entity `{entity_id}`: timestamps not strictly increasing at {}",
                    pair[1].timestamp
                )));
            }
        }
        if let Some(bad) = samples
            .iter()
            .find(|f| f.valid && !(f.x.is_finite() && f.y.is_finite()))
        {
            return Err(Error::InvalidConfig(format!(
                "entity `{entity_id}`: non-finite coordinate at {}",
                bad.timestamp
            )));
        }
        Ok(EntityTimeSeries { entity_id, samples })
    }

    pub fn samples(&self) -> &[Fix] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn first_timestamp(&self) -> Option<i64> {
        self.samples.first().map(|f| f.timestamp)
    }

    pub fn last_timestamp(&self) -> Option<i64> {
        self.samples.last().map(|f| f.timestamp)
    }
}

/// All tracked entities on a common sampling grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySet {
    entities: Vec<EntityTimeSeries>,
    epoch: i64,
    sample_period: i64,
}

impl TrajectorySet {
    pub fn new(entities: Vec<EntityTimeSeries>, epoch: i64, sample_period: i64) -> Result<Self> {
        if entities.is_empty() {
            return Err(Error::EmptyInput);
        }
        if sample_period <= 0 {
            return Err(Error::InvalidConfig(format!(
                "sample period must be positive, got {sample_period}"
            )));
        }
        let mut seen = HashSet::new();
        for series in &entities {
            if !seen.insert(series.entity_id.as_str()) {
                return Err(Error::InvalidConfig(format!(
                    "duplicate entity id `{}`",
                    series.entity_id
                )));
            }
            for fix in series.samples() {
                if fix.timestamp < epoch || (fix.timestamp - epoch) % sample_period != 0 {
                    return Err(Error::IrregularSampling {
                        entity: series.entity_id.clone(),
                        timestamp: fix.timestamp as f64,
                        period: sample_period,
                    });
                }
            }
        }
        Ok(TrajectorySet {
            entities,
            epoch,
            sample_period,
        })
    }

    pub fn entities(&self) -> &[EntityTimeSeries] {
        &self.entities
    }

    pub fn entity_ids(&self) -> impl Iterator<Item = &str> {
        self.entities.iter().map(|e| e.entity_id.as_str())
    }

    pub fn entity(&self, id: &str) -> Option<&EntityTimeSeries> {
        self.entities.iter().find(|e| e.entity_id == id)
    }

    pub fn len(&self) -> usize {
        self.entities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty()
    }

    pub fn epoch(&self) -> i64 {
        self.epoch
    }

    pub fn sample_period(&self) -> i64 {
        self.sample_period
    }

    /// Last grid timestamp carrying a fix, over all entities.
    pub fn last_timestamp(&self) -> i64 {
        self.entities
            .iter()
            .filter_map(|e| e.last_timestamp())
            .max()
            .unwrap_or(self.epoch)
    }

    /// Duration covered by the grid, `[epoch, last + sample_period)`.
    pub fn span(&self) -> i64 {
        self.last_timestamp() - self.epoch + self.sample_period
    }

    pub fn total_fixes(&self) -> usize {
        self.entities.iter().map(|e| e.len()).sum()
    }

    /// Applies [`interpolate_gaps`] to every entity, returning the new set
    /// and the number of gaps that were filled.
    pub fn interpolate_gaps(&self, max_gap: i64) -> (TrajectorySet, usize) {
        let mut filled = 0;
        let entities = self
            .entities
            .iter()
            .map(|series| {
                let out = interpolate_gaps(series, self.sample_period, max_gap);
                filled += gaps::count_filled(series, &out, self.sample_period);
                out
            })
            .collect();
        (
            TrajectorySet {
                entities,
                epoch: self.epoch,
                sample_period: self.sample_period,
            },
            filled,
        )
    }
}
