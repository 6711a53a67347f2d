use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{LabelSet, LabelTarget, TrajectorySet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityCoverage {
    pub tracked_seconds: i64,
    pub labeled_seconds: i64,
    /// `labeled_seconds / tracked_seconds`, 0 for an empty track.
    pub coverage: f64,
}

/// Diagnostic summary of how labels line up with trajectories.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentReport {
    pub entities: BTreeMap<String, EntityCoverage>,
    /// Seconds of the dataset span not covered by any annotation.
    pub unlabeled_seconds: i64,
    /// Ids named by annotations but absent from the trajectories.
    pub orphans: Vec<String>,
    pub class_histogram: BTreeMap<String, usize>,
    pub total_annotations: usize,
}

fn overlap(a: (i64, i64), b: (i64, i64)) -> i64 {
    (a.1.min(b.1) - a.0.max(b.0)).max(0)
}

pub fn validate_alignment(trajectories: &TrajectorySet, labels: &LabelSet) -> AlignmentReport {
    let res = labels.label_resolution();
    let period = trajectories.sample_period();

    let mut entities = BTreeMap::new();
    for series in trajectories.entities() {
        let (Some(first), Some(last)) = (series.first_timestamp(), series.last_timestamp()) else {
            entities.insert(
                series.entity_id.clone(),
                EntityCoverage { tracked_seconds: 0, labeled_seconds: 0, coverage: 0.0 },
            );
            continue;
        };
        let tracked = (first, last + period);
        let slots: BTreeSet<i64> = labels
            .annotations()
            .iter()
            .filter(|a| a.target.applies_to(&series.entity_id))
            .map(|a| a.start)
            .collect();
        let labeled: i64 = slots.iter().map(|&s| overlap((s, s + res), tracked)).sum();
        let tracked_seconds = tracked.1 - tracked.0;
        entities.insert(
            series.entity_id.clone(),
            EntityCoverage {
                tracked_seconds,
                labeled_seconds: labeled,
                coverage: labeled as f64 / tracked_seconds as f64,
            },
        );
    }

    let span = (trajectories.epoch(), trajectories.epoch() + trajectories.span());
    let any_slots: BTreeSet<i64> = labels.annotations().iter().map(|a| a.start).collect();
    let labeled_total: i64 = any_slots.iter().map(|&s| overlap((s, s + res), span)).sum();

    let orphans: BTreeSet<String> = labels
        .annotations()
        .iter()
        .filter_map(|a| match &a.target {
            LabelTarget::Entity(id) if trajectories.entity(id).is_none() => Some(id.clone()),
            _ => None,
        })
        .collect();

    let mut class_histogram = BTreeMap::new();
    for a in labels.annotations() {
        *class_histogram.entry(a.label.clone()).or_insert(0) += 1;
    }

    AlignmentReport {
        entities,
        unlabeled_seconds: span.1 - span.0 - labeled_total,
        orphans: orphans.into_iter().collect(),
        class_histogram,
        total_annotations: labels.len(),
    }
}
