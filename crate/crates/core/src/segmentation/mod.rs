//! Temporal segmentation into global, contiguous, equal-length windows and
//! the per-window label target.

mod sweep;

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trajectory::{EntityTimeSeries, Fix, LabelSet, TrajectorySet};

pub use sweep::{
    select_resolution, sweep_resolutions, ResolutionRow, ResolutionScoreTable, RowStatus,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentationConfig {
    /// Window length in seconds.
    pub resolution: i64,
    /// Discard a trailing window shorter than `resolution`.
    pub drop_partial: bool,
}

impl SegmentationConfig {
    pub fn new(resolution: i64) -> Self {
        SegmentationConfig {
            resolution,
            drop_partial: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub index: usize,
    pub start: i64,
    /// Exclusive.
    pub end: i64,
    /// Per entity, the half-open range of sample indices in `[start, end)`.
    pub ranges: Vec<Range<usize>>,
}

impl Window {
    /// The fixes of `series` (entity `entity` of the segmented set) inside this window.
    pub fn slice<'a>(&self, entity: usize, series: &'a EntityTimeSeries) -> &'a [Fix] {
        &series.samples()[self.ranges[entity].clone()]
    }

    pub fn len_seconds(&self) -> i64 {
        self.end - self.start
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowSet {
    pub windows: Vec<Window>,
    pub resolution: i64,
}

impl WindowSet {
    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }
}

/// Partitions the dataset span into windows starting at the epoch.
pub fn segment(trajectories: &TrajectorySet, config: SegmentationConfig) -> Result<WindowSet> {
    let res = config.resolution;
    let period = trajectories.sample_period();
    if res <= 0 {
        return Err(Error::InvalidResolution {
            resolution: res,
            reason: "must be positive".into(),
        });
    }
    if res % period != 0 {
        return Err(Error::InvalidResolution {
            resolution: res,
            reason: format!("not a multiple of the {period} s sample period"),
        });
    }
    let span = trajectories.span();
    let count = if config.drop_partial {
        span / res
    } else {
        (span + res - 1) / res
    };
    if count == 0 {
        return Err(Error::ResolutionTooCoarse {
            resolution: res,
            span,
        });
    }
    let epoch = trajectories.epoch();
    let windows = (0..count as usize)
        .map(|index| {
            let start = epoch + index as i64 * res;
            let end = start + res;
            let ranges = trajectories
                .entities()
                .iter()
                .map(|e| {
                    let s = e.samples();
                    s.partition_point(|f| f.timestamp < start)..s.partition_point(|f| f.timestamp < end)
                })
                .collect();
            Window {
                index,
                start,
                end,
                ranges,
            }
        })
        .collect();
    Ok(WindowSet {
        windows,
        resolution: res,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WindowLabel {
    Class(String),
    Abstain,
}

impl WindowLabel {
    pub fn class(&self) -> Option<&str> {
        match self {
            WindowLabel::Class(c) => Some(c),
            WindowLabel::Abstain => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledWindow {
    pub window: Window,
    pub label: WindowLabel,
    /// Fraction of the window's annotations that agree with `label`.
    pub label_support: f64,
}

/// Majority annotation per window; ties go to the label seen first in time.
///
/// All annotations starting inside a window vote, whatever entity they name.
pub fn assign_labels(windows: &WindowSet, labels: &LabelSet) -> Result<Vec<LabeledWindow>> {
    let label_res = labels.label_resolution();
    if windows.resolution < label_res || windows.resolution % label_res != 0 {
        return Err(Error::ResolutionMismatch {
            window: windows.resolution,
            label: label_res,
        });
    }
    Ok(windows
        .windows
        .iter()
        .map(|w| {
            let covered = labels.in_range(w.start, w.end);
            // (label, votes) in order of first appearance.
            let mut tally: Vec<(&str, usize)> = Vec::new();
            for a in covered {
                match tally.iter_mut().find(|(l, _)| *l == a.label) {
                    Some(entry) => entry.1 += 1,
                    None => tally.push((&a.label, 1)),
                }
            }
            let best = tally
                .iter()
                .fold(None::<(&str, usize)>, |best, &(l, n)| match best {
                    Some((_, bn)) if bn >= n => best,
                    _ => Some((l, n)),
                });
            let (label, label_support) = match best {
                Some((l, n)) => (WindowLabel::Class(l.to_string()), n as f64 / covered.len() as f64),
                None => (WindowLabel::Abstain, 0.0),
            };
            LabeledWindow {
                window: w.clone(),
                label,
                label_support,
            }
        })
        .collect())
}

/// Arithmetic grid of candidate window lengths in `[min, max]`.
///
/// Values that are not multiples of both the sample period and the label
/// resolution are skipped.
pub fn candidate_resolutions(
    min: i64,
    max: i64,
    step: i64,
    sample_period: i64,
    label_resolution: i64,
) -> Result<Vec<i64>> {
    if min < label_resolution {
        return Err(Error::InvalidResolution {
            resolution: min,
            reason: format!("below the {label_resolution} s label resolution"),
        });
    }
    if step <= 0 || min > max || sample_period <= 0 {
        return Err(Error::EmptyCandidateSet);
    }
    let out: Vec<i64> = (0..)
        .map(|k| min + k * step)
        .take_while(|&r| r <= max)
        .filter(|r| r % sample_period == 0 && r % label_resolution == 0)
        .collect();
    if out.is_empty() {
        return Err(Error::EmptyCandidateSet);
    }
    Ok(out)
}
