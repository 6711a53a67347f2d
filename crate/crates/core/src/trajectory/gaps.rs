use super::{EntityTimeSeries, Fix};

/// Fills gaps of at most `max_gap` seconds by linear interpolation.
///
/// Inserted fixes lie on the `sample_period` grid and carry `valid = false`.
/// Original fixes are copied unchanged and longer gaps are left open.
pub fn interpolate_gaps(series: &EntityTimeSeries, sample_period: i64, max_gap: i64) -> EntityTimeSeries {
    let samples = series.samples();
    if samples.len() < 2 || sample_period <= 0 || max_gap < sample_period {
        return series.clone();
    }
    let mut out = Vec::with_capacity(samples.len());
    for pair in samples.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        out.push(a);
        let gap = b.timestamp - a.timestamp;
        if gap > sample_period && gap <= max_gap {
            let mut t = a.timestamp + sample_period;
            while t < b.timestamp {
                let frac = (t - a.timestamp) as f64 / gap as f64;
                out.push(Fix {
                    timestamp: t,
                    x: a.x + (b.x - a.x) * frac,
                    y: a.y + (b.y - a.y) * frac,
                    valid: false,
                });
                t += sample_period;
            }
        }
    }
    out.push(*samples.last().expect("len >= 2"));
    EntityTimeSeries {
        entity_id: series.entity_id.clone(),
        samples: out,
    }
}

/// Number of gaps in `before` that were closed in `after`.
pub(crate) fn count_filled(before: &EntityTimeSeries, after: &EntityTimeSeries, sample_period: i64) -> usize {
    if after.len() == before.len() {
        return 0;
    }
    before
        .samples()
        .windows(2)
        .filter(|p| {
            let gap = p[1].timestamp - p[0].timestamp;
            gap > sample_period
                && after
                    .samples()
                    .binary_search_by_key(&(p[0].timestamp + sample_period), |f| f.timestamp)
                    .is_ok()
        })
        .count()
}
