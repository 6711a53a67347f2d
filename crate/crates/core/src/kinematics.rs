//! Per-entity movement descriptors over one window.

use serde::{Deserialize, Serialize};

use crate::trajectory::Fix;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct KinematicFeatures {
    pub mean_speed: f64,
    pub std_speed: f64,
    pub mean_step: f64,
    pub path_length: f64,
    pub net_displacement: f64,
    pub straightness: f64,
    pub mean_turn_angle: f64,
    pub fix_fraction: f64,
}

impl KinematicFeatures {
    pub const NAMES: [&'static str; 8] = [
        "mean_speed",
        "std_speed",
        "mean_step",
        "path_length",
        "net_displacement",
        "straightness",
        "mean_turn_angle",
        "fix_fraction",
    ];

    pub fn to_array(&self) -> [f64; 8] {
        [
            self.mean_speed,
            self.std_speed,
            self.mean_step,
            self.path_length,
            self.net_displacement,
            self.straightness,
            self.mean_turn_angle,
            self.fix_fraction,
        ]
    }

    pub fn from_array(v: [f64; 8]) -> Self {
        KinematicFeatures {
            mean_speed: v[0],
            std_speed: v[1],
            mean_step: v[2],
            path_length: v[3],
            net_displacement: v[4],
            straightness: v[5],
            mean_turn_angle: v[6],
            fix_fraction: v[7],
        }
    }
}

/// Computes movement features from the fixes of one entity inside a window.
///
/// Speed samples come only from consecutive fixes exactly one
/// `sample_period` apart; the path length sums every consecutive pair, so
/// `path_length >= net_displacement` always holds. `resolution` is the window
/// length in seconds and sets the denominator of `fix_fraction`.
pub fn window_kinematics(fixes: &[Fix], sample_period: i64, resolution: i64) -> KinematicFeatures {
    let slots = (resolution / sample_period).max(1) as f64;
    let fix_fraction = (fixes.iter().filter(|f| f.valid).count() as f64 / slots).min(1.0);
    if fixes.len() < 2 {
        return KinematicFeatures {
            fix_fraction,
            ..Default::default()
        };
    }

    let dt = sample_period as f64;
    let mut path_length = 0.0;
    let mut steps = Vec::with_capacity(fixes.len() - 1);
    let mut headings = Vec::with_capacity(fixes.len() - 1);
    for pair in fixes.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        let (dx, dy) = (b.x - a.x, b.y - a.y);
        let step = dx.hypot(dy);
        path_length += step;
        if b.timestamp - a.timestamp == sample_period {
            steps.push(step);
        }
        if step > 0.0 {
            headings.push((dx, dy));
        }
    }

    let (mean_step, mean_speed, std_speed) = if steps.is_empty() {
        (0.0, 0.0, 0.0)
    } else {
        let n = steps.len() as f64;
        let mean_step = steps.iter().sum::<f64>() / n;
        let var = steps.iter().map(|s| (s / dt - mean_step / dt).powi(2)).sum::<f64>() / n;
        (mean_step, mean_step / dt, var.sqrt())
    };

    let first = fixes[0];
    let last = fixes[fixes.len() - 1];
    let net_displacement = first.distance(&last).min(path_length);
    let straightness = if path_length > 0.0 {
        (net_displacement / path_length).clamp(0.0, 1.0)
    } else {
        0.0
    };

    let mean_turn_angle = if headings.len() < 2 {
        0.0
    } else {
        let total: f64 = headings
            .windows(2)
            .map(|h| {
                let ((ax, ay), (bx, by)) = (h[0], h[1]);
                (ax * by - ay * bx).atan2(ax * bx + ay * by).abs()
            })
            .sum();
        total / (headings.len() - 1) as f64
    };

    KinematicFeatures {
        mean_speed,
        std_speed,
        mean_step,
        path_length,
        net_displacement,
        straightness,
        mean_turn_angle,
        fix_fraction,
    }
}
