//! Seeded multi-entity group-movement scenarios with ground-truth group labels.
//!
//! The group follows a sequence of bouts, each drawn uniformly from the
//! configured behaviors. Positions are simulated at `sample_period` steps
//! starting at timestamp 0 and emitted with independent Gaussian noise.
//!
//! Archetypes:
//! * `coordinated_progression`: the group centre moves with a per-bout
//!   heading; members follow with offsets pulled toward the centre by a
//!   spring whose stationary RMS radius is `cohesion_radius`.
//! * `dispersed_forage`: members random-walk at `speed` around anchors on a
//!   ring whose neighbouring anchors are `3 * cohesion_radius` apart.
//! * `clustered_rest`: members stand still, uniformly placed in a disc of
//!   radius `cohesion_radius` about the centre.
//! * `dispersed_rest`: members stand still on the same ring as foraging.
//!
//! Rest layouts are redrawn at every bout start, so both rest archetypes
//! share one kinematic distribution and differ only in spacing.

use std::collections::BTreeSet;
use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trajectory::{Annotation, EntityTimeSeries, Fix, LabelSet, LabelTarget, TrajectorySet};

/// Spring rate in 1/s pulling members toward their targets.
pub const SPRING_RATE: f64 = 0.1;

/// Neighbouring members of dispersed layouts sit this many radii apart.
pub const DISPERSAL_FACTOR: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Movement {
    CoordinatedProgression,
    DispersedForage,
    ClusteredRest,
    DispersedRest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BehaviorSpec {
    pub name: String,
    pub movement: Movement,
    /// m/s.
    pub speed: f64,
    /// Metres.
    pub cohesion_radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub n_entities: usize,
    /// Seconds.
    pub duration: i64,
    pub sample_period: i64,
    pub bout_length: i64,
    pub behaviors: Vec<BehaviorSpec>,
    /// Per-coordinate standard deviation of position noise, metres.
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig::cohesion(0)
    }
}

impl ScenarioConfig {
    /// Ten entities for two hours at 1 Hz in 60 s bouts of four behaviors,
    /// two of which are stationary and differ only in group spacing.
    pub fn cohesion(seed: u64) -> Self {
        let b = |name: &str, movement, speed, cohesion_radius| BehaviorSpec {
            name: name.into(),
            movement,
            speed,
            cohesion_radius,
        };
        ScenarioConfig {
            n_entities: 10,
            duration: 2 * 3600,
            sample_period: 1,
            bout_length: 60,
            behaviors: vec![
                b("travel", Movement::CoordinatedProgression, 1.2, 1.0),
                b("forage", Movement::DispersedForage, 0.4, 2.0),
                b("rest_clustered", Movement::ClusteredRest, 0.0, 0.5),
                b("rest_dispersed", Movement::DispersedRest, 0.0, 2.0),
            ],
            noise_sigma: 0.5,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.n_entities < 2 {
            return bad(format!("n_entities must be at least 2, got {}", self.n_entities));
        }
        if self.sample_period <= 0 || self.bout_length <= 0 || self.duration <= 0 {
            return bad("duration, sample_period and bout_length must be positive".into());
        }
        if self.bout_length % self.sample_period != 0 {
            return bad(format!(
                "bout_length {} is not a multiple of sample_period {}",
                self.bout_length, self.sample_period
            ));
        }
        if self.duration < self.bout_length {
            return bad("duration is shorter than one bout".into());
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return bad("noise_sigma must be finite and non-negative".into());
        }
        if self.behaviors.is_empty() {
            return bad("at least one behavior is required".into());
        }
        let mut names = BTreeSet::new();
        for b in &self.behaviors {
            if b.name.is_empty() || !names.insert(b.name.as_str()) {
                return bad(format!("behavior names must be unique and non-empty: `{}`", b.name));
            }
            if !(b.speed.is_finite() && b.speed >= 0.0) {
                return bad(format!("behavior `{}` has invalid speed {}", b.name, b.speed));
            }
            if !(b.cohesion_radius.is_finite() && b.cohesion_radius > 0.0) {
                return bad(format!("behavior `{}` has invalid cohesion_radius {}", b.name, b.cohesion_radius));
            }
        }
        Ok(())
    }
}

pub fn entity_id(i: usize, n: usize) -> String {
    let width = (n.max(2) - 1).to_string().len();
    format!("e{i:0width$}")
}

/// Radius of a ring of `n` points whose neighbours are `chord` apart.
fn ring_radius(n: usize, chord: f64) -> f64 {
    chord / (2.0 * (std::f64::consts::PI / n as f64).sin())
}

fn ring(n: usize, centre: [f64; 2], chord: f64, phase: f64) -> Vec<[f64; 2]> {
    let r = ring_radius(n, chord);
    (0..n)
        .map(|i| {
            let a = phase + TAU * i as f64 / n as f64;
            [centre[0] + r * a.cos(), centre[1] + r * a.sin()]
        })
        .collect()
}

fn gaussian2(rng: &mut ChaCha8Rng, sigma: f64) -> [f64; 2] {
    let x: f64 = StandardNormal.sample(rng);
    let y: f64 = StandardNormal.sample(rng);
    [sigma * x, sigma * y]
}

/// Simulates the scenario. Identical configs give bit-identical output.
pub fn generate(config: &ScenarioConfig) -> Result<(TrajectorySet, LabelSet)> {
    config.validate()?;
    let n = config.n_entities;
    let dt = config.sample_period as f64;
    let pull = 1.0 - (-SPRING_RATE * dt).exp();
    // Stationary per-axis variance of o <- (1-pull) o + w is var(w) / (2 pull - pull^2).
    let offset_step = |radius: f64| radius * ((2.0 * pull - pull * pull) / 2.0).sqrt();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let noise = Normal::new(0.0, config.noise_sigma).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let steps_per_bout = (config.bout_length / config.sample_period) as usize;
    let bouts = (config.duration + config.bout_length - 1) / config.bout_length;

    let mut centre = [0.0f64; 2];
    let mut pos = vec![[0.0f64; 2]; n];
    let mut fixes: Vec<Vec<Fix>> = vec![Vec::new(); n];
    let mut annotations = Vec::with_capacity(bouts as usize);

    for bout in 0..bouts {
        let start = bout * config.bout_length;
        let spec = &config.behaviors[rng.random_range(0..config.behaviors.len())];
        annotations.push(Annotation {
            target: LabelTarget::Group,
            start,
            label: spec.name.clone(),
        });
        let r = spec.cohesion_radius;
        let phase = rng.random_range(0.0..TAU);
        let heading = rng.random_range(0.0..TAU);
        let anchors = ring(n, centre, DISPERSAL_FACTOR * r, phase);
        let mut offsets: Vec<[f64; 2]> = Vec::new();
        match spec.movement {
            Movement::CoordinatedProgression => {
                offsets = (0..n).map(|_| gaussian2(&mut rng, r / 2f64.sqrt())).collect();
                for (p, o) in pos.iter_mut().zip(&offsets) {
                    *p = [centre[0] + o[0], centre[1] + o[1]];
                }
            }
            Movement::DispersedForage | Movement::DispersedRest => pos.clone_from(&anchors),
            Movement::ClusteredRest => {
                for p in pos.iter_mut() {
                    let rho = r * rng.random::<f64>().sqrt();
                    let a = rng.random_range(0.0..TAU);
                    *p = [centre[0] + rho * a.cos(), centre[1] + rho * a.sin()];
                }
            }
        }

        for step in 0..steps_per_bout {
            let t = start + step as i64 * config.sample_period;
            if t >= config.duration {
                break;
            }
            if step > 0 {
                match spec.movement {
                    Movement::CoordinatedProgression => {
                        centre[0] += spec.speed * dt * heading.cos();
                        centre[1] += spec.speed * dt * heading.sin();
                        let w = offset_step(r);
                        for (p, o) in pos.iter_mut().zip(offsets.iter_mut()) {
                            let kick = gaussian2(&mut rng, w);
                            o[0] = (1.0 - pull) * o[0] + kick[0];
                            o[1] = (1.0 - pull) * o[1] + kick[1];
                            *p = [centre[0] + o[0], centre[1] + o[1]];
                        }
                    }
                    Movement::DispersedForage => {
                        for (p, a) in pos.iter_mut().zip(&anchors) {
                            let phi = rng.random_range(0.0..TAU);
                            p[0] += spec.speed * dt * phi.cos() + pull * (a[0] - p[0]);
                            p[1] += spec.speed * dt * phi.sin() + pull * (a[1] - p[1]);
                        }
                    }
                    Movement::ClusteredRest | Movement::DispersedRest => {}
                }
            }
            for (series, p) in fixes.iter_mut().zip(&pos) {
                let (ex, ey) = if config.noise_sigma > 0.0 {
                    (noise.sample(&mut rng), noise.sample(&mut rng))
                } else {
                    (0.0, 0.0)
                };
                series.push(Fix::new(t, p[0] + ex, p[1] + ey));
            }
        }
    }

    let entities = fixes
        .into_iter()
        .enumerate()
        .map(|(i, f)| EntityTimeSeries::new(entity_id(i, n), f))
        .collect::<Result<Vec<_>>>()?;
    let trajectories = TrajectorySet::new(entities, 0, config.sample_period)?;
    let labels = LabelSet::new(annotations, config.bout_length, 0)?;
    Ok((trajectories, labels))
}
