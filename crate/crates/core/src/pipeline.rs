//! End-to-end composition: segment, label, featurize, cross-validate.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::{feature_importance, train, FeatureMatrix, GbdtTrainer, Hyperparameters, MajorityTrainer, TrainedModel};
use crate::error::{Error, Result};
use crate::evaluation::{cross_validate, CvReport, EvaluationProtocol, Metric};
use crate::kinematics::{window_kinematics, KinematicFeatures};
use crate::proximity::{build_network, network_features, NetworkFeatures, PageRankConfig, ProximityConfig};
use crate::segmentation::{
    assign_labels, segment, sweep_resolutions, LabeledWindow, ResolutionScoreTable, SegmentationConfig,
};
use crate::trajectory::{LabelSet, TrajectorySet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureToggles {
    pub kinematic: bool,
    pub network: bool,
}

impl Default for FeatureToggles {
    fn default() -> Self {
        FeatureToggles {
            kinematic: true,
            network: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureConfig {
    pub proximity: ProximityConfig,
    pub pagerank: PageRankConfig,
    pub toggles: FeatureToggles,
}

impl FeatureConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.toggles.kinematic && !self.toggles.network {
            return Err(Error::InvalidConfig("kinematic and network features are both disabled".into()));
        }
        self.proximity.validate()?;
        self.pagerank.validate()
    }

    /// Column schema of [`build_feature_matrix`] under these toggles.
    pub fn feature_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        if self.toggles.kinematic {
            names.extend(KinematicFeatures::NAMES.iter().map(|s| s.to_string()));
        }
        if self.toggles.network {
            names.extend(NetworkFeatures::names());
        }
        names
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub trajectories: TrajectorySet,
    pub labels: LabelSet,
}

/// One row per (entity, labeled window) where the entity has at least one
/// fix in the window. Abstaining windows contribute no rows; the group key
/// is the window index.
pub fn build_feature_matrix(
    trajectories: &TrajectorySet,
    windows: &[LabeledWindow],
    config: &FeatureConfig,
) -> Result<FeatureMatrix> {
    config.validate()?;
    let labeled: Vec<&LabeledWindow> = windows.iter().filter(|w| w.label.class().is_some()).collect();
    let per_window: Vec<Vec<(Vec<f64>, String, usize)>> = labeled
        .par_iter()
        .map(|lw| window_rows(trajectories, lw, config))
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    let mut targets = Vec::new();
    let mut keys = Vec::new();
    for (values, target, key) in per_window.into_iter().flatten() {
        rows.push(values);
        targets.push(target);
        keys.push(key);
    }
    FeatureMatrix::new(config.feature_names(), rows, targets, keys)
}

fn window_rows(
    trajectories: &TrajectorySet,
    lw: &LabeledWindow,
    config: &FeatureConfig,
) -> Result<Vec<(Vec<f64>, String, usize)>> {
    let w = &lw.window;
    let target = lw.label.class().expect("labeled").to_string();
    let period = trajectories.sample_period();
    let kin: Vec<KinematicFeatures> = trajectories
        .entities()
        .iter()
        .enumerate()
        .map(|(i, e)| window_kinematics(w.slice(i, e), period, w.len_seconds()))
        .collect();
    let net = if config.toggles.network {
        let graph = build_network(trajectories, w, config.proximity)?;
        Some(network_features(&graph, &kin, &config.pagerank)?)
    } else {
        None
    };
    let mut out = Vec::new();
    for (i, e) in trajectories.entities().iter().enumerate() {
        if w.slice(i, e).is_empty() {
            continue;
        }
        let mut values = Vec::with_capacity(28);
        if config.toggles.kinematic {
            values.extend(kin[i].to_array());
        }
        if let Some(net) = &net {
            values.extend(net[i].to_vec());
        }
        out.push((values, target.clone(), w.index));
    }
    Ok(out)
}

pub fn features_at_resolution(dataset: &Dataset, resolution: i64, config: &FeatureConfig) -> Result<FeatureMatrix> {
    let windows = segment(&dataset.trajectories, SegmentationConfig::new(resolution))?;
    let labeled = assign_labels(&windows, &dataset.labels)?;
    build_feature_matrix(&dataset.trajectories, &labeled, config)
}

/// Cross-validates the boosted ensemble at one resolution.
pub fn evaluate_at_resolution(
    dataset: &Dataset,
    resolution: i64,
    features: &FeatureConfig,
    protocol: &EvaluationProtocol,
    hyperparameters: &Hyperparameters,
) -> Result<CvReport> {
    let matrix = features_at_resolution(dataset, resolution, features)?;
    cross_validate(&matrix, protocol, &GbdtTrainer { hyperparameters: *hyperparameters })
}

/// Resolution sweep; each candidate's folds are seeded from
/// `(master_seed, resolution)`.
pub fn sweep(
    dataset: &Dataset,
    candidates: &[i64],
    features: &FeatureConfig,
    protocol: &EvaluationProtocol,
    hyperparameters: &Hyperparameters,
    master_seed: u64,
) -> Result<ResolutionScoreTable> {
    features.validate()?;
    protocol.validate()?;
    hyperparameters.validate()?;
    sweep_resolutions(candidates, master_seed, |res, seed| {
        let protocol = EvaluationProtocol { seed, ..protocol.clone() };
        evaluate_at_resolution(dataset, res, features, &protocol, hyperparameters)
    })
}

/// One line of the results table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub model: String,
    pub n_features: usize,
    pub acc_mean: f64,
    pub acc_std: f64,
    pub wf1_mean: f64,
    pub wf1_std: f64,
}

impl ResultRow {
    pub fn from_report(model: &str, n_features: usize, report: &CvReport) -> Self {
        let get = |m| report.metric(m).map(|r| (r.mean, r.std)).unwrap_or((f64::NAN, f64::NAN));
        let (acc_mean, acc_std) = get(Metric::Accuracy);
        let (wf1_mean, wf1_std) = get(Metric::WeightedF1);
        ResultRow {
            model: model.to_string(),
            n_features,
            acc_mean,
            acc_std,
            wf1_mean,
            wf1_std,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub resolution: i64,
    pub rows: Vec<ResultRow>,
    pub majority: CvReport,
    pub ensemble: CvReport,
    /// Ensemble with network features removed, when both families are on.
    pub ablation: Option<CvReport>,
    pub feature_names: Vec<String>,
    pub feature_importance: Vec<(String, f64)>,
    /// Fit on every labeled row.
    pub model: TrainedModel,
    pub n_rows: usize,
    pub n_windows: usize,
}

pub const MAJORITY_ROW: &str = "majority";
pub const ENSEMBLE_ROW: &str = "ours";
pub const ABLATION_ROW: &str = "ours_without_network";

/// Cross-validates the majority baseline and the ensemble on identical folds.
///
/// With `ablate_network` and both feature families on, the ensemble is also
/// evaluated on the kinematic columns alone.
pub fn run(
    dataset: &Dataset,
    resolution: i64,
    features: &FeatureConfig,
    protocol: &EvaluationProtocol,
    hyperparameters: &Hyperparameters,
    ablate_network: bool,
) -> Result<RunOutcome> {
    hyperparameters.validate()?;
    let matrix = features_at_resolution(dataset, resolution, features)?;
    let trainer = GbdtTrainer { hyperparameters: *hyperparameters };
    let majority = cross_validate(&matrix, protocol, &MajorityTrainer)?;
    let ensemble = cross_validate(&matrix, protocol, &trainer)?;
    let mut rows = vec![
        ResultRow::from_report(MAJORITY_ROW, 0, &majority),
        ResultRow::from_report(ENSEMBLE_ROW, matrix.n_cols(), &ensemble),
    ];
    let ablation = if ablate_network && features.toggles.kinematic && features.toggles.network {
        let kin = FeatureConfig {
            toggles: FeatureToggles { kinematic: true, network: false },
            ..*features
        };
        let names = kin.feature_names();
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        let reduced = matrix.select_columns(&refs)?;
        let report = cross_validate(&reduced, protocol, &trainer)?;
        rows.push(ResultRow::from_report(ABLATION_ROW, reduced.n_cols(), &report));
        Some(report)
    } else {
        None
    };
    let model = train(&matrix, hyperparameters)?;
    let mut importance = feature_importance(&model);
    importance.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let n_windows = {
        let mut k = matrix.group_keys().to_vec();
        k.dedup();
        k.len()
    };
    Ok(RunOutcome {
        resolution,
        rows,
        majority,
        ensemble,
        ablation,
        feature_names: matrix.feature_names().to_vec(),
        feature_importance: importance,
        model,
        n_rows: matrix.n_rows(),
        n_windows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::{generate, ScenarioConfig};

    fn small() -> Dataset {
        let config = ScenarioConfig {
            n_entities: 4,
            duration: 1200,
            ..ScenarioConfig::cohesion(11)
        };
        let (trajectories, labels) = generate(&config).unwrap();
        Dataset { trajectories, labels }
    }

    #[test]
    fn rows_per_entity_window() {
        let d = small();
        let m = features_at_resolution(&d, 60, &FeatureConfig::default()).unwrap();
        assert_eq!(m.n_rows(), 4 * 20);
        assert_eq!(m.n_cols(), 8 + 12);
        assert_eq!(m.feature_names(), FeatureConfig::default().feature_names());
        let m120 = features_at_resolution(&d, 120, &FeatureConfig::default()).unwrap();
        assert_eq!(m120.n_rows(), 4 * 10);
    }

    #[test]
    fn toggles_control_schema() {
        let d = small();
        let kin_only = FeatureConfig {
            toggles: FeatureToggles { kinematic: true, network: false },
            ..Default::default()
        };
        let m = features_at_resolution(&d, 60, &kin_only).unwrap();
        assert_eq!(m.feature_names(), &KinematicFeatures::NAMES.map(String::from)[..]);
        let off = FeatureConfig {
            toggles: FeatureToggles { kinematic: false, network: false },
            ..Default::default()
        };
        assert!(matches!(features_at_resolution(&d, 60, &off), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn abstaining_windows_have_no_rows() {
        let d = small();
        let kept: Vec<_> = d.labels.annotations().iter().filter(|a| a.start >= 600).cloned().collect();
        let labels = LabelSet::new(kept, 60, 0).unwrap();
        let d = Dataset { labels, ..d };
        let m = features_at_resolution(&d, 60, &FeatureConfig::default()).unwrap();
        assert_eq!(m.n_rows(), 4 * 10);
        assert!(m.group_keys().iter().all(|&k| k >= 10));
    }

    #[test]
    fn run_reports_rows() {
        let d = small();
        let protocol = EvaluationProtocol { k: 4, ..Default::default() };
        let hp = Hyperparameters { rounds: 5, ..Default::default() };
        let out = run(&d, 60, &FeatureConfig::default(), &protocol, &hp, true).unwrap();
        let names: Vec<&str> = out.rows.iter().map(|r| r.model.as_str()).collect();
        assert_eq!(names, [MAJORITY_ROW, ENSEMBLE_ROW, ABLATION_ROW]);
        assert!(out.rows[2].n_features < out.rows[1].n_features);
        assert_eq!(out.model.trees.len(), 5 * out.model.n_classes());
        assert_eq!(out.n_windows, 20);
    }
}
