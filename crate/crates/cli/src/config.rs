//! The JSON pipeline configuration and its command-line overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use troop_core::classifier::Hyperparameters;
use troop_core::evaluation::EvaluationProtocol;
use troop_core::pipeline::{FeatureConfig, FeatureToggles};
use troop_core::proximity::{PageRankConfig, ProximityConfig};
use troop_core::synthetic::ScenarioConfig;
use troop_core::trajectory::TrajectorySchema;

use crate::error::{CliError, CliResult};

pub const CONFIG_ENV: &str = "TROOP_CONFIG";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputConfig {
    pub trajectories: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    /// Seconds covered by one annotation.
    pub label_resolution: i64,
    /// Timestamp the annotation grid is anchored to.
    pub label_origin: i64,
    pub schema: TrajectorySchema,
    /// Gaps up to this many seconds are linearly filled; 0 disables filling.
    pub max_gap: i64,
}

impl Default for InputConfig {
    fn default() -> Self {
        InputConfig {
            trajectories: None,
            labels: None,
            label_resolution: 60,
            label_origin: 0,
            schema: TrajectorySchema::default(),
            max_gap: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResolutionConfig {
    pub min: i64,
    pub max: i64,
    pub step: i64,
    /// When set, `run` uses this resolution instead of sweeping.
    pub fixed: Option<i64>,
}

impl Default for ResolutionConfig {
    fn default() -> Self {
        ResolutionConfig {
            min: 60,
            max: 180,
            step: 60,
            fixed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub input: InputConfig,
    pub proximity: ProximityConfig,
    pub pagerank: PageRankConfig,
    pub resolution: ResolutionConfig,
    pub classifier: Hyperparameters,
    /// `evaluation.seed` is replaced by the master seed.
    pub evaluation: EvaluationProtocol,
    pub features: FeatureToggles,
    /// Master seed; overrides the classifier, evaluation and synthetic seeds.
    pub seed: u64,
    pub output_dir: PathBuf,
    /// Also report the ensemble without network features.
    pub ablate_network: bool,
    pub synthetic: ScenarioConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            input: InputConfig::default(),
            proximity: ProximityConfig::default(),
            pagerank: PageRankConfig::default(),
            resolution: ResolutionConfig::default(),
            classifier: Hyperparameters::default(),
            evaluation: EvaluationProtocol::default(),
            features: FeatureToggles::default(),
            seed: 0,
            output_dir: PathBuf::from("troop-out"),
            ablate_network: true,
            synthetic: ScenarioConfig::default(),
        }
    }
}

impl PipelineConfig {
    /// Reads `path` (or defaults), then applies `overrides` in order.
    ///
    /// Each override is `key.path=value`; the value is parsed as JSON and
    /// falls back to a plain string.
    pub fn load(path: Option<&Path>, overrides: &[(String, String)]) -> CliResult<Self> {
        let mut doc = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Config(format!("reading {}: {e}", p.display())))?;
                serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
            }
            None => serde_json::to_value(PipelineConfig::default()).expect("serializable"),
        };
        for (key, value) in overrides {
            set_path(&mut doc, key, parse_value(value))?;
        }
        let mut config: PipelineConfig =
            serde_json::from_value(doc).map_err(|e| CliError::Config(e.to_string()))?;
        config.evaluation.seed = config.seed;
        config.classifier.seed = config.seed;
        config.synthetic.seed = config.seed;
        Ok(config)
    }

    pub fn feature_config(&self) -> FeatureConfig {
        FeatureConfig {
            proximity: self.proximity,
            pagerank: self.pagerank,
            toggles: self.features,
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        self.feature_config().validate()?;
        self.evaluation.validate()?;
        self.classifier.validate()?;
        let mut paths: Vec<&Path> = vec![self.output_dir.as_path()];
        paths.extend(self.input.trajectories.as_deref());
        paths.extend(self.input.labels.as_deref());
        for (i, a) in paths.iter().enumerate() {
            if paths[..i].contains(a) {
                return Err(CliError::Config(format!("path {} is referenced twice", a.display())));
            }
        }
        Ok(())
    }

    /// SHA-256 over the canonical JSON of every setting that can change
    /// results; the output directory is excluded.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output_dir = PathBuf::new();
        let text = serde_json::to_string(&canonical).expect("serializable");
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}

fn parse_value(raw: &str) -> Value {
    serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()))
}

fn set_path(doc: &mut Value, key: &str, value: Value) -> CliResult<()> {
    let mut node = doc;
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::Config(format!("malformed key `{key}`")));
    }
    for part in &parts[..parts.len() - 1] {
        if !node.is_object() {
            return Err(CliError::Config(format!("`{key}`: `{part}` is not inside an object")));
        }
        node = node
            .as_object_mut()
            .expect("object")
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
        if node.is_null() {
            *node = Value::Object(Default::default());
        }
    }
    match node.as_object_mut() {
        Some(obj) => {
            obj.insert(parts[parts.len() - 1].to_string(), value);
            Ok(())
        }
        None => Err(CliError::Config(format!("`{key}` does not address an object field"))),
    }
}

/// Splits `key=value`.
pub fn parse_assignment(raw: &str) -> CliResult<(String, String)> {
    raw.split_once('=')
        .map(|(k, v)| (k.trim().to_string(), v.to_string()))
        .ok_or_else(|| CliError::Config(format!("expected KEY=VALUE, got `{raw}`")))
}
