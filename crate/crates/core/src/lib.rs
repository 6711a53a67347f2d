//! Group-behavior classification from multi-entity trajectories.
//!
//! Trajectories are cut into global windows of one temporal resolution.
//! Each (entity, window) becomes a row of kinematic descriptors plus
//! features of the entity's node in the window's proximity network, and a
//! boosted tree ensemble is cross-validated on those rows. The resolution
//! itself is chosen by sweeping candidates and keeping the best score.

pub mod classifier;
pub mod error;
pub mod evaluation;
pub mod kinematics;
pub mod pipeline;
pub mod proximity;
pub mod rng;
pub mod segmentation;
pub mod synthetic;
pub mod trajectory;

pub use classifier::{FeatureMatrix, Hyperparameters, Prediction, TrainedModel};
pub use error::{Error, ErrorKind, Result};
pub use evaluation::{CvReport, EvaluationProtocol, FoldStrategy, Metric, MetricReport};
pub use kinematics::KinematicFeatures;
pub use pipeline::{Dataset, FeatureConfig, FeatureToggles};
pub use proximity::{PageRankConfig, ProximityConfig, ProximityGraph};
pub use segmentation::{LabeledWindow, ResolutionScoreTable, SegmentationConfig, Window, WindowLabel, WindowSet};
pub use synthetic::{BehaviorSpec, Movement, ScenarioConfig};
pub use trajectory::{Annotation, EntityTimeSeries, Fix, LabelSet, LabelTarget, TrajectorySet};
