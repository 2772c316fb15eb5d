//! Contact classification over five-frame sequences, edge-pose regression,
//! the classical edge-detection baseline and an exhaustive-search oracle.

mod classical;
mod classifier;
mod features;
mod model_io;
mod oracle;
mod regressor;

use rayon::prelude::*;
use serde::Serialize;

pub use classical::estimate_pose_classical;
pub use classifier::{
    classify, sample_features, train_classifier, train_classifier_on_features, ClassifierEpoch,
    ClassifierHyperparams, ClassifierModel, ClassifierReport,
};
pub use features::{
    contact_mask, extract_features, frame_features, pose_features, sequence_features,
    PoseFeatureParams, CLASS_FEATURES, CLASS_FEATURE_SPEC, FRAME_FEATURES, ORIENTATION_BINS,
    POSE_FEATURE_SPEC,
};
pub use oracle::{brute_force_pose_oracle, OracleGrid, ORACLE_MAX_SIDE_PX};
pub use regressor::{
    estimate_pose, regressor_objective, train_regressor, RegressorEpoch, RegressorHyperparams,
    RegressorModel, RegressorObjective, RegressorReport, MIN_REGRESSOR_SAMPLES,
};

use crate::error::Result;
use crate::geometry::line_angle_error;
use crate::render::{generate_samples, DatasetSpec, PoseSample};
use crate::rng::derive_seed;
use crate::types::EdgePose;

/// Errors between two poses after canonicalisation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PoseErrors {
    pub x_mm: f64,
    pub y_mm: f64,
    pub distance_mm: f64,
    pub angle_deg: f64,
}

pub fn pose_errors(pred: &EdgePose, truth: &EdgePose) -> PoseErrors {
    let (p, t) = (pred.canonical(), truth.canonical());
    let (dx, dy) = (p.x - t.x, p.y - t.y);
    PoseErrors {
        x_mm: dx.abs(),
        y_mm: dy.abs(),
        distance_mm: dx.hypot(dy),
        angle_deg: line_angle_error(p.theta, t.theta).to_degrees(),
    }
}

/// Mean absolute errors over a set of estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PoseErrorSummary {
    pub n: usize,
    pub x_mm: f64,
    pub y_mm: f64,
    pub distance_mm: f64,
    pub angle_deg: f64,
}

impl PoseErrorSummary {
    pub fn from_errors(errors: impl IntoIterator<Item = PoseErrors>) -> Self {
        let mut s = PoseErrorSummary {
            n: 0,
            x_mm: 0.0,
            y_mm: 0.0,
            distance_mm: 0.0,
            angle_deg: 0.0,
        };
        for e in errors {
            s.n += 1;
            s.x_mm += e.x_mm;
            s.y_mm += e.y_mm;
            s.distance_mm += e.distance_mm;
            s.angle_deg += e.angle_deg;
        }
        if s.n > 0 {
            let n = s.n as f64;
            s.x_mm /= n;
            s.y_mm /= n;
            s.distance_mm /= n;
            s.angle_deg /= n;
        }
        s
    }
}

/// Regressor errors over labelled images.
pub fn evaluate_regressor(
    model: &RegressorModel,
    samples: &[PoseSample],
) -> Result<PoseErrorSummary> {
    let errs = samples
        .par_iter()
        .map(|s| estimate_pose(model, &s.image).map(|p| pose_errors(&p, &s.pose)))
        .collect::<Result<Vec<_>>>()?;
    Ok(PoseErrorSummary::from_errors(errs))
}

/// Classical-baseline errors; an image where no edge is detected is scored
/// as the estimate `(0, 0, 0)`. Also returns the number of such failures.
pub fn evaluate_classical(samples: &[PoseSample]) -> (PoseErrorSummary, usize) {
    let results: Vec<(PoseErrors, bool)> = samples
        .par_iter()
        .map(|s| match estimate_pose_classical(&s.image) {
            Ok(p) => (pose_errors(&p, &s.pose), false),
            Err(_) => (pose_errors(&EdgePose::default(), &s.pose), true),
        })
        .collect();
    let failures = results.iter().filter(|r| r.1).count();
    (
        PoseErrorSummary::from_errors(results.into_iter().map(|r| r.0)),
        failures,
    )
}

/// Dataset recipes used when no trained model files are supplied.
pub fn default_classifier_spec(seed: u64) -> DatasetSpec {
    DatasetSpec {
        n_per_class: 250,
        n_pose: Some(0),
        seed: derive_seed(seed, 40, 0),
        ..DatasetSpec::default()
    }
}

pub fn default_regressor_spec(seed: u64) -> DatasetSpec {
    DatasetSpec {
        n_per_class: 1,
        n_pose: Some(2000),
        seed: derive_seed(seed, 41, 0),
        ..DatasetSpec::default()
    }
}

/// Trains both perception models from freshly rendered default datasets.
pub fn train_default_models(seed: u64) -> Result<(ClassifierModel, RegressorModel)> {
    let cls = generate_samples(&default_classifier_spec(seed))?;
    let (classifier, _) =
        train_classifier(&cls.sequences, &ClassifierHyperparams::default(), seed)?;
    let reg = generate_samples(&default_regressor_spec(seed))?;
    let (regressor, _) = train_regressor(&reg.poses, &RegressorHyperparams::default(), seed)?;
    Ok((classifier, regressor))
}
