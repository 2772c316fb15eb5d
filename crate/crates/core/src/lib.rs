//! Deterministic 2D simulator and control stack for tactile cloth-edge
//! sliding with a two-finger gripper.
//!
//! Modules, roughly in data-flow order: [`cloth`] (world geometry),
//! [`render`] (tactile images and datasets), [`perception`] (contact
//! classification and edge-pose estimation), [`control`] and [`gripper`]
//! (actuation), [`episode`] (the sliding state machine and benchmark) and
//! [`metrics`] (image and pose losses).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cloth;
pub mod control;
pub mod episode;
pub mod error;
pub mod geometry;
pub mod gripper;
pub mod metrics;
pub mod perception;
pub mod render;
pub mod rng;
pub mod types;

pub use cloth::{ClothEdge, ContactQueryResult, SensorFootprint};
pub use control::{AlignmentGains, PidGains};
pub use episode::{
    ClothConfiguration, EpisodeConfig, EpisodeGains, EpisodeParams, PerceptionModels, SlidingPhase,
    TrialResult,
};
pub use error::{Error, Result};
pub use geometry::Vec2;
pub use gripper::{GripperConfig, GripperState};
pub use perception::{ClassifierModel, RegressorModel};
pub use render::{DatasetSpec, ImageSpec, RenderParams, Texture};
pub use types::{ContactClass, EdgePose, TactileImage, TactileSequence, SEQUENCE_LEN};
