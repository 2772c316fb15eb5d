//! Closed-loop edge sliding: one finger holds a corner while the other slides
//! along the cloth edge under tactile alignment control until both sensors
//! report a corner.
//!
//! The moving sensor follows gripper forward kinematics. The holding finger
//! carries the grasped corner with it, so its footprint stays fixed in the
//! cloth frame. The base advances along the end-effector yaw; yaw commands
//! rotate the end effector about the moving sensor.

mod bench;
mod log;

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

pub use bench::{
    default_profiles, run_benchmark, BenchmarkRow, BenchmarkSuite, BenchmarkTable, FabricProfile,
};
pub use log::{write_trajectory_jsonl, TickLog};

use crate::cloth::{ClothEdge, SensorFootprint};
use crate::control::{
    AlignmentCommand, AlignmentController, AlignmentGains, PidController, PidGains,
};
use crate::error::{invalid_arg, Error, Result};
use crate::geometry::{wrap_angle, Vec2};
use crate::gripper::{
    forward_kinematics, read_encoders, step_actuators, ActuatorTargets, GripperConfig, GripperState,
};
use crate::perception::{
    estimate_pose, frame_features, pose_features, sequence_features, ClassifierModel,
    RegressorModel, CLASS_FEATURES, FRAME_FEATURES,
};
use crate::render::{render_footprint, ImageSpec, RenderParams};
use crate::rng::{child_rng, derive_seed};
use crate::types::{ContactClass, EdgePose, TactileImage, SEQUENCE_LEN};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlidingPhase {
    GraspCorner,
    Slide,
    CorrectShallow,
    CorrectDeep,
    ReachedCorner,
    Failed,
}

impl SlidingPhase {
    pub fn is_terminal(self) -> bool {
        matches!(self, SlidingPhase::ReachedCorner | SlidingPhase::Failed)
    }

    pub fn label(self) -> &'static str {
        match self {
            SlidingPhase::GraspCorner => "grasp_corner",
            SlidingPhase::Slide => "slide",
            SlidingPhase::CorrectShallow => "correct_shallow",
            SlidingPhase::CorrectDeep => "correct_deep",
            SlidingPhase::ReachedCorner => "reached_corner",
            SlidingPhase::Failed => "failed",
        }
    }
}

/// Discrete action accompanying a phase transition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlideAction {
    Continue,
    /// Keep waiting for the holding finger to confirm its corner.
    Hold,
    /// Rotate by `rotate_deg` (negative: clockwise) and move the sensor
    /// `depth_mm` out of the cloth.
    Withdraw {
        rotate_deg: f64,
        depth_mm: f64,
    },
    /// Rotate by `rotate_deg` and push the sensor `depth_mm` into the cloth.
    Insert {
        rotate_deg: f64,
        depth_mm: f64,
    },
    Stop,
    Abort,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClothConfiguration {
    Flattened,
    Crumpled,
}

impl ClothConfiguration {
    pub const ALL: [ClothConfiguration; 2] =
        [ClothConfiguration::Flattened, ClothConfiguration::Crumpled];

    pub fn label(self) -> &'static str {
        match self {
            ClothConfiguration::Flattened => "flattened",
            ClothConfiguration::Crumpled => "crumpled",
        }
    }
}

/// Scalar episode settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EpisodeParams {
    pub slide_speed_mm_s: f64,
    pub control_rate_hz: f64,
    pub max_duration_s: f64,
    pub correction_rotation_deg: f64,
    pub correction_depth_mm: f64,
    /// Arc length from the held corner to the moving sensor at the start.
    pub start_offset_mm: f64,
    /// Bounds of the seeded lateral and angular start perturbation.
    pub start_lateral_jitter_mm: f64,
    pub start_angle_jitter_deg: f64,
}

impl Default for EpisodeParams {
    fn default() -> Self {
        EpisodeParams {
            slide_speed_mm_s: 15.0,
            control_rate_hz: 30.0,
            max_duration_s: 60.0,
            correction_rotation_deg: 3.0,
            correction_depth_mm: 4.0,
            start_offset_mm: 25.0,
            start_lateral_jitter_mm: 1.0,
            start_angle_jitter_deg: 3.0,
        }
    }
}

impl EpisodeParams {
    pub fn validate(&self) -> Result<()> {
        if !(10.0..=200.0).contains(&self.control_rate_hz) {
            return Err(invalid_arg(format!(
                "control rate {} Hz outside [10, 200]",
                self.control_rate_hz
            )));
        }
        if !(self.max_duration_s > 0.0) || !self.max_duration_s.is_finite() {
            return Err(invalid_arg("max_duration_s must be positive"));
        }
        let non_neg = [
            self.slide_speed_mm_s,
            self.correction_rotation_deg,
            self.correction_depth_mm,
            self.start_offset_mm,
            self.start_lateral_jitter_mm,
            self.start_angle_jitter_deg,
        ];
        if non_neg.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(invalid_arg(
                "speeds, corrections and jitters must be finite and >= 0",
            ));
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.control_rate_hz
    }
}

#[derive(Debug, Clone)]
pub struct EpisodeConfig {
    pub cloth: ClothEdge,
    pub configuration: ClothConfiguration,
    pub params: EpisodeParams,
    pub render: RenderParams,
    pub image: ImageSpec,
    pub gripper: GripperConfig,
    pub seed: u64,
}

impl EpisodeConfig {
    pub fn new(cloth: ClothEdge, configuration: ClothConfiguration, seed: u64) -> Self {
        EpisodeConfig {
            cloth,
            configuration,
            params: EpisodeParams::default(),
            render: RenderParams::default(),
            image: ImageSpec::default(),
            gripper: GripperConfig::default(),
            seed,
        }
    }
}

/// Controller gains used during sliding.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EpisodeGains {
    pub alignment: AlignmentGains,
    pub abduction: PidGains,
}

impl Default for EpisodeGains {
    fn default() -> Self {
        EpisodeGains {
            alignment: AlignmentGains::default(),
            abduction: PidGains::abduction_default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PerceptionModels {
    pub classifier: ClassifierModel,
    pub regressor: RegressorModel,
}

impl PerceptionModels {
    /// Checks that both models are trained and match the image geometry.
    pub fn validate(&self, image: &ImageSpec) -> Result<()> {
        let c = &self.classifier;
        if c.feature_mean.len() != CLASS_FEATURES
            || c.feature_scale.len() != CLASS_FEATURES
            || c.weights.len() != ContactClass::ALL.len() * (CLASS_FEATURES + 1)
        {
            return Err(Error::InvalidModel(
                "classifier parameters have the wrong shape".into(),
            ));
        }
        let r = &self.regressor;
        if r.width != image.width || r.height != image.height {
            return Err(Error::InvalidModel(format!(
                "regressor expects {}x{} images, episode renders {}x{}",
                r.width, r.height, image.width, image.height
            )));
        }
        let blank = TactileImage::filled(image.width, image.height, image.mm_per_px, 0.0)?;
        let n = pose_features(&blank, &r.hyper.feature_params()).len();
        if r.feature_mean.len() != n || r.feature_scale.len() != n || r.weights.len() != 4 * (n + 1)
        {
            return Err(Error::InvalidModel(
                "regressor parameters have the wrong shape".into(),
            ));
        }
        let all = c
            .weights
            .iter()
            .chain(&r.weights)
            .chain(&c.feature_scale)
            .chain(&r.feature_scale);
        if all.clone().any(|v| !v.is_finite()) {
            return Err(Error::InvalidModel("non-finite model parameters".into()));
        }
        if c.weights.iter().all(|&w| w == 0.0) || r.weights.iter().all(|&w| w == 0.0) {
            return Err(Error::InvalidModel(
                "model weights are all zero (untrained)".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorrectionCounts {
    pub shallow: usize,
    pub deep: usize,
}

impl CorrectionCounts {
    pub fn total(&self) -> usize {
        self.shallow + self.deep
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialResult {
    pub success: bool,
    pub duration_s: f64,
    pub final_phase: SlidingPhase,
    pub trajectory: Vec<TickLog>,
    pub corrections: CorrectionCounts,
    /// Why a trial ended in `Failed`.
    pub failure_reason: Option<String>,
}

/// Source of tactile images. The episode never reads ground truth directly;
/// everything the controller sees comes through this trait.
pub trait Observer {
    fn observe(
        &mut self,
        finger: SensorRole,
        cloth: &ClothEdge,
        fp: &SensorFootprint,
        tick: u64,
    ) -> Result<TactileImage>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SensorRole {
    Moving,
    Fixed,
}

/// Renders footprints with per-tick noise seeds.
#[derive(Debug, Clone)]
pub struct RenderObserver {
    pub image: ImageSpec,
    pub params: RenderParams,
    pub seed: u64,
}

impl Observer for RenderObserver {
    fn observe(
        &mut self,
        finger: SensorRole,
        cloth: &ClothEdge,
        fp: &SensorFootprint,
        tick: u64,
    ) -> Result<TactileImage> {
        let stream = match finger {
            SensorRole::Moving => 200,
            SensorRole::Fixed => 201,
        };
        render_footprint(
            cloth,
            fp,
            &self.image,
            &self.params,
            derive_seed(self.seed, stream, tick),
        )
    }
}

/// Phase transition on the latest classifications.
///
/// From `GraspCorner` sliding starts once the holding finger sees a corner.
/// Correction phases return to `Slide`. Any non-terminal phase whose elapsed
/// time exceeds `max_duration_s` becomes `Failed`.
pub fn classify_and_transition(
    phase: SlidingPhase,
    cls_moving: ContactClass,
    cls_fixed: ContactClass,
    elapsed_s: f64,
    params: &EpisodeParams,
) -> Result<(SlidingPhase, SlideAction)> {
    use ContactClass::*;
    use SlidingPhase::*;
    if phase.is_terminal() {
        return Err(Error::InvalidTransition(format!(
            "no transition out of terminal phase {}",
            phase.label()
        )));
    }
    if elapsed_s > params.max_duration_s {
        return Ok((Failed, SlideAction::Abort));
    }
    let (rot, depth) = (params.correction_rotation_deg, params.correction_depth_mm);
    Ok(match phase {
        GraspCorner if cls_fixed == Corner => (Slide, SlideAction::Continue),
        GraspCorner => (GraspCorner, SlideAction::Hold),
        CorrectShallow | CorrectDeep => (Slide, SlideAction::Continue),
        _ => match (cls_moving, cls_fixed) {
            (InFabric, _) => (
                CorrectShallow,
                SlideAction::Withdraw {
                    rotate_deg: -rot,
                    depth_mm: depth,
                },
            ),
            (GraspFailure, _) => (
                CorrectDeep,
                SlideAction::Insert {
                    rotate_deg: rot,
                    depth_mm: depth,
                },
            ),
            (Corner, Corner) => (ReachedCorner, SlideAction::Stop),
            _ => (Slide, SlideAction::Continue),
        },
    })
}

/// Boundary point at arc length `s` from vertex `from`, walking forward, and
/// the unit tangent of the chord over the next `span` millimetres.
fn point_along(cloth: &ClothEdge, from: usize, s: f64, span: f64) -> (Vec2, Vec2) {
    let b = cloth.boundary();
    let n = b.len();
    let walk = |target: f64| {
        let mut acc = 0.0;
        let mut i = from;
        for _ in 0..n {
            let (a, c) = (b[i], b[(i + 1) % n]);
            let len = (c - a).norm();
            if acc + len >= target && len > 0.0 {
                return a + (c - a) * ((target - acc) / len);
            }
            acc += len;
            i = (i + 1) % n;
        }
        b[from]
    };
    let p = walk(s);
    let q = walk(s + span);
    let d = q - p;
    (p, d * (1.0 / d.norm().max(1e-12)))
}

fn rotate_about(state: &mut GripperState, pivot: Vec2, angle: f64) {
    state.base_xy_mm = pivot + (state.base_xy_mm - pivot).rotate(angle);
    state.yaw_rad = wrap_angle(state.yaw_rad + angle);
}

/// Rolling window of the last frames with their classification features.
struct Buffer {
    frames: VecDeque<(TactileImage, [f64; FRAME_FEATURES])>,
}

impl Buffer {
    fn new() -> Self {
        Buffer {
            frames: VecDeque::with_capacity(SEQUENCE_LEN),
        }
    }

    fn push(&mut self, img: TactileImage) {
        if self.frames.len() == SEQUENCE_LEN {
            self.frames.pop_front();
        }
        let f = frame_features(&img);
        self.frames.push_back((img, f));
    }

    fn clear(&mut self) {
        self.frames.clear();
    }

    fn latest(&self) -> Option<&TactileImage> {
        self.frames.back().map(|f| &f.0)
    }

    /// Class of the full window, if it is full.
    fn classify(&self, model: &ClassifierModel) -> Option<ContactClass> {
        if self.frames.len() < SEQUENCE_LEN {
            return None;
        }
        let per: Vec<[f64; FRAME_FEATURES]> = self.frames.iter().map(|f| f.1).collect();
        Some(model.predict_features(&sequence_features(&per)).0)
    }
}

/// Runs one sliding trial with rendered observations.
pub fn run_episode(
    cfg: &EpisodeConfig,
    models: &PerceptionModels,
    gains: &EpisodeGains,
) -> Result<TrialResult> {
    let mut observer = RenderObserver {
        image: cfg.image,
        params: cfg.render,
        seed: derive_seed(cfg.seed, 10, 0),
    };
    run_episode_with_observer(cfg, models, gains, &mut observer)
}

/// As [`run_episode`] with an explicit image source.
pub fn run_episode_with_observer(
    cfg: &EpisodeConfig,
    models: &PerceptionModels,
    gains: &EpisodeGains,
    observer: &mut impl Observer,
) -> Result<TrialResult> {
    let p = &cfg.params;
    p.validate()?;
    cfg.gripper.validate()?;
    cfg.render.validate()?;
    cfg.image.validate()?;
    models.validate(&cfg.image)?;
    let dt = p.dt();
    let gcfg = &cfg.gripper;
    let cloth = &cfg.cloth;

    // Holding finger: pinned just inside the start corner.
    let corners = cloth.corner_indices();
    let (start, target) = (corners[0], corners[1]);
    let target_pt = cloth.boundary()[target];
    let (c0, u0) = point_along(cloth, start, 0.0, 10.0);
    let fixed_center = c0 + u0 * 1.5 + u0.perp() * 1.5;
    let fixed_fp = SensorFootprint::new(
        fixed_center,
        u0.y.atan2(u0.x),
        gcfg.sensor_width_mm,
        gcfg.sensor_height_mm,
    )?;

    // Moving finger: on the edge a little past the holding finger.
    let mut rng = child_rng(cfg.seed, 11, 0);
    let jitter = |rng: &mut crate::rng::SimRng, b: f64| {
        if b > 0.0 {
            rand::Rng::random_range(rng, -b..=b)
        } else {
            0.0
        }
    };
    let (p0, t0) = point_along(cloth, start, p.start_offset_mm, 10.0);
    let lateral = jitter(&mut rng, p.start_lateral_jitter_mm);
    let heading0 = t0.y.atan2(t0.x) + jitter(&mut rng, p.start_angle_jitter_deg).to_radians();
    let sensor0 = p0 + t0.perp() * lateral;
    let mut state = GripperState {
        yaw_rad: heading0,
        ..GripperState::default()
    };
    state.base_xy_mm = sensor0 - gcfg.finger_point(state.right_pos_mm, 0.0).rotate(heading0);
    let mut targets = ActuatorTargets::hold(&state);

    let mut align = AlignmentController::new(gains.alignment)?;
    let mut ab_pid = PidController::new(gains.abduction)?;
    let mut ab_setpoint = 0.0f64;
    let mut moving_buf = Buffer::new();
    let mut fixed_buf = Buffer::new();
    let mut phase = SlidingPhase::GraspCorner;
    let mut corrections = CorrectionCounts::default();
    let mut trajectory = Vec::new();
    let mut failure_reason = None;
    let mut tick: u64 = 0;

    while !phase.is_terminal() {
        let t = tick as f64 * dt;
        let (_, moving_fp) = forward_kinematics(gcfg, &state)?;
        let img_m = observer.observe(SensorRole::Moving, cloth, &moving_fp, tick)?;
        let img_f = observer.observe(SensorRole::Fixed, cloth, &fixed_fp, tick)?;
        moving_buf.push(img_m);
        fixed_buf.push(img_f);
        let cls_m = moving_buf.classify(&models.classifier);
        let cls_f = fixed_buf.classify(&models.classifier);

        let mut estimate: Option<EdgePose> = None;
        let mut cmd = AlignmentCommand {
            u_yaw_deg: 0.0,
            u_ab_deg: ab_setpoint.to_degrees(),
        };
        if phase == SlidingPhase::Slide && cls_m == Some(ContactClass::Edge) {
            let est = estimate_pose(
                &models.regressor,
                moving_buf.latest().expect("buffer is full"),
            )?;
            cmd = align.update(est.y, est.theta, dt)?;
            estimate = Some(est);
            rotate_about(&mut state, moving_fp.center, cmd.u_yaw_deg.to_radians());
            ab_setpoint = cmd.u_ab_deg.to_radians();
        }

        // Abduction servo: PID on the encoder reading drives the target rate.
        let measured = read_encoders(gcfg, &state, &mut rng);
        let rate = ab_pid.update(ab_setpoint - measured.right_ab_rad, dt)?;
        let lim = gcfg.abduction_range_rad;
        targets.right_ab_rad = (targets.right_ab_rad + rate * dt).clamp(-lim, lim);
        state = step_actuators(gcfg, &state, &targets, dt);

        if phase == SlidingPhase::Slide {
            state.base_xy_mm += Vec2::from_angle(state.yaw_rad) * (p.slide_speed_mm_s * dt);
        }

        let elapsed = t + dt;
        let (next, action) = match (cls_m, cls_f) {
            (Some(m), Some(f)) => classify_and_transition(phase, m, f, elapsed, p)?,
            _ if elapsed > p.max_duration_s => (SlidingPhase::Failed, SlideAction::Abort),
            _ => (phase, SlideAction::Continue),
        };
        let corrective = match action {
            SlideAction::Withdraw {
                rotate_deg,
                depth_mm,
            } => Some((rotate_deg, -depth_mm)),
            SlideAction::Insert {
                rotate_deg,
                depth_mm,
            } => Some((rotate_deg, depth_mm)),
            _ => None,
        };
        if let Some((rot, depth)) = corrective {
            let (_, fp) = forward_kinematics(gcfg, &state)?;
            rotate_about(&mut state, fp.center, rot.to_radians());
            let inward = Vec2::from_angle(fp.heading).perp();
            state.base_xy_mm += inward * depth;
            moving_buf.clear();
            align.reset();
            if next == SlidingPhase::CorrectShallow {
                corrections.shallow += 1;
            } else {
                corrections.deep += 1;
            }
        }
        if next == SlidingPhase::Failed && failure_reason.is_none() {
            failure_reason = Some(format!("timed out after {:.2} s", p.max_duration_s));
        }

        trajectory.push(TickLog {
            t,
            phase: next,
            class_moving: cls_m,
            class_fixed: cls_f,
            ey_mm: estimate.map(|e| e.y),
            etheta_rad: estimate.map(|e| e.theta),
            u_yaw_deg: cmd.u_yaw_deg,
            u_ab_deg: cmd.u_ab_deg,
            state,
        });
        phase = next;
        tick += 1;

        if phase == SlidingPhase::ReachedCorner {
            // Judged against the cloth: the stop must be at the target corner.
            let (_, fp) = forward_kinematics(gcfg, &state)?;
            if (fp.center - target_pt).norm() > fp.circumradius() {
                phase = SlidingPhase::Failed;
                failure_reason = Some(format!(
                    "stopped {:.1} mm away from the target corner",
                    (fp.center - target_pt).norm()
                ));
                if let Some(last) = trajectory.last_mut() {
                    last.phase = phase;
                }
            }
        }
    }

    Ok(TrialResult {
        success: phase == SlidingPhase::ReachedCorner,
        duration_s: tick as f64 * dt,
        final_phase: phase,
        trajectory,
        corrections,
        failure_reason,
    })
}
