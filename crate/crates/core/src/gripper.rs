//! End-effector model: two finger carriages on a linear rail, each carrying a
//! sensor finger with an abduction joint, plus reachable-workspace analysis.
//!
//! End-effector frame: `x` along the rail, `y` along the fingers. A finger
//! with carriage position `c` and abduction `a` places its sensor center at
//! `(c + L·sin a, L·cos a)` with heading `yaw + a`.

use std::f64::consts::FRAC_PI_2;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::cloth::SensorFootprint;
use crate::error::{invalid_arg, Error, Result};
use crate::geometry::Vec2;
use crate::types::TactileImage;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GripperConfig {
    pub rail_span_mm: f64,
    pub finger_length_mm: f64,
    pub abduction_range_rad: f64,
    pub actuator_time_constant_s: f64,
    /// Encoder noise on carriage readback; abduction readback noise is this
    /// divided by the finger length.
    pub position_noise_mm: f64,
    /// Smallest allowed distance between the two carriages.
    pub min_carriage_gap_mm: f64,
    pub sensor_width_mm: f64,
    pub sensor_height_mm: f64,
}

impl Default for GripperConfig {
    fn default() -> Self {
        GripperConfig {
            rail_span_mm: 160.0,
            finger_length_mm: 60.0,
            abduction_range_rad: 30f64.to_radians(),
            actuator_time_constant_s: 0.08,
            position_noise_mm: 0.02,
            min_carriage_gap_mm: 20.0,
            sensor_width_mm: 19.0,
            sensor_height_mm: 16.0,
        }
    }
}

impl GripperConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rail_span_mm > 0.0) || !(self.finger_length_mm > 0.0) {
            return Err(invalid_arg("rail span and finger length must be positive"));
        }
        if !(self.abduction_range_rad >= 0.0 && self.abduction_range_rad <= FRAC_PI_2) {
            return Err(invalid_arg(format!(
                "abduction range {} rad outside [0, π/2]",
                self.abduction_range_rad
            )));
        }
        if !(self.actuator_time_constant_s >= 0.0) || !(self.position_noise_mm >= 0.0) {
            return Err(invalid_arg("time constant and encoder noise must be >= 0"));
        }
        if !(self.min_carriage_gap_mm >= 0.0 && self.min_carriage_gap_mm < self.rail_span_mm) {
            return Err(invalid_arg("carriage gap must lie in [0, rail span)"));
        }
        if !(self.sensor_width_mm > 0.0 && self.sensor_height_mm > 0.0) {
            return Err(invalid_arg("sensor size must be positive"));
        }
        Ok(())
    }

    fn half_rail(&self) -> f64 {
        self.rail_span_mm / 2.0
    }

    /// Admissible carriage interval for one finger.
    pub fn carriage_range(&self, finger: Finger) -> (f64, f64) {
        let h = self.half_rail();
        match finger {
            Finger::Left => (-h, h - self.min_carriage_gap_mm),
            Finger::Right => (-h + self.min_carriage_gap_mm, h),
        }
    }

    /// Sensor center of a finger in the end-effector frame.
    pub fn finger_point(&self, carriage_mm: f64, abduction_rad: f64) -> Vec2 {
        Vec2::new(
            carriage_mm + self.finger_length_mm * abduction_rad.sin(),
            self.finger_length_mm * abduction_rad.cos(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Finger {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GripperState {
    pub left_pos_mm: f64,
    pub right_pos_mm: f64,
    pub left_ab_rad: f64,
    pub right_ab_rad: f64,
    pub yaw_rad: f64,
    pub base_xy_mm: Vec2,
}

impl Default for GripperState {
    fn default() -> Self {
        GripperState {
            left_pos_mm: -40.0,
            right_pos_mm: 40.0,
            left_ab_rad: 0.0,
            right_ab_rad: 0.0,
            yaw_rad: 0.0,
            base_xy_mm: Vec2::ZERO,
        }
    }
}

impl GripperState {
    pub fn validate(&self, cfg: &GripperConfig) -> Result<()> {
        let vals = [
            self.left_pos_mm,
            self.right_pos_mm,
            self.left_ab_rad,
            self.right_ab_rad,
            self.yaw_rad,
        ];
        if vals.iter().any(|v| !v.is_finite()) || !self.base_xy_mm.is_finite() {
            return Err(Error::InvalidState("non-finite gripper state".into()));
        }
        if self.left_pos_mm > self.right_pos_mm {
            return Err(Error::InvalidState(format!(
                "carriages crossed: left {} > right {}",
                self.left_pos_mm, self.right_pos_mm
            )));
        }
        let tol = 1e-9;
        let h = cfg.half_rail() + tol;
        if self.left_pos_mm.abs() > h || self.right_pos_mm.abs() > h {
            return Err(Error::InvalidState("carriage outside the rail".into()));
        }
        let lim = cfg.abduction_range_rad + tol;
        if self.left_ab_rad.abs() > lim || self.right_ab_rad.abs() > lim {
            return Err(Error::InvalidState(format!(
                "abduction ({}, {}) beyond ±{}",
                self.left_ab_rad, self.right_ab_rad, cfg.abduction_range_rad
            )));
        }
        Ok(())
    }

    pub fn carriage(&self, finger: Finger) -> f64 {
        match finger {
            Finger::Left => self.left_pos_mm,
            Finger::Right => self.right_pos_mm,
        }
    }

    pub fn abduction(&self, finger: Finger) -> f64 {
        match finger {
            Finger::Left => self.left_ab_rad,
            Finger::Right => self.right_ab_rad,
        }
    }

    /// Maps an end-effector-frame point into the world.
    pub fn ee_to_world(&self, p: Vec2) -> Vec2 {
        self.base_xy_mm + p.rotate(self.yaw_rad)
    }
}

fn footprint(cfg: &GripperConfig, state: &GripperState, finger: Finger) -> Result<SensorFootprint> {
    let local = cfg.finger_point(state.carriage(finger), state.abduction(finger));
    SensorFootprint::new(
        state.ee_to_world(local),
        state.yaw_rad + state.abduction(finger),
        cfg.sensor_width_mm,
        cfg.sensor_height_mm,
    )
}

/// World footprints of the (left, right) sensors.
pub fn forward_kinematics(
    cfg: &GripperConfig,
    state: &GripperState,
) -> Result<(SensorFootprint, SensorFootprint)> {
    cfg.validate()?;
    state.validate(cfg)?;
    Ok((
        footprint(cfg, state, Finger::Left)?,
        footprint(cfg, state, Finger::Right)?,
    ))
}

/// Position targets for the four gripper axes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActuatorTargets {
    pub left_pos_mm: f64,
    pub right_pos_mm: f64,
    pub left_ab_rad: f64,
    pub right_ab_rad: f64,
}

impl ActuatorTargets {
    pub fn hold(state: &GripperState) -> Self {
        ActuatorTargets {
            left_pos_mm: state.left_pos_mm,
            right_pos_mm: state.right_pos_mm,
            left_ab_rad: state.left_ab_rad,
            right_ab_rad: state.right_ab_rad,
        }
    }
}

/// Fraction of the remaining error a first-order lag removes in `dt`.
pub fn lag_fraction(time_constant_s: f64, dt: f64) -> f64 {
    if dt <= 0.0 {
        0.0
    } else if time_constant_s <= 0.0 {
        1.0
    } else {
        1.0 - (-dt / time_constant_s).exp()
    }
}

/// Advances every axis through its first-order lag toward the (saturated)
/// target. A non-positive `dt` leaves the state unchanged.
pub fn step_actuators(
    cfg: &GripperConfig,
    state: &GripperState,
    targets: &ActuatorTargets,
    dt: f64,
) -> GripperState {
    let k = lag_fraction(cfg.actuator_time_constant_s, dt);
    let lim = cfg.abduction_range_rad;
    let (l_lo, l_hi) = cfg.carriage_range(Finger::Left);
    let (r_lo, r_hi) = cfg.carriage_range(Finger::Right);
    let mut left_t = targets.left_pos_mm.clamp(l_lo, l_hi);
    let mut right_t = targets.right_pos_mm.clamp(r_lo, r_hi);
    if right_t - left_t < cfg.min_carriage_gap_mm {
        let mid = 0.5 * (left_t + right_t);
        left_t = (mid - cfg.min_carriage_gap_mm / 2.0).clamp(l_lo, l_hi);
        right_t = (left_t + cfg.min_carriage_gap_mm).clamp(r_lo, r_hi);
    }
    let lerp = |x: f64, t: f64| x + (t - x) * k;
    GripperState {
        left_pos_mm: lerp(state.left_pos_mm, left_t),
        right_pos_mm: lerp(state.right_pos_mm, right_t),
        left_ab_rad: lerp(state.left_ab_rad, targets.left_ab_rad.clamp(-lim, lim)),
        right_ab_rad: lerp(state.right_ab_rad, targets.right_ab_rad.clamp(-lim, lim)),
        ..*state
    }
}

/// Encoder readback of the actuated axes with seeded Gaussian noise.
pub fn read_encoders(
    cfg: &GripperConfig,
    state: &GripperState,
    rng: &mut impl Rng,
) -> GripperState {
    if cfg.position_noise_mm == 0.0 {
        return *state;
    }
    let pos = Normal::new(0.0, cfg.position_noise_mm).expect("noise validated");
    let ab =
        Normal::new(0.0, cfg.position_noise_mm / cfg.finger_length_mm).expect("noise validated");
    GripperState {
        left_pos_mm: state.left_pos_mm + pos.sample(rng),
        right_pos_mm: state.right_pos_mm + pos.sample(rng),
        left_ab_rad: state.left_ab_rad + ab.sample(rng),
        right_ab_rad: state.right_ab_rad + ab.sample(rng),
        ..*state
    }
}

/// Rasterized reachable set of one sensor center in the end-effector frame.
///
/// Cells lie on a lattice anchored at the frame origin: cell `(i, j)` spans
/// `[i·r, (i+1)·r) x [j·r, (j+1)·r)`. `area_mm2` sums the covered fraction
/// of every cell, estimated from a regular sub-sample grid, so it converges
/// to the true area as the resolution shrinks. Cells touched by the reachable
/// set are marked occupied even when their covered fraction is negligible.
#[derive(Debug, Clone, PartialEq)]
pub struct Workspace {
    pub resolution_mm: f64,
    pub first_col: i64,
    pub first_row: i64,
    pub cols: usize,
    pub rows: usize,
    /// Row-major, row 0 at the smallest `y`.
    pub occupied: Vec<bool>,
    pub area_mm2: f64,
}

impl Workspace {
    pub fn occupied_cells(&self) -> usize {
        self.occupied.iter().filter(|&&o| o).count()
    }

    /// Occupancy as an image (1 = reachable), `+y` at the top.
    pub fn to_image(&self) -> TactileImage {
        let mut pixels = Vec::with_capacity(self.cols * self.rows);
        for r in (0..self.rows).rev() {
            for c in 0..self.cols {
                pixels.push(if self.occupied[r * self.cols + c] {
                    1.0
                } else {
                    0.0
                });
            }
        }
        TactileImage::new(self.cols, self.rows, self.resolution_mm, pixels)
            .expect("occupancy values are 0 or 1")
    }
}

/// Reachable workspaces of both sensor fingers.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkspaceReport {
    pub left: Workspace,
    pub right: Workspace,
}

/// Whether an end-effector-frame point is a reachable sensor center for a
/// carriage interval `[lo, hi]`.
fn reachable(cfg: &GripperConfig, lo: f64, hi: f64, p: Vec2) -> bool {
    let l = cfg.finger_length_mm;
    if p.y > l || p.y < l * cfg.abduction_range_rad.cos() {
        return false;
    }
    let a = (p.y / l).clamp(-1.0, 1.0).acos();
    if a > cfg.abduction_range_rad {
        return false;
    }
    let s = l * a.sin();
    [s, -s].iter().any(|off| {
        let c = p.x - off;
        c >= lo && c <= hi
    })
}

fn finger_workspace(cfg: &GripperConfig, finger: Finger, res: f64) -> Workspace {
    let (lo, hi) = cfg.carriage_range(finger);
    let l = cfg.finger_length_mm;
    let reach = l * cfg.abduction_range_rad.sin();
    let x_min = lo - reach;
    let x_max = hi + reach;
    let y_min = l * cfg.abduction_range_rad.cos();
    let first_col = (x_min / res).floor() as i64 - 1;
    let first_row = (y_min / res).floor() as i64 - 1;
    let cols = ((x_max / res).floor() as i64 - first_col + 2) as usize;
    let rows = ((l / res).floor() as i64 - first_row + 2) as usize;
    let mut occupied = vec![false; cols * rows];
    let sub = ((res / 0.1).ceil() as usize).clamp(4, 50);
    let mut covered = 0usize;
    if cfg.abduction_range_rad > 0.0 {
        for r in 0..rows {
            for c in 0..cols {
                let x0 = (first_col + c as i64) as f64 * res;
                let y0 = (first_row + r as i64) as f64 * res;
                let mut hits = 0usize;
                for sy in 0..sub {
                    for sx in 0..sub {
                        let p = Vec2::new(
                            x0 + (sx as f64 + 0.5) / sub as f64 * res,
                            y0 + (sy as f64 + 0.5) / sub as f64 * res,
                        );
                        if reachable(cfg, lo, hi, p) {
                            hits += 1;
                        }
                    }
                }
                if hits > 0 {
                    occupied[r * cols + c] = true;
                    covered += hits;
                }
            }
        }
    }
    // Mark every cell touched by densely sampled configurations.
    let n_c = ((hi - lo) / (0.25 * res)).ceil().max(1.0) as usize;
    let n_a = if cfg.abduction_range_rad > 0.0 {
        ((2.0 * reach.max(l * (1.0 - cfg.abduction_range_rad.cos()))) / (0.25 * res))
            .ceil()
            .max(1.0) as usize
    } else {
        0
    };
    for i in 0..=n_c {
        let carriage = lo + (hi - lo) * i as f64 / n_c as f64;
        for j in 0..=n_a {
            let a = if n_a == 0 {
                0.0
            } else {
                -cfg.abduction_range_rad + 2.0 * cfg.abduction_range_rad * j as f64 / n_a as f64
            };
            let p = cfg.finger_point(carriage, a);
            let c = (p.x / res).floor() as i64 - first_col;
            let r = (p.y / res).floor() as i64 - first_row;
            if c >= 0 && r >= 0 && (c as usize) < cols && (r as usize) < rows {
                occupied[r as usize * cols + c as usize] = true;
            }
        }
    }
    let cell_area = res * res / (sub * sub) as f64;
    Workspace {
        resolution_mm: res,
        first_col,
        first_row,
        cols,
        rows,
        occupied,
        area_mm2: covered as f64 * cell_area,
    }
}

/// Rasterizes the reachable sensor-center sets over all admissible
/// (carriage, abduction) pairs.
pub fn compute_workspace(cfg: &GripperConfig, resolution_mm: f64) -> Result<WorkspaceReport> {
    cfg.validate()?;
    if !(0.5..=5.0).contains(&resolution_mm) {
        return Err(invalid_arg(format!(
            "resolution {resolution_mm} mm outside [0.5, 5]"
        )));
    }
    Ok(WorkspaceReport {
        left: finger_workspace(cfg, Finger::Left, resolution_mm),
        right: finger_workspace(cfg, Finger::Right, resolution_mm),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fk_identity_pose() {
        let cfg = GripperConfig::default();
        let (l, r) = forward_kinematics(&cfg, &GripperState::default()).unwrap();
        assert!((l.center - Vec2::new(-40.0, 60.0)).norm() < 1e-12);
        assert!((r.center - Vec2::new(40.0, 60.0)).norm() < 1e-12);
        assert_eq!(l.heading, 0.0);
    }

    #[test]
    fn fk_abduction_offset() {
        let cfg = GripperConfig::default();
        let a = 30f64.to_radians();
        let s = GripperState {
            left_ab_rad: a,
            ..GripperState::default()
        };
        let (l, _) = forward_kinematics(&cfg, &s).unwrap();
        let expected = Vec2::new(-40.0 + 60.0 * a.sin(), 60.0 * a.cos());
        assert!((l.center - expected).norm() < 1e-12);
        assert!((l.heading - a).abs() < 1e-12);
    }

    #[test]
    fn fk_rejects_invalid_state() {
        let cfg = GripperConfig::default();
        let crossed = GripperState {
            left_pos_mm: 10.0,
            right_pos_mm: 0.0,
            ..GripperState::default()
        };
        assert!(matches!(
            forward_kinematics(&cfg, &crossed),
            Err(Error::InvalidState(_))
        ));
        let over = GripperState {
            right_ab_rad: 1.0,
            ..GripperState::default()
        };
        assert!(forward_kinematics(&cfg, &over).is_err());
    }

    #[test]
    fn lag_step_closed_form() {
        let cfg = GripperConfig {
            actuator_time_constant_s: 0.1,
            ..GripperConfig::default()
        };
        let s = GripperState {
            right_pos_mm: 0.0,
            left_pos_mm: -40.0,
            ..GripperState::default()
        };
        let t = ActuatorTargets {
            right_pos_mm: 10.0,
            ..ActuatorTargets::hold(&s)
        };
        let n = step_actuators(&cfg, &s, &t, 0.1);
        assert!((n.right_pos_mm - 10.0 * (1.0 - (-1.0f64).exp())).abs() < 1e-12);
        assert_eq!(step_actuators(&cfg, &s, &ActuatorTargets::hold(&s), 0.1), s);
    }

    #[test]
    fn abduction_saturates() {
        let cfg = GripperConfig {
            actuator_time_constant_s: 0.0,
            ..GripperConfig::default()
        };
        let s = GripperState::default();
        let t = ActuatorTargets {
            left_ab_rad: 2.0,
            right_ab_rad: -2.0,
            ..ActuatorTargets::hold(&s)
        };
        let n = step_actuators(&cfg, &s, &t, 0.01);
        assert_eq!(n.left_ab_rad, cfg.abduction_range_rad);
        assert_eq!(n.right_ab_rad, -cfg.abduction_range_rad);
    }

    #[test]
    fn carriages_never_cross() {
        let cfg = GripperConfig {
            actuator_time_constant_s: 0.0,
            ..GripperConfig::default()
        };
        let s = GripperState::default();
        let t = ActuatorTargets {
            left_pos_mm: 50.0,
            right_pos_mm: -50.0,
            ..ActuatorTargets::hold(&s)
        };
        let n = step_actuators(&cfg, &s, &t, 0.01);
        assert!(n.validate(&cfg).is_ok());
        assert!(n.right_pos_mm - n.left_pos_mm >= cfg.min_carriage_gap_mm - 1e-9);
    }

    #[test]
    fn zero_abduction_workspace_is_a_segment() {
        let cfg = GripperConfig {
            abduction_range_rad: 0.0,
            ..GripperConfig::default()
        };
        let ws = compute_workspace(&cfg, 1.0).unwrap();
        assert!(ws.left.area_mm2 <= 1.0 * cfg.rail_span_mm);
        assert!(ws.left.occupied_cells() > 0);
    }

    #[test]
    fn workspace_area_matches_closed_form() {
        // Oracle: integrate the reachable width over y in closed form.
        let cfg = GripperConfig {
            rail_span_mm: 100.0,
            finger_length_mm: 50.0,
            min_carriage_gap_mm: 0.0,
            ..GripperConfig::default()
        };
        let (l, a, s) = (50.0f64, cfg.abduction_range_rad, 100.0);
        // width(y) = s + 2·sqrt(l² - y²) for y in [l cos a, l]
        let prim = |y: f64| 0.5 * (y * (l * l - y * y).sqrt() + l * l * (y / l).asin());
        let exact = s * l * (1.0 - a.cos()) + 2.0 * (prim(l) - prim(l * a.cos()));
        let ws = compute_workspace(&cfg, 1.0).unwrap();
        assert!(
            (ws.left.area_mm2 - exact).abs() / exact < 0.01,
            "{} vs {exact}",
            ws.left.area_mm2
        );
    }
}
