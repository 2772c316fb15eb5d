//! PID control with an exponentially filtered derivative, and the coupled
//! yaw/abduction edge-alignment law.

use serde::{Deserialize, Serialize};

use crate::error::{invalid_arg, Result};
use crate::gripper::{lag_fraction, GripperConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PidGains {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    /// Derivative smoothing factor in (0, 1]; 1 disables filtering.
    pub alpha: f64,
    /// When set, the integral stops accumulating while the output would
    /// exceed this magnitude, and the output is clamped to it.
    pub effort_limit: Option<f64>,
}

impl Default for PidGains {
    fn default() -> Self {
        PidGains {
            kp: 1.0,
            ki: 0.0,
            kd: 0.0,
            alpha: 1.0,
            effort_limit: None,
        }
    }
}

impl PidGains {
    pub fn new(kp: f64, ki: f64, kd: f64, alpha: f64) -> Result<Self> {
        let g = PidGains {
            kp,
            ki,
            kd,
            alpha,
            effort_limit: None,
        };
        g.validate()?;
        Ok(g)
    }

    /// Shipped gains for the grasp-depth axis.
    pub fn grasp_default() -> Self {
        PidGains {
            kp: 4.0,
            ki: 0.5,
            kd: 0.2,
            alpha: 0.3,
            effort_limit: None,
        }
    }

    /// Shipped gains for the abduction axis.
    pub fn abduction_default() -> Self {
        PidGains {
            kp: 3.0,
            ki: 0.2,
            kd: 0.1,
            alpha: 0.3,
            effort_limit: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kp >= 0.0 && self.ki >= 0.0 && self.kd >= 0.0) {
            return Err(invalid_arg(format!(
                "PID gains must be >= 0, got ({}, {}, {})",
                self.kp, self.ki, self.kd
            )));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(invalid_arg(format!("alpha {} outside (0, 1]", self.alpha)));
        }
        if let Some(l) = self.effort_limit {
            if !(l > 0.0) {
                return Err(invalid_arg("effort limit must be positive"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PidController {
    gains: PidGains,
    integral_acc: f64,
    prev_error: f64,
    filtered_derivative: f64,
    initialized: bool,
}

impl PidController {
    pub fn new(gains: PidGains) -> Result<Self> {
        gains.validate()?;
        Ok(PidController {
            gains,
            integral_acc: 0.0,
            prev_error: 0.0,
            filtered_derivative: 0.0,
            initialized: false,
        })
    }

    pub fn gains(&self) -> &PidGains {
        &self.gains
    }

    pub fn integral(&self) -> f64 {
        self.integral_acc
    }

    pub fn filtered_derivative(&self) -> f64 {
        self.filtered_derivative
    }

    pub fn is_initialized(&self) -> bool {
        self.initialized
    }

    /// One control step with the measured sampling interval `dt`.
    pub fn update(&mut self, error: f64, dt: f64) -> Result<f64> {
        if !(dt > 0.0) {
            return Err(invalid_arg(format!("dt must be > 0, got {dt}")));
        }
        let g = self.gains;
        let raw = if self.initialized {
            (error - self.prev_error) / dt
        } else {
            0.0
        };
        self.filtered_derivative = (1.0 - g.alpha) * self.filtered_derivative + g.alpha * raw;
        self.integral_acc += error * dt;
        let mut out = g.kp * error + g.kd * self.filtered_derivative + g.ki * self.integral_acc;
        if let Some(limit) = g.effort_limit {
            if out.abs() > limit {
                self.integral_acc -= error * dt;
                out = (g.kp * error + g.kd * self.filtered_derivative + g.ki * self.integral_acc)
                    .clamp(-limit, limit);
            }
        }
        self.prev_error = error;
        self.initialized = true;
        Ok(out)
    }

    pub fn reset(&mut self) {
        self.integral_acc = 0.0;
        self.filtered_derivative = 0.0;
        self.prev_error = 0.0;
        self.initialized = false;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlignmentGains {
    /// deg/mm
    pub kpy: f64,
    /// deg·s/mm
    pub kdy: f64,
    /// deg/rad
    pub kpt: f64,
    /// deg·s/rad
    pub kdt: f64,
    pub beta: f64,
    pub yaw_limit_deg: f64,
    pub ab_limit_deg: f64,
}

impl Default for AlignmentGains {
    fn default() -> Self {
        AlignmentGains {
            kpy: 0.8,
            kdy: 0.05,
            kpt: 40.0,
            kdt: 2.0,
            beta: 0.5,
            yaw_limit_deg: 5.0,
            ab_limit_deg: 30.0,
        }
    }
}

impl AlignmentGains {
    pub fn validate(&self) -> Result<()> {
        let vals = [self.kpy, self.kdy, self.kpt, self.kdt, self.beta];
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(invalid_arg("alignment gains must be finite"));
        }
        if !(self.yaw_limit_deg > 0.0 && self.ab_limit_deg > 0.0) {
            return Err(invalid_arg("alignment limits must be positive"));
        }
        Ok(())
    }
}

/// Yaw (deg) and abduction (deg) commands.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlignmentCommand {
    pub u_yaw_deg: f64,
    pub u_ab_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentController {
    gains: AlignmentGains,
    prev_ey: Option<f64>,
    prev_etheta: Option<f64>,
}

impl AlignmentController {
    pub fn new(gains: AlignmentGains) -> Result<Self> {
        gains.validate()?;
        Ok(AlignmentController {
            gains,
            prev_ey: None,
            prev_etheta: None,
        })
    }

    pub fn gains(&self) -> &AlignmentGains {
        &self.gains
    }

    /// `ey` in mm, `etheta` in rad. The derivative terms are zero on the
    /// first call after construction or [`AlignmentController::reset`].
    pub fn update(&mut self, ey: f64, etheta: f64, dt: f64) -> Result<AlignmentCommand> {
        if !(dt > 0.0) {
            return Err(invalid_arg(format!("dt must be > 0, got {dt}")));
        }
        let g = &self.gains;
        let dey = self.prev_ey.map_or(0.0, |p| (ey - p) / dt);
        let deth = self.prev_etheta.map_or(0.0, |p| (etheta - p) / dt);
        let u_yaw = clip(g.kpy * ey + g.kdy * dey, g.yaw_limit_deg);
        let u_ab = clip(
            g.kpt * (etheta - g.beta * u_yaw.to_radians()) + g.kdt * deth,
            g.ab_limit_deg,
        );
        self.prev_ey = Some(ey);
        self.prev_etheta = Some(etheta);
        Ok(AlignmentCommand {
            u_yaw_deg: u_yaw,
            u_ab_deg: u_ab,
        })
    }

    pub fn reset(&mut self) {
        self.prev_ey = None;
        self.prev_etheta = None;
    }
}

/// Clamps to `[-limit, limit]`; NaN maps to 0 so a command is always in range.
fn clip(v: f64, limit: f64) -> f64 {
    if v.is_nan() {
        0.0
    } else {
        v.clamp(-limit, limit)
    }
}

/// Single actuator axis following its position target through a first-order lag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LagPlant {
    pub time_constant_s: f64,
}

impl LagPlant {
    pub fn from_gripper(cfg: &GripperConfig) -> Self {
        LagPlant {
            time_constant_s: cfg.actuator_time_constant_s,
        }
    }

    pub fn step(&self, position: f64, target: f64, dt: f64) -> f64 {
        position + (target - position) * lag_fraction(self.time_constant_s, dt)
    }
}

impl Default for LagPlant {
    fn default() -> Self {
        Self::from_gripper(&GripperConfig::default())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepMetrics {
    /// Time from 10 % to 90 % of the setpoint; infinite if 90 % is never reached.
    pub rise_time_s: f64,
    /// Peak excursion beyond the setpoint as a fraction of it.
    pub overshoot: f64,
    /// `|setpoint - final output|`.
    pub steady_state_error: f64,
}

/// Closed-loop step response from rest. The controller output is a rate
/// command: it is integrated into the axis position target, which the plant
/// then follows through its lag.
pub fn step_response_metrics(
    plant: &LagPlant,
    gains: &PidGains,
    setpoint: f64,
    duration_s: f64,
    dt: f64,
) -> Result<StepMetrics> {
    if !(dt > 0.0 && duration_s >= dt) {
        return Err(invalid_arg("need dt > 0 and duration >= dt"));
    }
    if setpoint == 0.0 || !setpoint.is_finite() {
        return Err(invalid_arg("setpoint must be finite and non-zero"));
    }
    let mut pid = PidController::new(*gains)?;
    let steps = (duration_s / dt).round() as usize;
    let mut y = 0.0;
    let mut target = 0.0;
    let (mut t10, mut t90) = (None, None);
    let mut peak = 0.0f64;
    for k in 1..=steps {
        target += pid.update(setpoint - y, dt)? * dt;
        y = plant.step(y, target, dt);
        let frac = y / setpoint;
        let t = k as f64 * dt;
        if t10.is_none() && frac >= 0.1 {
            t10 = Some(t);
        }
        if t90.is_none() && frac >= 0.9 {
            t90 = Some(t);
        }
        peak = peak.max(frac);
    }
    let rise_time_s = match (t10, t90) {
        (Some(a), Some(b)) => b - a,
        _ => f64::INFINITY,
    };
    Ok(StepMetrics {
        rise_time_s,
        overshoot: (peak - 1.0).max(0.0),
        steady_state_error: (setpoint - y).abs(),
    })
}
