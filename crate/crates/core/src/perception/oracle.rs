//! Exhaustive pose search used as a reference for the estimators.

use std::f64::consts::FRAC_PI_2;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid_arg, Result};
use crate::geometry::Vec2;
use crate::types::{EdgePose, TactileImage};

/// Largest image side the oracle accepts.
pub const ORACLE_MAX_SIDE_PX: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleGrid {
    /// Step of the line's offset from the sensor center.
    pub offset_step_mm: f64,
    pub angle_step_rad: f64,
    /// Blur of the candidate renders.
    pub softness_mm: f64,
}

impl Default for OracleGrid {
    fn default() -> Self {
        OracleGrid {
            offset_step_mm: 0.25,
            angle_step_rad: 0.05,
            softness_mm: 0.5,
        }
    }
}

/// Searches every line on a `(θ, offset)` grid (θ = kΔθ in (−π/2, π/2],
/// offset = jΔd, covering every line that crosses the image) and returns the
/// one whose noiseless render has the largest |normalised cross-correlation|
/// with `img`. Candidate lines are equivalent to an `(x, y, θ)` grid with the
/// position restricted to the canonical foot point. Ties keep the first
/// candidate in (θ, offset) order.
pub fn brute_force_pose_oracle(img: &TactileImage, grid: &OracleGrid) -> Result<EdgePose> {
    if img.width > ORACLE_MAX_SIDE_PX || img.height > ORACLE_MAX_SIDE_PX {
        return Err(invalid_arg(format!(
            "oracle images must be at most {ORACLE_MAX_SIDE_PX} px per side"
        )));
    }
    if !(grid.offset_step_mm > 0.0 && grid.angle_step_rad > 0.0 && grid.softness_mm > 0.0) {
        return Err(invalid_arg("oracle grid steps must be positive"));
    }
    let pts: Vec<Vec2> = (0..img.height)
        .flat_map(|r| (0..img.width).map(move |c| (c, r)))
        .map(|(c, r)| img.pixel_to_sensor(c, r))
        .collect();
    let mean = img.mean();
    let a: Vec<f64> = img.pixels.iter().map(|v| v - mean).collect();
    let a_norm = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let k_min = (-FRAC_PI_2 / grid.angle_step_rad).floor() as i64 + 1;
    let k_max = (FRAC_PI_2 / grid.angle_step_rad).floor() as i64;
    let reach = img.half_extent_mm().norm();
    let j_max = (reach / grid.offset_step_mm).ceil() as i64;
    let per_angle: Vec<(f64, f64, f64)> = (k_min..=k_max)
        .into_par_iter()
        .map(|k| {
            let theta = k as f64 * grid.angle_step_rad;
            let n = Vec2::new(-theta.sin(), theta.cos());
            let proj: Vec<f64> = pts.iter().map(|p| n.dot(*p)).collect();
            let mut best = (f64::NEG_INFINITY, theta, 0.0);
            for j in -j_max..=j_max {
                let d = j as f64 * grid.offset_step_mm;
                let r: Vec<f64> = proj
                    .iter()
                    .map(|s| 0.5 * (1.0 + libm::erf((s - d) / grid.softness_mm)))
                    .collect();
                let rm = r.iter().sum::<f64>() / r.len() as f64;
                let (mut num, mut rr) = (0.0, 0.0);
                for (ai, ri) in a.iter().zip(&r) {
                    let rc = ri - rm;
                    num += ai * rc;
                    rr += rc * rc;
                }
                if rr < 1e-12 || a_norm == 0.0 {
                    continue;
                }
                let score = (num / (a_norm * rr.sqrt())).abs();
                if score > best.0 {
                    best = (score, theta, d);
                }
            }
            best
        })
        .collect();
    let (_, theta, d) = per_angle
        .into_iter()
        .fold((f64::NEG_INFINITY, 0.0, 0.0), |acc, c| {
            if c.0 > acc.0 {
                c
            } else {
                acc
            }
        });
    let foot = Vec2::new(-theta.sin(), theta.cos()) * d;
    Ok(EdgePose::new(foot.x, foot.y, theta))
}
