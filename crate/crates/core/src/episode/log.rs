use std::io::Write;

use serde::Serialize;

use super::{SlidingPhase, TrialResult};
use crate::error::Result;
use crate::gripper::GripperState;
use crate::types::ContactClass;

/// One control tick of a trial; serialised as one JSON line.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TickLog {
    pub t: f64,
    pub phase: SlidingPhase,
    pub class_moving: Option<ContactClass>,
    pub class_fixed: Option<ContactClass>,
    pub ey_mm: Option<f64>,
    pub etheta_rad: Option<f64>,
    pub u_yaw_deg: f64,
    pub u_ab_deg: f64,
    pub state: GripperState,
}

pub fn write_trajectory_jsonl(result: &TrialResult, mut out: impl Write) -> Result<()> {
    for tick in &result.trajectory {
        serde_json::to_writer(&mut out, tick).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}
