//! Command filters: passthrough, sigmoid blending and the barrier-based
//! shared-autonomy filter with post-grasp handover.

mod barrier;
mod blend;
mod cbf;
mod filter;
mod params;
mod qp;

pub use barrier::{lift_to_barrier, BarrierField};
pub use blend::{handover_pose, handover_step, lb_alpha, sa_lb_step};
pub use cbf::{desired_velocity, engagement_weight, sa_cbf_step, CbfStep};
pub use filter::{filter_command, FilterInput, Filtered, StepInfo};
pub use params::{AssistParams, CbfParams, LbParams};
pub use qp::{box_halfspace_qp, cbf_qp, QpSolution, QpStatus};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{Pose, UnitQuaternion};
use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AssistError {
    #[error("invalid assist parameters: {0}")]
    InvalidParams(String),
    #[error("handover requested without an active grasp")]
    NoGrasp,
    #[error("unknown mode {0:?}")]
    UnknownMode(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Mode {
    #[serde(rename = "PT")]
    Passthrough,
    #[serde(rename = "VA")]
    VisualAssist,
    #[serde(rename = "SA_LB")]
    LinearBlend,
    #[serde(rename = "SA_CBF")]
    Cbf,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::Passthrough, Mode::VisualAssist, Mode::LinearBlend, Mode::Cbf];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Passthrough => "PT",
            Mode::VisualAssist => "VA",
            Mode::LinearBlend => "SA_LB",
            Mode::Cbf => "SA_CBF",
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Mode {
    type Err = AssistError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Mode::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| AssistError::UnknownMode(s.to_string()))
    }
}

/// Per-arm filter memory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct ControlState<T> {
    pub mode: Mode,
    pub prev_cmd_orientation: UnitQuaternion<T>,
    /// Commanded pose at the moment the gripper closed on the rope.
    pub grasp_pose: Option<Pose<T>>,
    /// Handover progress; `None` once the ramp completes or without a grasp.
    pub handover_eta: Option<T>,
    /// Last emitted command.
    pub last_cmd: Option<Pose<T>>,
}

impl<T: Real> ControlState<T> {
    pub fn new(mode: Mode) -> Self {
        Self {
            mode,
            prev_cmd_orientation: UnitQuaternion::identity(),
            grasp_pose: None,
            handover_eta: None,
            last_cmd: None,
        }
    }

    pub fn with_orientation(mode: Mode, q: UnitQuaternion<T>) -> Self {
        Self {
            prev_cmd_orientation: q,
            ..Self::new(mode)
        }
    }

    pub fn grasp_active(&self) -> bool {
        self.grasp_pose.is_some()
    }

    /// Gripper closed on the rope. The handover starts from the last command
    /// so the first post-grasp pose continues from it; `fallback` is used if
    /// nothing was commanded yet.
    pub fn begin_handover(&mut self, fallback: Pose<T>) {
        self.grasp_pose = Some(self.last_cmd.unwrap_or(fallback));
        self.handover_eta = Some(T::zero());
    }

    pub fn release(&mut self) {
        self.grasp_pose = None;
        self.handover_eta = None;
    }
}

impl<T: Real> Default for ControlState<T> {
    fn default() -> Self {
        Self::new(Mode::Passthrough)
    }
}
