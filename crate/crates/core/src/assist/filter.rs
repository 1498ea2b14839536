use serde::{Deserialize, Serialize};

use crate::geom::{Pose, Vec3};
use crate::intent::GraspTarget;
use crate::scalar::Real;

use super::{handover_step, sa_cbf_step, sa_lb_step, AssistError, AssistParams, BarrierField, ControlState, Mode, QpStatus};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct FilterInput<T> {
    pub human: Pose<T>,
    pub human_vel: Vec3<T>,
    pub robot: Pose<T>,
}

/// Diagnostics for one filtered command.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct StepInfo<T> {
    pub engaged: bool,
    /// Set when an assisted mode had no rope estimate or no target.
    pub assistance_unavailable: bool,
    pub barrier_value: Option<T>,
    pub qp_status: Option<QpStatus>,
    pub guard_lift: Option<T>,
    pub lb_alpha: Option<T>,
    pub handover_eta: Option<T>,
}

impl<T> Default for StepInfo<T> {
    fn default() -> Self {
        Self {
            engaged: false,
            assistance_unavailable: false,
            barrier_value: None,
            qp_status: None,
            guard_lift: None,
            lb_alpha: None,
            handover_eta: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Filtered<T> {
    pub pose: Pose<T>,
    pub state: ControlState<T>,
    pub info: StepInfo<T>,
}

/// Dispatches on `state.mode`. The returned state records the emitted pose
/// as `last_cmd`.
pub fn filter_command<T: Real>(
    input: &FilterInput<T>,
    field: &BarrierField<T>,
    target: Option<&GraspTarget<T>>,
    state: &ControlState<T>,
    params: &AssistParams<T>,
) -> Result<Filtered<T>, AssistError> {
    let mut st = *state;
    let mut info = StepInfo::default();
    let human = input.human;
    let pose = match st.mode {
        Mode::Passthrough | Mode::VisualAssist => {
            st.prev_cmd_orientation = human.orientation;
            human
        }
        Mode::LinearBlend => match target {
            Some(t) => {
                let (pose, a) = sa_lb_step(&human, t, &params.lb);
                info.lb_alpha = Some(a);
                st.prev_cmd_orientation = pose.orientation;
                pose
            }
            None => {
                info.assistance_unavailable = true;
                st.prev_cmd_orientation = human.orientation;
                human
            }
        },
        Mode::Cbf if st.grasp_active() => {
            let pose = handover_step(&human, &mut st, params.cbf.handover_duration, params.cbf.dt)?;
            info.handover_eta = st.handover_eta;
            pose
        }
        Mode::Cbf => match target {
            Some(t) if !field.is_empty() => {
                let out = sa_cbf_step(&human, input.human_vel, &input.robot, t, field, &mut st, &params.cbf);
                info.engaged = out.engaged;
                info.barrier_value = Some(out.barrier_value);
                info.qp_status = out.qp_status;
                info.guard_lift = Some(out.guard_lift);
                out.pose
            }
            _ => {
                info.assistance_unavailable = true;
                st.prev_cmd_orientation = human.orientation;
                human
            }
        },
    };
    st.last_cmd = Some(pose);
    Ok(Filtered { pose, state: st, info })
}
