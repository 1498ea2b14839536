use crate::geom::{slerp, Pose};
use crate::intent::GraspTarget;
use crate::scalar::Real;

use super::{AssistError, ControlState, LbParams};

/// Sigmoid weight on the human command as a function of distance to the
/// target.
pub fn lb_alpha<T: Real>(d: T, params: &LbParams<T>) -> T {
    T::one() / (T::one() + (-params.c * (d / params.h - params.r)).exp())
}

pub fn sa_lb_step<T: Real>(human: &Pose<T>, target: &GraspTarget<T>, params: &LbParams<T>) -> (Pose<T>, T) {
    let d = human.position.distance(target.pose.position);
    let a = lb_alpha(d, params);
    let position = human.position * a + target.pose.position * (T::one() - a);
    let orientation = slerp(&target.pose.orientation, &human.orientation, a);
    (Pose::new(position, orientation), a)
}

/// Interpolation from the grasp pose (`η = 0`) to the human pose (`η = 1`).
pub fn handover_pose<T: Real>(grasp: &Pose<T>, human: &Pose<T>, eta: T) -> Pose<T> {
    if eta >= T::one() {
        return *human;
    }
    Pose::new(
        grasp.position * (T::one() - eta) + human.position * eta,
        slerp(&grasp.orientation, &human.orientation, eta),
    )
}

/// Advances the handover ramp by one tick. On completion the ramp is
/// cleared while the grasp stays recorded.
pub fn handover_step<T: Real>(human: &Pose<T>, state: &mut ControlState<T>, duration: T, dt: T) -> Result<Pose<T>, AssistError> {
    let grasp = state.grasp_pose.ok_or(AssistError::NoGrasp)?;
    let Some(eta) = state.handover_eta else {
        return Ok(*human);
    };
    let eta = (eta + dt / duration).min(T::one());
    let pose = handover_pose(&grasp, human, eta);
    state.handover_eta = if eta >= T::one() { None } else { Some(eta) };
    state.prev_cmd_orientation = pose.orientation;
    Ok(pose)
}
