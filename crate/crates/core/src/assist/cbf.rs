use crate::geom::{slerp, Pose, Vec3};
use crate::intent::GraspTarget;
use crate::scalar::Real;

use super::{cbf_qp, lift_to_barrier, BarrierField, CbfParams, ControlState, QpStatus};

/// Human velocity plus the attraction toward the target, with the human
/// term doubled when they push away from the target fast enough.
pub fn desired_velocity<T: Real>(human_vel: Vec3<T>, robot_pos: Vec3<T>, target_pos: Vec3<T>, params: &CbfParams<T>) -> Vec3<T> {
    let v_t = (target_pos - robot_pos) / params.dt;
    if human_vel.dot(v_t) < T::zero() && human_vel.norm() > params.breakaway_speed {
        human_vel * T::lit(2.0) + v_t
    } else {
        human_vel + v_t
    }
}

/// `max(0, 1 − d/ε_e)`.
pub fn engagement_weight<T: Real>(d: T, params: &CbfParams<T>) -> T {
    (T::one() - d / params.eps_engage).max(T::zero())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CbfStep<T> {
    pub pose: Pose<T>,
    pub engaged: bool,
    /// Barrier value at the emitted position.
    pub barrier_value: T,
    pub qp_status: Option<QpStatus>,
    /// Vertical correction added by the sampled-data guard.
    pub guard_lift: T,
}

/// One tick of the barrier filter. The field must be nonempty; the caller
/// handles the unavailable case.
pub fn sa_cbf_step<T: Real>(
    human: &Pose<T>,
    human_vel: Vec3<T>,
    robot: &Pose<T>,
    target: &GraspTarget<T>,
    field: &BarrierField<T>,
    state: &mut ControlState<T>,
    params: &CbfParams<T>,
) -> CbfStep<T> {
    let d = human.position.distance(target.pose.position);
    if d >= params.eps_engage {
        state.prev_cmd_orientation = human.orientation;
        return CbfStep {
            pose: *human,
            engaged: false,
            barrier_value: field.value(human.position),
            qp_status: None,
            guard_lift: T::zero(),
        };
    }

    let v_des = desired_velocity(human_vel, robot.position, target.pose.position, params);
    let (h, grad) = field.value_and_grad(robot.position);
    let sol = cbf_qp(v_des, h, grad, params);
    let step = sol.v * params.dt;
    // the QP bounds the rate of h, not its value after a finite step over a
    // curved surface
    let (position, lift) = if params.sampled_data_guard && h >= T::zero() {
        lift_to_barrier(field, robot.position + step)
    } else {
        (robot.position + step, T::zero())
    };
    let w = params.orient_weight * engagement_weight(d, params);
    let orientation = slerp(&state.prev_cmd_orientation, &target.pose.orientation, w);
    state.prev_cmd_orientation = orientation;
    CbfStep {
        pose: Pose::new(position, orientation),
        engaged: true,
        barrier_value: field.value(position),
        qp_status: Some(sol.status),
        guard_lift: lift,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assist::Mode;
    use crate::geom::{quat_from_yaw, UnitQuaternion};

    fn target_at(p: Vec3<f64>, yaw: f64) -> GraspTarget<f64> {
        GraspTarget {
            pose: Pose::new(p, quat_from_yaw(yaw)),
            tangent: Vec3::new(yaw.cos(), yaw.sin(), 0.0),
            source_point: p,
        }
    }

    fn straight_rope() -> BarrierField<f64> {
        let pts: Vec<_> = (-20..=20).map(|i| Vec3::new(i as f64 * 0.01, 0.0, 0.005)).collect();
        BarrierField::new(&pts, CbfParams::default())
    }

    #[test]
    fn breakaway_branch() {
        let p = CbfParams::default();
        let v = desired_velocity(Vec3::new(-0.1, 0.0, 0.0), Vec3::zeros(), Vec3::new(0.02, 0.0, 0.0), &p);
        assert!(v.distance(Vec3::new(1.8, 0.0, 0.0)) < 1e-12);
        let v = desired_velocity(Vec3::zeros(), Vec3::zeros(), Vec3::new(0.02, 0.0, 0.0), &p);
        assert!(v.distance(Vec3::new(2.0, 0.0, 0.0)) < 1e-12);
        // slow opposing input is not amplified
        let v = desired_velocity(Vec3::new(-0.004, 0.0, 0.0), Vec3::zeros(), Vec3::new(0.02, 0.0, 0.0), &p);
        assert!(v.distance(Vec3::new(1.996, 0.0, 0.0)) < 1e-12);
    }

    #[test]
    fn outside_engagement_is_passthrough() {
        let field = straight_rope();
        let t = target_at(Vec3::new(0.0, 0.0, 0.005), 0.0);
        let human = Pose::new(Vec3::new(0.5, 0.0, 0.005), quat_from_yaw(0.7));
        let robot = Pose::from_position(Vec3::new(0.1, 0.1, 0.1));
        let mut st = ControlState::new(Mode::Cbf);
        let out = sa_cbf_step(&human, Vec3::zeros(), &robot, &t, &field, &mut st, &CbfParams::default());
        assert_eq!(out.pose, human);
        assert!(!out.engaged);
        assert_eq!(st.prev_cmd_orientation, human.orientation);
    }

    #[test]
    fn orientation_moves_a_tenth_of_the_arc_at_zero_distance() {
        let field = straight_rope();
        let t = target_at(Vec3::new(0.0, 0.0, 0.2), 1.0);
        let human = Pose::new(t.pose.position, UnitQuaternion::identity());
        let mut st = ControlState::new(Mode::Cbf);
        let out = sa_cbf_step(&human, Vec3::zeros(), &human, &t, &field, &mut st, &CbfParams::default());
        assert!((out.pose.orientation.yaw() - 0.1).abs() < 1e-12);
    }

    #[test]
    fn stationary_human_descends_onto_barrier() {
        let p = CbfParams::default();
        let field = straight_rope();
        let t = target_at(Vec3::new(0.0, 0.0, 0.005), 0.0);
        let human = Pose::from_position(Vec3::new(0.0, 0.0, 0.2));
        let mut robot = human;
        let mut st = ControlState::new(Mode::Cbf);
        let mut descended = 0;
        for _ in 0..200 {
            let out = sa_cbf_step(&human, Vec3::zeros(), &robot, &t, &field, &mut st, &p);
            assert!(out.engaged);
            assert!(out.barrier_value >= 0.0, "h = {}", out.barrier_value);
            let dz = out.pose.position.z - robot.position.z;
            assert!(dz <= 0.0);
            if field.value(robot.position) > 1e-9 {
                assert!(dz < 0.0);
                descended += 1;
            }
            assert!(out.pose.position.x.abs() < 1e-12 && out.pose.position.y.abs() < 1e-12);
            robot = out.pose;
        }
        assert!(descended >= 45);
        // funnel floor z0 − ζ plus the margin ε
        assert!((robot.position.z - 0.10).abs() < 1e-6);
    }

    #[test]
    fn guard_off_overshoots_only_slightly() {
        let mut p = CbfParams::default();
        p.sampled_data_guard = false;
        let field = BarrierField::new(&[Vec3::new(0.0, 0.0, 0.0)], p);
        let t = target_at(Vec3::new(0.0, 0.0, 0.0), 0.0);
        let slack = p.v_max * 3f64.sqrt() * p.dt;
        for x0 in [0.0, 0.01, 0.02, 0.03, 0.05] {
            let human = Pose::from_position(Vec3::new(x0, 0.0, 0.15));
            let mut robot = human;
            let mut st = ControlState::new(Mode::Cbf);
            let mut worst = f64::INFINITY;
            for _ in 0..150 {
                let out = sa_cbf_step(&human, Vec3::zeros(), &robot, &t, &field, &mut st, &p);
                worst = worst.min(out.barrier_value);
                robot = out.pose;
            }
            assert!(worst >= -slack, "x0 {x0}: {worst}");
        }
    }
}
