use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::assist::{filter_command, BarrierField, ControlState, FilterInput, Mode};
use crate::fusion::{build_state, to_task_frame, DloState, TimedPointCloud, DEFAULT_COARSE_VOXEL, DEFAULT_FINE_VOXEL};
use crate::geom::{CameraIntrinsics, Pose, UnitQuaternion, Vec3};
use crate::intent::{infer_target, GraspTarget, IntentParams, IntentState};
use crate::sim::{look_at, pre_grasp_displacement, render_views, step, tool_point, Camera, Gripper, RopeState};
use crate::trace::trace_frame;

use super::log::{LogRecord, LOG_SCHEMA_VERSION};
use super::{HarnessError, Operator, Scenario};

/// Rise of the grasped particle that counts as a completed pick.
pub const SUCCESS_LIFT: f64 = 0.05;
/// Particles starting this close to the goal are left out of the
/// displacement metric.
pub const DISPLACEMENT_EXCLUSION: f64 = 0.03;
const TRACE_STRIDE: usize = 2;
const CAMERA_FRAMES: [&str; 2] = ["cam_left", "cam_right"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub success: bool,
    /// Time of the successful lift, or the duration limit.
    pub completion_time: f64,
    pub pre_grasp_displacement: f64,
    /// Lowest barrier value at the commanded poses before the grasp;
    /// barrier-filter runs only.
    pub min_barrier_value: Option<f64>,
    pub grasp_achieved: bool,
    pub command_path_length: f64,
}

/// Two fixed cameras above the scene, left and right of `center`.
pub fn scene_cameras(center: Vec3<f64>) -> [Camera; 2] {
    let intrinsics = CameraIntrinsics::new(525.0, 525.0, 319.5, 239.5, 640, 480).expect("valid intrinsics");
    [-0.15, 0.15].map(|dx| Camera {
        intrinsics,
        extrinsic: look_at(center + Vec3::new(dx, -0.2, 0.6), center, Vec3::new(0.0, 1.0, 0.0)).expect("non-degenerate view"),
    })
}

/// Rendered two-camera perception of a simulated rope.
#[derive(Debug, Clone)]
pub struct Perception {
    cameras: [Camera; 2],
    clouds: [Option<TimedPointCloud<f64>>; 2],
}

impl Perception {
    /// Cameras over the table below the centroid of `rope`.
    pub fn for_rope(rope: &RopeState, table_z: f64) -> Self {
        let n = rope.len().max(1) as f64;
        let c = rope.particles.iter().fold(Vec3::zeros(), |a, p| a + *p) / n;
        Self {
            cameras: scene_cameras(Vec3::new(c.x, c.y, table_z)),
            clouds: [None, None],
        }
    }

    /// Renders, traces and fuses; a view whose trace fails keeps its last
    /// cloud until it goes stale.
    pub fn update(&mut self, rope: &RopeState, now: f64) -> DloState<f64> {
        let views = render_views(rope, &self.cameras);
        for (i, (mask, depth)) in views.iter().enumerate() {
            let cam = &self.cameras[i];
            if let Ok(ft) = trace_frame(mask, depth, &cam.intrinsics, TRACE_STRIDE) {
                let local = TimedPointCloud::new(ft.points, CAMERA_FRAMES[i], now);
                self.clouds[i] = Some(to_task_frame(&local, &cam.extrinsic));
            }
        }
        build_state(
            self.clouds[0].as_ref(),
            self.clouds[1].as_ref(),
            now,
            DEFAULT_COARSE_VOXEL,
            DEFAULT_FINE_VOXEL,
        )
    }
}

/// The scripted operator of `sc`, aimed at particle `goal` of the resting rope.
pub fn scenario_operator(sc: &Scenario, initial: &RopeState, goal: usize) -> Operator {
    let p = &initial.particles;
    let tangent = p[(goal + 1).min(p.len() - 1)] - p[goal.saturating_sub(1)];
    Operator::new(&sc.script, p[goal], tangent, sc.seed)
}

fn emit(log: &mut Option<&mut dyn Write>, rec: &LogRecord) -> Result<(), HarnessError> {
    if let Some(w) = log.as_mut() {
        serde_json::to_writer(&mut **w, rec).map_err(|e| HarnessError::Io(e.to_string()))?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Runs one scenario to success or the duration limit. When `log` is given
/// every perception update and control tick is written to it as JSON lines.
pub fn run_scenario(sc: &Scenario, mut log: Option<&mut dyn Write>) -> Result<RunMetrics, HarnessError> {
    sc.validate()?;
    let params = sc.assist_params()?;
    let cfg = sc.sim;
    let props = sc.rope.properties();
    let (points, goal) = sc.initial_rope()?;
    let mut rope = RopeState::new(points, sc.rope.radius(), props.linear_density).map_err(|e| HarnessError::Sim { tick: 0, source: e })?;
    let initial = rope.clone();
    let goal0 = initial.particles[goal];

    let mut perception = Perception::for_rope(&initial, cfg.table_z);

    // scripts move the fingertip; commands and grasp targets are end-effector poses
    let lift = Vec3::new(0.0, 0.0, cfg.tool_offset);
    let mut op = scenario_operator(sc, &initial, goal);
    let mut robot = Pose::new(op.start() + lift, UnitQuaternion::identity());
    let mut state = ControlState::with_orientation(sc.mode, robot.orientation);
    let intent_params = IntentParams::default();
    let mut intent = IntentState::default();
    let mut target: Option<GraspTarget<f64>> = None;
    let mut dlo = DloState::empty(0.0);
    let mut field = BarrierField::new(&[], params.cbf);
    let mut jaw_open = true;
    let mut grasped: Option<usize> = None;
    let mut displacement = None;
    let mut min_barrier: Option<f64> = None;
    let mut path_length = 0.0;
    let reach = rope.radius + cfg.grasp_margin;

    emit(
        &mut log,
        &LogRecord::Header {
            schema_version: LOG_SCHEMA_VERSION,
            scenario: Box::new(sc.clone()),
            params,
            goal,
        },
    )?;

    let ticks = (sc.duration_limit / cfg.dt).round() as u64;
    let mut completion = None;
    for tick in 0..ticks {
        let t = tick as f64 * cfg.dt;
        if tick % sc.perception_period == 0 {
            dlo = perception.update(&rope, t);
            field = BarrierField::from_state(&dlo, params.cbf);
            emit(
                &mut log,
                &LogRecord::Perception {
                    tick,
                    time: t,
                    coarse: dlo.coarse.clone(),
                    fine_points: dlo.fine.len(),
                },
            )?;
        }

        let (tip, hv) = op.sample(t);
        let human = Pose::new(tip + lift, UnitQuaternion::identity());
        // intent is suspended while the rope is held
        target = if grasped.is_none() && !dlo.is_empty() {
            match infer_target(&dlo.coarse, tip, tool_point(&robot, &cfg), &intent, &intent_params, target.as_ref()) {
                Ok((mut tg, next)) => {
                    intent = next;
                    tg.pose.position += lift;
                    Some(tg)
                }
                Err(_) => None,
            }
        } else {
            None
        };

        let input = FilterInput {
            human,
            human_vel: hv,
            robot,
        };
        let out = filter_command(&input, &field, target.as_ref(), &state, &params).map_err(|e| HarnessError::Assist { tick, source: e })?;
        emit(
            &mut log,
            &LogRecord::Tick {
                tick,
                state_in: state,
                input,
                target,
                cmd: out.pose,
                info: out.info,
            },
        )?;
        state = out.state;
        path_length += out.pose.position.distance(robot.position);
        robot = out.pose;
        if sc.mode == Mode::Cbf && grasped.is_none() {
            if let Some(h) = out.info.barrier_value {
                min_barrier = Some(min_barrier.map_or(h, |m: f64| m.min(h)));
            }
        }

        if jaw_open && grasped.is_none() && tool_point(&robot, &cfg).distance(rope.particles[goal]) <= reach {
            jaw_open = false;
        }
        let next = step(&rope, &[Gripper { pose: robot, jaw_open }], &cfg).map_err(|e| HarnessError::Sim { tick, source: e })?;
        if grasped.is_none() {
            if let Some(i) = next.grasped_index(0) {
                grasped = Some(i);
                displacement = Some(
                    pre_grasp_displacement(&initial, &rope, Some(goal0), DISPLACEMENT_EXCLUSION)
                        .map_err(|e| HarnessError::Sim { tick, source: e })?,
                );
                state.begin_handover(robot);
                op.begin_lift(t + cfg.dt);
                emit(&mut log, &LogRecord::Grasp { tick, particle: i })?;
            }
        }
        rope = next;
        if let Some(i) = grasped {
            if rope.particles[i].z - initial.particles[i].z >= SUCCESS_LIFT {
                completion = Some((tick + 1) as f64 * cfg.dt);
                break;
            }
        }
    }

    let pre_grasp_displacement = match displacement {
        Some(d) => d,
        None => pre_grasp_displacement(&initial, &rope, Some(goal0), DISPLACEMENT_EXCLUSION).map_err(|e| HarnessError::Sim { tick: ticks, source: e })?,
    };
    let metrics = RunMetrics {
        success: completion.is_some(),
        completion_time: completion.unwrap_or(sc.duration_limit).min(sc.duration_limit),
        pre_grasp_displacement,
        min_barrier_value: if sc.mode == Mode::Cbf { min_barrier } else { None },
        grasp_achieved: grasped.is_some(),
        command_path_length: path_length,
    };
    emit(&mut log, &LogRecord::Result { metrics })?;
    if let Some(w) = log.as_mut() {
        w.flush()?;
    }
    Ok(metrics)
}
