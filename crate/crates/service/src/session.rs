//! One simulated workcell: rope, two arms, the latest rope estimate and the
//! running metrics. Everything here is synchronous; the server drives it
//! from its control thread and tests drive it tick by tick.

use std::collections::VecDeque;
use std::sync::Arc;

use assistdlo::assist::{filter_command, AssistParams, BarrierField, ControlState, FilterInput, Mode, StepInfo};
use assistdlo::fusion::DloState;
use assistdlo::geom::{Pose, UnitQuaternion, Vec3};
use assistdlo::harness::{scenario_operator, HarnessError, Perception, Scenario, DISPLACEMENT_EXCLUSION, SUCCESS_LIFT};
use assistdlo::intent::{infer_target, GraspTarget, IntentParams, IntentState};
use assistdlo::sim::{pre_grasp_displacement, step, tool_point, Gripper, RopeState, SimConfig};

use crate::wire::{Arm, ArmState, ClientMessage, LiveMetrics, StateUpdate, WirePose};

/// Estimated operator speeds are clamped to this norm (m/s).
pub const MAX_HUMAN_SPEED: f64 = 2.0;
/// Number of finite differences averaged into the velocity estimate.
pub const VELOCITY_WINDOW: usize = 3;
/// After the last client leaves, the held velocity ramps to zero over this
/// many seconds.
pub const DISCONNECT_DECAY: f64 = 0.2;
/// Idle arm parked this far to the side of the rope, and this high above
/// the table (fingertip).
const PARK_OFFSET: f64 = 0.3;
const PARK_HEIGHT: f64 = 0.2;

/// Velocity from timestamped positions: finite differences of consecutive
/// samples, averaged over the last few, norm-clamped.
#[derive(Debug, Clone, Default)]
pub struct VelocityEstimator {
    last: Option<(f64, Vec3<f64>)>,
    diffs: VecDeque<Vec3<f64>>,
}

impl VelocityEstimator {
    /// Adds a sample at `t` seconds and returns the new estimate. A repeated
    /// timestamp leaves the estimate alone; a timestamp going backwards
    /// restarts it.
    pub fn push(&mut self, t: f64, pos: Vec3<f64>) -> Vec3<f64> {
        match self.last {
            Some((t0, p0)) if t > t0 => {
                self.diffs.push_back((pos - p0) / (t - t0));
                if self.diffs.len() > VELOCITY_WINDOW {
                    self.diffs.pop_front();
                }
                self.last = Some((t, pos));
            }
            Some((t0, _)) if t == t0 => {}
            _ => {
                self.diffs.clear();
                self.last = Some((t, pos));
            }
        }
        self.velocity()
    }

    pub fn velocity(&self) -> Vec3<f64> {
        if self.diffs.is_empty() {
            return Vec3::zeros();
        }
        let v = self.diffs.iter().fold(Vec3::zeros(), |a, d| a + *d) / self.diffs.len() as f64;
        let n = v.norm();
        if n > MAX_HUMAN_SPEED {
            v * (MAX_HUMAN_SPEED / n)
        } else {
            v
        }
    }

    pub fn clear(&mut self) {
        *self = Self::default();
    }
}

#[derive(Debug, Clone)]
struct ArmSlot {
    home: Pose<f64>,
    human: Pose<f64>,
    estimator: VelocityEstimator,
    /// Tick and velocity when the last client left.
    decay: Option<(u64, Vec3<f64>)>,
    robot: Pose<f64>,
    control: ControlState<f64>,
    intent: IntentState<f64>,
    target: Option<GraspTarget<f64>>,
    jaw_closed: bool,
    info: StepInfo<f64>,
    /// Set by the first command; until then the arm holds still.
    active: bool,
}

impl ArmSlot {
    fn new(home: Pose<f64>, mode: Mode) -> Self {
        Self {
            home,
            human: home,
            estimator: VelocityEstimator::default(),
            decay: None,
            robot: home,
            control: ControlState::with_orientation(mode, home.orientation),
            intent: IntentState::default(),
            target: None,
            jaw_closed: false,
            info: StepInfo::default(),
            active: false,
        }
    }

    fn human_velocity(&self, tick: u64, dt: f64) -> Vec3<f64> {
        match self.decay {
            Some((t0, v)) => v * (1.0 - (tick - t0) as f64 * dt / DISCONNECT_DECAY).clamp(0.0, 1.0),
            None => self.estimator.velocity(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Tracker {
    displacement: Option<f64>,
    min_barrier: Option<f64>,
    path_length: f64,
    completion: Option<f64>,
}

/// Work order for the perception stage.
#[derive(Debug, Clone)]
pub struct PerceptionRequest {
    pub epoch: u64,
    /// Monotone session clock; never rewinds on reset.
    pub time: f64,
    pub rope: RopeState,
    /// Fresh pipeline to start from when the epoch changes.
    pub template: Arc<Perception>,
}

#[derive(Debug, Clone)]
pub struct PerceptionResult {
    pub epoch: u64,
    pub dlo: Arc<DloState<f64>>,
    pub field: Arc<BarrierField<f64>>,
}

/// Runs one perception request, reusing `cache` while the epoch matches so
/// a view that fails to trace keeps its previous cloud.
pub fn perceive(req: PerceptionRequest, cache: &mut Option<(u64, Perception)>, params: &AssistParams<f64>) -> PerceptionResult {
    let p = match cache {
        Some((e, p)) if *e == req.epoch => p,
        _ => &mut cache.insert((req.epoch, (*req.template).clone())).1,
    };
    let dlo = p.update(&req.rope, req.time);
    let field = BarrierField::from_state(&dlo, params.cbf);
    PerceptionResult {
        epoch: req.epoch,
        dlo: Arc::new(dlo),
        field: Arc::new(field),
    }
}

#[derive(Debug, Clone)]
pub struct Session {
    id: String,
    scenario: Scenario,
    params: AssistParams<f64>,
    cfg: SimConfig,
    intent_params: IntentParams<f64>,
    mode: Mode,
    tick: u64,
    start_tick: u64,
    epoch: u64,
    initial: RopeState,
    goal: usize,
    rope: RopeState,
    arms: [ArmSlot; 2],
    template: Arc<Perception>,
    dlo: Arc<DloState<f64>>,
    field: Arc<BarrierField<f64>>,
    metrics: Tracker,
    fault: Option<String>,
}

impl Session {
    /// The right arm starts where the scenario's scripted operator starts;
    /// the left arm is parked beside the rope.
    pub fn new(id: impl Into<String>, scenario: Scenario) -> Result<Self, HarnessError> {
        scenario.validate()?;
        let params = scenario.assist_params()?;
        let cfg = scenario.sim;
        let (points, goal) = scenario.initial_rope()?;
        let initial = RopeState::new(points, scenario.rope.radius(), scenario.rope.properties().linear_density)
            .map_err(|e| HarnessError::Sim { tick: 0, source: e })?;
        let lift = Vec3::new(0.0, 0.0, cfg.tool_offset);
        let c = initial.particles.iter().fold(Vec3::zeros(), |a, p| a + *p) / initial.len() as f64;
        let left = Vec3::new(c.x - PARK_OFFSET, c.y, cfg.table_z + PARK_HEIGHT) + lift;
        let right = scenario_operator(&scenario, &initial, goal).start() + lift;
        let q = UnitQuaternion::identity();
        let mode = scenario.mode;
        Ok(Self {
            id: id.into(),
            params,
            cfg,
            intent_params: IntentParams::default(),
            mode,
            tick: 0,
            start_tick: 0,
            epoch: 0,
            rope: initial.clone(),
            goal,
            arms: [ArmSlot::new(Pose::new(left, q), mode), ArmSlot::new(Pose::new(right, q), mode)],
            template: Arc::new(Perception::for_rope(&initial, cfg.table_z)),
            dlo: Arc::new(DloState::empty(0.0)),
            field: Arc::new(BarrierField::new(&[], params.cbf)),
            metrics: Tracker::default(),
            fault: None,
            initial,
            scenario,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn params(&self) -> &AssistParams<f64> {
        &self.params
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    /// Ticks executed since start; never decreases.
    pub fn tick(&self) -> u64 {
        self.tick
    }

    /// Seconds since the last reset.
    pub fn time(&self) -> f64 {
        (self.tick - self.start_tick) as f64 * self.cfg.dt
    }

    pub fn goal(&self) -> usize {
        self.goal
    }

    pub fn rope(&self) -> &RopeState {
        &self.rope
    }

    pub fn robot_pose(&self, arm: Arm) -> Pose<f64> {
        self.arms[arm.index()].robot
    }

    pub fn human_velocity(&self, arm: Arm) -> Vec3<f64> {
        self.arms[arm.index()].human_velocity(self.tick, self.cfg.dt)
    }

    /// Applies one client message. Invalid messages leave the session
    /// untouched.
    pub fn apply(&mut self, msg: &ClientMessage) -> Result<(), String> {
        msg.validate()?;
        match *msg {
            ClientMessage::Command { arm, pos, quat, t_client_ms, .. } => {
                let pose = WirePose { pos, quat }.to_pose().ok_or("degenerate quaternion")?;
                let a = &mut self.arms[arm.index()];
                a.human = pose;
                a.active = true;
                a.decay = None;
                a.estimator.push(t_client_ms / 1000.0, pose.position);
            }
            ClientMessage::Gripper { arm, closed, .. } => self.arms[arm.index()].jaw_closed = closed,
            ClientMessage::Mode { mode, .. } => {
                self.mode = mode;
                for a in &mut self.arms {
                    a.control.mode = mode;
                }
            }
            ClientMessage::Reset { .. } => self.reset(),
        }
        Ok(())
    }

    /// The last client went away: hold the poses and let the velocities run
    /// down.
    pub fn client_lost(&mut self) {
        for a in &mut self.arms {
            if a.decay.is_none() {
                a.decay = Some((self.tick, a.estimator.velocity()));
            }
            a.estimator.clear();
        }
    }

    /// Rope back to the scenario layout, arms home, filter memory cleared.
    /// The tick counter keeps running.
    pub fn reset(&mut self) {
        self.rope = self.initial.clone();
        for a in &mut self.arms {
            *a = ArmSlot::new(a.home, self.mode);
        }
        self.start_tick = self.tick;
        self.epoch += 1;
        self.dlo = Arc::new(DloState::empty(self.tick as f64 * self.cfg.dt));
        self.field = Arc::new(BarrierField::new(&[], self.params.cbf));
        self.metrics = Tracker::default();
        self.fault = None;
    }

    pub fn set_fault(&mut self, msg: String) {
        self.fault = Some(msg);
    }

    pub fn perception_due(&self) -> bool {
        (self.tick - self.start_tick).is_multiple_of(self.scenario.perception_period)
    }

    pub fn perception_request(&self) -> PerceptionRequest {
        PerceptionRequest {
            epoch: self.epoch,
            time: self.tick as f64 * self.cfg.dt,
            rope: self.rope.clone(),
            template: self.template.clone(),
        }
    }

    /// Installs a finished estimate; results from before a reset are
    /// dropped.
    pub fn install(&mut self, res: PerceptionResult) -> bool {
        if res.epoch != self.epoch {
            return false;
        }
        self.dlo = res.dlo;
        self.field = res.field;
        true
    }

    /// One control tick for both arms followed by one simulation step.
    pub fn step(&mut self) -> Result<(), HarnessError> {
        let tick = self.tick;
        let now = self.time();
        let cfg = self.cfg;
        let lift = Vec3::new(0.0, 0.0, cfg.tool_offset);
        let pre_grasp = self.metrics.displacement.is_none();
        let mut grippers = [Gripper {
            pose: Pose::from_position(Vec3::zeros()),
            jaw_open: true,
        }; 2];
        for (i, a) in self.arms.iter_mut().enumerate() {
            grippers[i] = Gripper {
                pose: a.robot,
                jaw_open: !a.jaw_closed,
            };
            if !a.active {
                continue;
            }
            a.target = if self.rope.grasped_index(i).is_none() && !self.dlo.is_empty() {
                let human_tip = tool_point(&a.human, &cfg);
                match infer_target(&self.dlo.coarse, human_tip, tool_point(&a.robot, &cfg), &a.intent, &self.intent_params, a.target.as_ref()) {
                    Ok((mut tg, next)) => {
                        a.intent = next;
                        tg.pose.position += lift;
                        Some(tg)
                    }
                    Err(_) => None,
                }
            } else {
                None
            };
            let input = FilterInput {
                human: a.human,
                human_vel: a.human_velocity(tick, cfg.dt),
                robot: a.robot,
            };
            let out = filter_command(&input, &self.field, a.target.as_ref(), &a.control, &self.params)
                .map_err(|e| HarnessError::Assist { tick, source: e })?;
            a.control = out.state;
            a.info = out.info;
            self.metrics.path_length += out.pose.position.distance(a.robot.position);
            a.robot = out.pose;
            if self.mode == Mode::Cbf && pre_grasp {
                if let Some(h) = out.info.barrier_value {
                    self.metrics.min_barrier = Some(self.metrics.min_barrier.map_or(h, |m: f64| m.min(h)));
                }
            }
            grippers[i] = Gripper {
                pose: a.robot,
                jaw_open: !a.jaw_closed,
            };
        }

        let next = step(&self.rope, &grippers, &cfg).map_err(|e| HarnessError::Sim { tick, source: e })?;
        for (i, a) in self.arms.iter_mut().enumerate() {
            match (self.rope.grasped_index(i), next.grasped_index(i)) {
                (None, Some(_)) => {
                    if self.metrics.displacement.is_none() {
                        let goal0 = self.initial.particles[self.goal];
                        self.metrics.displacement = Some(
                            pre_grasp_displacement(&self.initial, &self.rope, Some(goal0), DISPLACEMENT_EXCLUSION)
                                .map_err(|e| HarnessError::Sim { tick, source: e })?,
                        );
                    }
                    a.control.begin_handover(a.robot);
                }
                (Some(_), None) => a.control.release(),
                _ => {}
            }
        }
        self.rope = next;
        if self.metrics.completion.is_none() {
            let lifted = (0..self.arms.len())
                .filter_map(|i| self.rope.grasped_index(i))
                .any(|p| self.rope.particles[p].z - self.initial.particles[p].z >= SUCCESS_LIFT);
            if lifted {
                self.metrics.completion = Some(now + cfg.dt);
            }
        }
        self.tick += 1;
        Ok(())
    }

    pub fn metrics(&self) -> LiveMetrics {
        let m = &self.metrics;
        let goal0 = self.initial.particles[self.goal];
        LiveMetrics {
            time: self.time(),
            success: m.completion.is_some(),
            completion_time: m.completion,
            pre_grasp_displacement: m.displacement.unwrap_or_else(|| {
                pre_grasp_displacement(&self.initial, &self.rope, Some(goal0), DISPLACEMENT_EXCLUSION).expect("rope keeps its particle count")
            }),
            min_barrier_value: if self.mode == Mode::Cbf { m.min_barrier } else { None },
            grasp_achieved: m.displacement.is_some(),
            command_path_length: m.path_length,
        }
    }

    /// Snapshot after the last executed tick.
    pub fn snapshot(&self) -> StateUpdate {
        let arms = Arm::ALL
            .iter()
            .map(|&arm| {
                let a = &self.arms[arm.index()];
                ArmState {
                    arm,
                    cmd_pose: a.human.into(),
                    robot_pose: a.robot.into(),
                    ghost_pose: a.target.map(|t| t.pose.into()),
                    engaged: a.info.engaged,
                    h: a.info.barrier_value,
                    gripper_closed: a.jaw_closed,
                    grasped: self.rope.grasped_index(arm.index()),
                }
            })
            .collect();
        StateUpdate {
            session: self.id.clone(),
            tick: self.tick.saturating_sub(1),
            mode: self.mode,
            arms,
            rope: self.rope.particles.iter().map(|p| p.to_array()).collect(),
            dlo_fine: self.dlo.fine.iter().map(|p| p.to_array()).collect(),
            barrier: self.params.cbf,
            metrics: self.metrics(),
            fault: self.fault.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scenario(mode: &str) -> Scenario {
        Scenario::from_toml_str(&format!(
            "id = \"t\"\nmode = \"{mode}\"\nrope = \"blue\"\nseed = 0\nduration_limit = 5.0\n[layout]\nkind = \"straight\"\nlength = 0.3\n[script]\nkind = \"hover-descend\"\n"
        ))
        .unwrap()
    }

    fn command(arm: Arm, p: [f64; 3], ms: f64) -> ClientMessage {
        ClientMessage::Command {
            arm,
            pos: p,
            quat: [1.0, 0.0, 0.0, 0.0],
            t_client_ms: ms,
            seq: None,
            session: None,
        }
    }

    #[test]
    fn estimator_averages_last_three() {
        let mut e = VelocityEstimator::default();
        assert_eq!(e.push(0.0, Vec3::zeros()), Vec3::zeros());
        // differences 0.1, 0.2, 0.3, 0.4 m/s along x; the window keeps the last three
        let mut x = 0.0;
        for (k, v) in [0.1, 0.2, 0.3, 0.4].into_iter().enumerate() {
            x += v * 0.1;
            e.push(0.1 * (k + 1) as f64, Vec3::new(x, 0.0, 0.0));
        }
        assert!((e.velocity().x - 0.3).abs() < 1e-12);

        let mut e = VelocityEstimator::default();
        for k in 0..5 {
            e.push(0.01 * k as f64, Vec3::new(0.001 * k as f64, 0.0, 0.0));
        }
        assert!((e.velocity().x - 0.1).abs() < 1e-12);
        // repeated stamp: no change; backwards: restart
        let v = e.push(0.04, Vec3::new(5.0, 0.0, 0.0));
        assert!((v.x - 0.1).abs() < 1e-12);
        assert_eq!(e.push(0.0, Vec3::zeros()), Vec3::zeros());
    }

    #[test]
    fn estimator_clamps_speed() {
        let mut e = VelocityEstimator::default();
        e.push(0.0, Vec3::zeros());
        let v = e.push(0.01, Vec3::new(0.03, 0.04, 0.0));
        assert!((v.norm() - MAX_HUMAN_SPEED).abs() < 1e-12);
        assert!((v.x / v.y - 0.75).abs() < 1e-12);
    }

    #[test]
    fn idle_session_holds_pose() {
        let mut s = Session::new("s", scenario("SA_CBF")).unwrap();
        let start = s.robot_pose(Arm::Right);
        for _ in 0..30 {
            if s.perception_due() {
                let mut cache = None;
                let r = perceive(s.perception_request(), &mut cache, &s.params().clone());
                s.install(r);
            }
            s.step().unwrap();
        }
        assert!(s.robot_pose(Arm::Right).position.distance(start.position) < 1e-12);
        assert!(s.robot_pose(Arm::Left).position.distance(s.arms[0].home.position) < 1e-12);
        assert_eq!(s.snapshot().tick, 29);
    }

    #[test]
    fn velocity_decays_after_disconnect() {
        let mut s = Session::new("s", scenario("PT")).unwrap();
        let p0 = s.robot_pose(Arm::Right).position.to_array();
        for k in 0..4 {
            let p = [p0[0] + 0.001 * k as f64, p0[1], p0[2]];
            s.apply(&command(Arm::Right, p, 10.0 * k as f64)).unwrap();
            s.step().unwrap();
        }
        assert!((s.human_velocity(Arm::Right).x - 0.1).abs() < 1e-9);
        s.client_lost();
        let mut prev = f64::INFINITY;
        for _ in 0..10 {
            s.step().unwrap();
            let v = s.human_velocity(Arm::Right).x;
            assert!(v < prev && v >= 0.0);
            prev = v;
        }
        assert!((prev - 0.1 * (1.0 - 0.1 / DISCONNECT_DECAY)).abs() < 1e-9);
        for _ in 0..10 {
            s.step().unwrap();
        }
        assert_eq!(s.human_velocity(Arm::Right), Vec3::zeros());
        // the pose is held through the decay
        assert!((s.robot_pose(Arm::Right).position.x - (p0[0] + 0.003)).abs() < 1e-12);
    }

    #[test]
    fn invalid_message_changes_nothing() {
        let mut s = Session::new("s", scenario("PT")).unwrap();
        let before = s.snapshot();
        let bad = ClientMessage::Command {
            arm: Arm::Left,
            pos: [f64::NAN, 0.0, 0.0],
            quat: [1.0, 0.0, 0.0, 0.0],
            t_client_ms: 0.0,
            seq: None,
            session: None,
        };
        assert!(s.apply(&bad).is_err());
        assert_eq!(s.snapshot(), before);
    }

    #[test]
    fn mode_change_and_reset() {
        let mut s = Session::new("s", scenario("PT")).unwrap();
        s.apply(&ClientMessage::Mode {
            mode: Mode::Cbf,
            seq: None,
            session: None,
        })
        .unwrap();
        let p = s.robot_pose(Arm::Left).position.to_array();
        s.apply(&command(Arm::Left, [p[0] + 0.05, p[1], p[2]], 0.0)).unwrap();
        let req = s.perception_request();
        for _ in 0..5 {
            s.step().unwrap();
        }
        assert_eq!(s.snapshot().mode, Mode::Cbf);
        assert!(s.metrics().time > 0.0);
        s.apply(&ClientMessage::Reset { seq: None, session: None }).unwrap();
        assert_eq!(s.tick(), 5);
        assert_eq!(s.metrics().time, 0.0);
        assert_eq!(s.rope().particles, s.initial.particles);
        assert_eq!(s.robot_pose(Arm::Left), s.arms[0].home);
        assert_eq!(s.arms[0].control, ControlState::with_orientation(Mode::Cbf, UnitQuaternion::identity()));
        // an estimate of the rope from before the reset is discarded
        let stale = perceive(req, &mut None, &s.params().clone());
        assert!(!s.install(stale));
        assert!(s.perception_due());
    }
}
