//! A scripted client driving the session tick by tick, checked against the
//! closed-loop harness on the same scenario.

use assistdlo::geom::Vec3;
use assistdlo::harness::{run_scenario, scenario_operator, RunMetrics, Scenario};
use assistdlo::sim::tool_point;
use assistdlo_service::session::perceive;
use assistdlo_service::{Arm, ClientMessage, LiveMetrics, Session};

fn scenario(mode: &str, script: &str, layout: &str) -> Scenario {
    Scenario::from_toml_str(&format!(
        "id = \"fx\"\nmode = \"{mode}\"\nrope = \"blue\"\nseed = 4\nduration_limit = 10.0\n[layout]\n{layout}\n[script]\nkind = \"{script}\"\n"
    ))
    .unwrap()
}

const HAIRPIN: &str = "kind = \"hairpin\"\nleg = 0.3\ngap = 0.04";
const STRAIGHT: &str = "kind = \"straight\"\nlength = 0.5";

/// Sends the operator script as pose commands, closes the jaw once the
/// fingertip reaches the goal and starts lifting when the state reports a
/// grasp. Returns the metrics and the tick count.
fn drive(sc: &Scenario) -> (LiveMetrics, u64) {
    let mut s = Session::new("fixture", sc.clone()).unwrap();
    let goal = s.goal();
    let mut op = scenario_operator(sc, s.rope(), goal);
    let cfg = sc.sim;
    let lift = Vec3::new(0.0, 0.0, cfg.tool_offset);
    let reach = s.rope().radius + cfg.grasp_margin;
    let mut cache = None;
    let (mut closed, mut lifting) = (false, false);
    let ticks = (sc.duration_limit / cfg.dt).round() as u64;
    for _ in 0..ticks {
        let t = s.time();
        let (tip, _) = op.sample(t);
        let p = tip + lift;
        s.apply(&ClientMessage::Command {
            arm: Arm::Right,
            pos: p.to_array(),
            quat: [1.0, 0.0, 0.0, 0.0],
            t_client_ms: t * 1000.0,
            seq: None,
            session: None,
        })
        .unwrap();
        if s.perception_due() {
            let params = *s.params();
            s.install(perceive(s.perception_request(), &mut cache, &params));
        }
        s.step().unwrap();

        let st = s.snapshot();
        let right = &st.arms[Arm::Right.index()];
        let tool = tool_point(&right.robot_pose.to_pose().unwrap(), &cfg);
        if !closed && tool.distance(Vec3::from_array(st.rope[goal])) <= reach {
            s.apply(&ClientMessage::Gripper {
                arm: Arm::Right,
                closed: true,
                seq: None,
                session: None,
            })
            .unwrap();
            closed = true;
        }
        if right.grasped.is_some() && !lifting {
            op.begin_lift(s.time());
            lifting = true;
        }
        if st.metrics.success {
            break;
        }
    }
    (s.metrics(), s.tick())
}

fn compare(sc: &Scenario) -> (RunMetrics, LiveMetrics) {
    let h = run_scenario(sc, None).unwrap();
    let (m, _) = drive(sc);
    assert_eq!(m.success, h.success, "{h:?} {m:?}");
    assert_eq!(m.grasp_achieved, h.grasp_achieved);
    (h, m)
}

#[test]
fn reproduces_harness_on_passthrough_sweep() {
    let (h, m) = compare(&scenario("PT", "straight-line-to-target", HAIRPIN));
    assert!(h.success);
    // the client closes the jaw one state later than the harness
    let dt = m.completion_time.unwrap() - h.completion_time;
    assert!((-1e-9..=0.02 + 1e-9).contains(&dt), "{dt}");
    assert!((m.pre_grasp_displacement - h.pre_grasp_displacement).abs() < 2e-3, "{h:?} {m:?}");
    assert!(m.pre_grasp_displacement > 0.02);
}

#[test]
fn reproduces_harness_under_barrier_filter() {
    for (script, layout) in [("straight-line-to-target", HAIRPIN), ("hover-descend", STRAIGHT)] {
        let (h, m) = compare(&scenario("SA_CBF", script, layout));
        assert!(h.success, "{script}");
        let dt = m.completion_time.unwrap() - h.completion_time;
        assert!((-1e-9..=0.02 + 1e-9).contains(&dt), "{script}: {dt}");
        assert!(m.pre_grasp_displacement < 0.005 && h.pre_grasp_displacement < 0.005);
        assert!(m.min_barrier_value.unwrap() >= -1e-6);
    }
}
