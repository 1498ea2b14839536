//! JSON text frames exchanged over the WebSocket.

use assistdlo::assist::{CbfParams, Mode};
use assistdlo::geom::{Pose, UnitQuaternion, Vec3};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arm {
    Left,
    Right,
}

impl Arm {
    pub const ALL: [Arm; 2] = [Arm::Left, Arm::Right];

    /// Gripper index in the simulation.
    pub fn index(self) -> usize {
        match self {
            Arm::Left => 0,
            Arm::Right => 1,
        }
    }
}

/// Client to server. `seq` is the client's sequence number and is echoed in
/// the reply; `session` is accepted and ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClientMessage {
    Command {
        arm: Arm,
        pos: [f64; 3],
        /// `[w, x, y, z]`
        quat: [f64; 4],
        t_client_ms: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seq: Option<u64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        session: Option<String>,
    },
    Gripper {
        arm: Arm,
        closed: bool,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seq: Option<u64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        session: Option<String>,
    },
    Mode {
        mode: Mode,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seq: Option<u64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        session: Option<String>,
    },
    Reset {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seq: Option<u64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        session: Option<String>,
    },
}

impl ClientMessage {
    pub fn seq(&self) -> Option<u64> {
        match *self {
            ClientMessage::Command { seq, .. }
            | ClientMessage::Gripper { seq, .. }
            | ClientMessage::Mode { seq, .. }
            | ClientMessage::Reset { seq, .. } => seq,
        }
    }

    /// Parses one text frame; on failure returns the message and whatever
    /// `seq` could be recovered.
    pub fn parse(text: &str) -> Result<Self, (Option<u64>, String)> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| (None, e.to_string()))?;
        let seq = value.get("seq").and_then(serde_json::Value::as_u64);
        let msg: ClientMessage = serde_json::from_value(value).map_err(|e| (seq, e.to_string()))?;
        msg.validate().map_err(|e| (seq, e))?;
        Ok(msg)
    }

    pub fn validate(&self) -> Result<(), String> {
        if let ClientMessage::Command { pos, quat, t_client_ms, .. } = self {
            if !pos.iter().chain(quat).all(|v| v.is_finite()) || !t_client_ms.is_finite() {
                return Err("non-finite command".into());
            }
            let n = quat.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !(0.5..=1.5).contains(&n) {
                return Err(format!("quaternion norm {n} is not close to 1"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WirePose {
    pub pos: [f64; 3],
    /// `[w, x, y, z]`
    pub quat: [f64; 4],
}

impl From<Pose<f64>> for WirePose {
    fn from(p: Pose<f64>) -> Self {
        Self {
            pos: p.position.to_array(),
            quat: p.orientation.coords(),
        }
    }
}

impl WirePose {
    pub fn to_pose(&self) -> Option<Pose<f64>> {
        let [w, x, y, z] = self.quat;
        let q = UnitQuaternion::new_normalize(w, x, y, z).ok()?;
        Some(Pose::new(Vec3::from_array(self.pos), q))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmState {
    pub arm: Arm,
    /// Latest operator pose.
    pub cmd_pose: WirePose,
    /// Filtered pose sent to the robot.
    pub robot_pose: WirePose,
    /// Autonomous grasp target, when one is tracked.
    pub ghost_pose: Option<WirePose>,
    pub engaged: bool,
    pub h: Option<f64>,
    pub gripper_closed: bool,
    /// Held rope particle.
    pub grasped: Option<usize>,
}

/// Progress of the current session since the last reset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LiveMetrics {
    pub time: f64,
    pub success: bool,
    pub completion_time: Option<f64>,
    /// Frozen at the first grasp; until then measured on the current rope.
    pub pre_grasp_displacement: f64,
    pub min_barrier_value: Option<f64>,
    pub grasp_achieved: bool,
    pub command_path_length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateUpdate {
    pub session: String,
    pub tick: u64,
    pub mode: Mode,
    pub arms: Vec<ArmState>,
    pub rope: Vec<[f64; 3]>,
    pub dlo_fine: Vec<[f64; 3]>,
    pub barrier: CbfParams<f64>,
    pub metrics: LiveMetrics,
    /// Set after a simulation or filter failure forced a reset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fault: Option<String>,
}

/// Server to client.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    State(Box<StateUpdate>),
    /// `tick` is the next control tick at the time the message was taken in.
    Ack {
        session: String,
        seq: Option<u64>,
        tick: u64,
    },
    Error {
        session: String,
        seq: Option<u64>,
        message: String,
    },
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn client_schema_field_names() {
        let m = ClientMessage::parse(r#"{"type":"command","arm":"left","pos":[0.1,0.2,0.3],"quat":[1,0,0,0],"t_client_ms":12.5,"seq":4}"#).unwrap();
        assert_eq!(
            m,
            ClientMessage::Command {
                arm: Arm::Left,
                pos: [0.1, 0.2, 0.3],
                quat: [1.0, 0.0, 0.0, 0.0],
                t_client_ms: 12.5,
                seq: Some(4),
                session: None,
            }
        );
        assert!(matches!(
            ClientMessage::parse(r#"{"type":"gripper","arm":"right","closed":true}"#),
            Ok(ClientMessage::Gripper { arm: Arm::Right, closed: true, .. })
        ));
        assert!(matches!(
            ClientMessage::parse(r#"{"type":"mode","mode":"SA_LB"}"#),
            Ok(ClientMessage::Mode { mode: Mode::LinearBlend, .. })
        ));
        assert!(matches!(ClientMessage::parse(r#"{"type":"reset","seq":9}"#), Ok(ClientMessage::Reset { seq: Some(9), .. })));
    }

    #[test]
    fn malformed_reports_seq() {
        for (text, seq) in [
            (r#"{"type":"command","arm":"left","pos":[0,0],"quat":[1,0,0,0],"t_client_ms":0,"seq":3}"#, Some(3)),
            (r#"{"type":"command","arm":"up","pos":[0,0,0],"quat":[1,0,0,0],"t_client_ms":0}"#, None),
            (r#"{"type":"command","arm":"left","pos":[0,0,0],"quat":[0,0,0,0],"t_client_ms":0,"seq":1}"#, Some(1)),
            (r#"{"type":"mode","mode":"AUTO","seq":2}"#, Some(2)),
            (r#"{"type":"teleport","seq":5}"#, Some(5)),
            ("not json", None),
        ] {
            let err = ClientMessage::parse(text).unwrap_err();
            assert_eq!(err.0, seq, "{text}");
        }
    }

    #[test]
    fn state_tag_and_nullable_fields() {
        let pose = WirePose {
            pos: [0.0; 3],
            quat: [1.0, 0.0, 0.0, 0.0],
        };
        let msg = ServerMessage::State(Box::new(StateUpdate {
            session: "s".into(),
            tick: 3,
            mode: Mode::Passthrough,
            arms: vec![ArmState {
                arm: Arm::Right,
                cmd_pose: pose,
                robot_pose: pose,
                ghost_pose: None,
                engaged: false,
                h: None,
                gripper_closed: false,
                grasped: None,
            }],
            rope: vec![[0.0, 0.0, 0.006]],
            dlo_fine: vec![],
            barrier: CbfParams::default(),
            metrics: LiveMetrics {
                time: 0.0,
                success: false,
                completion_time: None,
                pre_grasp_displacement: 0.0,
                min_barrier_value: None,
                grasp_achieved: false,
                command_path_length: 0.0,
            },
            fault: None,
        }));
        let v: serde_json::Value = serde_json::to_value(&msg).unwrap();
        assert_eq!(v["type"], "state");
        assert_eq!(v["mode"], "PT");
        assert!(v["arms"][0]["h"].is_null() && v["arms"][0]["ghost_pose"].is_null());
        assert_eq!(v["arms"][0]["arm"], "right");
        assert!(v.get("fault").is_none());
        let back: ServerMessage = serde_json::from_value(v).unwrap();
        assert_eq!(back, msg);
    }
}
