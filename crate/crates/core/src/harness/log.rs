use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::assist::{filter_command, AssistParams, BarrierField, ControlState, FilterInput, StepInfo};
use crate::geom::{Pose, Vec3};
use crate::intent::GraspTarget;

use super::{HarnessError, RunMetrics, Scenario};

pub const LOG_SCHEMA_VERSION: u32 = 1;

/// One line of a run log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LogRecord {
    Header {
        schema_version: u32,
        scenario: Box<Scenario>,
        params: AssistParams<f64>,
        goal: usize,
    },
    /// A new fused rope estimate; the coarse points define the barrier for
    /// the ticks that follow.
    Perception {
        tick: u64,
        time: f64,
        coarse: Vec<Vec3<f64>>,
        fine_points: usize,
    },
    Tick {
        tick: u64,
        state_in: ControlState<f64>,
        input: FilterInput<f64>,
        target: Option<GraspTarget<f64>>,
        cmd: Pose<f64>,
        info: StepInfo<f64>,
    },
    Grasp {
        tick: u64,
        particle: usize,
    },
    Result {
        metrics: RunMetrics,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ReplayReport {
    pub ticks: usize,
    pub mismatches: usize,
    pub first_mismatch: Option<u64>,
}

fn pose_bits(p: &Pose<f64>) -> [u64; 7] {
    let [w, x, y, z] = p.orientation.coords();
    [p.position.x, p.position.y, p.position.z, w, x, y, z].map(f64::to_bits)
}

/// Feeds every logged tick back through the filter and compares the
/// commanded poses bit for bit.
pub fn replay_log(reader: impl BufRead) -> Result<ReplayReport, HarnessError> {
    let mut params: Option<AssistParams<f64>> = None;
    let mut field: Option<BarrierField<f64>> = None;
    let mut report = ReplayReport::default();
    for (no, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: LogRecord = serde_json::from_str(&line).map_err(|e| HarnessError::Log {
            line: no + 1,
            msg: e.to_string(),
        })?;
        let missing = |what: &str| HarnessError::Log {
            line: no + 1,
            msg: format!("{what} before header"),
        };
        match rec {
            LogRecord::Header { params: p, .. } => {
                params = Some(p);
                field = Some(BarrierField::new(&[], p.cbf));
            }
            LogRecord::Perception { coarse, .. } => {
                let p = params.ok_or_else(|| missing("perception"))?;
                field = Some(BarrierField::new(&coarse, p.cbf));
            }
            LogRecord::Tick {
                tick,
                state_in,
                input,
                target,
                cmd,
                ..
            } => {
                let p = params.ok_or_else(|| missing("tick"))?;
                let f = field.as_ref().ok_or_else(|| missing("tick"))?;
                let out = filter_command(&input, f, target.as_ref(), &state_in, &p).map_err(|e| HarnessError::Assist { tick, source: e })?;
                report.ticks += 1;
                if pose_bits(&out.pose) != pose_bits(&cmd) {
                    report.mismatches += 1;
                    report.first_mismatch.get_or_insert(tick);
                }
            }
            LogRecord::Grasp { .. } | LogRecord::Result { .. } => {}
        }
    }
    Ok(report)
}
