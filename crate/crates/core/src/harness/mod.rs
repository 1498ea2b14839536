//! Closed-loop scenario runner: simulated rope, rendered views, trace
//! extraction, fusion, intent and the command filter, driven by scripted
//! operators.

mod log;
mod operator;
mod runner;
mod scenario;
mod suite;

use thiserror::Error;

use crate::assist::AssistError;
use crate::sim::SimError;

pub use log::{replay_log, LogRecord, ReplayReport, LOG_SCHEMA_VERSION};
pub use operator::{Operator, LIFT_HEIGHT, START_JITTER};
pub use runner::{run_scenario, scenario_operator, scene_cameras, Perception, RunMetrics, DISPLACEMENT_EXCLUSION, SUCCESS_LIFT};
pub use scenario::{Layout, Scenario, Script};
pub use suite::{run_suite, ModeSummary, SuiteRow, SuiteSummary, CSV_COLUMNS, SUMMARY_SCHEMA_VERSION};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("io: {0}")]
    Io(String),
    #[error("tick {tick}: {source}")]
    Sim { tick: u64, source: SimError },
    #[error("tick {tick}: {source}")]
    Assist { tick: u64, source: AssistError },
    #[error("log line {line}: {msg}")]
    Log { line: usize, msg: String },
}

impl From<std::io::Error> for HarnessError {
    fn from(e: std::io::Error) -> Self {
        HarnessError::Io(e.to_string())
    }
}
