use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{run_scenario, HarnessError, RunMetrics, Scenario};

pub const SUMMARY_SCHEMA_VERSION: u32 = 1;

pub const CSV_COLUMNS: [&str; 12] = [
    "scenario_id",
    "mode",
    "rope",
    "script",
    "seed",
    "success",
    "completion_time",
    "pre_grasp_displacement",
    "min_barrier_value",
    "grasp_achieved",
    "command_path_length",
    "error",
];

/// One CSV row. Metric cells are empty when the run failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteRow {
    pub scenario_id: String,
    pub mode: String,
    pub rope: String,
    pub script: String,
    pub seed: u64,
    pub success: Option<bool>,
    pub completion_time: Option<f64>,
    pub pre_grasp_displacement: Option<f64>,
    pub min_barrier_value: Option<f64>,
    pub grasp_achieved: Option<bool>,
    pub command_path_length: Option<f64>,
    pub error: String,
}

impl SuiteRow {
    fn new(sc: &Scenario, res: &Result<RunMetrics, String>) -> Self {
        let m = res.as_ref().ok();
        Self {
            scenario_id: sc.id.clone(),
            mode: sc.mode.as_str().to_string(),
            rope: sc.rope.as_str().to_string(),
            script: sc.script.name().to_string(),
            seed: sc.seed,
            success: m.map(|m| m.success),
            completion_time: m.map(|m| m.completion_time),
            pre_grasp_displacement: m.map(|m| m.pre_grasp_displacement),
            min_barrier_value: m.and_then(|m| m.min_barrier_value),
            grasp_achieved: m.map(|m| m.grasp_achieved),
            command_path_length: m.map(|m| m.command_path_length),
            error: res.as_ref().err().cloned().unwrap_or_default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ModeSummary {
    pub runs: usize,
    pub errors: usize,
    pub success_rate: f64,
    pub grasp_rate: f64,
    pub mean_completion_time: f64,
    pub mean_pre_grasp_displacement: f64,
    pub max_pre_grasp_displacement: f64,
    pub min_barrier_value: Option<f64>,
    pub mean_command_path_length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteSummary {
    pub schema_version: u32,
    pub runs: usize,
    pub errors: usize,
    /// Keyed by mode name.
    pub modes: BTreeMap<String, ModeSummary>,
}

fn summarize(rows: &[SuiteRow]) -> SuiteSummary {
    let mut modes: BTreeMap<String, Vec<&SuiteRow>> = BTreeMap::new();
    for r in rows {
        modes.entry(r.mode.clone()).or_default().push(r);
    }
    let modes = modes
        .into_iter()
        .map(|(mode, rs)| {
            let ok: Vec<&&SuiteRow> = rs.iter().filter(|r| r.error.is_empty()).collect();
            let k = ok.len().max(1) as f64;
            let mean = |f: fn(&SuiteRow) -> f64| ok.iter().map(|r| f(r)).sum::<f64>() / k;
            let summary = ModeSummary {
                runs: rs.len(),
                errors: rs.len() - ok.len(),
                success_rate: mean(|r| (r.success == Some(true)) as u8 as f64),
                grasp_rate: mean(|r| (r.grasp_achieved == Some(true)) as u8 as f64),
                mean_completion_time: mean(|r| r.completion_time.unwrap_or(0.0)),
                mean_pre_grasp_displacement: mean(|r| r.pre_grasp_displacement.unwrap_or(0.0)),
                max_pre_grasp_displacement: ok.iter().filter_map(|r| r.pre_grasp_displacement).fold(0.0, f64::max),
                min_barrier_value: ok.iter().filter_map(|r| r.min_barrier_value).reduce(f64::min),
                mean_command_path_length: mean(|r| r.command_path_length.unwrap_or(0.0)),
            };
            (mode, summary)
        })
        .collect();
    SuiteSummary {
        schema_version: SUMMARY_SCHEMA_VERSION,
        runs: rows.len(),
        errors: rows.iter().filter(|r| !r.error.is_empty()).count(),
        modes,
    }
}

/// Runs every scenario in parallel and writes `results.csv`,
/// `summary.json` and one log per scenario under `logs/`. A failing run is
/// recorded in its row and does not stop the suite.
pub fn run_suite(scenarios: &[Scenario], out_dir: &Path) -> Result<SuiteSummary, HarnessError> {
    if scenarios.is_empty() {
        return Err(HarnessError::InvalidScenario("empty scenario list".into()));
    }
    let mut seen = HashSet::new();
    for sc in scenarios {
        if !seen.insert(sc.id.as_str()) {
            return Err(HarnessError::InvalidScenario(format!("duplicate scenario id {:?}", sc.id)));
        }
    }
    let logs = out_dir.join("logs");
    std::fs::create_dir_all(&logs)?;

    let results: Vec<Result<RunMetrics, String>> = scenarios
        .par_iter()
        .map(|sc| {
            let file = File::create(logs.join(format!("{}.jsonl", sc.id))).map_err(|e| e.to_string())?;
            let mut w = BufWriter::new(file);
            run_scenario(sc, Some(&mut w)).map_err(|e| e.to_string())
        })
        .collect();
    let rows: Vec<SuiteRow> = scenarios.iter().zip(&results).map(|(s, r)| SuiteRow::new(s, r)).collect();

    let mut csv = csv::Writer::from_path(out_dir.join("results.csv")).map_err(|e| HarnessError::Io(e.to_string()))?;
    for r in &rows {
        csv.serialize(r).map_err(|e| HarnessError::Io(e.to_string()))?;
    }
    csv.flush()?;

    let summary = summarize(&rows);
    let json = serde_json::to_string_pretty(&summary).map_err(|e| HarnessError::Io(e.to_string()))?;
    std::fs::write(out_dir.join("summary.json"), json + "\n")?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(mode: &str, disp: Option<f64>, err: &str) -> SuiteRow {
        SuiteRow {
            scenario_id: "x".into(),
            mode: mode.into(),
            rope: "blue".into(),
            script: "breakaway".into(),
            seed: 0,
            success: disp.map(|d| d < 0.01),
            completion_time: disp.map(|_| 4.0),
            pre_grasp_displacement: disp,
            min_barrier_value: disp.map(|d| -d),
            grasp_achieved: disp.map(|_| true),
            command_path_length: disp.map(|_| 0.5),
            error: err.into(),
        }
    }

    #[test]
    fn summary_aggregates_per_mode() {
        let s = summarize(&[row("PT", Some(0.03), ""), row("PT", Some(0.001), ""), row("SA_CBF", None, "boom")]);
        assert_eq!((s.runs, s.errors), (3, 1));
        let pt = &s.modes["PT"];
        assert_eq!((pt.runs, pt.errors), (2, 0));
        assert!((pt.mean_pre_grasp_displacement - 0.0155).abs() < 1e-15);
        assert_eq!(pt.success_rate, 0.5);
        assert_eq!(pt.min_barrier_value, Some(-0.03));
        assert_eq!(s.modes["SA_CBF"].errors, 1);
    }

    #[test]
    fn csv_header_matches_documented_columns() {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.serialize(row("PT", Some(0.01), "")).unwrap();
        let text = String::from_utf8(w.into_inner().unwrap()).unwrap();
        assert_eq!(text.lines().next().unwrap(), CSV_COLUMNS.join(","));
    }
}
