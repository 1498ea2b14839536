//! `assistdlo`: scenario runs and suites, standalone trace extraction,
//! rope stiffness fitting and the live teleoperation service.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use assistdlo::elastica::{build_table, estimate_ei, ProjectionTable, RopeMeasurement, DEFAULT_K_MAX, DEFAULT_K_MIN, DEFAULT_TABLE_SIZE, GRAVITY};
use assistdlo::geom::CameraIntrinsics;
use assistdlo::harness::{replay_log, run_scenario, run_suite, Scenario};
use assistdlo::image::{BinaryMask, DepthMap};
use assistdlo::trace::trace_frame;
use assistdlo_service::{serve, ServiceConfig};
use clap::{Parser, Subcommand};
use serde_json::json;

#[derive(Parser)]
#[command(name = "assistdlo", version, about = "Assisted rope grasping: simulation harness, perception and teleoperation")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one scenario; writes `log.jsonl` and `metrics.json` under `--out`.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run every `*.toml` scenario in a directory in parallel.
    Suite {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Replay a run log through the command filter and compare poses.
    Replay {
        #[arg(long)]
        log: PathBuf,
    },
    /// Extract the rope trace from one mask and depth frame.
    Trace {
        #[arg(long)]
        mask: PathBuf,
        /// 16-bit PGM in millimeters.
        #[arg(long)]
        depth: PathBuf,
        /// JSON with fx, fy, cx, cy, width, height.
        #[arg(long)]
        intrinsics: PathBuf,
        #[arg(long, default_value_t = 2)]
        stride: usize,
    },
    #[command(subcommand)]
    Elastica(ElasticaCmd),
    /// Serve the live session over HTTP and WebSocket.
    Serve {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
    },
}

#[derive(Subcommand)]
enum ElasticaCmd {
    /// Estimate flexural rigidity from a cantilever measurement.
    Fit {
        /// Total rope length (m).
        #[arg(long)]
        length: f64,
        /// Rope mass (kg).
        #[arg(long)]
        mass: f64,
        /// Overhanging length (m).
        #[arg(long)]
        free_length: f64,
        /// Horizontal reach of the free tip (m).
        #[arg(long)]
        bproj: f64,
        #[arg(long)]
        diameter: Option<f64>,
        /// Precomputed table CSV; built on the fly otherwise.
        #[arg(long)]
        table: Option<PathBuf>,
    },
    /// Tabulate the normalized projection over log-spaced K.
    Table {
        #[arg(long)]
        kmin: f64,
        #[arg(long)]
        kmax: f64,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

fn print_json(v: &impl serde::Serialize) -> Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, v)?;
    writeln!(out)?;
    Ok(())
}

fn run(scenario: &Path, out: &Path) -> Result<()> {
    let sc = Scenario::load(scenario)?;
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let mut log = BufWriter::new(File::create(out.join("log.jsonl"))?);
    let metrics = run_scenario(&sc, Some(&mut log))?;
    log.flush()?;
    std::fs::write(out.join("metrics.json"), serde_json::to_string_pretty(&metrics)?)?;
    print_json(&metrics)
}

fn read_table(path: &Path) -> Result<ProjectionTable> {
    let mut entries = Vec::new();
    let mut r = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    for rec in r.deserialize() {
        let (k, p): (f64, f64) = rec?;
        entries.push((k, p));
    }
    if entries.len() < 2 {
        bail!("{}: table needs at least two rows", path.display());
    }
    if !entries.windows(2).all(|w| w[0].0 < w[1].0 && w[1].1 < w[0].1) {
        bail!("{}: K must increase and projection decrease row by row", path.display());
    }
    Ok(ProjectionTable { entries })
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    match cli.cmd {
        Cmd::Run { scenario, out } => run(&scenario, &out)?,
        Cmd::Suite { dir, out } => {
            let scenarios = Scenario::load_dir(&dir)?;
            let summary = run_suite(&scenarios, &out)?;
            print_json(&summary)?;
            if summary.errors > 0 {
                return Ok(ExitCode::from(2));
            }
        }
        Cmd::Replay { log } => {
            let file = File::open(&log).with_context(|| format!("opening {}", log.display()))?;
            let report = replay_log(BufReader::new(file))?;
            print_json(&json!({
                "ticks": report.ticks,
                "mismatches": report.mismatches,
                "first_mismatch": report.first_mismatch,
            }))?;
            if report.mismatches > 0 {
                return Ok(ExitCode::from(2));
            }
        }
        Cmd::Trace { mask, depth, intrinsics, stride } => {
            let mask = BinaryMask::read_pnm(&mask)?;
            let depth = DepthMap::read_pgm_mm(&depth)?;
            let k: CameraIntrinsics = serde_json::from_reader(BufReader::new(File::open(&intrinsics)?))
                .with_context(|| format!("parsing {}", intrinsics.display()))?;
            k.validate()?;
            let ft = trace_frame(&mask, &depth, &k, stride)?;
            print_json(&json!({
                "points": ft.points.iter().map(|p| p.to_array()).collect::<Vec<_>>(),
                "vertices": ft.trace.vertices,
                "edges": ft.trace.edges,
                "terminals": ft.trace.terminals(),
                "contour_samples": ft.contour.points.len(),
            }))?;
        }
        Cmd::Elastica(ElasticaCmd::Fit { length, mass, free_length, bproj, diameter, table }) => {
            let table = match table {
                Some(p) => read_table(&p)?,
                None => build_table(DEFAULT_K_MIN, DEFAULT_K_MAX, DEFAULT_TABLE_SIZE)?,
            };
            let meas = RopeMeasurement {
                total_length: length,
                mass,
                free_length,
                projection_distance: bproj,
                diameter,
            };
            print_json(&estimate_ei(&meas, &table, GRAVITY)?)?;
        }
        Cmd::Elastica(ElasticaCmd::Table { kmin, kmax, n, out }) => {
            build_table(kmin, kmax, n)?.write_csv(&out)?;
        }
        Cmd::Serve { scenario, addr } => {
            let scenario = Scenario::load(&scenario)?;
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(serve(ServiceConfig { addr, scenario }))?;
        }
    }
    Ok(ExitCode::SUCCESS)
}
