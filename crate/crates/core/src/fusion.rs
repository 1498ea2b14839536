//! Multi-view point fusion with staleness timeout and dual-resolution voxel
//! downsampling.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{RigidTransform, Vec3};
use crate::scalar::Real;

pub const TASK_FRAME: &str = "task";
pub const DEFAULT_TIMEOUT: f64 = 1.0;
pub const DEFAULT_COARSE_VOXEL: f64 = 0.01;
pub const DEFAULT_FINE_VOXEL: f64 = 0.005;

#[derive(Debug, Error)]
pub enum FusionError {
    #[error("malformed state text at line {0}: {1}")]
    Parse(usize, String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct TimedPointCloud<T> {
    pub points: Vec<Vec3<T>>,
    pub frame_id: String,
    /// Seconds on a monotonic clock.
    pub timestamp: f64,
}

impl<T: Real> TimedPointCloud<T> {
    pub fn new(points: Vec<Vec3<T>>, frame_id: impl Into<String>, timestamp: f64) -> Self {
        Self {
            points,
            frame_id: frame_id.into(),
            timestamp,
        }
    }
}

/// Fused rope estimate at control and visualization resolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct DloState<T> {
    pub coarse: Vec<Vec3<T>>,
    pub fine: Vec<Vec3<T>>,
    pub timestamp: f64,
    pub coarse_voxel: T,
    pub fine_voxel: T,
}

impl<T: Real> DloState<T> {
    pub fn empty(timestamp: f64) -> Self {
        Self {
            coarse: Vec::new(),
            fine: Vec::new(),
            timestamp,
            coarse_voxel: T::lit(DEFAULT_COARSE_VOXEL),
            fine_voxel: T::lit(DEFAULT_FINE_VOXEL),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.coarse.is_empty()
    }

    /// Line-oriented form: a header with timestamp and resolutions, then one
    /// `x y z` line per point for each section.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "dlo_state 1").unwrap();
        writeln!(s, "timestamp {}", self.timestamp).unwrap();
        for (name, voxel, pts) in [("coarse", self.coarse_voxel, &self.coarse), ("fine", self.fine_voxel, &self.fine)] {
            writeln!(s, "{name} {} {}", voxel, pts.len()).unwrap();
            for p in pts {
                writeln!(s, "{} {} {}", p.x, p.y, p.z).unwrap();
            }
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self, FusionError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let mut next = |what: &str| lines.next().ok_or_else(|| FusionError::Parse(0, format!("missing {what}")));
        let bad = |i: usize, m: &str| FusionError::Parse(i + 1, m.to_string());

        let (i, l) = next("header")?;
        if l.trim() != "dlo_state 1" {
            return Err(bad(i, "expected `dlo_state 1`"));
        }
        let (i, l) = next("timestamp")?;
        let timestamp = l
            .strip_prefix("timestamp ")
            .and_then(|v| v.trim().parse().ok())
            .ok_or_else(|| bad(i, "expected `timestamp <t>`"))?;

        let mut section = |name: &str| -> Result<(T, Vec<Vec3<T>>), FusionError> {
            let (i, l) = next(name)?;
            let f: Vec<&str> = l.split_whitespace().collect();
            if f.len() != 3 || f[0] != name {
                return Err(bad(i, "bad section header"));
            }
            let voxel: f64 = f[1].parse().map_err(|_| bad(i, "bad voxel size"))?;
            let count: usize = f[2].parse().map_err(|_| bad(i, "bad count"))?;
            let mut pts = Vec::with_capacity(count);
            for _ in 0..count {
                let (i, l) = next("point")?;
                let v: Vec<f64> = l
                    .split_whitespace()
                    .map(|t| t.parse::<f64>())
                    .collect::<Result<_, _>>()
                    .map_err(|_| bad(i, "bad coordinate"))?;
                if v.len() != 3 || v.iter().any(|c| !c.is_finite()) {
                    return Err(bad(i, "expected three finite coordinates"));
                }
                pts.push(Vec3::new(T::lit(v[0]), T::lit(v[1]), T::lit(v[2])));
            }
            Ok((T::lit(voxel), pts))
        };
        let (coarse_voxel, coarse) = section("coarse")?;
        let (fine_voxel, fine) = section("fine")?;
        Ok(Self {
            coarse,
            fine,
            timestamp,
            coarse_voxel,
            fine_voxel,
        })
    }
}

/// Maps every point into the task frame.
pub fn to_task_frame<T: Real>(cloud: &TimedPointCloud<T>, extrinsic: &RigidTransform<T>) -> TimedPointCloud<T> {
    TimedPointCloud {
        points: cloud.points.iter().map(|p| extrinsic.transform_point(*p)).collect(),
        frame_id: TASK_FRAME.to_string(),
        timestamp: cloud.timestamp,
    }
}

/// Union of the clouds no older than `timeout` at time `now`.
pub fn fuse<T: Real>(
    left: Option<&TimedPointCloud<T>>,
    right: Option<&TimedPointCloud<T>>,
    now: f64,
    timeout: f64,
) -> Vec<Vec3<T>> {
    let mut out = Vec::new();
    for c in [left, right].into_iter().flatten() {
        if now - c.timestamp <= timeout {
            out.extend_from_slice(&c.points);
        }
    }
    out
}

/// Integer voxel index `floor(p / voxel)`.
#[inline]
pub fn voxel_key<T: Real>(p: Vec3<T>, voxel: T) -> (i64, i64, i64) {
    let k = |c: T| (c / voxel).floor().to_i64().unwrap_or(i64::MAX);
    (k(p.z), k(p.y), k(p.x))
}

/// One centroid per occupied voxel, ordered by ascending `(z, y, x)` key.
pub fn voxel_downsample<T: Real>(points: &[Vec3<T>], voxel: T) -> Vec<Vec3<T>> {
    let mut cells: BTreeMap<(i64, i64, i64), (Vec3<T>, usize)> = BTreeMap::new();
    for p in points {
        let e = cells.entry(voxel_key(*p, voxel)).or_insert((Vec3::zeros(), 0));
        e.0 += *p;
        e.1 += 1;
    }
    cells
        .into_values()
        .map(|(s, n)| s / T::from_usize(n).expect("count fits scalar"))
        .collect()
}

/// Fuses both views and downsamples at both resolutions.
pub fn build_state<T: Real>(
    left: Option<&TimedPointCloud<T>>,
    right: Option<&TimedPointCloud<T>>,
    now: f64,
    coarse_voxel: T,
    fine_voxel: T,
) -> DloState<T> {
    build_state_with_timeout(left, right, now, coarse_voxel, fine_voxel, DEFAULT_TIMEOUT)
}

pub fn build_state_with_timeout<T: Real>(
    left: Option<&TimedPointCloud<T>>,
    right: Option<&TimedPointCloud<T>>,
    now: f64,
    coarse_voxel: T,
    fine_voxel: T,
    timeout: f64,
) -> DloState<T> {
    let all = fuse(left, right, now, timeout);
    DloState {
        coarse: voxel_downsample(&all, coarse_voxel),
        fine: voxel_downsample(&all, fine_voxel),
        timestamp: now,
        coarse_voxel,
        fine_voxel,
    }
}
