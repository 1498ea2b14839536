//! Heavy-elastica cantilever: shooting solver, log-spaced projection table
//! and flexural-rigidity inversion.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const GRAVITY: f64 = 9.81;
pub const DEFAULT_K_MIN: f64 = 1e-3;
pub const DEFAULT_K_MAX: f64 = 1e3;
pub const DEFAULT_TABLE_SIZE: usize = 128;
pub const DEFAULT_GRID: usize = 128;
pub const SHOOTING_TOL: f64 = 1e-8;
pub const MAX_SHOOTING_ITERS: usize = 200;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ElasticaError {
    #[error("shooting did not converge for K = {k} (residual {residual:e})")]
    Convergence { k: f64, residual: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("projection ratio {ratio} outside table range [{lo}, {hi}]; extend {extend}")]
    OutOfRange { ratio: f64, lo: f64, hi: f64, extend: String },
    #[error("table is not strictly decreasing near K = {0}")]
    NotMonotone(f64),
    #[error("table I/O: {0}")]
    Io(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElasticaSolution {
    pub k: f64,
    /// Tangent angle on `n_grid + 1` uniform samples of `[0, 1]`; nonpositive.
    pub theta: Vec<f64>,
    pub projection: f64,
    /// `θ'(0)`.
    pub slope0: f64,
    /// `|θ(0)|` at convergence; `θ'(1) = 0` holds by construction.
    pub residual: f64,
}

/// Integrates from the free end in `σ = 1 − s`: with `e = π/2 − φ` the
/// equation becomes `e'' = Kσ sin e`, `e(0) = u`, `e'(0) = 0`. RK4 over `n`
/// equal steps; returns `e` and `de/dσ` at every node.
fn integrate_from_tip(k: f64, u: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let h = 1.0 / n as f64;
    let f = |sig: f64, e: f64| k * sig * e.sin();
    let mut es = Vec::with_capacity(n + 1);
    let mut ds = Vec::with_capacity(n + 1);
    let (mut y, mut v) = (u, 0.0f64);
    es.push(y);
    ds.push(v);
    for i in 0..n {
        let sig = i as f64 * h;
        let k1y = v;
        let k1v = f(sig, y);
        let k2y = v + 0.5 * h * k1v;
        let k2v = f(sig + 0.5 * h, y + 0.5 * h * k1y);
        let k3y = v + 0.5 * h * k2v;
        let k3v = f(sig + 0.5 * h, y + 0.5 * h * k2y);
        let k4y = v + h * k3v;
        let k4v = f(sig + h, y + h * k3y);
        y += h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
        v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        es.push(y);
        ds.push(v);
    }
    (es, ds)
}

/// Composite Simpson over uniform samples on `[0, 1]` (even interval count).
fn simpson(f: &[f64]) -> f64 {
    let n = f.len() - 1;
    let h = 1.0 / n as f64;
    let mut s = f[0] + f[n];
    for (i, v) in f.iter().enumerate().take(n).skip(1) {
        s += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    s * h / 3.0
}

/// Steps per output interval so the fine grid resolves the `√K` length scale.
fn refinement(k: f64, n_grid: usize) -> usize {
    let want = (32.0 * k.sqrt()).max(256.0);
    ((want / n_grid as f64).ceil() as usize).max(1)
}

/// Solves `θ'' + K(1−s)cos θ = 0`, `θ(0) = 0`, `θ'(1) = 0`, bending down.
///
/// Shooting runs from the free end on the tip angle, parametrized by its
/// distance `u` from vertical. Integrating toward the clamp is stable, and
/// `u` keeps full relative precision when the tip hangs nearly vertical.
pub fn solve_elastica(k: f64, n_grid: usize) -> Result<ElasticaSolution, ElasticaError> {
    if !(k >= 0.0) || !k.is_finite() {
        return Err(ElasticaError::InvalidInput(format!("K must be finite and nonnegative, got {k}")));
    }
    if n_grid < 64 || !n_grid.is_multiple_of(2) {
        return Err(ElasticaError::InvalidInput(format!("n_grid must be even and at least 64, got {n_grid}")));
    }
    if k == 0.0 {
        return Ok(ElasticaSolution {
            k,
            theta: vec![0.0; n_grid + 1],
            projection: 1.0,
            slope0: 0.0,
            residual: 0.0,
        });
    }
    let half_pi = std::f64::consts::FRAC_PI_2;
    let sub = refinement(k, n_grid);
    let fine = n_grid * sub;
    // clamp angle error, increasing in u; trajectories that curl past
    // horizontal are all equally overshot
    let resid = |u: f64| {
        let es = integrate_from_tip(k, u, fine).0;
        if es.iter().any(|&e| e >= std::f64::consts::PI) {
            half_pi
        } else {
            es[fine] - half_pi
        }
    };

    let mut iters = 0;
    let (mut b, mut fb) = (half_pi, resid(half_pi));
    let (mut a, mut fa) = (half_pi / 2.0, resid(half_pi / 2.0));
    while fa > 0.0 {
        iters += 1;
        if iters > MAX_SHOOTING_ITERS || a < f64::MIN_POSITIVE {
            return Err(ElasticaError::Convergence { k, residual: fa });
        }
        (b, fb) = (a, fa);
        a *= 0.5;
        fa = resid(a);
    }
    if fb < 0.0 {
        return Err(ElasticaError::Convergence { k, residual: fb.abs() });
    }
    let mut best = if fa.abs() < fb.abs() { (a, fa) } else { (b, fb) };
    let mut side = 0i8;
    while best.1.abs() > SHOOTING_TOL * 1e-4 && iters < MAX_SHOOTING_ITERS {
        iters += 1;
        // Illinois false position
        let mut c = (a * fb - b * fa) / (fb - fa);
        if !(c > a && c < b) {
            c = 0.5 * (a + b);
        }
        let fc = resid(c);
        if fc.abs() < best.1.abs() {
            best = (c, fc);
        }
        if fc < 0.0 {
            a = c;
            fa = fc;
            if side == -1 {
                fb *= 0.5;
            }
            side = -1;
        } else {
            b = c;
            fb = fc;
            if side == 1 {
                fa *= 0.5;
            }
            side = 1;
        }
        if b - a <= 4.0 * f64::EPSILON * b {
            break;
        }
    }
    if best.1.abs() >= SHOOTING_TOL {
        return Err(ElasticaError::Convergence { k, residual: best.1.abs() });
    }

    let (es, ds) = integrate_from_tip(k, best.0, fine);
    // cos φ = sin e; nodes run from the tip to the clamp
    let sines: Vec<f64> = es.iter().map(|e| e.sin()).collect();
    let theta: Vec<f64> = es.iter().rev().step_by(sub).map(|e| e - half_pi).collect();
    Ok(ElasticaSolution {
        k,
        theta,
        projection: simpson(&sines),
        slope0: -ds[fine],
        residual: best.1.abs(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionTable {
    /// `(K, projection)` with K increasing.
    pub entries: Vec<(f64, f64)>,
}

impl ProjectionTable {
    pub fn k_range(&self) -> (f64, f64) {
        (self.entries[0].0, self.entries[self.entries.len() - 1].0)
    }

    pub fn to_csv_string(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["K", "projection"]).expect("in-memory write");
        for (k, p) in &self.entries {
            w.write_record([format!("{k:e}"), format!("{p:.15}")]).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), ElasticaError> {
        std::fs::write(path, self.to_csv_string()).map_err(|e| ElasticaError::Io(format!("{}: {e}", path.display())))
    }

    /// Inverse lookup: K at which the projection equals `ratio`, linear in
    /// `(ln K, projection)`.
    pub fn k_for_ratio(&self, ratio: f64) -> Result<f64, ElasticaError> {
        let e = &self.entries;
        let (hi, lo) = (e[0].1, e[e.len() - 1].1);
        if !(ratio <= hi) {
            return Err(ElasticaError::OutOfRange {
                ratio,
                lo,
                hi,
                extend: format!("K_min below {:e}", e[0].0),
            });
        }
        if !(ratio >= lo) {
            return Err(ElasticaError::OutOfRange {
                ratio,
                lo,
                hi,
                extend: format!("K_max above {:e}", e[e.len() - 1].0),
            });
        }
        // projections decrease, so search on the reversed order
        let i = e.partition_point(|&(_, p)| p > ratio).clamp(1, e.len() - 1);
        let (k0, p0) = e[i - 1];
        let (k1, p1) = e[i];
        let t = if p0 == p1 { 0.0 } else { (p0 - ratio) / (p0 - p1) };
        Ok((k0.ln() + t * (k1.ln() - k0.ln())).exp())
    }
}

/// `n` log-spaced K values in `[k_min, k_max]`, solved in parallel.
pub fn build_table(k_min: f64, k_max: f64, n: usize) -> Result<ProjectionTable, ElasticaError> {
    build_table_with_grid(k_min, k_max, n, DEFAULT_GRID)
}

pub fn build_table_with_grid(k_min: f64, k_max: f64, n: usize, n_grid: usize) -> Result<ProjectionTable, ElasticaError> {
    if !(k_min > 0.0 && k_min < k_max && k_max.is_finite()) {
        return Err(ElasticaError::InvalidInput("need 0 < K_min < K_max".into()));
    }
    if n < 2 {
        return Err(ElasticaError::InvalidInput("table needs at least two entries".into()));
    }
    let (l0, l1) = (k_min.ln(), k_max.ln());
    let ks: Vec<f64> = (0..n)
        .map(|i| match i {
            0 => k_min,
            _ if i == n - 1 => k_max,
            _ => (l0 + (l1 - l0) * i as f64 / (n - 1) as f64).exp(),
        })
        .collect();
    let entries = ks
        .par_iter()
        .map(|&k| solve_elastica(k, n_grid).map(|s| (k, s.projection)))
        .collect::<Result<Vec<_>, _>>()?;
    for w in entries.windows(2) {
        if !(w[1].1 < w[0].1) {
            return Err(ElasticaError::NotMonotone(w[1].0));
        }
    }
    Ok(ProjectionTable { entries })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RopeMeasurement {
    pub total_length: f64,
    pub mass: f64,
    pub free_length: f64,
    pub projection_distance: f64,
    pub diameter: Option<f64>,
}

impl RopeMeasurement {
    pub fn validate(&self) -> Result<(), ElasticaError> {
        let ok = self.total_length > 0.0
            && self.mass > 0.0
            && self.free_length > 0.0
            && self.free_length <= self.total_length
            && self.projection_distance > 0.0
            && self.projection_distance <= self.free_length;
        if !ok {
            return Err(ElasticaError::InvalidInput(
                "need L > 0, m > 0, 0 < L_free <= L and 0 < b_proj <= L_free".into(),
            ));
        }
        Ok(())
    }

    pub fn linear_density(&self) -> f64 {
        self.mass / self.total_length
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EiEstimate {
    #[serde(rename = "EI")]
    pub ei: f64,
    #[serde(rename = "K")]
    pub k: f64,
    pub lambda: f64,
}

/// `K = λ g L_free³ / EI`.
pub fn loading_parameter(lambda: f64, g: f64, free_length: f64, ei: f64) -> f64 {
    lambda * g * free_length.powi(3) / ei
}

pub fn estimate_ei(meas: &RopeMeasurement, table: &ProjectionTable, g: f64) -> Result<EiEstimate, ElasticaError> {
    meas.validate()?;
    let lambda = meas.linear_density();
    let k = table.k_for_ratio(meas.projection_distance / meas.free_length)?;
    Ok(EiEstimate {
        ei: lambda * g * meas.free_length.powi(3) / k,
        k,
        lambda,
    })
}
