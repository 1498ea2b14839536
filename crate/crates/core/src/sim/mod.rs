//! Position-based rope on a table with kinematic capsule grippers, plus a
//! ray-cast depth/mask renderer.

mod presets;
mod render;

pub use presets::{hairpin, overhand_knot_projection, resample_polyline, straight, RopeKind, RopeProperties};
pub use render::{look_at, render_views, Camera};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{slerp, Pose, Vec3};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("simulation diverged (non-finite particle state)")]
    Diverged,
    #[error("invalid simulation config: {0}")]
    InvalidConfig(&'static str),
    #[error("rope needs at least one particle")]
    EmptyRope,
    #[error("particle count mismatch: {0} vs {1}")]
    CountMismatch(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    /// Magnitude of gravity along −z.
    pub gravity: f64,
    pub table_z: f64,
    pub substeps: usize,
    pub constraint_iters: usize,
    pub friction_coeff: f64,
    pub dt: f64,
    /// Finger capsule radius.
    pub gripper_radius: f64,
    /// Finger capsule length along the gripper's local +z.
    pub gripper_height: f64,
    /// Extra reach beyond the rope radius for a closing jaw to attach.
    pub grasp_margin: f64,
    /// Distance from the commanded end-effector frame down its local −z to
    /// the fingertip.
    pub tool_offset: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            gravity: 9.81,
            table_z: 0.0,
            substeps: 10,
            constraint_iters: 8,
            friction_coeff: 0.5,
            dt: 0.01,
            gripper_radius: 0.003,
            gripper_height: 0.08,
            grasp_margin: 0.006,
            tool_offset: 0.084,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.substeps == 0 || self.constraint_iters == 0 {
            return Err(SimError::InvalidConfig("substeps and constraint_iters must be positive"));
        }
        if !(self.dt > 0.0) {
            return Err(SimError::InvalidConfig("dt must be positive"));
        }
        if !(0.0..=1.0).contains(&self.friction_coeff) {
            return Err(SimError::InvalidConfig("friction_coeff must lie in [0, 1]"));
        }
        if !(self.gravity >= 0.0 && self.gripper_radius >= 0.0 && self.gripper_height >= 0.0 && self.grasp_margin >= 0.0 && self.tool_offset >= 0.0) {
            return Err(SimError::InvalidConfig("negative physical constant"));
        }
        Ok(())
    }
}

/// Kinematic gripper input for one tick.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gripper {
    pub pose: Pose<f64>,
    pub jaw_open: bool,
}

/// A particle welded to a gripper at a fixed offset in the gripper frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grasp {
    pub index: usize,
    pub local: Vec3<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RopeState {
    pub particles: Vec<Vec3<f64>>,
    pub velocities: Vec<Vec3<f64>>,
    pub rest_length: f64,
    pub radius: f64,
    pub particle_mass: f64,
    /// One slot per gripper seen so far.
    pub grasps: Vec<Option<Grasp>>,
    /// Gripper poses at the end of the previous step.
    pub gripper_poses: Vec<Option<Pose<f64>>>,
}

impl RopeState {
    /// Rope at rest through `points`. The rest length is the mean spacing.
    pub fn new(points: Vec<Vec3<f64>>, radius: f64, linear_density: f64) -> Result<Self, SimError> {
        if points.is_empty() {
            return Err(SimError::EmptyRope);
        }
        let n = points.len();
        let rest_length = if n > 1 {
            points.windows(2).map(|w| w[0].distance(w[1])).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        Ok(Self {
            velocities: vec![Vec3::zeros(); n],
            particles: points,
            rest_length,
            radius,
            particle_mass: linear_density * rest_length.max(f64::EPSILON),
            grasps: Vec::new(),
            gripper_poses: Vec::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn grasped_index(&self, gripper: usize) -> Option<usize> {
        self.grasps.get(gripper).copied().flatten().map(|g| g.index)
    }

    pub fn is_grasped(&self, i: usize) -> bool {
        self.grasps.iter().flatten().any(|g| g.index == i)
    }

    /// Kinetic plus gravitational potential energy relative to the table.
    pub fn energy(&self, cfg: &SimConfig) -> f64 {
        self.particles
            .iter()
            .zip(&self.velocities)
            .map(|(p, v)| self.particle_mass * (0.5 * v.norm_squared() + cfg.gravity * (p.z - cfg.table_z)))
            .sum()
    }

    pub fn segment_strain(&self) -> f64 {
        if self.rest_length <= 0.0 {
            return 0.0;
        }
        self.particles
            .windows(2)
            .map(|w| (w[0].distance(w[1]) / self.rest_length - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// Closest points between segments `[p1, q1]` and `[p2, q2]`; returns the
/// parameter on the second segment and both points.
fn closest_between_segments(p1: Vec3<f64>, q1: Vec3<f64>, p2: Vec3<f64>, q2: Vec3<f64>) -> (f64, Vec3<f64>, Vec3<f64>) {
    let d1 = q1 - p1;
    let d2 = q2 - p2;
    let r = p1 - p2;
    let a = d1.norm_squared();
    let e = d2.norm_squared();
    let f = d2.dot(r);
    let (s, t);
    if a <= f64::EPSILON && e <= f64::EPSILON {
        return (0.0, p1, p2);
    }
    if a <= f64::EPSILON {
        s = 0.0;
        t = (f / e).clamp(0.0, 1.0);
    } else {
        let c = d1.dot(r);
        if e <= f64::EPSILON {
            t = 0.0;
            s = (-c / a).clamp(0.0, 1.0);
        } else {
            let b = d1.dot(d2);
            let den = a * e - b * b;
            let s0 = if den > 0.0 { ((b * f - c * e) / den).clamp(0.0, 1.0) } else { 0.0 };
            let t0 = (b * s0 + f) / e;
            if t0 < 0.0 {
                t = 0.0;
                s = (-c / a).clamp(0.0, 1.0);
            } else if t0 > 1.0 {
                t = 1.0;
                s = ((b - c) / a).clamp(0.0, 1.0);
            } else {
                t = t0;
                s = s0;
            }
        }
    }
    (t, p1 + d1 * s, p2 + d2 * t)
}

/// Fingertip position of an end-effector pose.
pub fn tool_point(pose: &Pose<f64>, cfg: &SimConfig) -> Vec3<f64> {
    pose.transform_point(Vec3::new(0.0, 0.0, -cfg.tool_offset))
}

/// Finger capsule axis: from the fingertip up along local +z.
pub fn gripper_axis(pose: &Pose<f64>, cfg: &SimConfig) -> (Vec3<f64>, Vec3<f64>) {
    (
        tool_point(pose, cfg),
        pose.transform_point(Vec3::new(0.0, 0.0, cfg.gripper_height - cfg.tool_offset)),
    )
}

fn interpolate_pose(a: &Pose<f64>, b: &Pose<f64>, t: f64) -> Pose<f64> {
    Pose::new(a.position.lerp(b.position, t), slerp(&a.orientation, &b.orientation, t))
}

/// Advances the rope by `cfg.dt`.
pub fn step(rope: &RopeState, grippers: &[Gripper], cfg: &SimConfig) -> Result<RopeState, SimError> {
    cfg.validate()?;
    let mut r = rope.clone();
    let n = r.len();
    if n == 0 {
        return Err(SimError::EmptyRope);
    }
    if r.grasps.len() < grippers.len() {
        r.grasps.resize(grippers.len(), None);
        r.gripper_poses.resize(grippers.len(), None);
    }

    // attachment changes happen at the start of the tick
    for (g, grip) in grippers.iter().enumerate() {
        if grip.jaw_open {
            r.grasps[g] = None;
        } else if r.grasps[g].is_none() {
            let reach = r.radius + cfg.grasp_margin;
            let tip = tool_point(&grip.pose, cfg);
            let mut best: Option<(f64, usize)> = None;
            for (i, p) in r.particles.iter().enumerate() {
                let d = p.distance(tip);
                if d <= reach && !r.is_grasped(i) && best.is_none_or(|(bd, _)| d < bd) {
                    best = Some((d, i));
                }
            }
            if let Some((_, i)) = best {
                r.grasps[g] = Some(Grasp {
                    index: i,
                    local: grip.pose.inverse_transform_point(r.particles[i]),
                });
            }
        }
    }

    let mut inv_mass = vec![1.0; n];
    for gr in r.grasps.iter().flatten() {
        inv_mass[gr.index] = 0.0;
    }

    let h = cfg.dt / cfg.substeps as f64;
    let contact_r = r.radius + cfg.gripper_radius;
    let floor = cfg.table_z + r.radius;
    let starts: Vec<Pose<f64>> = grippers
        .iter()
        .enumerate()
        .map(|(g, grip)| r.gripper_poses[g].unwrap_or(grip.pose))
        .collect();

    let mut pred = r.particles.clone();
    for sub in 1..=cfg.substeps {
        let frac = sub as f64 / cfg.substeps as f64;
        let poses: Vec<Pose<f64>> = starts
            .iter()
            .zip(grippers)
            .map(|(s, g)| interpolate_pose(s, &g.pose, frac))
            .collect();

        for i in 0..n {
            if inv_mass[i] > 0.0 {
                r.velocities[i].z -= cfg.gravity * h;
                pred[i] = r.particles[i] + r.velocities[i] * h;
            }
        }
        for (g, gr) in r.grasps.iter().enumerate() {
            if let Some(gr) = gr {
                pred[gr.index] = poses[g].transform_point(gr.local);
            }
        }

        for _ in 0..cfg.constraint_iters {
            for i in 0..n.saturating_sub(1) {
                let (wa, wb) = (inv_mass[i], inv_mass[i + 1]);
                let w = wa + wb;
                if w == 0.0 {
                    continue;
                }
                let d = pred[i + 1] - pred[i];
                let len = d.norm();
                if len == 0.0 {
                    continue;
                }
                let corr = d * ((len - r.rest_length) / (len * w));
                pred[i] += corr * wa;
                pred[i + 1] -= corr * wb;
            }
            for (g, pose) in poses.iter().enumerate() {
                let (a, b) = gripper_axis(pose, cfg);
                let held = r.grasps[g].map(|gr| gr.index);
                let segs = if n == 1 { 1 } else { n - 1 };
                for i in 0..segs {
                    let j = (i + 1).min(n - 1);
                    // segments touching the held particle would fight the weld
                    if held == Some(i) || held == Some(j) {
                        continue;
                    }
                    let (s, cg, cr) = closest_between_segments(a, b, pred[i], pred[j]);
                    let off = cr - cg;
                    let dist = off.norm();
                    if dist >= contact_r {
                        continue;
                    }
                    let dir = if dist > 0.0 { off / dist } else { Vec3::new(1.0, 0.0, 0.0) };
                    let (wi, wj) = if i == j { (inv_mass[i], 0.0) } else { ((1.0 - s) * inv_mass[i], s * inv_mass[j]) };
                    let denom = (1.0 - s) * wi + s * wj;
                    let denom = if i == j { wi } else { denom };
                    if denom <= 0.0 {
                        continue;
                    }
                    let lam = (contact_r - dist) / denom;
                    pred[i] += dir * (lam * wi);
                    if i != j {
                        pred[j] += dir * (lam * wj);
                    }
                }
            }
            for i in 0..n {
                if inv_mass[i] > 0.0 && pred[i].z < floor {
                    pred[i].z = floor;
                }
            }
        }

        for i in 0..n {
            if inv_mass[i] == 0.0 {
                continue;
            }
            if pred[i].z < floor {
                pred[i].z = floor;
            }
            if pred[i].z <= floor + 1e-9 {
                // tangential damping while resting on the table
                let keep = 1.0 - cfg.friction_coeff;
                pred[i].x = r.particles[i].x + (pred[i].x - r.particles[i].x) * keep;
                pred[i].y = r.particles[i].y + (pred[i].y - r.particles[i].y) * keep;
            }
        }

        for i in 0..n {
            r.velocities[i] = (pred[i] - r.particles[i]) / h;
            r.particles[i] = pred[i];
        }
    }

    for (g, grip) in grippers.iter().enumerate() {
        r.gripper_poses[g] = Some(grip.pose);
    }
    if r.particles.iter().chain(&r.velocities).any(|p| !p.is_finite()) {
        return Err(SimError::Diverged);
    }
    Ok(r)
}

/// Largest particle displacement between two snapshots, ignoring particles
/// that started within `radius` of `exclude_near`.
pub fn pre_grasp_displacement(
    before: &RopeState,
    after: &RopeState,
    exclude_near: Option<Vec3<f64>>,
    radius: f64,
) -> Result<f64, SimError> {
    if before.len() != after.len() {
        return Err(SimError::CountMismatch(before.len(), after.len()));
    }
    Ok(before
        .particles
        .iter()
        .zip(&after.particles)
        .filter(|(b, _)| exclude_near.is_none_or(|c| b.distance(c) > radius))
        .map(|(b, a)| a.distance(*b))
        .fold(0.0, f64::max))
}
