//! Grasp-intent estimation: global L1 nearest rope point with
//! robot-proximity hysteresis, PCA tangent, and a top-down grasp pose.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{quat_from_yaw, Pose, Vec3};
use crate::kdtree::{nearest_scan, within_radius_scan, KdTree};
use crate::scalar::Real;

/// Clouds larger than this use a k-d tree for neighborhood queries.
pub const KDTREE_THRESHOLD: usize = 64;

#[derive(Debug, Error, PartialEq)]
pub enum IntentError {
    #[error("point cloud is empty")]
    NoCandidates,
    #[error("neighborhood is degenerate (coincident points)")]
    DegenerateNeighborhood,
    #[error("tangent is vertical; yaw undefined")]
    VerticalTangent,
    #[error("invalid intent parameters: {0}")]
    InvalidParams(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct IntentParams<T> {
    pub r_step: T,
    pub eps_robot: T,
    pub pca_k: usize,
}

impl<T: Real> Default for IntentParams<T> {
    fn default() -> Self {
        Self {
            r_step: T::lit(0.10),
            eps_robot: T::lit(0.05),
            pca_k: 8,
        }
    }
}

impl<T: Real> IntentParams<T> {
    pub fn validate(&self) -> Result<(), IntentError> {
        if !(self.r_step > T::zero()) {
            return Err(IntentError::InvalidParams("r_step must be positive"));
        }
        if !(self.eps_robot > T::zero()) {
            return Err(IntentError::InvalidParams("eps_robot must be positive"));
        }
        if self.pca_k < 2 {
            return Err(IntentError::InvalidParams("pca_k must be at least 2"));
        }
        Ok(())
    }
}

/// Per-arm memory of the last selected target.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct IntentState<T> {
    pub prev_target: Option<Vec3<T>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct GraspTarget<T> {
    pub pose: Pose<T>,
    pub tangent: Vec3<T>,
    pub source_point: Vec3<T>,
}

/// Index of the L1-nearest point among `candidates`, ties to the lowest.
fn l1_argmin<T: Real>(cloud: &[Vec3<T>], candidates: impl Iterator<Item = usize>, q: Vec3<T>) -> Option<usize> {
    let mut best: Option<(T, usize)> = None;
    for i in candidates {
        let d = (cloud[i] - q).norm_l1();
        if best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, i));
        }
    }
    best.map(|(_, i)| i)
}

/// Candidate set within `r` of `center`; tree-backed for large clouds.
pub fn step_neighborhood<T: Real>(cloud: &[Vec3<T>], center: Vec3<T>, r: T) -> Vec<usize> {
    if cloud.len() > KDTREE_THRESHOLD {
        KdTree::new(cloud).within_radius(center, r)
    } else {
        within_radius_scan(cloud, center, r)
    }
}

/// Index form of [`select_target`].
pub fn select_target_index<T: Real>(
    cloud: &[Vec3<T>],
    human_pos: Vec3<T>,
    robot_pos: Vec3<T>,
    state: &IntentState<T>,
    params: &IntentParams<T>,
) -> Result<usize, IntentError> {
    let global = l1_argmin(cloud, 0..cloud.len(), human_pos).ok_or(IntentError::NoCandidates)?;
    if let Some(prev) = state.prev_target {
        if (robot_pos - prev).norm() < params.eps_robot {
            let omega = step_neighborhood(cloud, prev, params.r_step);
            if let Some(i) = l1_argmin(cloud, omega.into_iter(), human_pos) {
                return Ok(i);
            }
        }
    }
    Ok(global)
}

/// Selects the intended rope point for one arm.
pub fn select_target<T: Real>(
    cloud: &[Vec3<T>],
    human_pos: Vec3<T>,
    robot_pos: Vec3<T>,
    state: &IntentState<T>,
    params: &IntentParams<T>,
) -> Result<(Vec3<T>, IntentState<T>), IntentError> {
    let i = select_target_index(cloud, human_pos, robot_pos, state, params)?;
    Ok((
        cloud[i],
        IntentState {
            prev_target: Some(cloud[i]),
        },
    ))
}

/// Eigen-decomposition of a symmetric 3×3 matrix by cyclic Jacobi
/// rotations. Returns eigenvalues and the matching eigenvectors as columns.
pub fn symmetric_eigen3<T: Real>(m: [[T; 3]; 3]) -> ([T; 3], [[T; 3]; 3]) {
    let mut a = m;
    let mut v = [[T::zero(); 3]; 3];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = T::one();
    }
    let two = T::lit(2.0);
    for _sweep in 0..64 {
        let off = a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2];
        let diag = a[0][0] * a[0][0] + a[1][1] * a[1][1] + a[2][2] * a[2][2];
        if off <= T::epsilon() * T::epsilon() * diag || off == T::zero() {
            break;
        }
        for (p, q) in [(0usize, 1usize), (0, 2), (1, 2)] {
            if a[p][q] == T::zero() {
                continue;
            }
            let theta = (a[q][q] - a[p][p]) / (two * a[p][q]);
            let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
            let c = T::one() / (t * t + T::one()).sqrt();
            let s = t * c;
            for k in 0..3 {
                let (akp, akq) = (a[k][p], a[k][q]);
                a[k][p] = c * akp - s * akq;
                a[k][q] = s * akp + c * akq;
            }
            for k in 0..3 {
                let (apk, aqk) = (a[p][k], a[q][k]);
                a[p][k] = c * apk - s * aqk;
                a[q][k] = s * apk + c * aqk;
            }
            for row in v.iter_mut() {
                let (vp, vq) = (row[p], row[q]);
                row[p] = c * vp - s * vq;
                row[q] = s * vp + c * vq;
            }
        }
    }
    ([a[0][0], a[1][1], a[2][2]], v)
}

/// Flips `t` so its largest-magnitude component is positive (first such
/// component on ties).
pub fn canonical_sign<T: Real>(t: Vec3<T>) -> Vec3<T> {
    let c = [t.x, t.y, t.z];
    let i = (0..3).fold(0, |b, i| if c[i].abs() > c[b].abs() { i } else { b });
    if c[i] < T::zero() {
        -t
    } else {
        t
    }
}

/// Principal direction of the `k` Euclidean-nearest neighbors of `point`.
pub fn estimate_tangent<T: Real>(point: Vec3<T>, cloud: &[Vec3<T>], k: usize) -> Result<Vec3<T>, IntentError> {
    if k < 2 {
        return Err(IntentError::InvalidParams("pca_k must be at least 2"));
    }
    if cloud.len() < 2 {
        return Err(IntentError::DegenerateNeighborhood);
    }
    let k = k.min(cloud.len());
    let nn = if cloud.len() > KDTREE_THRESHOLD {
        KdTree::new(cloud).nearest(point, k)
    } else {
        nearest_scan(cloud, point, k)
    };
    if nn.iter().all(|&i| cloud[i] == cloud[nn[0]]) {
        return Err(IntentError::DegenerateNeighborhood);
    }
    let n = T::from_usize(nn.len()).expect("count fits scalar");
    let mean = nn.iter().fold(Vec3::zeros(), |s, &i| s + cloud[i]) / n;
    let mut cov = [[T::zero(); 3]; 3];
    for &i in &nn {
        let d = (cloud[i] - mean).to_array();
        for r in 0..3 {
            for c in 0..3 {
                cov[r][c] += d[r] * d[c];
            }
        }
    }
    for row in cov.iter_mut() {
        for v in row.iter_mut() {
            *v /= n;
        }
    }
    let (vals, vecs) = symmetric_eigen3(cov);
    let top = (0..3).fold(0, |b, i| if vals[i] > vals[b] { i } else { b });
    if !(vals[top] > T::zero()) {
        return Err(IntentError::DegenerateNeighborhood);
    }
    let t = Vec3::new(vecs[0][top], vecs[1][top], vecs[2][top]);
    let t = t.normalized().ok_or(IntentError::DegenerateNeighborhood)?;
    Ok(canonical_sign(t))
}

/// Wraps an angle into `(−π/2, π/2]`.
pub fn wrap_half_turn<T: Real>(psi: T) -> T {
    let pi = T::from_f64(std::f64::consts::PI).expect("pi");
    let half = pi / T::lit(2.0);
    let mut y = psi;
    while y > half {
        y -= pi;
    }
    while y <= -half {
        y += pi;
    }
    y
}

/// Top-down grasp whose yaw follows the horizontal projection of `tangent`.
pub fn grasp_pose<T: Real>(point: Vec3<T>, tangent: Vec3<T>) -> Result<GraspTarget<T>, IntentError> {
    let h = tangent.x.hypot(tangent.y);
    if !(h > T::lit(1e-9) * tangent.norm()) || !h.is_finite() {
        return Err(IntentError::VerticalTangent);
    }
    let psi = wrap_half_turn(tangent.y.atan2(tangent.x));
    Ok(GraspTarget {
        pose: Pose::new(point, quat_from_yaw(psi)),
        tangent: tangent.normalized().ok_or(IntentError::VerticalTangent)?,
        source_point: point,
    })
}

/// Selection, tangent and grasp pose in one call. On a vertical tangent the
/// previous yaw is kept when supplied.
pub fn infer_target<T: Real>(
    cloud: &[Vec3<T>],
    human_pos: Vec3<T>,
    robot_pos: Vec3<T>,
    state: &IntentState<T>,
    params: &IntentParams<T>,
    prev: Option<&GraspTarget<T>>,
) -> Result<(GraspTarget<T>, IntentState<T>), IntentError> {
    let (p, next) = select_target(cloud, human_pos, robot_pos, state, params)?;
    let target = match estimate_tangent(p, cloud, params.pca_k).and_then(|t| grasp_pose(p, t)) {
        Ok(g) => g,
        Err(IntentError::VerticalTangent | IntentError::DegenerateNeighborhood) if prev.is_some() => {
            let prev = prev.expect("checked");
            GraspTarget {
                pose: Pose::new(p, prev.pose.orientation),
                tangent: prev.tangent,
                source_point: p,
            }
        }
        Err(e) => return Err(e),
    };
    Ok((target, next))
}
