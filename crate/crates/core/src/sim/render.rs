use serde::{Deserialize, Serialize};

use crate::geom::{CameraIntrinsics, RigidTransform, Vec3};
use crate::image::{BinaryMask, DepthMap};

use super::RopeState;

/// Intrinsics plus the camera-to-task transform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Camera {
    pub intrinsics: CameraIntrinsics,
    pub extrinsic: RigidTransform<f64>,
}

/// Camera-to-world transform of a camera at `eye` looking at `target`
/// (optical axis +z, image x right, image y down).
pub fn look_at(eye: Vec3<f64>, target: Vec3<f64>, up: Vec3<f64>) -> Option<RigidTransform<f64>> {
    let z = (target - eye).normalized()?;
    let x = z.cross(up).normalized()?;
    let y = z.cross(x);
    let rot = [[x.x, y.x, z.x], [x.y, y.y, z.y], [x.z, y.z, z.z]];
    RigidTransform::new(rot, eye).ok()
}

/// Ray parameter of the first hit of `o + t·d` (unit `d`) with a sphere.
fn ray_sphere(d: Vec3<f64>, c: Vec3<f64>, r: f64) -> Option<f64> {
    let b = d.dot(c);
    let h = b * b - (c.norm_squared() - r * r);
    if h < 0.0 {
        return None;
    }
    let t = b - h.sqrt();
    (t > 0.0).then_some(t)
}

/// First hit of a ray from the origin with the capsule `[a, b]` of radius `r`.
fn ray_capsule(d: Vec3<f64>, a: Vec3<f64>, b: Vec3<f64>, r: f64) -> Option<f64> {
    let mut best = ray_sphere(d, a, r);
    if let Some(t) = ray_sphere(d, b, r) {
        best = Some(best.map_or(t, |s: f64| s.min(t)));
    }
    let ba = b - a;
    let oa = -a;
    let baba = ba.norm_squared();
    if baba > 0.0 {
        let bard = ba.dot(d);
        let baoa = ba.dot(oa);
        let k2 = baba - bard * bard;
        let k1 = baba * d.dot(oa) - baoa * bard;
        let k0 = baba * oa.norm_squared() - baoa * baoa - r * r * baba;
        let disc = k1 * k1 - k2 * k0;
        if k2 > 1e-12 * baba && disc >= 0.0 {
            let t = (-k1 - disc.sqrt()) / k2;
            let y = baoa + t * bard;
            if t > 0.0 && y > 0.0 && y < baba {
                best = Some(best.map_or(t, |s| s.min(t)));
            }
        }
    }
    best
}

fn render_one(rope: &RopeState, cam: &Camera) -> (BinaryMask, DepthMap) {
    let k = &cam.intrinsics;
    let (w, h) = (k.width as usize, k.height as usize);
    let mut mask = BinaryMask::filled(w, h, false);
    let mut depth = DepthMap::zeros(w, h);
    let mut zbuf = vec![f64::INFINITY; w * h];
    let to_cam = cam.extrinsic.inverse();
    let pts: Vec<Vec3<f64>> = rope.particles.iter().map(|p| to_cam.transform_point(*p)).collect();
    let r = rope.radius;
    let near = 1e-3;

    let segs: Vec<(usize, usize)> = if pts.len() == 1 { vec![(0, 0)] } else { (0..pts.len() - 1).map(|i| (i, i + 1)).collect() };
    for (i, j) in segs {
        let (a, b) = (pts[i], pts[j]);
        let zmin = a.z.min(b.z);
        if zmin - r < near {
            continue;
        }
        let (Some(pa), Some(pb)) = (k.project(a), k.project(b)) else {
            continue;
        };
        let pad = k.fx.max(k.fy) * r / (zmin - r) + 2.0;
        let u0 = (pa[0].min(pb[0]) - pad).floor().max(0.0) as usize;
        let v0 = (pa[1].min(pb[1]) - pad).floor().max(0.0) as usize;
        let u1 = ((pa[0].max(pb[0]) + pad).ceil().max(-1.0)).min(w as f64 - 1.0);
        let v1 = ((pa[1].max(pb[1]) + pad).ceil().max(-1.0)).min(h as f64 - 1.0);
        if u1 < 0.0 || v1 < 0.0 {
            continue;
        }
        for v in v0..=v1 as usize {
            for u in u0..=u1 as usize {
                let ray = Vec3::new((u as f64 - k.cx) / k.fx, (v as f64 - k.cy) / k.fy, 1.0);
                let n = ray.norm();
                let d = ray / n;
                if let Some(t) = ray_capsule(d, a, b, r) {
                    let z = t / n;
                    let idx = v * w + u;
                    if z < zbuf[idx] {
                        zbuf[idx] = z;
                    }
                }
            }
        }
    }
    for (idx, &z) in zbuf.iter().enumerate() {
        if z.is_finite() {
            mask.bits[idx] = true;
            // millimetre quantization, as stored on disk
            depth.depths[idx] = (z * 1000.0).round() / 1000.0;
        }
    }
    (mask, depth)
}

/// Rasterizes the rope as capsules into one mask and depth map per camera.
pub fn render_views(rope: &RopeState, cameras: &[Camera]) -> Vec<(BinaryMask, DepthMap)> {
    cameras.iter().map(|c| render_one(rope, c)).collect()
}
