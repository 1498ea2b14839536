use crate::geom::{CameraIntrinsics, Vec3};
use crate::image::DepthMap;

use super::{SkeletonGraph, TraceError};

/// Lifts trace vertices to camera-frame points using the depth at the
/// nearest pixel. Vertices with zero depth are skipped; order is preserved.
pub fn back_project(trace: &SkeletonGraph, depth: &DepthMap, k: &CameraIntrinsics) -> Result<Vec<Vec3<f64>>, TraceError> {
    let mut out = Vec::with_capacity(trace.vertices.len());
    for &[u, v] in &trace.vertices {
        let (px, py) = (u.round(), v.round());
        if !(px >= 0.0 && py >= 0.0 && (px as usize) < depth.width && (py as usize) < depth.height) {
            return Err(TraceError::OutOfBounds(u, v));
        }
        let z = depth.get(px as usize, py as usize);
        if z > 0.0 {
            out.push(k.back_project(u, v, z));
        }
    }
    if out.is_empty() {
        return Err(TraceError::EmptyTrace);
    }
    Ok(out)
}
