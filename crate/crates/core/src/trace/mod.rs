//! Per-camera DLO trace extraction: mask refinement, contour sampling,
//! Voronoi skeleton, endpoint path selection and back-projection.

mod backproject;
mod contour;
pub mod delaunay;
mod extract;
mod otsu;
mod skeleton;

use thiserror::Error;

use crate::geom::{CameraIntrinsics, Vec3};
use crate::image::{BinaryMask, DepthMap, ImageError};

pub use backproject::back_project;
pub use contour::{sample_contour, ContourSet};
pub use extract::{extract_trace, trim_end_spurs};
pub use otsu::{otsu_mask, otsu_threshold, refine_mask};
pub use skeleton::{voronoi_skeleton, SkeletonGraph};

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("mask has no true pixels")]
    EmptyMask,
    #[error("contour is degenerate: {0}")]
    DegenerateContour(&'static str),
    #[error("skeleton graph violates precondition: {0}")]
    InvalidGraph(&'static str),
    #[error("no trace vertex has valid depth")]
    EmptyTrace,
    #[error("trace vertex ({0}, {1}) outside image")]
    OutOfBounds(f64, f64),
    #[error(transparent)]
    Image(#[from] ImageError),
}

/// Slack for the end-spur disk containment test; one pixel absorbs the
/// rasterization of the outline.
pub const SPUR_TOLERANCE_PX: f64 = 1.0;

/// Outputs of the full per-frame pipeline.
#[derive(Debug, Clone)]
pub struct FrameTrace {
    pub contour: ContourSet,
    pub trace: SkeletonGraph,
    /// Camera-frame points along the trace, in path order.
    pub points: Vec<Vec3<f64>>,
}

/// Runs contour sampling, skeletonization, path extraction and
/// back-projection on one refined mask.
pub fn trace_frame(
    mask: &BinaryMask,
    depth: &DepthMap,
    k: &CameraIntrinsics,
    stride: usize,
) -> Result<FrameTrace, TraceError> {
    if mask.width != depth.width || mask.height != depth.height {
        return Err(ImageError::DimensionMismatch(mask.width, mask.height, depth.width, depth.height).into());
    }
    let contour = sample_contour(mask, stride)?;
    let skel = voronoi_skeleton(&contour, mask)?;
    if skel.vertices.len() < 2 {
        return Err(TraceError::DegenerateContour("skeleton has fewer than two interior vertices"));
    }
    let trace = trim_end_spurs(&extract_trace(&skel)?, &contour.points, SPUR_TOLERANCE_PX);
    let points = back_project(&trace, depth, k)?;
    Ok(FrameTrace {
        contour,
        trace,
        points,
    })
}
