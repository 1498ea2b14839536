use std::collections::HashMap;

use crate::image::BinaryMask;

use super::TraceError;

/// Sparse boundary samples in pixel coordinates `[x, y]`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ContourSet {
    pub points: Vec<[f64; 2]>,
}

/// Greedy grid-hashed subsampling of the mask boundary.
///
/// Boundary pixels are visited in raster order; a pixel is kept when it is at
/// least `stride` away from every sample kept so far. Every boundary pixel
/// therefore lies within `stride` of some sample.
pub fn sample_contour(mask: &BinaryMask, stride: usize) -> Result<ContourSet, TraceError> {
    if mask.is_empty() {
        return Err(TraceError::EmptyMask);
    }
    let stride = stride.max(1);
    let s = stride as i64;
    let s2 = s * s;
    let mut grid: HashMap<(i64, i64), Vec<(i64, i64)>> = HashMap::new();
    let mut points = Vec::new();
    for y in 0..mask.height {
        for x in 0..mask.width {
            if !mask.is_boundary(x, y) {
                continue;
            }
            let (xi, yi) = (x as i64, y as i64);
            let (cx, cy) = (xi.div_euclid(s), yi.div_euclid(s));
            let mut ok = true;
            'scan: for gy in cy - 1..=cy + 1 {
                for gx in cx - 1..=cx + 1 {
                    if let Some(cell) = grid.get(&(gx, gy)) {
                        for &(px, py) in cell {
                            if (px - xi).pow(2) + (py - yi).pow(2) < s2 {
                                ok = false;
                                break 'scan;
                            }
                        }
                    }
                }
            }
            if ok {
                grid.entry((cx, cy)).or_default().push((xi, yi));
                points.push([x as f64, y as f64]);
            }
        }
    }
    Ok(ContourSet { points })
}
