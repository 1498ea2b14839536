use crate::fusion::DloState;
use crate::geom::Vec3;
use crate::scalar::Real;

use super::CbfParams;

/// Height-field barrier induced by the planar footprint of the rope
/// estimate: a floor at `z0` with a Gaussian funnel over each rope point.
#[derive(Debug, Clone, PartialEq)]
pub struct BarrierField<T> {
    pub rope_xy: Vec<[T; 2]>,
    pub params: CbfParams<T>,
}

impl<T: Real> BarrierField<T> {
    pub fn new(points: &[Vec3<T>], params: CbfParams<T>) -> Self {
        Self {
            rope_xy: points.iter().map(|p| [p.x, p.y]).collect(),
            params,
        }
    }

    pub fn from_state(state: &DloState<T>, params: CbfParams<T>) -> Self {
        Self::new(&state.coarse, params)
    }

    pub fn is_empty(&self) -> bool {
        self.rope_xy.is_empty()
    }

    /// Nearest rope point in the plane and its squared distance; the first
    /// index wins ties.
    pub fn nearest(&self, x: T, y: T) -> Option<(usize, T)> {
        let mut best: Option<(usize, T)> = None;
        for (i, p) in self.rope_xy.iter().enumerate() {
            let (dx, dy) = (x - p[0], y - p[1]);
            let d2 = dx * dx + dy * dy;
            if best.is_none_or(|(_, b)| d2 < b) {
                best = Some((i, d2));
            }
        }
        best
    }

    /// `z0 − ζ exp(−d²_min / 2σ²)`; `z0` for an empty field.
    pub fn height(&self, x: T, y: T) -> T {
        let p = &self.params;
        match self.nearest(x, y) {
            None => p.z0,
            Some((_, d2)) => p.z0 - p.zeta * (-d2 / (T::lit(2.0) * p.sigma * p.sigma)).exp(),
        }
    }

    /// Barrier value `z − z_b(x, y) − ε`.
    pub fn value(&self, pos: Vec3<T>) -> T {
        pos.z - self.height(pos.x, pos.y) - self.params.eps
    }

    /// Barrier value and its gradient, differentiating the nearest point's
    /// Gaussian only.
    pub fn value_and_grad(&self, pos: Vec3<T>) -> (T, Vec3<T>) {
        let p = &self.params;
        match self.nearest(pos.x, pos.y) {
            None => (pos.z - p.z0 - p.eps, Vec3::new(T::zero(), T::zero(), T::one())),
            Some((i, d2)) => {
                let s2 = p.sigma * p.sigma;
                let e = (-d2 / (T::lit(2.0) * s2)).exp();
                let zb = p.z0 - p.zeta * e;
                let [px, py] = self.rope_xy[i];
                // ∂z_b/∂x = ζ E (x − px) / σ², and h = z − z_b − ε
                let gx = -p.zeta * e * (pos.x - px) / s2;
                let gy = -p.zeta * e * (pos.y - py) / s2;
                (pos.z - zb - p.eps, Vec3::new(gx, gy, T::one()))
            }
        }
    }
}

/// Raises `pos` vertically onto the surface when it lies below it. Since
/// `h` has unit slope in z this lands exactly on `h = 0` up to rounding.
/// Returns the corrected position and the applied lift.
pub fn lift_to_barrier<T: Real>(field: &BarrierField<T>, pos: Vec3<T>) -> (Vec3<T>, T) {
    let h = field.value(pos);
    if h >= T::zero() {
        return (pos, T::zero());
    }
    let mut out = Vec3::new(pos.x, pos.y, pos.z - h);
    // one ulp can be lost in z − z_b − ε
    while field.value(out) < T::zero() {
        out.z = out.z + out.z.abs().max(T::one()) * T::epsilon();
    }
    (out, out.z - pos.z)
}
