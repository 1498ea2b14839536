use serde::{Deserialize, Serialize};

use crate::geom::Vec3;
use crate::scalar::Real;

use super::CbfParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QpStatus {
    /// `v_des` already satisfied both constraints.
    Inactive,
    /// Halfspace constraint active at the optimum.
    Active,
    /// Box and halfspace do not intersect; the box point maximizing `aᵀv`.
    BestEffort,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QpSolution<T> {
    pub v: Vec3<T>,
    pub status: QpStatus,
}

#[inline]
fn clip<T: Real>(v: Vec3<T>, m: T) -> Vec3<T> {
    v.map(|c| c.max(-m).min(m))
}

/// `argmin ‖v − v_des‖²  s.t.  aᵀv ≥ b,  ‖v‖∞ ≤ v_max`.
///
/// The KKT conditions give `v(λ) = clip(v_des + λa)` with `λ ≥ 0`.
/// `φ(λ) = aᵀv(λ)` is nondecreasing and piecewise linear between the points
/// where a coordinate enters or leaves the box, so the multiplier is found
/// by walking those breakpoints in order.
pub fn box_halfspace_qp<T: Real>(v_des: Vec3<T>, a: Vec3<T>, b: T, v_max: T) -> QpSolution<T> {
    let v0 = clip(v_des, v_max);
    if a.dot(v0) >= b {
        return QpSolution {
            v: v0,
            status: QpStatus::Inactive,
        };
    }
    if v_max * a.norm_l1() < b {
        return QpSolution {
            v: a.map(|c| {
                if c > T::zero() {
                    v_max
                } else if c < T::zero() {
                    -v_max
                } else {
                    T::zero()
                }
            }),
            status: QpStatus::BestEffort,
        };
    }

    let at = |lam: T| clip(v_des + a * lam, v_max);
    let phi = |lam: T| a.dot(at(lam));

    let mut bps: Vec<T> = Vec::with_capacity(6);
    for (ai, di) in a.to_array().into_iter().zip(v_des.to_array()) {
        if ai != T::zero() {
            for edge in [-v_max, v_max] {
                let l = (edge - di) / ai;
                if l > T::zero() {
                    bps.push(l);
                }
            }
        }
    }
    bps.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));

    let (mut lo, mut f_lo) = (T::zero(), phi(T::zero()));
    let mut lam = *bps.last().unwrap_or(&T::zero());
    for &bp in &bps {
        let f_bp = phi(bp);
        if f_bp >= b {
            lam = if f_bp > f_lo {
                lo + (b - f_lo) * (bp - lo) / (f_bp - f_lo)
            } else {
                bp
            };
            break;
        }
        lo = bp;
        f_lo = f_bp;
    }
    // absorb rounding in the interpolation so the constraint holds exactly
    let step = T::epsilon() * T::lit(4.0);
    for _ in 0..200 {
        if phi(lam) >= b {
            break;
        }
        lam = lam + lam.abs() * step + T::min_positive_value();
    }
    QpSolution {
        v: at(lam),
        status: QpStatus::Active,
    }
}

/// The CBF safety filter: `aᵀv + κ(h) ≥ 0` with `a = ∇h`.
pub fn cbf_qp<T: Real>(v_des: Vec3<T>, h: T, grad: Vec3<T>, params: &CbfParams<T>) -> QpSolution<T> {
    box_halfspace_qp(v_des, grad, -params.kappa(h), params.v_max)
}
