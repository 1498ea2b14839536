use serde::{Deserialize, Serialize};

use crate::geom::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RopeKind {
    Blue,
    Green,
    Red,
    Orange,
}

/// Measured rope constants (SI units).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RopeProperties {
    pub length: f64,
    pub mass: f64,
    pub diameter: f64,
    pub linear_density: f64,
    pub flexural_rigidity: f64,
}

impl RopeKind {
    pub const ALL: [RopeKind; 4] = [RopeKind::Blue, RopeKind::Green, RopeKind::Red, RopeKind::Orange];

    pub fn properties(self) -> RopeProperties {
        let (length, mass, diameter, linear_density, flexural_rigidity) = match self {
            RopeKind::Blue => (3.91, 0.140, 0.0127, 0.0358, 0.0235),
            RopeKind::Green => (2.21, 0.085, 0.0121, 0.0385, 0.0170),
            RopeKind::Red => (3.76, 0.138, 0.0114, 0.0367, 0.0390),
            RopeKind::Orange => (2.81, 0.115, 0.0117, 0.0409, 0.0465),
        };
        RopeProperties {
            length,
            mass,
            diameter,
            linear_density,
            flexural_rigidity,
        }
    }

    pub fn radius(self) -> f64 {
        self.properties().diameter / 2.0
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RopeKind::Blue => "blue",
            RopeKind::Green => "green",
            RopeKind::Red => "red",
            RopeKind::Orange => "orange",
        }
    }
}

impl std::str::FromStr for RopeKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        RopeKind::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown rope {s:?}"))
    }
}

/// `n` particles from `start` along `dir` at `spacing`.
pub fn straight(n: usize, spacing: f64, start: Vec3<f64>, dir: Vec3<f64>) -> Vec<Vec3<f64>> {
    let d = dir.normalized().unwrap_or(Vec3::new(1.0, 0.0, 0.0));
    (0..n).map(|i| start + d * (spacing * i as f64)).collect()
}

/// Points at equal arc length `spacing` along a polyline, starting at its
/// first vertex. The remainder shorter than `spacing` is dropped.
pub fn resample_polyline(poly: &[Vec3<f64>], spacing: f64) -> Vec<Vec3<f64>> {
    let Some(&first) = poly.first() else {
        return Vec::new();
    };
    let mut out = vec![first];
    let mut cur = first;
    let mut k = 1;
    while k < poly.len() {
        let next = poly[k];
        let d = cur.distance(next);
        if d >= spacing {
            // exact chord distance from the last sample
            let a = next - cur;
            cur += a * (spacing / d);
            out.push(cur);
        } else {
            // find the crossing of the circle |x − cur| = spacing on the
            // following segments
            let mut j = k;
            let mut found = None;
            while j + 1 < poly.len() {
                let (p, q) = (poly[j], poly[j + 1]);
                if cur.distance(q) >= spacing {
                    let dq = q - p;
                    let f = p - cur;
                    let a = dq.norm_squared();
                    let b = 2.0 * f.dot(dq);
                    let c = f.norm_squared() - spacing * spacing;
                    let t = (-b + (b * b - 4.0 * a * c).max(0.0).sqrt()) / (2.0 * a);
                    found = Some((j + 1, p + dq * t.clamp(0.0, 1.0)));
                    break;
                }
                j += 1;
            }
            match found {
                Some((kk, p)) => {
                    cur = p;
                    k = kk;
                    out.push(cur);
                }
                None => break,
            }
        }
    }
    out
}

/// Two parallel legs along +x joined by a half circle, lying at height `z`.
/// The legs are `gap` apart in y; the lower leg starts at `origin`.
pub fn hairpin(leg: f64, gap: f64, origin: Vec3<f64>, spacing: f64) -> Vec<Vec3<f64>> {
    let rad = gap / 2.0;
    let mut poly = vec![origin, origin + Vec3::new(leg, 0.0, 0.0)];
    let c = origin + Vec3::new(leg, rad, 0.0);
    let m = 64;
    for i in 1..m {
        let th = -std::f64::consts::FRAC_PI_2 + std::f64::consts::PI * i as f64 / m as f64;
        poly.push(c + Vec3::new(rad * th.cos(), rad * th.sin(), 0.0));
    }
    poly.push(origin + Vec3::new(leg, gap, 0.0));
    poly.push(origin + Vec3::new(0.0, gap, 0.0));
    resample_polyline(&poly, spacing)
}

/// Flattened trefoil with straight tails: a hand-drawn planar stand-in for a
/// loose overhand knot. Self-crossings overlap in the plane.
pub fn overhand_knot_projection(scale: f64, tail: f64, center: Vec3<f64>, spacing: f64) -> Vec<Vec3<f64>> {
    let trefoil = |t: f64| {
        Vec3::new(
            scale * (t.sin() + 2.0 * (2.0 * t).sin()) / 3.0,
            scale * (t.cos() - 2.0 * (2.0 * t).cos()) / 3.0,
            0.0,
        ) + center
    };
    let (t0, t1) = (0.35, std::f64::consts::TAU - 0.35);
    let m = 400;
    let mut body: Vec<Vec3<f64>> = (0..=m).map(|i| trefoil(t0 + (t1 - t0) * i as f64 / m as f64)).collect();
    let dir0 = (body[0] - body[1]).normalized().unwrap_or(Vec3::new(-1.0, 0.0, 0.0));
    let dir1 = (body[m] - body[m - 1]).normalized().unwrap_or(Vec3::new(1.0, 0.0, 0.0));
    let mut poly = vec![body[0] + dir0 * tail];
    poly.append(&mut body);
    poly.push(poly[poly.len() - 1] + dir1 * tail);
    resample_polyline(&poly, spacing)
}
