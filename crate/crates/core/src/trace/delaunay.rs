//! Incremental Bowyer–Watson Delaunay triangulation on exact predicates.

use robust::{incircle, orient2d, Coord};

const NONE: usize = usize::MAX;

#[derive(Debug, Clone, Copy)]
struct Tri {
    v: [usize; 3],
    /// `n[i]` is the triangle across the edge opposite `v[i]`.
    n: [usize; 3],
    alive: bool,
}

/// Delaunay triangulation of a planar point set.
#[derive(Debug, Clone)]
pub struct Triangulation {
    /// Input sites after deterministic jitter, in input order.
    pub points: Vec<[f64; 2]>,
    /// Counter-clockwise triangles over `points`.
    pub triangles: Vec<[usize; 3]>,
    /// `neighbors[t][i]` is the triangle across the edge opposite vertex
    /// `i` of triangle `t`, if any.
    pub neighbors: Vec<[Option<usize>; 3]>,
}

/// Index-seeded offset in `[-1, 1]`.
fn jitter_unit(i: usize, salt: u64) -> f64 {
    let mut z = (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ salt;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^= z >> 31;
    (z >> 11) as f64 / (1u64 << 52) as f64 - 1.0
}

#[inline]
fn c(p: [f64; 2]) -> Coord<f64> {
    Coord { x: p[0], y: p[1] }
}

/// Triangulates `sites`, each perturbed by at most `jitter` per axis.
///
/// Returns `None` if fewer than three sites are given or all are collinear.
pub fn triangulate(sites: &[[f64; 2]], jitter: f64) -> Option<Triangulation> {
    let n = sites.len();
    if n < 3 {
        return None;
    }
    let s0 = sites[0];
    let sj = sites.iter().find(|p| **p != s0)?;
    if sites.iter().all(|&p| orient2d(c(s0), c(*sj), c(p)) == 0.0) {
        return None;
    }
    let points: Vec<[f64; 2]> = sites
        .iter()
        .enumerate()
        .map(|(i, p)| [p[0] + jitter * jitter_unit(i, 1), p[1] + jitter * jitter_unit(i, 2)])
        .collect();

    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in &points {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1.0);
    let mid = [(lo[0] + hi[0]) / 2.0, (lo[1] + hi[1]) / 2.0];
    let big = span * 1e4;
    let mut all = points.clone();
    all.push([mid[0] - big, mid[1] - big]);
    all.push([mid[0] + big, mid[1] - big]);
    all.push([mid[0], mid[1] + big]);

    let mut tris = vec![Tri {
        v: [n, n + 1, n + 2],
        n: [NONE; 3],
        alive: true,
    }];

    // spatially coherent insertion order keeps point location walks short
    let mut order: Vec<usize> = (0..n).collect();
    let cell = (span / (n as f64).sqrt()).max(1e-9);
    order.sort_by(|&a, &b| {
        let ka = snake_key(&all[a], &lo, cell);
        let kb = snake_key(&all[b], &lo, cell);
        ka.cmp(&kb).then(a.cmp(&b))
    });

    let mut last = 0usize;
    let mut cavity: Vec<usize> = Vec::new();
    let mut stack: Vec<usize> = Vec::new();
    let mut in_cavity: Vec<bool> = vec![false; 1];
    let mut boundary: Vec<(usize, usize, usize)> = Vec::new();
    for &pi in &order {
        let p = all[pi];
        let start = locate(&tris, &all, last, p);

        cavity.clear();
        stack.clear();
        stack.push(start);
        in_cavity.resize(tris.len(), false);
        in_cavity[start] = true;
        while let Some(t) = stack.pop() {
            cavity.push(t);
            for &nb in &tris[t].n {
                if nb != NONE && !in_cavity[nb] {
                    let v = tris[nb].v;
                    if incircle(c(all[v[0]]), c(all[v[1]]), c(all[v[2]]), c(p)) > 0.0 {
                        in_cavity[nb] = true;
                        stack.push(nb);
                    }
                }
            }
        }

        boundary.clear();
        for &t in &cavity {
            let tri = tris[t];
            for i in 0..3 {
                let nb = tri.n[i];
                if nb == NONE || !in_cavity[nb] {
                    boundary.push((tri.v[(i + 1) % 3], tri.v[(i + 2) % 3], nb));
                }
            }
        }
        for &t in &cavity {
            tris[t].alive = false;
            in_cavity[t] = false;
        }

        let first_new = tris.len();
        for &(a, b, outer) in &boundary {
            let id = tris.len();
            tris.push(Tri {
                v: [a, b, pi],
                n: [NONE, NONE, outer],
                alive: true,
            });
            if outer != NONE {
                let o = &mut tris[outer];
                for k in 0..3 {
                    let (oa, ob) = (o.v[(k + 1) % 3], o.v[(k + 2) % 3]);
                    if oa == b && ob == a {
                        o.n[k] = id;
                    }
                }
            }
        }
        // link the fan: across (b, p) is the new triangle starting at b
        let count = boundary.len();
        for i in 0..count {
            let ti = first_new + i;
            let (a, b, _) = boundary[i];
            for j in 0..count {
                if i == j {
                    continue;
                }
                let (aj, bj, _) = boundary[j];
                if aj == b {
                    tris[ti].n[0] = first_new + j;
                }
                if bj == a {
                    tris[ti].n[1] = first_new + j;
                }
            }
        }
        last = first_new;
    }

    let mut remap = vec![NONE; tris.len()];
    let mut triangles = Vec::new();
    for (i, t) in tris.iter().enumerate() {
        if t.alive && t.v.iter().all(|&v| v < n) {
            remap[i] = triangles.len();
            triangles.push(t.v);
        }
    }
    let neighbors = tris
        .iter()
        .enumerate()
        .filter(|(i, _)| remap[*i] != NONE)
        .map(|(_, t)| t.n.map(|x| if x != NONE && remap[x] != NONE { Some(remap[x]) } else { None }))
        .collect();
    Some(Triangulation {
        points,
        triangles,
        neighbors,
    })
}

fn snake_key(p: &[f64; 2], lo: &[f64; 2], cell: f64) -> (i64, i64) {
    let row = ((p[1] - lo[1]) / cell).floor() as i64;
    let col = ((p[0] - lo[0]) / cell).floor() as i64;
    (row, if row % 2 == 0 { col } else { -col })
}

fn locate(tris: &[Tri], all: &[[f64; 2]], start: usize, p: [f64; 2]) -> usize {
    let mut t = if tris[start].alive {
        start
    } else {
        tris.iter().rposition(|t| t.alive).expect("triangulation never empties")
    };
    let max_steps = 4 * tris.len() + 16;
    for _ in 0..max_steps {
        let tri = &tris[t];
        let mut moved = false;
        for i in 0..3 {
            let a = all[tri.v[(i + 1) % 3]];
            let b = all[tri.v[(i + 2) % 3]];
            if orient2d(c(a), c(b), c(p)) < 0.0 && tri.n[i] != NONE {
                t = tri.n[i];
                moved = true;
                break;
            }
        }
        if !moved {
            return t;
        }
    }
    // walk cycled; fall back to exhaustive search
    tris.iter()
        .position(|tri| {
            tri.alive
                && (0..3).all(|i| {
                    let a = all[tri.v[(i + 1) % 3]];
                    let b = all[tri.v[(i + 2) % 3]];
                    orient2d(c(a), c(b), c(p)) >= 0.0
                })
        })
        .expect("point inside super triangle")
}

/// Circumcenter of a non-degenerate triangle.
pub fn circumcenter(a: [f64; 2], b: [f64; 2], cc: [f64; 2]) -> [f64; 2] {
    let (bx, by) = (b[0] - a[0], b[1] - a[1]);
    let (cx, cy) = (cc[0] - a[0], cc[1] - a[1]);
    let d = 2.0 * (bx * cy - by * cx);
    let b2 = bx * bx + by * by;
    let c2 = cx * cx + cy * cy;
    [a[0] + (cy * b2 - by * c2) / d, a[1] + (bx * c2 - cx * b2) / d]
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn check_empty_circumcircle(tr: &Triangulation) {
        for t in &tr.triangles {
            let [a, b, cc] = t.map(|i| tr.points[i]);
            assert!(orient2d(c(a), c(b), c(cc)) > 0.0);
            for (i, p) in tr.points.iter().enumerate() {
                if t.contains(&i) {
                    continue;
                }
                assert!(incircle(c(a), c(b), c(cc), c(*p)) <= 0.0);
            }
        }
    }

    #[test]
    fn random_points_are_delaunay() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pts: Vec<[f64; 2]> = (0..300).map(|_| [rng.gen_range(0.0..50.0), rng.gen_range(0.0..50.0)]).collect();
        let tr = triangulate(&pts, 0.0).unwrap();
        check_empty_circumcircle(&tr);
        // Euler: 2n - 2 - hull triangles
        assert!(tr.triangles.len() > 500);
    }

    #[test]
    fn integer_grid_with_jitter() {
        let pts: Vec<[f64; 2]> = (0..12).flat_map(|y| (0..12).map(move |x| [x as f64, y as f64])).collect();
        let tr = triangulate(&pts, 1e-9).unwrap();
        check_empty_circumcircle(&tr);
        // a full grid triangulates into 2 triangles per unit cell
        assert_eq!(tr.triangles.len(), 2 * 11 * 11);
    }

    #[test]
    fn collinear_rejected() {
        let pts: Vec<[f64; 2]> = (0..5).map(|i| [i as f64, 2.0 * i as f64]).collect();
        assert!(triangulate(&pts, 1e-9).is_none());
    }

    #[test]
    fn circumcenter_of_right_triangle() {
        let cc = circumcenter([0.0, 0.0], [2.0, 0.0], [0.0, 2.0]);
        assert!((cc[0] - 1.0).abs() < 1e-15 && (cc[1] - 1.0).abs() < 1e-15);
    }
}
