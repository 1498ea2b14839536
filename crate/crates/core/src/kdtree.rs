//! Static 3-d tree for radius and k-nearest queries.

use std::collections::BinaryHeap;

use crate::geom::Vec3;
use crate::scalar::Real;

#[derive(Debug, Clone)]
pub struct KdTree<T> {
    points: Vec<Vec3<T>>,
    /// Point indices arranged so that `idx[mid]` splits `[lo, hi)`.
    idx: Vec<usize>,
    axis: Vec<u8>,
}

impl<T: Real> KdTree<T> {
    pub fn new(points: &[Vec3<T>]) -> Self {
        let mut t = Self {
            points: points.to_vec(),
            idx: (0..points.len()).collect(),
            axis: vec![0; points.len()],
        };
        let n = points.len();
        t.build(0, n);
        t
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn build(&mut self, lo: usize, hi: usize) {
        if hi - lo <= 1 {
            return;
        }
        // split on the widest extent
        let mut mn = [T::infinity(); 3];
        let mut mx = [T::neg_infinity(); 3];
        for &i in &self.idx[lo..hi] {
            let p = self.points[i];
            for a in 0..3 {
                mn[a] = mn[a].min(p.component(a));
                mx[a] = mx[a].max(p.component(a));
            }
        }
        let ax = (0..3)
            .fold(0, |b, a| if mx[a] - mn[a] > mx[b] - mn[b] { a } else { b });
        let mid = (lo + hi) / 2;
        let pts = &self.points;
        self.idx[lo..hi].select_nth_unstable_by(mid - lo, |&a, &b| {
            pts[a]
                .component(ax)
                .partial_cmp(&pts[b].component(ax))
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        self.axis[mid] = ax as u8;
        self.build(lo, mid);
        self.build(mid + 1, hi);
    }

    /// Indices with `‖p − q‖₂ ≤ r`, ascending. Membership uses the same
    /// arithmetic as a linear scan.
    pub fn within_radius(&self, q: Vec3<T>, r: T) -> Vec<usize> {
        let mut out = Vec::new();
        // pruning slack keeps the axis test conservative under rounding
        let slack = r * (T::one() + T::epsilon() * T::lit(16.0)) + T::min_positive_value();
        self.radius_rec(0, self.points.len(), q, r, slack, &mut out);
        out.sort_unstable();
        out
    }

    fn radius_rec(&self, lo: usize, hi: usize, q: Vec3<T>, r: T, slack: T, out: &mut Vec<usize>) {
        if lo >= hi {
            return;
        }
        let mid = (lo + hi) / 2;
        let i = self.idx[mid];
        let p = self.points[i];
        if (p - q).norm() <= r {
            out.push(i);
        }
        if hi - lo == 1 {
            return;
        }
        let ax = self.axis[mid] as usize;
        let d = q.component(ax) - p.component(ax);
        if d <= slack {
            self.radius_rec(lo, mid, q, r, slack, out);
        }
        if -d <= slack {
            self.radius_rec(mid + 1, hi, q, r, slack, out);
        }
    }

    /// The `k` nearest points by Euclidean distance, ties to the lower
    /// index, ordered nearest first.
    pub fn nearest(&self, q: Vec3<T>, k: usize) -> Vec<usize> {
        let mut heap: BinaryHeap<Cand<T>> = BinaryHeap::new();
        if k > 0 {
            self.knn_rec(0, self.points.len(), q, k, &mut heap);
        }
        let mut v = heap.into_sorted_vec();
        v.truncate(k);
        v.into_iter().map(|c| c.1).collect()
    }

    fn knn_rec(&self, lo: usize, hi: usize, q: Vec3<T>, k: usize, heap: &mut BinaryHeap<Cand<T>>) {
        if lo >= hi {
            return;
        }
        let mid = (lo + hi) / 2;
        let i = self.idx[mid];
        let p = self.points[i];
        let c = Cand((p - q).norm_squared(), i);
        if heap.len() < k {
            heap.push(c);
        } else if c < *heap.peek().expect("heap is full") {
            heap.pop();
            heap.push(c);
        }
        if hi - lo == 1 {
            return;
        }
        let ax = self.axis[mid] as usize;
        let d = q.component(ax) - p.component(ax);
        let (near, far) = if d <= T::zero() {
            ((lo, mid), (mid + 1, hi))
        } else {
            ((mid + 1, hi), (lo, mid))
        };
        self.knn_rec(near.0, near.1, q, k, heap);
        let bound = heap.peek().map(|c| c.0);
        if heap.len() < k || bound.is_some_and(|b| d * d <= b * (T::one() + T::epsilon() * T::lit(16.0))) {
            self.knn_rec(far.0, far.1, q, k, heap);
        }
    }
}

/// Squared distance and index, ordered lexicographically.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Cand<T>(T, usize);

impl<T: Real> Eq for Cand<T> {}

impl<T: Real> Ord for Cand<T> {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.0
            .partial_cmp(&o.0)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(self.1.cmp(&o.1))
    }
}

impl<T: Real> PartialOrd for Cand<T> {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}

/// Linear-scan counterpart of [`KdTree::within_radius`].
pub fn within_radius_scan<T: Real>(points: &[Vec3<T>], q: Vec3<T>, r: T) -> Vec<usize> {
    (0..points.len()).filter(|&i| (points[i] - q).norm() <= r).collect()
}

/// Linear-scan counterpart of [`KdTree::nearest`].
pub fn nearest_scan<T: Real>(points: &[Vec3<T>], q: Vec3<T>, k: usize) -> Vec<usize> {
    let mut c: Vec<Cand<T>> = points
        .iter()
        .enumerate()
        .map(|(i, p)| Cand((*p - q).norm_squared(), i))
        .collect();
    c.sort();
    c.truncate(k);
    c.into_iter().map(|c| c.1).collect()
}
