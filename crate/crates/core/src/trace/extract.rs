use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{SkeletonGraph, TraceError};

#[derive(PartialEq)]
struct Item(f64, usize);

impl Eq for Item {}

impl Ord for Item {
    fn cmp(&self, o: &Self) -> Ordering {
        // min-heap on distance, then index
        o.0.total_cmp(&self.0).then(o.1.cmp(&self.1))
    }
}

impl PartialOrd for Item {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

/// Single-source shortest paths with predecessor links.
pub(crate) fn dijkstra(g: &SkeletonGraph, adj: &[Vec<usize>], src: usize) -> (Vec<f64>, Vec<usize>) {
    let n = g.vertices.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut prev = vec![usize::MAX; n];
    let mut heap = BinaryHeap::new();
    dist[src] = 0.0;
    heap.push(Item(0.0, src));
    while let Some(Item(d, v)) = heap.pop() {
        if d > dist[v] {
            continue;
        }
        for &w in &adj[v] {
            let nd = d + g.edge_length(v, w);
            if nd < dist[w] {
                dist[w] = nd;
                prev[w] = v;
                heap.push(Item(nd, w));
            }
        }
    }
    (dist, prev)
}

/// Reduces a connected skeleton to the simple path joining its two
/// geodesically farthest vertices.
///
/// Shorter terminal branches are stripped leaf by leaf. If cycles keep
/// extra vertices alive the shortest path between the endpoints is used.
/// The result lists vertices in path order with edges `(i, i + 1)`.
pub fn extract_trace(g: &SkeletonGraph) -> Result<SkeletonGraph, TraceError> {
    let n = g.vertices.len();
    if n < 2 {
        return Err(TraceError::InvalidGraph("fewer than two vertices"));
    }
    if g.components().1 != 1 {
        return Err(TraceError::InvalidGraph("graph is disconnected"));
    }
    let adj = g.adjacency();
    let is_tree = g.edges.len() == n - 1;
    let sources: Vec<usize> = if is_tree {
        (0..n).filter(|&v| adj[v].len() == 1).collect()
    } else {
        (0..n).collect()
    };

    let mut best: Option<(f64, usize, usize)> = None;
    for &s in &sources {
        let (dist, _) = dijkstra(g, &adj, s);
        for (t, &d) in dist.iter().enumerate() {
            if t == s {
                continue;
            }
            let pair = (s.min(t), s.max(t));
            let better = match best {
                None => true,
                Some((bd, a, b)) => d > bd || (d == bd && pair < (a, b)),
            };
            if better {
                best = Some((d, pair.0, pair.1));
            }
        }
    }
    let (_, ea, eb) = best.expect("at least two vertices");

    // iterative leaf pruning, endpoints protected
    let mut alive = vec![true; n];
    let mut deg: Vec<usize> = adj.iter().map(|a| a.len()).collect();
    let mut stack: Vec<usize> = (0..n).filter(|&v| deg[v] <= 1 && v != ea && v != eb).collect();
    while let Some(v) = stack.pop() {
        if !alive[v] {
            continue;
        }
        alive[v] = false;
        for &w in &adj[v] {
            if alive[w] {
                deg[w] -= 1;
                if deg[w] <= 1 && w != ea && w != eb {
                    stack.push(w);
                }
            }
        }
    }

    let remaining = g.induced(&alive);
    let simple = remaining.vertices.len() >= 2
        && remaining.edges.len() == remaining.vertices.len() - 1
        && remaining.degrees().iter().all(|&d| d <= 2);

    let order: Vec<usize> = if simple {
        // walk the surviving path from ea
        let mut order = vec![ea];
        let mut prev = usize::MAX;
        let mut cur = ea;
        while cur != eb {
            let next = adj[cur]
                .iter()
                .copied()
                .find(|&w| alive[w] && w != prev)
                .expect("surviving path is connected");
            prev = cur;
            cur = next;
            order.push(cur);
        }
        order
    } else {
        let (_, prev) = dijkstra(g, &adj, ea);
        let mut order = vec![eb];
        let mut cur = eb;
        while cur != ea {
            cur = prev[cur];
            order.push(cur);
        }
        order.reverse();
        order
    };

    let vertices = order.iter().map(|&i| g.vertices[i]).collect::<Vec<_>>();
    let m = vertices.len();
    Ok(SkeletonGraph {
        vertices,
        edges: (0..m - 1).map(|i| (i, i + 1)).collect(),
    })
}

/// Trims each end of the path back to the farthest nearby vertex whose
/// clearance disk contains the end vertex's disk, within `tol` pixels.
/// Clearance is the distance to the nearest contour site. Only vertices
/// within two clearance radii of path length are candidates.
///
/// On a rasterized rope the rounded end caps leave short medial branches
/// running from the cap center toward the outline; the geodesic endpoints
/// land on their tips.
pub fn trim_end_spurs(trace: &SkeletonGraph, sites: &[[f64; 2]], tol: f64) -> SkeletonGraph {
    let n = trace.vertices.len();
    if n < 3 || sites.is_empty() {
        return trace.clone();
    }
    let v = &trace.vertices;
    let rho: Vec<f64> = v
        .iter()
        .map(|p| sites.iter().map(|s| (p[0] - s[0]).hypot(p[1] - s[1])).fold(f64::INFINITY, f64::min))
        .collect();
    let d = |i: usize, j: usize| (v[i][0] - v[j][0]).hypot(v[i][1] - v[j][1]);
    let reach = 2.0 * rho.iter().cloned().fold(0.0, f64::max) + tol;
    // farthest vertex along `order` holding the disk of its first element
    let anchor = |order: &mut dyn Iterator<Item = usize>| {
        let tip = order.next().expect("n >= 3");
        let (mut walked, mut prev, mut best) = (0.0, tip, tip);
        for j in order {
            walked += d(prev, j);
            if walked > reach {
                break;
            }
            if d(tip, j) + rho[tip] <= rho[j] + tol {
                best = j;
            }
            prev = j;
        }
        best
    };
    let mut lo = anchor(&mut (0..n));
    let mut hi = anchor(&mut (0..n).rev());
    if hi <= lo {
        (lo, hi) = (0, n - 1);
    }
    let vertices = v[lo..=hi].to_vec();
    let m = vertices.len();
    SkeletonGraph {
        vertices,
        edges: (0..m - 1).map(|i| (i, i + 1)).collect(),
    }
}
