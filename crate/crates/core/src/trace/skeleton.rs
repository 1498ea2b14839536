use std::collections::BTreeSet;

use crate::image::BinaryMask;

use super::delaunay::{circumcenter, triangulate};
use super::{ContourSet, TraceError};

/// Undirected graph over subpixel image coordinates.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SkeletonGraph {
    pub vertices: Vec<[f64; 2]>,
    /// Vertex index pairs with `a < b`, no duplicates.
    pub edges: Vec<(usize, usize)>,
}

impl SkeletonGraph {
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.vertices.len()];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        adj
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.vertices.len()];
        for &(a, b) in &self.edges {
            d[a] += 1;
            d[b] += 1;
        }
        d
    }

    /// Vertices of degree exactly one.
    pub fn terminals(&self) -> Vec<usize> {
        self.degrees()
            .iter()
            .enumerate()
            .filter(|(_, d)| **d == 1)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn edge_length(&self, a: usize, b: usize) -> f64 {
        let (p, q) = (self.vertices[a], self.vertices[b]);
        (p[0] - q[0]).hypot(p[1] - q[1])
    }

    pub fn total_length(&self) -> f64 {
        self.edges.iter().map(|&(a, b)| self.edge_length(a, b)).sum()
    }

    /// Component label per vertex, labels assigned in order of the lowest
    /// vertex index.
    pub fn components(&self) -> (Vec<usize>, usize) {
        let adj = self.adjacency();
        let mut label = vec![usize::MAX; self.vertices.len()];
        let mut count = 0;
        for s in 0..self.vertices.len() {
            if label[s] != usize::MAX {
                continue;
            }
            let mut stack = vec![s];
            label[s] = count;
            while let Some(v) = stack.pop() {
                for &w in &adj[v] {
                    if label[w] == usize::MAX {
                        label[w] = count;
                        stack.push(w);
                    }
                }
            }
            count += 1;
        }
        (label, count)
    }

    /// Builds a graph from arbitrary edges, dropping self-loops and
    /// duplicates.
    pub fn from_edges(vertices: Vec<[f64; 2]>, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let set: BTreeSet<(usize, usize)> = edges
            .into_iter()
            .filter(|(a, b)| a != b)
            .map(|(a, b)| (a.min(b), a.max(b)))
            .collect();
        Self {
            vertices,
            edges: set.into_iter().collect(),
        }
    }

    /// Keeps only the vertices flagged in `keep`, reindexing in order.
    pub fn induced(&self, keep: &[bool]) -> Self {
        let mut map = vec![usize::MAX; self.vertices.len()];
        let mut vertices = Vec::new();
        for (i, v) in self.vertices.iter().enumerate() {
            if keep[i] {
                map[i] = vertices.len();
                vertices.push(*v);
            }
        }
        let edges = self
            .edges
            .iter()
            .filter(|(a, b)| keep[*a] && keep[*b])
            .map(|&(a, b)| (map[a], map[b]));
        Self::from_edges(vertices, edges)
    }
}

/// Pixel at `floor(p)` and its four neighbors are all true.
pub(crate) fn strictly_inside(mask: &BinaryMask, p: [f64; 2]) -> bool {
    if !p[0].is_finite() || !p[1].is_finite() {
        return false;
    }
    let (x, y) = (p[0].floor() as i64, p[1].floor() as i64);
    mask.get_signed(x, y)
        && mask.get_signed(x - 1, y)
        && mask.get_signed(x + 1, y)
        && mask.get_signed(x, y - 1)
        && mask.get_signed(x, y + 1)
}

fn edge_inside(mask: &BinaryMask, a: [f64; 2], b: [f64; 2]) -> bool {
    let len = (b[0] - a[0]).hypot(b[1] - a[1]);
    let mut s = 1.0;
    while s < len {
        let t = s / len;
        if !strictly_inside(mask, [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]) {
            return false;
        }
        s += 1.0;
    }
    true
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Voronoi graph of the contour sites, pruned to the mask interior and
/// restricted to its largest connected component.
pub fn voronoi_skeleton(contour: &ContourSet, mask: &BinaryMask) -> Result<SkeletonGraph, TraceError> {
    if contour.points.len() < 4 {
        return Err(TraceError::DegenerateContour("fewer than four sites"));
    }
    let tr = triangulate(&contour.points, 1e-9).ok_or(TraceError::DegenerateContour("collinear sites"))?;
    let centers: Vec<[f64; 2]> = tr
        .triangles
        .iter()
        .map(|t| circumcenter(tr.points[t[0]], tr.points[t[1]], tr.points[t[2]]))
        .collect();

    // Voronoi edges join circumcenters of triangles sharing a Delaunay edge;
    // hull edges give unbounded rays and are dropped.
    let mut vor_edges = Vec::new();
    for (t, nbs) in tr.neighbors.iter().enumerate() {
        for u in nbs.iter().flatten() {
            if t < *u {
                vor_edges.push((t, *u));
            }
        }
    }

    // cocircular sites produce clusters of coincident circumcenters
    let mut parent: Vec<usize> = (0..centers.len()).collect();
    for &(a, b) in &vor_edges {
        let (p, q) = (centers[a], centers[b]);
        if (p[0] - q[0]).hypot(p[1] - q[1]) < 1e-6 {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
    }
    let roots: Vec<usize> = (0..centers.len()).map(|i| find(&mut parent, i)).collect();
    let mut compact = vec![usize::MAX; centers.len()];
    let mut vertices = Vec::new();
    for i in 0..centers.len() {
        if roots[i] == i {
            compact[i] = vertices.len();
            vertices.push(centers[i]);
        }
    }
    let full = SkeletonGraph::from_edges(
        vertices,
        vor_edges.iter().map(|&(a, b)| (compact[roots[a]], compact[roots[b]])),
    );

    let vkeep: Vec<bool> = full.vertices.iter().map(|p| strictly_inside(mask, *p)).collect();
    let edges: Vec<(usize, usize)> = full
        .edges
        .iter()
        .copied()
        .filter(|&(a, b)| vkeep[a] && vkeep[b] && edge_inside(mask, full.vertices[a], full.vertices[b]))
        .collect();
    let pruned = SkeletonGraph {
        vertices: full.vertices.clone(),
        edges,
    }
    .induced(&vkeep);

    if pruned.vertices.is_empty() {
        return Ok(pruned);
    }
    let (label, count) = pruned.components();
    let mut sizes = vec![0usize; count];
    for &l in &label {
        sizes[l] += 1;
    }
    // labels follow lowest vertex index, so the first maximum breaks ties
    let best = (0..count).fold(0, |b, l| if sizes[l] > sizes[b] { l } else { b });
    let keep: Vec<bool> = label.iter().map(|&l| l == best).collect();
    Ok(pruned.induced(&keep))
}
