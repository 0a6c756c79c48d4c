//! Crease pattern kept as a planar straight-line arrangement over a square
//! sheet. Inserting a crease snaps its endpoints, splits every edge it
//! crosses and re-extracts the faces.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fold::{Assignment, FoldError, FoldFile, Point};
use crate::geom::{self, dist, orient, signed_area, sub};

/// Side length of the sheet in paper units.
pub const PAPER_SIZE: f64 = 10.0;
/// Snapping and classification tolerance in paper units.
pub const DEFAULT_EPSILON: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub p1: Point,
    pub p2: Point,
}

impl Segment {
    pub fn new(p1: Point, p2: Point) -> Self {
        Segment { p1, p2 }
    }

    pub fn length(&self) -> f64 {
        dist(self.p1, self.p2)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("segment is shorter than the snapping tolerance")]
    DegenerateSegment,
    #[error("point ({}, {}) lies outside the paper", .0[0], .0[1])]
    OutOfBounds(Point),
    #[error("segment overlaps existing edge {0}")]
    CollinearOverlap(usize),
    #[error("an identical crease is already present")]
    DuplicateCrease,
    #[error("creases may only be mountain or valley, got {0}")]
    InvalidAssignment(Assignment),
    #[error("unknown vertex {0}")]
    UnknownVertex(usize),
    #[error("invalid crease pattern: {0}")]
    InvalidPattern(String),
}

/// One edge around a vertex, in counter-clockwise order.
#[derive(Clone, Debug, PartialEq)]
pub struct StarEdge {
    pub edge: usize,
    pub neighbor: usize,
    pub assignment: Assignment,
    /// Direction of the edge leaving the vertex, radians in `(-π, π]`.
    pub direction: f64,
    /// Angle swept counter-clockwise to the next edge. `None` for the last
    /// edge of a boundary vertex, where the next sector is outside the paper.
    pub sector: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VertexStar {
    pub vertex: usize,
    pub boundary: bool,
    pub edges: Vec<StarEdge>,
}

impl VertexStar {
    pub fn sectors(&self) -> Vec<f64> {
        self.edges.iter().filter_map(|e| e.sector).collect()
    }

    /// Assignments of the folding creases (M/V) around the vertex.
    pub fn fold_assignments(&self) -> Vec<Assignment> {
        self.edges
            .iter()
            .map(|e| e.assignment)
            .filter(|a| a.is_fold())
            .collect()
    }

    /// Sector angles between consecutive folding creases, ignoring flat and
    /// boundary lines. Only meaningful for interior vertices.
    pub fn fold_sectors(&self) -> Vec<f64> {
        let dirs: Vec<f64> = self
            .edges
            .iter()
            .filter(|e| e.assignment.is_fold())
            .map(|e| e.direction)
            .collect();
        let n = dirs.len();
        (0..n)
            .map(|i| {
                if n == 1 {
                    std::f64::consts::TAU
                } else {
                    ccw_angle(dirs[i], dirs[(i + 1) % n])
                }
            })
            .collect()
    }
}

fn ccw_angle(from: f64, to: f64) -> f64 {
    let mut d = to - from;
    while d <= 0.0 {
        d += std::f64::consts::TAU;
    }
    while d > std::f64::consts::TAU {
        d -= std::f64::consts::TAU;
    }
    d
}

/// A crease pattern on the square `[0, size]²`.
#[derive(Clone, Debug, PartialEq)]
pub struct CreasePattern {
    vertices: Vec<Point>,
    edges: Vec<[usize; 2]>,
    assignments: Vec<Assignment>,
    faces: Vec<Vec<usize>>,
    size: f64,
    epsilon: f64,
}

#[derive(Clone, Copy, Debug)]
enum OnSegment {
    Vertex(usize),
    Edge(usize, Point),
    Free(Point),
}

impl OnSegment {
    fn rank(&self) -> u8 {
        match self {
            OnSegment::Vertex(_) => 0,
            OnSegment::Edge(..) => 1,
            OnSegment::Free(_) => 2,
        }
    }
}

impl CreasePattern {
    /// A blank sheet: 4 corners, 4 boundary edges, 1 face.
    pub fn new_blank(size: f64) -> Self {
        let mut cp = CreasePattern {
            vertices: vec![[0.0, 0.0], [size, 0.0], [size, size], [0.0, size]],
            edges: vec![[0, 1], [1, 2], [2, 3], [3, 0]],
            assignments: vec![Assignment::B; 4],
            faces: Vec::new(),
            size,
            epsilon: DEFAULT_EPSILON,
        };
        cp.rebuild_faces();
        cp
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn assignments(&self) -> &[Assignment] {
        &self.assignments
    }

    /// Face cycles, counter-clockwise.
    pub fn faces(&self) -> &[Vec<usize>] {
        &self.faces
    }

    pub fn size(&self) -> f64 {
        self.size
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn face_polygon(&self, face: usize) -> Vec<Point> {
        self.faces[face].iter().map(|&v| self.vertices[v]).collect()
    }

    pub fn face_area(&self, face: usize) -> f64 {
        signed_area(&self.face_polygon(face))
    }

    /// Number of mountain and valley edges.
    pub fn fold_edge_count(&self) -> usize {
        self.assignments.iter().filter(|a| a.is_fold()).count()
    }

    pub fn is_boundary_point(&self, p: Point) -> bool {
        let e = self.epsilon;
        p[0].abs() <= e || p[1].abs() <= e || (p[0] - self.size).abs() <= e || (p[1] - self.size).abs() <= e
    }

    /// Exports the pattern as a FOLD document.
    pub fn to_fold(&self) -> Result<FoldFile, FoldError> {
        FoldFile::new(
            self.vertices.clone(),
            self.edges.clone(),
            self.assignments.clone(),
            self.faces.clone(),
            BTreeMap::new(),
        )
    }

    /// Imports a FOLD document. Faces are re-extracted from the edges; the
    /// sheet must be an axis-aligned square with its corner at the origin.
    pub fn from_fold(fold: &FoldFile) -> Result<Self, KernelError> {
        let vertices = fold.vertices_coords().to_vec();
        if vertices.is_empty() {
            return Err(KernelError::InvalidPattern("no vertices".into()));
        }
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in &vertices {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let size = hi[0];
        let eps = DEFAULT_EPSILON;
        if lo[0].abs() > eps || lo[1].abs() > eps || (hi[1] - size).abs() > eps || size <= eps {
            return Err(KernelError::InvalidPattern(
                "paper is not a square anchored at the origin".into(),
            ));
        }
        let mut cp = CreasePattern {
            vertices,
            edges: fold.edges_vertices().to_vec(),
            assignments: fold.edges_assignment().to_vec(),
            faces: Vec::new(),
            size,
            epsilon: eps,
        };
        for (i, [a, b]) in cp.edges.iter().enumerate() {
            let (pa, pb) = (cp.vertices[*a], cp.vertices[*b]);
            let on_boundary =
                cp.is_boundary_point(pa) && cp.is_boundary_point(pb) && cp.is_boundary_point(geom::lerp(pa, pb, 0.5));
            if on_boundary != (cp.assignments[i] == Assignment::B) {
                return Err(KernelError::InvalidPattern(format!(
                    "edge {i} has assignment {} but {} on the paper boundary",
                    cp.assignments[i],
                    if on_boundary { "lies" } else { "does not lie" }
                )));
            }
        }
        cp.check_planar()?;
        cp.rebuild_faces();
        let total: f64 = (0..cp.faces.len()).map(|f| cp.face_area(f)).sum();
        if (total - size * size).abs() > 1e-6 * size * size {
            return Err(KernelError::InvalidPattern(format!(
                "faces cover {total} of {} square units",
                size * size
            )));
        }
        Ok(cp)
    }

    fn check_planar(&self) -> Result<(), KernelError> {
        let eps = self.epsilon;
        for i in 0..self.edges.len() {
            for j in (i + 1)..self.edges.len() {
                let [a, b] = self.edges[i];
                let [c, d] = self.edges[j];
                if a == c && b == d || a == d && b == c {
                    return Err(KernelError::InvalidPattern(format!(
                        "edges {i} and {j} are parallel duplicates"
                    )));
                }
                let shared = a == c || a == d || b == c || b == d;
                let (pa, pb, pc, pd) = (self.vertices[a], self.vertices[b], self.vertices[c], self.vertices[d]);
                let o1 = orient(pa, pb, pc) / dist(pa, pb);
                let o2 = orient(pa, pb, pd) / dist(pa, pb);
                let o3 = orient(pc, pd, pa) / dist(pc, pd);
                let o4 = orient(pc, pd, pb) / dist(pc, pd);
                let proper = o1.abs() > eps
                    && o2.abs() > eps
                    && o3.abs() > eps
                    && o4.abs() > eps
                    && (o1 > 0.0) != (o2 > 0.0)
                    && (o3 > 0.0) != (o4 > 0.0);
                if proper && !shared {
                    return Err(KernelError::InvalidPattern(format!("edges {i} and {j} cross")));
                }
            }
        }
        Ok(())
    }

    /// Returns a new pattern with the crease added.
    pub fn insert_crease(&self, seg: Segment, assignment: Assignment) -> Result<Self, KernelError> {
        let mut next = self.clone();
        next.insert_crease_in_place(seg, assignment)?;
        Ok(next)
    }

    /// Adds a crease; on error `self` is left untouched.
    pub fn insert_crease_in_place(&mut self, seg: Segment, assignment: Assignment) -> Result<(), KernelError> {
        if !assignment.is_fold() {
            return Err(KernelError::InvalidAssignment(assignment));
        }
        let eps = self.epsilon;
        let mut ends = [seg.p1, seg.p2];
        for p in ends.iter_mut() {
            if p.iter().any(|c| !c.is_finite() || *c < -eps || *c > self.size + eps) {
                return Err(KernelError::OutOfBounds(*p));
            }
            for c in p.iter_mut() {
                *c = c.clamp(0.0, self.size);
            }
        }
        if dist(ends[0], ends[1]) <= eps {
            return Err(KernelError::DegenerateSegment);
        }

        let resolved = [self.resolve_point(ends[0]), self.resolve_point(ends[1])];
        let a = self.position(&resolved[0]);
        let b = self.position(&resolved[1]);
        let len = dist(a, b);
        if len <= eps {
            return Err(KernelError::DegenerateSegment);
        }
        let param = |p: Point| geom::dot(sub(p, a), sub(b, a)) / (len * len);

        let mut hits: Vec<(f64, OnSegment)> = vec![(0.0, resolved[0]), (1.0, resolved[1])];

        for (v, &p) in self.vertices.iter().enumerate() {
            let t = param(p);
            if t * len > eps && (1.0 - t) * len > eps && geom::segment_distance(a, b, p) <= eps {
                hits.push((t, OnSegment::Vertex(v)));
            }
        }

        let mut overlaps: Vec<(usize, f64, f64)> = Vec::new();
        for (e, &[u, w]) in self.edges.iter().enumerate() {
            let (pu, pw) = (self.vertices[u], self.vertices[w]);
            let du = orient(a, b, pu) / len;
            let dw = orient(a, b, pw) / len;
            if du.abs() <= eps && dw.abs() <= eps {
                let (tu, tw) = (param(pu), param(pw));
                let lo = tu.min(tw).max(0.0);
                let hi = tu.max(tw).min(1.0);
                if (hi - lo) * len > eps {
                    overlaps.push((e, lo, hi));
                }
                continue;
            }
            if (du > eps && dw > eps) || (du < -eps && dw < -eps) {
                continue;
            }
            // Proper crossing with the edge's interior.
            let s = du / (du - dw);
            let x = geom::lerp(pu, pw, s);
            let elen = dist(pu, pw);
            if s * elen <= eps || (1.0 - s) * elen <= eps {
                continue;
            }
            let t = param(x);
            if t * len < -eps || (t - 1.0) * len > eps {
                continue;
            }
            if geom::line_distance(pu, pw, x) > eps {
                continue;
            }
            hits.push((t.clamp(0.0, 1.0), OnSegment::Edge(e, x)));
        }

        if !overlaps.is_empty() {
            overlaps.sort_by(|x, y| x.1.total_cmp(&y.1));
            let mut covered = 0.0_f64;
            let mut gap = false;
            for &(_, lo, hi) in &overlaps {
                if (lo - covered) * len > eps {
                    gap = true;
                }
                covered = covered.max(hi);
            }
            let full = !gap && (1.0 - covered) * len <= eps;
            let same = overlaps.iter().all(|(e, _, _)| self.assignments[*e] == assignment);
            let at_vertices = resolved.iter().all(|r| matches!(r, OnSegment::Vertex(_)));
            return Err(if full && same && at_vertices {
                KernelError::DuplicateCrease
            } else {
                KernelError::CollinearOverlap(overlaps[0].0)
            });
        }

        hits.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.rank().cmp(&y.1.rank())));
        let mut merged: Vec<(f64, OnSegment)> = Vec::new();
        for (t, hit) in hits {
            if let Some(last) = merged.last_mut() {
                if dist(self.position(&last.1), self.position(&hit)) <= eps {
                    if hit.rank() < last.1.rank() {
                        last.1 = hit;
                    }
                    continue;
                }
            }
            merged.push((t, hit));
        }
        if merged.len() < 2 {
            return Err(KernelError::DegenerateSegment);
        }

        // New vertices are appended in (x, y) order.
        let mut fresh: Vec<Point> = merged
            .iter()
            .filter_map(|(_, h)| match h {
                OnSegment::Vertex(_) => None,
                OnSegment::Edge(_, p) | OnSegment::Free(p) => Some(*p),
            })
            .collect();
        fresh.sort_by(|p, q| p[0].total_cmp(&q[0]).then(p[1].total_cmp(&q[1])));
        let base = self.vertices.len();
        let index_of = |p: Point| base + fresh.iter().position(|q| *q == p).expect("fresh point");

        let chain: Vec<usize> = merged
            .iter()
            .map(|(_, h)| match h {
                OnSegment::Vertex(v) => *v,
                OnSegment::Edge(_, p) | OnSegment::Free(p) => index_of(*p),
            })
            .collect();
        let mut splits: Vec<(usize, usize)> = merged
            .iter()
            .filter_map(|(_, h)| match h {
                OnSegment::Edge(e, p) => Some((*e, index_of(*p))),
                _ => None,
            })
            .collect();
        splits.sort_unstable();
        if splits.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(KernelError::CollinearOverlap(splits[0].0));
        }

        self.vertices.extend(fresh.iter().copied());
        for (e, v) in splits {
            let [u, w] = self.edges[e];
            self.edges[e] = [u, v];
            self.edges.push([v, w]);
            self.assignments.push(self.assignments[e]);
        }
        for pair in chain.windows(2) {
            self.edges.push([pair[0], pair[1]]);
            self.assignments.push(assignment);
        }
        self.rebuild_faces();
        Ok(())
    }

    fn position(&self, hit: &OnSegment) -> Point {
        match hit {
            OnSegment::Vertex(v) => self.vertices[*v],
            OnSegment::Edge(_, p) | OnSegment::Free(p) => *p,
        }
    }

    /// Snaps a point to a vertex, then to an edge, within epsilon.
    fn resolve_point(&self, p: Point) -> OnSegment {
        let eps = self.epsilon;
        let nearest = self
            .vertices
            .iter()
            .enumerate()
            .map(|(i, q)| (i, dist(p, *q)))
            .min_by(|x, y| x.1.total_cmp(&y.1));
        if let Some((v, d)) = nearest {
            if d <= eps {
                return OnSegment::Vertex(v);
            }
        }
        for (e, &[u, w]) in self.edges.iter().enumerate() {
            let (pu, pw) = (self.vertices[u], self.vertices[w]);
            if geom::segment_distance(pu, pw, p) <= eps {
                let d = sub(pw, pu);
                let s = geom::dot(sub(p, pu), d) / geom::dot(d, d);
                return OnSegment::Edge(e, geom::lerp(pu, pw, s));
            }
        }
        OnSegment::Free(p)
    }

    fn neighbors_sorted(&self) -> Vec<Vec<(usize, usize, f64)>> {
        let mut adj: Vec<Vec<(usize, usize, f64)>> = vec![Vec::new(); self.vertices.len()];
        for (e, &[a, b]) in self.edges.iter().enumerate() {
            let da = sub(self.vertices[b], self.vertices[a]);
            let db = sub(self.vertices[a], self.vertices[b]);
            adj[a].push((b, e, da[1].atan2(da[0])));
            adj[b].push((a, e, db[1].atan2(db[0])));
        }
        for list in adj.iter_mut() {
            list.sort_by(|x, y| x.2.total_cmp(&y.2).then(x.1.cmp(&y.1)));
        }
        adj
    }

    /// Re-extracts every bounded face by walking half-edges.
    fn rebuild_faces(&mut self) {
        let adj = self.neighbors_sorted();
        let mut visited: Vec<[bool; 2]> = vec![[false; 2]; self.edges.len()];
        let mut faces = Vec::new();
        for start_edge in 0..self.edges.len() {
            for side in 0..2 {
                if visited[start_edge][side] {
                    continue;
                }
                let [a, b] = self.edges[start_edge];
                let (mut from, mut to, mut edge) = if side == 0 {
                    (a, b, start_edge)
                } else {
                    (b, a, start_edge)
                };
                let mut cycle = Vec::new();
                loop {
                    let s = if self.edges[edge][0] == from { 0 } else { 1 };
                    if visited[edge][s] {
                        break;
                    }
                    visited[edge][s] = true;
                    cycle.push(from);
                    let list = &adj[to];
                    let pos = list
                        .iter()
                        .position(|&(n, e, _)| n == from && e == edge)
                        .expect("half-edge present in adjacency");
                    let (n, e, _) = list[(pos + list.len() - 1) % list.len()];
                    from = to;
                    to = n;
                    edge = e;
                }
                let poly: Vec<Point> = cycle.iter().map(|&v| self.vertices[v]).collect();
                if cycle.len() >= 3 && signed_area(&poly) > 1e-12 {
                    let start = (0..cycle.len()).min_by_key(|&i| cycle[i]).unwrap();
                    cycle.rotate_left(start);
                    faces.push(cycle);
                }
            }
        }
        faces.sort();
        self.faces = faces;
    }

    /// Edges around `v`, counter-clockwise, with sector angles.
    pub fn vertex_star(&self, v: usize) -> Result<VertexStar, KernelError> {
        if v >= self.vertices.len() {
            return Err(KernelError::UnknownVertex(v));
        }
        let p = self.vertices[v];
        let mut around: Vec<(usize, usize, f64)> = self
            .edges
            .iter()
            .enumerate()
            .filter_map(|(e, &[a, b])| {
                let n = if a == v {
                    b
                } else if b == v {
                    a
                } else {
                    return None;
                };
                let d = sub(self.vertices[n], p);
                Some((e, n, d[1].atan2(d[0])))
            })
            .collect();
        around.sort_by(|x, y| x.2.total_cmp(&y.2).then(x.0.cmp(&y.0)));
        let boundary = self.is_boundary_point(p);
        let n = around.len();
        if boundary && n > 0 {
            // Rotate so the sector that points off the sheet comes last.
            let outside = (0..n).find(|&i| {
                let from = around[i].2;
                let sweep = if n == 1 {
                    std::f64::consts::TAU
                } else {
                    ccw_angle(from, around[(i + 1) % n].2)
                };
                let mid = from + sweep / 2.0;
                let probe = [p[0] + 1e-3 * mid.cos(), p[1] + 1e-3 * mid.sin()];
                probe[0] < 0.0 || probe[1] < 0.0 || probe[0] > self.size || probe[1] > self.size
            });
            if let Some(i) = outside {
                around.rotate_left((i + 1) % n);
            }
        }
        let edges = (0..n)
            .map(|i| {
                let (edge, neighbor, direction) = around[i];
                let sector = if boundary && i == n - 1 {
                    None
                } else if n == 1 {
                    Some(std::f64::consts::TAU)
                } else {
                    Some(ccw_angle(direction, around[(i + 1) % n].2))
                };
                StarEdge {
                    edge,
                    neighbor,
                    assignment: self.assignments[edge],
                    direction,
                    sector,
                }
            })
            .collect();
        Ok(VertexStar {
            vertex: v,
            boundary,
            edges,
        })
    }

    /// Faces on the left and right of each edge, as `[left, right]` with
    /// respect to the stored edge direction.
    pub fn edge_faces(&self) -> Vec<[Option<usize>; 2]> {
        let mut out = vec![[None, None]; self.edges.len()];
        let lookup: BTreeMap<(usize, usize), usize> = self
            .edges
            .iter()
            .enumerate()
            .map(|(e, &[a, b])| ((a.min(b), a.max(b)), e))
            .collect();
        for (f, cycle) in self.faces.iter().enumerate() {
            let n = cycle.len();
            for i in 0..n {
                let (u, w) = (cycle[i], cycle[(i + 1) % n]);
                if let Some(&e) = lookup.get(&(u.min(w), u.max(w))) {
                    let side = if self.edges[e][0] == u { 0 } else { 1 };
                    out[e][side] = Some(f);
                }
            }
        }
        out
    }

    /// Index of the face whose interior contains `p`.
    pub fn face_containing(&self, p: Point) -> Option<usize> {
        (0..self.faces.len()).find(|&f| geom::polygon_contains(&self.face_polygon(f), p))
    }

    /// True when the vertex/edge graph is one connected component.
    pub fn is_connected(&self) -> bool {
        let n = self.vertices.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for &[a, b] in &self.edges {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            parent[ra] = rb;
        }
        let root = find(&mut parent, 0);
        (0..n).all(|v| find(&mut parent, v) == root)
    }
}

/// Lexicographic (x, y) order on points.
pub fn point_order(p: &Point, q: &Point) -> Ordering {
    p[0].total_cmp(&q[0]).then(p[1].total_cmp(&q[1]))
}
