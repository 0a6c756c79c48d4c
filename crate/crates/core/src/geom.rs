//! Small planar geometry toolkit shared by the kernel, solver and renderer.

use serde::{Deserialize, Serialize};

use crate::fold::Point;

pub fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

pub fn add(a: Point, b: Point) -> Point {
    [a[0] + b[0], a[1] + b[1]]
}

pub fn scale(a: Point, s: f64) -> Point {
    [a[0] * s, a[1] * s]
}

pub fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

pub fn cross(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

pub fn norm(a: Point) -> f64 {
    a[0].hypot(a[1])
}

pub fn dist(a: Point, b: Point) -> f64 {
    norm(sub(a, b))
}

pub fn lerp(a: Point, b: Point, t: f64) -> Point {
    [a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t]
}

/// Orientation of `c` relative to the directed line `a -> b` (positive = left).
pub fn orient(a: Point, b: Point, c: Point) -> f64 {
    cross(sub(b, a), sub(c, a))
}

/// Distance from `p` to the infinite line through `a` and `b`.
pub fn line_distance(a: Point, b: Point, p: Point) -> f64 {
    orient(a, b, p).abs() / dist(a, b)
}

/// Shoelace signed area; positive for counter-clockwise rings.
pub fn signed_area(poly: &[Point]) -> f64 {
    let n = poly.len();
    let mut s = 0.0;
    for i in 0..n {
        s += cross(poly[i], poly[(i + 1) % n]);
    }
    0.5 * s
}

pub fn centroid(poly: &[Point]) -> Point {
    let n = poly.len() as f64;
    let sum = poly.iter().fold([0.0, 0.0], |acc, p| add(acc, *p));
    scale(sum, 1.0 / n)
}

/// Even-odd point-in-polygon test.
pub fn polygon_contains(poly: &[Point], p: Point) -> bool {
    let n = poly.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (poly[i], poly[j]);
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
            if p[0] < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Clips `subject` by the convex counter-clockwise polygon `clip`
/// (Sutherland-Hodgman). Points within `tol` of a clip edge count as inside.
pub fn clip_convex(subject: &[Point], clip: &[Point], tol: f64) -> Vec<Point> {
    let mut out: Vec<Point> = subject.to_vec();
    let n = clip.len();
    for i in 0..n {
        if out.is_empty() {
            break;
        }
        let a = clip[i];
        let b = clip[(i + 1) % n];
        let len = dist(a, b);
        let side = |p: Point| orient(a, b, p) / len;
        let input = std::mem::take(&mut out);
        let m = input.len();
        for j in 0..m {
            let cur = input[j];
            let prev = input[(j + m - 1) % m];
            let (sc, sp) = (side(cur), side(prev));
            let cur_in = sc >= -tol;
            let prev_in = sp >= -tol;
            if cur_in {
                if !prev_in {
                    out.push(lerp(prev, cur, sp / (sp - sc)));
                }
                out.push(cur);
            } else if prev_in {
                out.push(lerp(prev, cur, sp / (sp - sc)));
            }
        }
    }
    out
}

/// Area of the intersection of two convex counter-clockwise polygons.
pub fn convex_overlap_area(a: &[Point], b: &[Point], tol: f64) -> f64 {
    let clipped = clip_convex(a, b, tol);
    if clipped.len() < 3 {
        0.0
    } else {
        signed_area(&clipped).max(0.0)
    }
}

/// Parameter range `[t0, t1]` of the segment `p -> q` inside the convex
/// counter-clockwise polygon `poly`, if any.
pub fn clip_segment_convex(p: Point, q: Point, poly: &[Point], tol: f64) -> Option<(f64, f64)> {
    let mut t0 = 0.0_f64;
    let mut t1 = 1.0_f64;
    let d = sub(q, p);
    let n = poly.len();
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        let len = dist(a, b);
        // signed distance (inside positive) as a function of t: s0 + t * ds
        let s0 = orient(a, b, p) / len + tol;
        let ds = cross(sub(b, a), d) / len;
        if ds.abs() < 1e-15 {
            if s0 < 0.0 {
                return None;
            }
            continue;
        }
        let t = -s0 / ds;
        if ds > 0.0 {
            t0 = t0.max(t);
        } else {
            t1 = t1.min(t);
        }
        if t0 > t1 {
            return None;
        }
    }
    Some((t0, t1))
}

/// Minimum distance from `p` to the boundary of `poly`.
pub fn boundary_distance(poly: &[Point], p: Point) -> f64 {
    let n = poly.len();
    (0..n)
        .map(|i| segment_distance(poly[i], poly[(i + 1) % n], p))
        .fold(f64::INFINITY, f64::min)
}

pub fn segment_distance(a: Point, b: Point, p: Point) -> f64 {
    let d = sub(b, a);
    let l2 = dot(d, d);
    if l2 == 0.0 {
        return dist(a, p);
    }
    let t = (dot(sub(p, a), d) / l2).clamp(0.0, 1.0);
    dist(lerp(a, b, t), p)
}

/// A planar isometry `x -> m * x + t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Isometry {
    pub m: [[f64; 2]; 2],
    pub t: [f64; 2],
}

impl Isometry {
    pub const IDENTITY: Isometry = Isometry {
        m: [[1.0, 0.0], [0.0, 1.0]],
        t: [0.0, 0.0],
    };

    /// Reflection across the line through `a` and `b`.
    pub fn reflection(a: Point, b: Point) -> Isometry {
        let d = sub(b, a);
        let l = norm(d);
        let (ux, uy) = (d[0] / l, d[1] / l);
        let m = [
            [2.0 * ux * ux - 1.0, 2.0 * ux * uy],
            [2.0 * ux * uy, 2.0 * uy * uy - 1.0],
        ];
        let ma = [m[0][0] * a[0] + m[0][1] * a[1], m[1][0] * a[0] + m[1][1] * a[1]];
        Isometry {
            m,
            t: [a[0] - ma[0], a[1] - ma[1]],
        }
    }

    pub fn apply(&self, p: Point) -> Point {
        [
            self.m[0][0] * p[0] + self.m[0][1] * p[1] + self.t[0],
            self.m[1][0] * p[0] + self.m[1][1] * p[1] + self.t[1],
        ]
    }

    /// `self ∘ inner`: apply `inner` first.
    pub fn compose(&self, inner: &Isometry) -> Isometry {
        let a = &self.m;
        let b = &inner.m;
        Isometry {
            m: [
                [
                    a[0][0] * b[0][0] + a[0][1] * b[1][0],
                    a[0][0] * b[0][1] + a[0][1] * b[1][1],
                ],
                [
                    a[1][0] * b[0][0] + a[1][1] * b[1][0],
                    a[1][0] * b[0][1] + a[1][1] * b[1][1],
                ],
            ],
            t: self.apply(inner.t),
        }
    }

    pub fn det(&self) -> f64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    /// True when the map reverses orientation.
    pub fn is_flip(&self) -> bool {
        self.det() < 0.0
    }

    pub fn max_abs_diff(&self, other: &Isometry) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                d = d.max((self.m[i][j] - other.m[i][j]).abs());
            }
            d = d.max((self.t[i] - other.t[i]).abs());
        }
        d
    }
}
