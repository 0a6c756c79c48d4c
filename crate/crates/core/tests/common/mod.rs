#![allow(dead_code)]

//! Independent checks of folded states, written against raw geometry
//! rather than the solver's constraint model.

use forge_core::fold::{Assignment, Point};
use forge_core::geom::{boundary_distance, dist, lerp, line_distance, polygon_contains, segment_distance};
use forge_core::kernel::{CreasePattern, Segment, PAPER_SIZE};
use forge_core::solver::FoldedGeometry;

pub fn pattern(creases: &[(Point, Point, Assignment)]) -> CreasePattern {
    let mut cp = CreasePattern::new_blank(PAPER_SIZE);
    for &(a, b, asg) in creases {
        cp = cp.insert_crease(Segment::new(a, b), asg).unwrap();
    }
    cp
}

#[derive(Debug, Clone, PartialEq)]
pub enum Condition {
    /// `top` lies above `bottom`.
    Order { top: usize, bottom: usize },
    /// `c` is not strictly between `a` and `b`.
    NotBetween { c: usize, a: usize, b: usize },
    /// `{a, b}` and `{c, d}` do not interleave.
    NoInterleave { a: usize, b: usize, c: usize, d: usize },
}

fn strictly_inside(poly: &[Point], p: Point) -> bool {
    polygon_contains(poly, p) && boundary_distance(poly, p) > 1e-7
}

pub struct Sampled {
    pub polys: Vec<Vec<Point>>,
    pub conditions: Vec<Condition>,
    pub overlapping: Vec<(usize, usize)>,
}

/// Samples the folded geometry to list the conditions a stacking must meet.
/// Only mountain and valley edges are considered.
pub fn sample_conditions(cp: &CreasePattern, g: &FoldedGeometry) -> Sampled {
    let nf = cp.faces().len();
    let polys: Vec<Vec<Point>> = (0..nf).map(|f| g.folded_polygon(cp, f)).collect();

    let mut overlapping = Vec::new();
    const GRID: usize = 64;
    for a in 0..nf {
        for b in (a + 1)..nf {
            let bb = |p: &Vec<Point>| {
                p.iter().fold([f64::MAX, f64::MAX, f64::MIN, f64::MIN], |m, q| {
                    [m[0].min(q[0]), m[1].min(q[1]), m[2].max(q[0]), m[3].max(q[1])]
                })
            };
            let (ba, bb2) = (bb(&polys[a]), bb(&polys[b]));
            let lo = [ba[0].max(bb2[0]), ba[1].max(bb2[1])];
            let hi = [ba[2].min(bb2[2]), ba[3].min(bb2[3])];
            if lo[0] >= hi[0] || lo[1] >= hi[1] {
                continue;
            }
            let hit = (0..GRID).any(|i| {
                (0..GRID).any(|j| {
                    let p = [
                        lo[0] + (hi[0] - lo[0]) * (i as f64 + 0.5) / GRID as f64,
                        lo[1] + (hi[1] - lo[1]) * (j as f64 + 0.5) / GRID as f64,
                    ];
                    strictly_inside(&polys[a], p) && strictly_inside(&polys[b], p)
                })
            });
            if hit {
                overlapping.push((a, b));
            }
        }
    }

    struct Crease {
        faces: [usize; 2],
        a: Point,
        b: Point,
    }
    let mut creases = Vec::new();
    let mut conditions = Vec::new();
    for (e, sides) in cp.edge_faces().iter().enumerate() {
        let asg = cp.assignments()[e];
        if !asg.is_fold() {
            continue;
        }
        let [Some(l), Some(r)] = *sides else { continue };
        let [va, vb] = cp.edges()[e];
        let t = g.transforms[l];
        let front_up = |f: usize| g.transforms[f].det() > 0.0;
        // valley: the face whose front now looks down covers the other
        let (top, bottom) = match asg {
            Assignment::V => {
                if front_up(l) {
                    (r, l)
                } else {
                    (l, r)
                }
            }
            _ => {
                if front_up(l) {
                    (l, r)
                } else {
                    (r, l)
                }
            }
        };
        conditions.push(Condition::Order { top, bottom });
        creases.push(Crease {
            faces: [l, r],
            a: t.apply(cp.vertices()[va]),
            b: t.apply(cp.vertices()[vb]),
        });
    }

    const STEPS: usize = 16;
    let delta = 1e-4;
    for (i, c) in creases.iter().enumerate() {
        let len = dist(c.a, c.b);
        let n = [-(c.b[1] - c.a[1]) / len, (c.b[0] - c.a[0]) / len];
        for k in 1..STEPS {
            let x = lerp(c.a, c.b, k as f64 / STEPS as f64);
            let plus = [x[0] + delta * n[0], x[1] + delta * n[1]];
            let minus = [x[0] - delta * n[0], x[1] - delta * n[1]];
            let side = |f: usize| {
                if strictly_inside(&polys[f], plus) {
                    1
                } else if strictly_inside(&polys[f], minus) {
                    -1
                } else {
                    0
                }
            };
            for (f, poly) in polys.iter().enumerate() {
                if c.faces.contains(&f) {
                    continue;
                }
                if strictly_inside(poly, plus) && strictly_inside(poly, minus) {
                    let cond = Condition::NotBetween {
                        c: f,
                        a: c.faces[0],
                        b: c.faces[1],
                    };
                    if !conditions.contains(&cond) {
                        conditions.push(cond);
                    }
                }
            }
            let s = side(c.faces[0]);
            if s == 0 || side(c.faces[1]) != s {
                continue;
            }
            for (j, o) in creases.iter().enumerate() {
                if j <= i || o.faces.iter().any(|f| c.faces.contains(f)) {
                    continue;
                }
                let parallel = line_distance(c.a, c.b, o.a) < 1e-7 && line_distance(c.a, c.b, o.b) < 1e-7;
                if !parallel || segment_distance(o.a, o.b, x) > 1e-7 {
                    continue;
                }
                if side(o.faces[0]) == s && side(o.faces[1]) == s {
                    let cond = Condition::NoInterleave {
                        a: c.faces[0],
                        b: c.faces[1],
                        c: o.faces[0],
                        d: o.faces[1],
                    };
                    if !conditions.contains(&cond) {
                        conditions.push(cond);
                    }
                }
            }
        }
    }
    Sampled {
        polys,
        conditions,
        overlapping,
    }
}

/// `stacking` lists faces bottom to top.
pub fn stacking_ok(conditions: &[Condition], stacking: &[usize]) -> bool {
    let mut pos = vec![0usize; stacking.len()];
    for (i, &f) in stacking.iter().enumerate() {
        pos[f] = i;
    }
    let between =
        |x: usize, a: usize, b: usize| (pos[a] < pos[x] && pos[x] < pos[b]) || (pos[b] < pos[x] && pos[x] < pos[a]);
    conditions.iter().all(|c| match *c {
        Condition::Order { top, bottom } => pos[top] > pos[bottom],
        Condition::NotBetween { c, a, b } => !between(c, a, b),
        Condition::NoInterleave { a, b, c, d } => {
            let ab_split = between(c, a, b) != between(d, a, b);
            !ab_split
        }
    })
}

/// Every permutation of `0..n` that satisfies the conditions.
pub fn valid_stackings(n: usize, conditions: &[Condition]) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut perm: Vec<usize> = (0..n).collect();
    permute(&mut perm, 0, conditions, &mut out);
    out.sort();
    out
}

fn permute(perm: &mut Vec<usize>, k: usize, conditions: &[Condition], out: &mut Vec<Vec<usize>>) {
    if k == perm.len() {
        if stacking_ok(conditions, perm) {
            out.push(perm.clone());
        }
        return;
    }
    for i in k..perm.len() {
        perm.swap(k, i);
        permute(perm, k + 1, conditions, out);
        perm.swap(k, i);
    }
}
