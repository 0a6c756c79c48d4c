//! Layer ordering of overlapping faces.
//!
//! Every pair of faces whose folded images overlap gets one boolean
//! variable (which one lies above). Constraints come in five families:
//!
//! * crease order: a mountain or valley edge fixes the order of its two faces;
//! * taco-taco: two folded edges on the same line with their flaps on the
//!   same side may nest but not interleave;
//! * taco-tortilla: a face spanning a folded edge cannot sit between the
//!   edge's two faces;
//! * tortilla-tortilla: two flat edges on the same line keep their faces in
//!   the same relative order on both sides;
//! * transitivity: three faces sharing a region are ordered without a cycle.
//!
//! The search is chronological backtracking with unit propagation, run
//! independently on each connected component of the constraint graph.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::fold::{Assignment, Point};
use crate::geom::{self, clip_convex, convex_overlap_area, orient, signed_area};
use crate::kernel::CreasePattern;

use super::geometry::FoldedGeometry;

/// Node and wall-clock limits for one validation.
#[derive(Clone, Debug)]
pub struct Budget {
    pub max_nodes: u64,
    pub deadline: Instant,
    pub nodes: u64,
}

impl Budget {
    pub fn new(max_nodes: u64, deadline: Instant) -> Self {
        Budget {
            max_nodes,
            deadline,
            nodes: 0,
        }
    }

    /// Counts one search node; true once either limit is hit.
    fn tick(&mut self) -> bool {
        self.nodes += 1;
        self.nodes > self.max_nodes || self.out_of_time()
    }

    pub fn out_of_time(&self) -> bool {
        Instant::now() >= self.deadline
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConstraintFamily {
    CreaseOrder,
    TacoTaco,
    TacoTortilla,
    TortillaTortilla,
    Transitivity,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Lit {
    var: u32,
    neg: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Shape {
    /// `l0`
    Unit,
    /// `l0 == l1`
    Equal,
    /// `(l0 != l1) == (l2 != l3)`
    NoInterleave,
    /// not all three equal
    NoCycle,
}

#[derive(Clone, Debug)]
pub struct Constraint {
    pub family: ConstraintFamily,
    pub faces: Vec<usize>,
    shape: Shape,
    lits: Vec<Lit>,
}

impl Constraint {
    fn eval(&self, value: impl Fn(u32) -> bool) -> bool {
        let l = |i: usize| value(self.lits[i].var) ^ self.lits[i].neg;
        match self.shape {
            Shape::Unit => l(0),
            Shape::Equal => l(0) == l(1),
            Shape::NoInterleave => (l(0) != l(1)) == (l(2) != l(3)),
            Shape::NoCycle => {
                let (a, b, c) = (l(0), l(1), l(2));
                !(a && b && c) && !(!a && !b && !c)
            }
        }
    }
}

/// Overlapping face pairs and the constraints over their order.
#[derive(Clone, Debug)]
pub struct LayerProblem {
    pub face_count: usize,
    /// Variable index to face pair `(i, j)` with `i < j`; `true` = `i` above `j`.
    pub pairs: Vec<(usize, usize)>,
    pub constraints: Vec<Constraint>,
    var_of: HashMap<(usize, usize), u32>,
}

/// A folded edge projected into the folded plane.
#[derive(Clone, Debug)]
struct EdgeImage {
    folds: bool,
    faces: [usize; 2],
    a: Point,
    b: Point,
}

pub struct Exhausted;

fn bbox(poly: &[Point]) -> [f64; 4] {
    let mut b = [f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY];
    for p in poly {
        b[0] = b[0].min(p[0]);
        b[1] = b[1].min(p[1]);
        b[2] = b[2].max(p[0]);
        b[3] = b[3].max(p[1]);
    }
    b
}

fn boxes_meet(a: &[f64; 4], b: &[f64; 4], tol: f64) -> bool {
    a[0] < b[2] - tol && b[0] < a[2] - tol && a[1] < b[3] - tol && b[1] < a[3] - tol
}

impl LayerProblem {
    fn lit(&self, x: usize, y: usize) -> Option<Lit> {
        if x < y {
            self.var_of.get(&(x, y)).map(|&var| Lit { var, neg: false })
        } else {
            self.var_of.get(&(y, x)).map(|&var| Lit { var, neg: true })
        }
    }

    /// Variable for the pair `{x, y}`, if the faces overlap.
    pub fn var(&self, x: usize, y: usize) -> Option<usize> {
        self.var_of.get(&(x.min(y), x.max(y))).map(|&v| v as usize)
    }

    fn push(&mut self, family: ConstraintFamily, faces: Vec<usize>, shape: Shape, pairs: &[(usize, usize)]) {
        let lits: Option<Vec<Lit>> = pairs.iter().map(|&(x, y)| self.lit(x, y)).collect();
        if let Some(lits) = lits {
            self.constraints.push(Constraint {
                family,
                faces,
                shape,
                lits,
            });
        }
    }

    /// Builds variables and constraints from the folded geometry. `tol` is
    /// the distance tolerance in paper units.
    pub fn build(
        cp: &CreasePattern,
        geometry: &FoldedGeometry,
        tol: f64,
        budget: &Budget,
    ) -> Result<LayerProblem, Exhausted> {
        let nf = cp.faces().len();
        let polys: Vec<Vec<Point>> = (0..nf).map(|f| geometry.folded_polygon(cp, f)).collect();
        let boxes: Vec<[f64; 4]> = polys.iter().map(|p| bbox(p)).collect();
        let area_tol = tol * cp.size();

        let mut problem = LayerProblem {
            face_count: nf,
            pairs: Vec::new(),
            constraints: Vec::new(),
            var_of: HashMap::new(),
        };
        let mut overlaps: Vec<Vec<usize>> = vec![Vec::new(); nf];
        let mut common: HashMap<(usize, usize), Vec<Point>> = HashMap::new();
        for i in 0..nf {
            if budget.out_of_time() {
                return Err(Exhausted);
            }
            for j in (i + 1)..nf {
                if !boxes_meet(&boxes[i], &boxes[j], tol) {
                    continue;
                }
                let clipped = clip_convex(&polys[i], &polys[j], 0.0);
                if clipped.len() >= 3 && signed_area(&clipped) > area_tol {
                    let var = problem.pairs.len() as u32;
                    problem.pairs.push((i, j));
                    problem.var_of.insert((i, j), var);
                    overlaps[i].push(j);
                    overlaps[j].push(i);
                    common.insert((i, j), clipped);
                }
            }
        }

        let edge_faces = cp.edge_faces();
        let mut images = Vec::new();
        for (e, sides) in edge_faces.iter().enumerate() {
            let assignment = cp.assignments()[e];
            if assignment == Assignment::B {
                continue;
            }
            let [Some(l), Some(r)] = *sides else { continue };
            let [va, vb] = cp.edges()[e];
            let t = &geometry.transforms[l];
            let image = EdgeImage {
                folds: assignment.is_fold(),
                faces: [l, r],
                a: t.apply(cp.vertices()[va]),
                b: t.apply(cp.vertices()[vb]),
            };
            if assignment.is_fold() {
                let (top, bottom) = match (assignment, geometry.flipped[l]) {
                    (Assignment::V, true) | (Assignment::M, false) => (l, r),
                    _ => (r, l),
                };
                problem.push(
                    ConstraintFamily::CreaseOrder,
                    vec![top, bottom],
                    Shape::Unit,
                    &[(top, bottom)],
                );
            }
            images.push(image);
        }

        let side =
            |face: usize, img: &EdgeImage| -> f64 { orient(img.a, img.b, geom::centroid(&polys[face])).signum() };

        for i in 0..images.len() {
            if budget.out_of_time() {
                return Err(Exhausted);
            }
            for j in (i + 1)..images.len() {
                let (p, q) = (&images[i], &images[j]);
                if !collinear_overlap(p, q, tol) {
                    continue;
                }
                let [a, b] = p.faces;
                let [c, d] = q.faces;
                if a == c || a == d || b == c || b == d {
                    continue;
                }
                match (p.folds, q.folds) {
                    (true, true) => {
                        let s = side(a, p);
                        if side(b, p) == s && side(c, p) == s && side(d, p) == s {
                            problem.push(
                                ConstraintFamily::TacoTaco,
                                vec![a, b, c, d],
                                Shape::NoInterleave,
                                &[(c, a), (c, b), (d, a), (d, b)],
                            );
                        }
                    }
                    (true, false) | (false, true) => {
                        let (taco, flat) = if p.folds { (p, q) } else { (q, p) };
                        let [x, y] = taco.faces;
                        let s = side(x, taco);
                        let [u, w] = flat.faces;
                        let inner = if side(u, taco) == s { u } else { w };
                        problem.push(
                            ConstraintFamily::TacoTortilla,
                            vec![x, y, inner],
                            Shape::Equal,
                            &[(inner, x), (inner, y)],
                        );
                    }
                    (false, false) => {
                        let (c, d) = if side(c, p) == side(a, p) { (c, d) } else { (d, c) };
                        problem.push(
                            ConstraintFamily::TortillaTortilla,
                            vec![a, b, c, d],
                            Shape::Equal,
                            &[(a, c), (b, d)],
                        );
                    }
                }
            }
        }

        for img in &images {
            if budget.out_of_time() {
                return Err(Exhausted);
            }
            let [x, y] = img.faces;
            let len = geom::dist(img.a, img.b);
            let seg_box = bbox(&[img.a, img.b]);
            for c in 0..nf {
                if c == x || c == y {
                    continue;
                }
                let cb = &boxes[c];
                if seg_box[2] < cb[0] || seg_box[0] > cb[2] || seg_box[3] < cb[1] || seg_box[1] > cb[3] {
                    continue;
                }
                let Some((t0, t1)) = geom::clip_segment_convex(img.a, img.b, &polys[c], -tol) else {
                    continue;
                };
                if (t1 - t0) * len <= tol {
                    continue;
                }
                let mid = geom::lerp(img.a, img.b, 0.5 * (t0 + t1));
                if geom::boundary_distance(&polys[c], mid) <= tol {
                    continue;
                }
                let family = if img.folds {
                    ConstraintFamily::TacoTortilla
                } else {
                    ConstraintFamily::TortillaTortilla
                };
                problem.push(family, vec![x, y, c], Shape::Equal, &[(c, x), (c, y)]);
            }
        }

        for a in 0..nf {
            if budget.out_of_time() {
                return Err(Exhausted);
            }
            let mut around: Vec<usize> = overlaps[a].iter().copied().filter(|&b| b > a).collect();
            around.sort_unstable();
            for (k, &b) in around.iter().enumerate() {
                let ab = &common[&(a, b)];
                for &c in &around[k + 1..] {
                    if !problem.var_of.contains_key(&(b, c)) {
                        continue;
                    }
                    if convex_overlap_area(ab, &polys[c], 0.0) > area_tol {
                        problem.push(
                            ConstraintFamily::Transitivity,
                            vec![a, b, c],
                            Shape::NoCycle,
                            &[(a, b), (b, c), (c, a)],
                        );
                    }
                }
            }
        }
        Ok(problem)
    }

    /// Evaluates every constraint against a full assignment; returns the
    /// indices of the violated ones.
    pub fn violated(&self, values: &[bool]) -> Vec<usize> {
        self.constraints
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.eval(|v| values[v as usize]))
            .map(|(i, _)| i)
            .collect()
    }
}

fn collinear_overlap(p: &EdgeImage, q: &EdgeImage, tol: f64) -> bool {
    let len = geom::dist(p.a, p.b);
    if geom::line_distance(p.a, p.b, q.a) > tol || geom::line_distance(p.a, p.b, q.b) > tol {
        return false;
    }
    let dir = geom::scale(geom::sub(p.b, p.a), 1.0 / len);
    let s = |x: Point| geom::dot(geom::sub(x, p.a), dir);
    let (lo, hi) = (s(q.a).min(s(q.b)), s(q.a).max(s(q.b)));
    hi.min(len) - lo.max(0.0) > tol
}

/// The constraint that closed the search.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Conflict {
    pub family: ConstraintFamily,
    pub faces: Vec<usize>,
}

pub enum LayerOutcome {
    Solved(Vec<bool>),
    Infeasible(Conflict),
    Exhausted,
}

enum Check {
    Fine,
    Conflict,
    Forced(u32, bool),
}

struct Search<'a> {
    problem: &'a LayerProblem,
    watch: Vec<Vec<u32>>,
    vals: Vec<i8>,
    trail: Vec<u32>,
}

impl<'a> Search<'a> {
    fn new(problem: &'a LayerProblem) -> Self {
        let mut watch = vec![Vec::new(); problem.pairs.len()];
        for (i, c) in problem.constraints.iter().enumerate() {
            for lit in &c.lits {
                if watch[lit.var as usize].last() != Some(&(i as u32)) {
                    watch[lit.var as usize].push(i as u32);
                }
            }
        }
        Search {
            problem,
            watch,
            vals: vec![-1; problem.pairs.len()],
            trail: Vec::new(),
        }
    }

    fn assign(&mut self, var: u32, value: bool) {
        self.vals[var as usize] = value as i8;
        self.trail.push(var);
    }

    fn undo(&mut self, mark: usize) {
        while self.trail.len() > mark {
            let v = self.trail.pop().unwrap();
            self.vals[v as usize] = -1;
        }
    }

    fn examine(&mut self, ci: u32) -> Check {
        let c = &self.problem.constraints[ci as usize];
        let mut open: Option<u32> = None;
        for lit in &c.lits {
            if self.vals[lit.var as usize] < 0 {
                match open {
                    None => open = Some(lit.var),
                    Some(v) if v == lit.var => {}
                    Some(_) => return Check::Fine,
                }
            }
        }
        let vals = &mut self.vals;
        match open {
            None => {
                if c.eval(|v| vals[v as usize] == 1) {
                    Check::Fine
                } else {
                    Check::Conflict
                }
            }
            Some(var) => {
                vals[var as usize] = 1;
                let with_true = c.eval(|v| vals[v as usize] == 1);
                vals[var as usize] = 0;
                let with_false = c.eval(|v| vals[v as usize] == 1);
                vals[var as usize] = -1;
                match (with_true, with_false) {
                    (true, true) => Check::Fine,
                    (true, false) => Check::Forced(var, true),
                    (false, true) => Check::Forced(var, false),
                    (false, false) => Check::Conflict,
                }
            }
        }
    }

    /// Propagates from trail position `head`; returns the failing constraint.
    fn propagate(&mut self, mut head: usize) -> Result<(), u32> {
        while head < self.trail.len() {
            let var = self.trail[head] as usize;
            head += 1;
            for k in 0..self.watch[var].len() {
                let ci = self.watch[var][k];
                match self.examine(ci) {
                    Check::Fine => {}
                    Check::Conflict => return Err(ci),
                    Check::Forced(v, value) => self.assign(v, value),
                }
            }
        }
        Ok(())
    }

    fn conflict(&self, ci: u32) -> Conflict {
        let c = &self.problem.constraints[ci as usize];
        Conflict {
            family: c.family,
            faces: c.faces.clone(),
        }
    }

    fn solve_component(&mut self, vars: &[u32], budget: &mut Budget) -> Result<(), LayerOutcome> {
        let mut decisions: Vec<(u32, usize, bool)> = Vec::new();
        let mut cursor = 0;
        loop {
            while cursor < vars.len() && self.vals[vars[cursor] as usize] >= 0 {
                cursor += 1;
            }
            if cursor == vars.len() {
                return Ok(());
            }
            if budget.tick() {
                return Err(LayerOutcome::Exhausted);
            }
            let var = vars[cursor];
            let mark = self.trail.len();
            self.assign(var, true);
            decisions.push((var, mark, false));
            let mut result = self.propagate(mark);
            while let Err(ci) = result {
                loop {
                    let Some((var, mark, second)) = decisions.pop() else {
                        return Err(LayerOutcome::Infeasible(self.conflict(ci)));
                    };
                    self.undo(mark);
                    if !second {
                        if budget.tick() {
                            return Err(LayerOutcome::Exhausted);
                        }
                        self.assign(var, false);
                        decisions.push((var, mark, true));
                        result = self.propagate(mark);
                        break;
                    }
                }
                cursor = 0;
            }
        }
    }
}

fn components(problem: &LayerProblem) -> Vec<Vec<u32>> {
    let n = problem.pairs.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for c in &problem.constraints {
        let first = c.lits[0].var as usize;
        for lit in &c.lits[1..] {
            let (ra, rb) = (find(&mut parent, first), find(&mut parent, lit.var as usize));
            if ra != rb {
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
    }
    let mut groups: Vec<Vec<u32>> = Vec::new();
    let mut slot: HashMap<usize, usize> = HashMap::new();
    for v in 0..n {
        let r = find(&mut parent, v);
        let idx = *slot.entry(r).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[idx].push(v as u32);
    }
    groups
}

/// Finds one assignment satisfying every constraint.
pub fn solve(problem: &LayerProblem, budget: &mut Budget) -> LayerOutcome {
    let mut search = Search::new(problem);
    for (i, c) in problem.constraints.iter().enumerate() {
        if c.shape == Shape::Unit {
            let lit = c.lits[0];
            match search.vals[lit.var as usize] {
                -1 => search.assign(lit.var, !lit.neg),
                v if (v == 1) != !lit.neg => {
                    return LayerOutcome::Infeasible(search.conflict(i as u32));
                }
                _ => {}
            }
        }
    }
    if let Err(ci) = search.propagate(0) {
        return LayerOutcome::Infeasible(search.conflict(ci));
    }
    for group in components(problem) {
        if let Err(outcome) = search.solve_component(&group, budget) {
            return outcome;
        }
    }
    LayerOutcome::Solved(search.vals.iter().map(|&v| v == 1).collect())
}

/// Bottom-to-top stacking consistent with the pairwise order. Ties go to
/// the lower face index; a cycle (possible only between faces that never
/// share a common region) is broken at the face with the fewest pending
/// faces below it.
pub fn stacking(face_count: usize, pairs: &[(usize, usize)], above: &[bool]) -> Vec<usize> {
    let mut below_count = vec![0usize; face_count];
    let mut higher: Vec<Vec<usize>> = vec![Vec::new(); face_count];
    for (&(i, j), &i_above) in pairs.iter().zip(above) {
        let (lo, hi) = if i_above { (j, i) } else { (i, j) };
        higher[lo].push(hi);
        below_count[hi] += 1;
    }
    let mut placed = vec![false; face_count];
    let mut ready: BinaryHeap<Reverse<usize>> = (0..face_count).filter(|&f| below_count[f] == 0).map(Reverse).collect();
    let mut order = Vec::with_capacity(face_count);
    while order.len() < face_count {
        let next = match ready.pop() {
            Some(Reverse(f)) if !placed[f] => f,
            Some(_) => continue,
            None => (0..face_count)
                .filter(|&f| !placed[f])
                .min_by_key(|&f| (below_count[f], f))
                .expect("unplaced face remains"),
        };
        placed[next] = true;
        order.push(next);
        for &h in &higher[next] {
            if below_count[h] > 0 {
                below_count[h] -= 1;
                if below_count[h] == 0 && !placed[h] {
                    ready.push(Reverse(h));
                }
            }
        }
    }
    order
}
