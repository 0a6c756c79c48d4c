//! Per-face placement of the folded sheet.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fold::{Assignment, Point};
use crate::geom::{dist, signed_area, Isometry};
use crate::kernel::CreasePattern;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("the pattern has no faces")]
    NoFaces,
    #[error("faces {0:?} are not reachable from the root face")]
    DisconnectedFaces(Vec<usize>),
    #[error("faces {0} and {1} disagree on the position of their shared edge")]
    Inconsistent(usize, usize),
}

/// Isometry and facing of every face after folding.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldedGeometry {
    pub root: usize,
    pub transforms: Vec<Isometry>,
    /// True when the face shows its back side from above.
    pub flipped: Vec<bool>,
}

impl FoldedGeometry {
    /// Folded outline of a face, counter-clockwise.
    pub fn folded_polygon(&self, cp: &CreasePattern, face: usize) -> Vec<Point> {
        let t = &self.transforms[face];
        let mut poly: Vec<Point> = cp.faces()[face].iter().map(|&v| t.apply(cp.vertices()[v])).collect();
        if signed_area(&poly) < 0.0 {
            poly.reverse();
        }
        poly
    }

    /// Largest edge-length change over every face's boundary.
    pub fn max_length_error(&self, cp: &CreasePattern) -> f64 {
        let mut worst: f64 = 0.0;
        for (f, cycle) in cp.faces().iter().enumerate() {
            let t = &self.transforms[f];
            let n = cycle.len();
            for i in 0..n {
                let a = cp.vertices()[cycle[i]];
                let b = cp.vertices()[cycle[(i + 1) % n]];
                worst = worst.max((dist(t.apply(a), t.apply(b)) - dist(a, b)).abs());
            }
        }
        worst
    }
}

const CONSISTENCY_TOL: f64 = 1e-6;

/// Places every face by walking the face-adjacency graph from the face at
/// the bottom-left corner. Mountain and valley edges reflect, flat edges
/// do not.
pub fn compute_folded_geometry(cp: &CreasePattern) -> Result<FoldedGeometry, GeometryError> {
    let nf = cp.faces().len();
    if nf == 0 {
        return Err(GeometryError::NoFaces);
    }
    let eps = cp.epsilon();
    let root = cp.face_containing([eps, eps]).unwrap_or(0);

    let edge_faces = cp.edge_faces();
    let mut adjacency: Vec<Vec<(usize, usize)>> = vec![Vec::new(); nf];
    for (e, sides) in edge_faces.iter().enumerate() {
        if cp.assignments()[e] == Assignment::B {
            continue;
        }
        if let [Some(l), Some(r)] = *sides {
            adjacency[l].push((r, e));
            adjacency[r].push((l, e));
        }
    }
    for list in adjacency.iter_mut() {
        list.sort_unstable();
    }

    let mut transforms: Vec<Option<Isometry>> = vec![None; nf];
    transforms[root] = Some(Isometry::IDENTITY);
    let mut queue = VecDeque::from([root]);
    while let Some(f) = queue.pop_front() {
        let tf = transforms[f].expect("queued faces are placed");
        for &(g, e) in &adjacency[f] {
            let [a, b] = cp.edges()[e];
            let candidate = if cp.assignments()[e].is_fold() {
                tf.compose(&Isometry::reflection(cp.vertices()[a], cp.vertices()[b]))
            } else {
                tf
            };
            match transforms[g] {
                None => {
                    transforms[g] = Some(candidate);
                    queue.push_back(g);
                }
                Some(existing) => {
                    if existing.max_abs_diff(&candidate) > CONSISTENCY_TOL {
                        return Err(GeometryError::Inconsistent(f.min(g), f.max(g)));
                    }
                }
            }
        }
    }

    let missing: Vec<usize> = (0..nf).filter(|&f| transforms[f].is_none()).collect();
    if !missing.is_empty() {
        return Err(GeometryError::DisconnectedFaces(missing));
    }
    let transforms: Vec<Isometry> = transforms.into_iter().map(Option::unwrap).collect();
    let flipped = transforms.iter().map(Isometry::is_flip).collect();
    Ok(FoldedGeometry {
        root,
        transforms,
        flipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{Segment, PAPER_SIZE};

    #[test]
    fn blank_is_identity() {
        let cp = CreasePattern::new_blank(PAPER_SIZE);
        let g = compute_folded_geometry(&cp).unwrap();
        assert_eq!(g.transforms, vec![Isometry::IDENTITY]);
        assert_eq!(g.flipped, vec![false]);
    }

    #[test]
    fn vertical_valley_folds_right_half_over() {
        let cp = CreasePattern::new_blank(PAPER_SIZE)
            .insert_crease(Segment::new([5.0, 0.0], [5.0, 10.0]), Assignment::V)
            .unwrap();
        let g = compute_folded_geometry(&cp).unwrap();
        let right = cp.face_containing([7.0, 5.0]).unwrap();
        assert_ne!(right, g.root);
        assert!(g.flipped[right]);
        // (10, 0) lands on (0, 0), (10, 10) on (0, 10)
        let t = g.transforms[right];
        assert!(dist(t.apply([10.0, 0.0]), [0.0, 0.0]) < 1e-12);
        assert!(dist(t.apply([10.0, 10.0]), [0.0, 10.0]) < 1e-12);
        let poly = g.folded_polygon(&cp, right);
        for p in poly {
            assert!(p[0] > -1e-12 && p[0] < 5.0 + 1e-12);
        }
        assert!(g.max_length_error(&cp) < 1e-12);
    }

    #[test]
    fn flat_edges_do_not_reflect() {
        let fold = crate::fold::FoldFile::new(
            vec![[0.0, 0.0], [10.0, 0.0], [10.0, 10.0], [0.0, 10.0]],
            vec![[0, 1], [1, 2], [2, 3], [3, 0], [0, 2]],
            vec![
                Assignment::B,
                Assignment::B,
                Assignment::B,
                Assignment::B,
                Assignment::F,
            ],
            vec![vec![0, 1, 2], vec![0, 2, 3]],
            Default::default(),
        )
        .unwrap();
        let cp = CreasePattern::from_fold(&fold).unwrap();
        let g = compute_folded_geometry(&cp).unwrap();
        assert!(g.transforms.iter().all(|t| *t == Isometry::IDENTITY));
    }
}
