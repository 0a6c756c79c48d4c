//! Flat-foldability: local vertex conditions, face placement and layer order.

pub mod geometry;
pub mod layers;
pub mod local;

use std::fmt;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::geom::Isometry;
use crate::kernel::CreasePattern;

pub use geometry::{compute_folded_geometry, FoldedGeometry, GeometryError};
pub use layers::{ConstraintFamily, LayerProblem};
pub use local::{check_kawasaki, check_maekawa, kawasaki_holds, maekawa_holds, LocalCheckError};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub max_nodes: u64,
    pub time_limit_ms: u64,
    /// Angle tolerance for Kawasaki, radians.
    pub kawasaki_tol: f64,
    /// Distance tolerance used when comparing folded images.
    pub tol: f64,
}

impl SolverConfig {
    pub fn time_limit(&self) -> Duration {
        Duration::from_millis(self.time_limit_ms)
    }

    /// When the search stops, leaving up to 5% (at most 250 ms) of the limit to wind down and report.
    pub fn search_deadline(&self, start: Instant) -> Instant {
        let limit = self.time_limit();
        start + limit - (limit / 20).min(Duration::from_millis(250))
    }
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_nodes: 200_000,
            time_limit_ms: 5_000,
            kawasaki_tol: 1e-9,
            tol: 1e-9,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictStatus {
    Valid,
    LocallyInvalid,
    GloballyInvalid,
    /// Search budget ran out before a decision.
    Unknown,
}

impl VerdictStatus {
    pub fn is_valid(self) -> bool {
        self == VerdictStatus::Valid
    }
}

impl fmt::Display for VerdictStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            VerdictStatus::Valid => "valid",
            VerdictStatus::LocallyInvalid => "locally_invalid",
            VerdictStatus::GloballyInvalid => "globally_invalid",
            VerdictStatus::Unknown => "unknown",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    Maekawa,
    Kawasaki,
    OddDegree,
    Geometry,
    CreaseOrder,
    TacoTaco,
    TacoTortilla,
    TortillaTortilla,
    Transitivity,
    Budget,
}

impl From<ConstraintFamily> for Rule {
    fn from(f: ConstraintFamily) -> Self {
        match f {
            ConstraintFamily::CreaseOrder => Rule::CreaseOrder,
            ConstraintFamily::TacoTaco => Rule::TacoTaco,
            ConstraintFamily::TacoTortilla => Rule::TacoTortilla,
            ConstraintFamily::TortillaTortilla => Rule::TortillaTortilla,
            ConstraintFamily::Transitivity => Rule::Transitivity,
        }
    }
}

/// Where a violation was found.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Site {
    Vertex(usize),
    Faces(Vec<usize>),
    Pattern,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Violation {
    pub site: Site,
    pub rule: Rule,
}

/// One flat folded state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldedState {
    pub face_transforms: Vec<Isometry>,
    /// True when the face shows its back side from above.
    pub flipped: Vec<bool>,
    /// Overlapping face pairs `(i, j)`, `i < j`, and whether `i` lies above `j`.
    pub pair_order: Vec<((usize, usize), bool)>,
    /// All faces from bottom to top.
    pub stacking: Vec<usize>,
}

impl FoldedState {
    /// Order of the pair `{a, b}`: `Some(true)` when `a` is above `b`.
    pub fn above(&self, a: usize, b: usize) -> Option<bool> {
        let key = (a.min(b), a.max(b));
        let i = self.pair_order.binary_search_by_key(&key, |(p, _)| *p).ok()?;
        let above = self.pair_order[i].1;
        Some(if a < b { above } else { !above })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldabilityVerdict {
    pub status: VerdictStatus,
    pub witness: Option<FoldedState>,
    pub violations: Vec<Violation>,
    /// Search nodes spent.
    pub nodes: u64,
}

impl FoldabilityVerdict {
    fn failed(status: VerdictStatus, violations: Vec<Violation>, nodes: u64) -> Self {
        FoldabilityVerdict {
            status,
            witness: None,
            violations,
            nodes,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.status.is_valid()
    }
}

/// Maekawa and Kawasaki at every interior vertex that carries a folding
/// crease. Returns the violations in vertex order.
pub fn local_violations(cp: &CreasePattern, kawasaki_tol: f64) -> Vec<Violation> {
    let mut out = Vec::new();
    for v in 0..cp.vertices().len() {
        let star = cp.vertex_star(v).expect("vertex index in range");
        if star.boundary || star.fold_assignments().is_empty() {
            continue;
        }
        let site = Site::Vertex(v);
        if !check_maekawa(&star).unwrap_or(true) {
            out.push(Violation {
                site: site.clone(),
                rule: Rule::Maekawa,
            });
        }
        match check_kawasaki(&star, kawasaki_tol) {
            Ok(true) | Err(LocalCheckError::BoundaryVertex) => {}
            Ok(false) => out.push(Violation {
                site,
                rule: Rule::Kawasaki,
            }),
            Err(LocalCheckError::OddDegree) => out.push(Violation {
                site,
                rule: Rule::OddDegree,
            }),
        }
    }
    out
}

/// Layer search over an already placed pattern.
pub fn solve_layer_order(cp: &CreasePattern, geometry: &FoldedGeometry, config: &SolverConfig) -> FoldabilityVerdict {
    let mut budget = layers::Budget::new(config.max_nodes, config.search_deadline(Instant::now()));
    solve_with_budget(cp, geometry, config, &mut budget)
}

fn budget_verdict(nodes: u64) -> FoldabilityVerdict {
    FoldabilityVerdict::failed(
        VerdictStatus::Unknown,
        vec![Violation {
            site: Site::Pattern,
            rule: Rule::Budget,
        }],
        nodes,
    )
}

fn solve_with_budget(
    cp: &CreasePattern,
    geometry: &FoldedGeometry,
    config: &SolverConfig,
    budget: &mut layers::Budget,
) -> FoldabilityVerdict {
    let problem = match LayerProblem::build(cp, geometry, config.tol, budget) {
        Ok(p) => p,
        Err(layers::Exhausted) => return budget_verdict(budget.nodes),
    };
    match layers::solve(&problem, budget) {
        layers::LayerOutcome::Solved(values) => {
            let stacking = layers::stacking(problem.face_count, &problem.pairs, &values);
            let pair_order = problem.pairs.iter().copied().zip(values).collect();
            FoldabilityVerdict {
                status: VerdictStatus::Valid,
                witness: Some(FoldedState {
                    face_transforms: geometry.transforms.clone(),
                    flipped: geometry.flipped.clone(),
                    pair_order,
                    stacking,
                }),
                violations: Vec::new(),
                nodes: budget.nodes,
            }
        }
        layers::LayerOutcome::Infeasible(conflict) => {
            let rule = conflict.family.into();
            FoldabilityVerdict::failed(
                VerdictStatus::GloballyInvalid,
                vec![Violation {
                    site: Site::Faces(conflict.faces),
                    rule,
                }],
                budget.nodes,
            )
        }
        layers::LayerOutcome::Exhausted => budget_verdict(budget.nodes),
    }
}

/// Full validation: local checks, then face placement, then layer search.
pub fn is_foldable(cp: &CreasePattern, config: &SolverConfig) -> FoldabilityVerdict {
    let mut budget = layers::Budget::new(config.max_nodes, config.search_deadline(Instant::now()));
    let local = local_violations(cp, config.kawasaki_tol);
    if !local.is_empty() {
        return FoldabilityVerdict::failed(VerdictStatus::LocallyInvalid, local, 0);
    }
    let geometry = match compute_folded_geometry(cp) {
        Ok(g) => g,
        Err(e) => {
            let site = match e {
                GeometryError::Inconsistent(a, b) => Site::Faces(vec![a, b]),
                GeometryError::DisconnectedFaces(faces) => Site::Faces(faces),
                GeometryError::NoFaces => Site::Pattern,
            };
            return FoldabilityVerdict::failed(
                VerdictStatus::GloballyInvalid,
                vec![Violation {
                    site,
                    rule: Rule::Geometry,
                }],
                0,
            );
        }
    };
    solve_with_budget(cp, &geometry, config, &mut budget)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fold::Assignment::{self, M, V};
    use crate::kernel::{Segment, PAPER_SIZE};

    fn pattern(creases: &[([f64; 2], [f64; 2], Assignment)]) -> CreasePattern {
        let mut cp = CreasePattern::new_blank(PAPER_SIZE);
        for &(a, b, asg) in creases {
            cp = cp.insert_crease(Segment::new(a, b), asg).unwrap();
        }
        cp
    }

    #[test]
    fn blank_is_valid() {
        let v = is_foldable(&CreasePattern::new_blank(PAPER_SIZE), &SolverConfig::default());
        assert_eq!(v.status, VerdictStatus::Valid);
        assert_eq!(v.witness.unwrap().stacking, vec![0]);
    }

    #[test]
    fn single_fold_has_two_layers() {
        let cp = pattern(&[([5.0, 0.0], [5.0, 10.0], V)]);
        let v = is_foldable(&cp, &SolverConfig::default());
        assert_eq!(v.status, VerdictStatus::Valid);
        let w = v.witness.unwrap();
        assert_eq!(w.stacking.len(), 2);
        assert_eq!(w.pair_order.len(), 1);
        // valley: the flipped (right) face comes up on top
        let right = cp.face_containing([7.0, 5.0]).unwrap();
        assert_eq!(*w.stacking.last().unwrap(), right);
    }

    #[test]
    fn mountain_puts_flipped_face_below() {
        let cp = pattern(&[([5.0, 0.0], [5.0, 10.0], M)]);
        let w = is_foldable(&cp, &SolverConfig::default()).witness.unwrap();
        let right = cp.face_containing([7.0, 5.0]).unwrap();
        assert_eq!(w.stacking[0], right);
    }

    #[test]
    fn maekawa_failure_skips_search() {
        let cp = pattern(&[
            ([5.0, 0.0], [5.0, 5.0], M),
            ([5.0, 5.0], [5.0, 10.0], M),
            ([0.0, 5.0], [5.0, 5.0], V),
            ([5.0, 5.0], [10.0, 5.0], V),
        ]);
        let v = is_foldable(&cp, &SolverConfig::default());
        assert_eq!(v.status, VerdictStatus::LocallyInvalid);
        assert_eq!(v.nodes, 0);
        assert!(v.violations.iter().any(|x| x.rule == Rule::Maekawa));
    }

    #[test]
    fn budget_trips_to_unknown() {
        // a roll of five valleys needs a few decisions
        let creases: Vec<_> = (1..=5)
            .map(|i| {
                let x = 10.0 * i as f64 / 6.0;
                ([x, 0.0], [x, 10.0], V)
            })
            .collect();
        let cp = pattern(&creases);
        let full = is_foldable(&cp, &SolverConfig::default());
        assert_eq!(full.status, VerdictStatus::Valid);
        assert!(full.nodes > 1);
        let config = SolverConfig {
            max_nodes: 1,
            ..SolverConfig::default()
        };
        let v = is_foldable(&cp, &config);
        assert_eq!(v.status, VerdictStatus::Unknown);
        assert!(v.witness.is_none());
        let config = SolverConfig {
            time_limit_ms: 0,
            ..SolverConfig::default()
        };
        assert_eq!(is_foldable(&cp, &config).status, VerdictStatus::Unknown);
    }

    #[test]
    fn crossing_valleys_are_globally_invalid() {
        // two perpendicular valleys: Maekawa fails first
        let cp = pattern(&[([5.0, 0.0], [5.0, 10.0], V), ([0.0, 5.0], [10.0, 5.0], V)]);
        assert_eq!(
            is_foldable(&cp, &SolverConfig::default()).status,
            VerdictStatus::LocallyInvalid
        );
    }

    #[test]
    fn above_lookup_is_symmetric() {
        let cp = pattern(&[([5.0, 0.0], [5.0, 10.0], V)]);
        let w = is_foldable(&cp, &SolverConfig::default()).witness.unwrap();
        assert_eq!(w.above(0, 1), w.above(1, 0).map(|b| !b));
        assert_eq!(w.above(0, 0), None);
    }
}
