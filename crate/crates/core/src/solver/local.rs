//! Single-vertex flat-foldability conditions.

use std::f64::consts::PI;

use thiserror::Error;

use crate::fold::Assignment;
use crate::kernel::VertexStar;

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum LocalCheckError {
    #[error("vertex lies on the paper boundary; local conditions do not apply")]
    BoundaryVertex,
    #[error("vertex has an odd number of creases")]
    OddDegree,
}

/// `|#M - #V| = 2`. Flat (`F`) and boundary lines are ignored.
pub fn maekawa_holds(assignments: &[Assignment]) -> bool {
    let m = assignments.iter().filter(|a| **a == Assignment::M).count() as i64;
    let v = assignments.iter().filter(|a| **a == Assignment::V).count() as i64;
    (m - v).abs() == 2
}

/// Alternating sector sums both equal π within `tol`.
pub fn kawasaki_holds(sectors: &[f64], tol: f64) -> Result<bool, LocalCheckError> {
    if sectors.len() % 2 == 1 {
        return Err(LocalCheckError::OddDegree);
    }
    let even: f64 = sectors.iter().step_by(2).sum();
    let odd: f64 = sectors.iter().skip(1).step_by(2).sum();
    Ok((even - PI).abs() <= tol && (odd - PI).abs() <= tol)
}

pub fn check_maekawa(star: &VertexStar) -> Result<bool, LocalCheckError> {
    if star.boundary {
        return Err(LocalCheckError::BoundaryVertex);
    }
    Ok(maekawa_holds(&star.fold_assignments()))
}

pub fn check_kawasaki(star: &VertexStar, tol: f64) -> Result<bool, LocalCheckError> {
    if star.boundary {
        return Err(LocalCheckError::BoundaryVertex);
    }
    kawasaki_holds(&star.fold_sectors(), tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use Assignment::{M, V};

    fn deg(d: f64) -> f64 {
        d.to_radians()
    }

    #[test]
    fn maekawa_examples() {
        assert!(maekawa_holds(&[M, M, M, V]));
        assert!(!maekawa_holds(&[M, M, V, V]));
        assert!(!maekawa_holds(&[M, M, V]));
        assert!(!maekawa_holds(&[M]));
        assert!(maekawa_holds(&[M, M]));
        assert!(maekawa_holds(&[M, Assignment::F, M, Assignment::F]));
    }

    #[test]
    fn kawasaki_examples() {
        let right = [deg(90.0); 4];
        assert_eq!(kawasaki_holds(&right, 1e-9), Ok(true));
        // alternating sums 135° and 225°
        let skew = [deg(45.0), deg(135.0), deg(90.0), deg(90.0)];
        assert_eq!(kawasaki_holds(&skew, 1e-9), Ok(false));
        // alternating sums 90° and 270°
        let other = [deg(30.0), deg(150.0), deg(60.0), deg(120.0)];
        assert_eq!(kawasaki_holds(&other, 1e-9), Ok(false));
        assert_eq!(kawasaki_holds(&[deg(120.0); 3], 1e-9), Err(LocalCheckError::OddDegree));
    }

    #[test]
    fn kawasaki_tolerance_is_tight() {
        let nudged = [deg(90.0) + 2e-9, deg(90.0) - 2e-9, deg(90.0), deg(90.0)];
        assert_eq!(kawasaki_holds(&nudged, 1e-9), Ok(false));
        let within = [deg(90.0) + 4e-10, deg(90.0) - 4e-10, deg(90.0), deg(90.0)];
        assert_eq!(kawasaki_holds(&within, 1e-9), Ok(true));
    }
}
