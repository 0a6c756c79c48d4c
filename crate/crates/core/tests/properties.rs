use forge_core::fold::{classify_complexity, parse_fold, serialize_fold, Assignment, ComplexityThresholds, Point};
use forge_core::kernel::{CreasePattern, Segment, PAPER_SIZE};
use forge_core::metrics::{iou, query_efficiency, BinaryMask};
use proptest::prelude::*;

/// A point on the paper edge, on a half-unit grid.
fn edge_point() -> impl Strategy<Value = Point> {
    (0u8..4, 0u8..=20).prop_map(|(side, k)| {
        let t = f64::from(k) * 0.5;
        match side {
            0 => [t, 0.0],
            1 => [PAPER_SIZE, t],
            2 => [t, PAPER_SIZE],
            _ => [0.0, t],
        }
    })
}

fn crease() -> impl Strategy<Value = (Point, Point, Assignment)> {
    (edge_point(), edge_point(), any::<bool>())
        .prop_map(|(a, b, m)| (a, b, if m { Assignment::M } else { Assignment::V }))
}

/// Inserts what the kernel accepts, skipping the rest.
fn build(creases: &[(Point, Point, Assignment)]) -> CreasePattern {
    let mut cp = CreasePattern::new_blank(PAPER_SIZE);
    for &(a, b, asg) in creases {
        if let Ok(next) = cp.insert_crease(Segment::new(a, b), asg) {
            cp = next;
        }
    }
    cp
}

fn mask(bits: Vec<bool>) -> BinaryMask {
    BinaryMask {
        width: 8,
        height: 8,
        bits,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn euler_formula_holds(creases in prop::collection::vec(crease(), 0..8)) {
        let cp = build(&creases);
        let (v, e, f) = (cp.vertices().len() as i64, cp.edges().len() as i64, cp.faces().len() as i64 + 1);
        prop_assert_eq!(v - e + f, 2);
    }

    #[test]
    fn faces_tile_the_square(creases in prop::collection::vec(crease(), 0..8)) {
        let cp = build(&creases);
        let total: f64 = (0..cp.faces().len()).map(|f| cp.face_area(f)).sum();
        prop_assert!((total - PAPER_SIZE * PAPER_SIZE).abs() < 1e-6);
    }

    #[test]
    fn insertion_is_deterministic(creases in prop::collection::vec(crease(), 0..6)) {
        let a = build(&creases);
        let b = build(&creases);
        prop_assert_eq!(serialize_fold(&a.to_fold().unwrap()), serialize_fold(&b.to_fold().unwrap()));
    }

    #[test]
    fn fold_text_round_trips(creases in prop::collection::vec(crease(), 0..6)) {
        let fold = build(&creases).to_fold().unwrap();
        let text = serialize_fold(&fold);
        let again = parse_fold(&text).unwrap();
        prop_assert_eq!(&again, &fold);
        prop_assert_eq!(serialize_fold(&again), text);
    }

    #[test]
    fn import_preserves_structure(creases in prop::collection::vec(crease(), 0..6)) {
        let fold = build(&creases).to_fold().unwrap();
        let back = CreasePattern::from_fold(&fold).unwrap().to_fold().unwrap();
        prop_assert_eq!(serialize_fold(&back), serialize_fold(&fold));
    }

    #[test]
    fn iou_is_symmetric(a in prop::collection::vec(any::<bool>(), 64), b in prop::collection::vec(any::<bool>(), 64)) {
        let (a, b) = (mask(a), mask(b));
        match (iou(&a, &b), iou(&b, &a)) {
            (Ok(x), Ok(y)) => {
                prop_assert_eq!(x, y);
                prop_assert!((0.0..=1.0).contains(&x));
            }
            (x, y) => prop_assert_eq!(x, y),
        }
        if a.count() > 0 {
            prop_assert_eq!(iou(&a, &a).unwrap(), 1.0);
        }
    }

    #[test]
    fn complexity_is_monotone(v in 0usize..200, c in 0usize..200, dv in 0usize..50, dc in 0usize..50) {
        let t = ComplexityThresholds {
            easy_max_vertices: Some(30),
            medium_max_vertices: Some(90),
            ..ComplexityThresholds::default()
        };
        for th in [ComplexityThresholds::default(), t] {
            prop_assert!(classify_complexity(v + dv, c + dc, &th) >= classify_complexity(v, c, &th));
        }
    }

    #[test]
    fn qe_stays_in_unit_range(valid in 0usize..100, extra in 0usize..100) {
        let q = query_efficiency(valid, valid + extra);
        prop_assert!((0.0..=1.0).contains(&q));
    }
}
