use std::f64::consts::PI;

use nsmooth::clarke::SamplingParams;
use nsmooth::experiments::{
    clusters, equivalence_grid, equivalence_scan, nonvanishing_scan, reeb_check, reeb_report, singular_scan, FieldSpec,
    ReebParams, ADJACENCY_FACTOR,
};
use nsmooth::manifold::{Manifold, Point, ScanGrid};
use nsmooth::smoothing::SmoothingParams;
use nsmooth::Error;

fn s2() -> Manifold {
    Manifold::sphere(2, 1.0).unwrap()
}

fn t2() -> Manifold {
    Manifold::flat_torus(vec![1.0, 1.0]).unwrap()
}

#[test]
fn singular_scans_recover_known_sets() {
    let cases = [
        (s2(), FieldSpec::DistToPoint { point: vec![0.0, 0.0, 1.0] }, 2000),
        (s2(), FieldSpec::Height { axis: None }, 2000),
        (s2(), FieldSpec::DoubleBump { beta: 0.5 }, 2000),
        (t2(), FieldSpec::DistToPoint { point: vec![0.1, 0.3] }, 1600),
        (Manifold::euclidean(1).unwrap(), FieldSpec::AbsMax, 201),
    ];
    for (m, spec, n) in cases {
        let f = spec.build(&m).unwrap();
        let known = spec.known_singular_set(&m).unwrap();
        let grid = ScanGrid::default_for(&m, n).unwrap().with_points(known.clone());
        let params = SamplingParams {
            base_radius: Some(grid.spacing.min(0.5 * m.convexity_radius())),
            ..SamplingParams::default()
        };
        let verdicts = singular_scan(&f, &grid, &params).unwrap();
        let resolution = ADJACENCY_FACTOR * grid.spacing;
        for k in &known {
            let hit = grid
                .points
                .iter()
                .zip(&verdicts)
                .any(|(q, v)| v.singular && m.distance(k, q) < resolution);
            assert!(hit, "{}: known singular point {:?} missed", f.name, k.as_slice());
        }
        for (q, v) in grid.points.iter().zip(&verdicts) {
            let near = known.iter().any(|k| m.distance(k, q) < resolution);
            assert!(v.singular <= near, "{}: spurious singular point {:?} (margin {})", f.name, q.as_slice(), v.margin);
            if !near {
                assert!(v.margin > 3.0 * params.tol_sing, "{}: small margin {} at {:?}", f.name, v.margin, q.as_slice());
            }
        }
    }
}

#[test]
fn equivalence_scans_have_no_disagreements() {
    let params = SamplingParams::default();
    for (m, p) in [
        (s2(), Point::new(vec![0.0, 0.0, 1.0])),
        (s2(), Point::new(vec![0.6, 0.0, 0.8])),
        (t2(), Point::new(vec![0.0, 0.0])),
        (t2(), Point::new(vec![0.25, 0.4])),
    ] {
        let grid = equivalence_grid(&m).unwrap();
        let report = equivalence_scan(&m, &p, &grid, &params).unwrap();
        assert!(report.disagreements.is_empty(), "{:?} from {:?}: {:?}", m, p.as_slice(), report.disagreements);
        assert_eq!(report.counts.points, 200);
    }
}

#[test]
fn round_sphere_passes_the_reeb_checks() {
    let params = ReebParams::default();
    let d = FieldSpec::DistToPoint { point: vec![0.0, 0.0, 1.0] }.build(&s2()).unwrap();
    let r = reeb_check(&d, PI / 2.0, (PI / 2.0 - 0.6, PI / 2.0 + 0.6), 0.05, &params).unwrap();
    assert_eq!(r.cluster_sizes.len(), 2);
    let h = FieldSpec::Height { axis: None }.build(&s2()).unwrap();
    let r = reeb_check(&h, 0.0, (-0.6, 0.6), 0.05, &params).unwrap();
    // the clusters sit at the poles
    for rep in &r.cluster_representatives {
        assert!(rep.coords[2].abs() > 0.99);
    }
}

#[test]
fn double_bump_fails_at_the_cluster_step() {
    let f = FieldSpec::DoubleBump { beta: 0.5 }.build(&s2()).unwrap();
    let report = reeb_report(&f, 0.0, (-0.3, 0.3), 0.05, &ReebParams::default()).unwrap();
    assert!(!report.passed);
    assert!(report.cluster_sizes.len() > 2);
    match report.into_result() {
        Err(Error::HypothesisFailure { step, .. }) => assert_eq!(step, 1),
        other => panic!("expected a step-1 failure, got {other:?}"),
    }
}

#[test]
fn reeb_band_must_bracket_the_level() {
    let h = FieldSpec::Height { axis: None }.build(&s2()).unwrap();
    let params = ReebParams::default();
    assert!(matches!(reeb_report(&h, 0.0, (0.1, 0.5), 0.05, &params), Err(Error::InvalidInput(_))));
    assert!(matches!(reeb_report(&h, 0.0, (-2.0, 0.5), 0.05, &params), Err(Error::InvalidInput(_))));
}

#[test]
fn height_gradient_survives_smoothing() {
    let f = FieldSpec::Height { axis: None }.build(&s2()).unwrap();
    let grid = ScanGrid::fibonacci(&s2(), 400).unwrap();
    let report = nonvanishing_scan(
        &f,
        &grid,
        &[0.05, 0.025, 0.0125],
        &SamplingParams::default(),
        &SmoothingParams::default(),
    )
    .unwrap();
    assert_eq!(report.threshold_epsilon, Some(0.05));
    for rung in &report.rungs {
        assert!(rung.positive);
        assert!(rung.min_delta_slack > -0.05);
    }
}

#[test]
fn clusters_follow_the_adjacency_graph() {
    let m = Manifold::euclidean(1).unwrap();
    let pts: Vec<Point> = [0.0, 0.1, 0.2, 0.9, 1.0, 2.0].iter().map(|x| Point::new(vec![*x])).collect();
    let groups = clusters(&m, &pts, &[0, 1, 2, 3, 4, 5], 0.15);
    assert_eq!(groups, vec![vec![0, 1, 2], vec![3, 4], vec![5]]);
    assert!(clusters(&m, &pts, &[], 0.15).is_empty());
}

#[test]
fn compositions_parse_and_evaluate() {
    let json = r#"{"name":"max","left":{"name":"height"},"right":{"name":"scale","factor":-1.0,"field":{"name":"height"}}}"#;
    let spec: FieldSpec = serde_json::from_str(json).unwrap();
    let f = spec.build(&s2()).unwrap();
    let q = Point::new(vec![0.0, 0.6, -0.8]);
    assert!((f.value(&q) - 0.8).abs() < 1e-15);
    assert!(serde_json::from_str::<FieldSpec>(r#"{"name":"height","bogus":1}"#).is_err());
    assert!(serde_json::from_str::<FieldSpec>(r#"{"name":"nope"}"#).is_err());
}
