//! Acceptance suite: one line per criterion, nonzero exit if any fails.

use std::f64::consts::PI;
use std::sync::Arc;
use std::time::{Duration, Instant};

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nsmooth::clarke::{generalized_gradient, is_singular_scalar, min_norm_point, SamplingParams};
use nsmooth::experiments::{
    equivalence_grid, equivalence_scan, fibration_grid, reeb_report, FieldSpec, MapSpec, ReebParams,
};
use nsmooth::fibration::{eta_search, EmbeddedField, SUBMERSION_TOL};
use nsmooth::manifold::{ball_quadrature, unit_ball_volume, Manifold, Point, ScanGrid};
use nsmooth::smoothing::{
    build_cover, default_cover_radius, lipschitz_estimate, EmbeddedMap, GradientPath, SmoothedMap,
    SmoothingParams,
};

type Outcome = Result<String, String>;

fn run(id: u8, title: &str, limit: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let outcome = f();
    let took = start.elapsed();
    let (ok, detail) = match outcome {
        Ok(d) if took <= limit => (true, d),
        Ok(d) => (false, format!("{d}; runtime {took:.2?} exceeds {limit:?}")),
        Err(d) => (false, d),
    };
    println!(
        "criterion {id} {}: {title} [{took:.2?}] {detail}",
        if ok { "PASS" } else { "FAIL" }
    );
    ok
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn line() -> Manifold {
    Manifold::euclidean(1).unwrap()
}

fn s2() -> Manifold {
    Manifold::sphere(2, 1.0).unwrap()
}

fn t2() -> Manifold {
    Manifold::flat_torus(vec![1.0, 1.0]).unwrap()
}

fn hull_interval(spec: &FieldSpec, x: f64) -> Result<(f64, f64, bool), String> {
    let f = spec.build(&line()).map_err(|e| e.to_string())?;
    let p = Point::new(vec![x]);
    let params = SamplingParams::default();
    let hull = generalized_gradient(&f, &p, &params).map_err(|e| e.to_string())?;
    let (lo, hi) = hull.bounds()[0];
    let verdict = is_singular_scalar(&f, &p, &params).map_err(|e| e.to_string())?;
    Ok((lo, hi, verdict.singular))
}

fn criterion_1() -> Outcome {
    let (lo, hi, sing) = hull_interval(&FieldSpec::AbsMax, 1.0)?;
    ensure((lo + 2.0).abs() < 0.02 && (hi - 1.0).abs() < 0.02 && sing, || {
        format!("x=1: hull [{lo}, {hi}], singular {sing}")
    })?;
    let (lo4, hi4, sing4) = hull_interval(&FieldSpec::AbsMax, 4.0)?;
    ensure((lo4 - 1.0).abs() < 0.02 && (hi4 - 4.0).abs() < 0.02 && !sing4, || {
        format!("x=4: hull [{lo4}, {hi4}], singular {sing4}")
    })?;
    Ok(format!("x=1 hull [{lo:.4}, {hi:.4}] singular; x=4 hull [{lo4:.4}, {hi4:.4}] nonsingular"))
}

fn criterion_2() -> Outcome {
    let (lo, hi, _) = hull_interval(&FieldSpec::X2sin, 0.0)?;
    ensure((lo + 1.0).abs() < 0.05 && (hi - 1.0).abs() < 0.05, || format!("hull [{lo}, {hi}]"))?;
    Ok(format!("hull [{lo:.4}, {hi:.4}]"))
}

fn criterion_3() -> Outcome {
    let params = SamplingParams::default();
    let cases = [
        (s2(), Point::new(vec![0.0, 0.0, 1.0])),
        (t2(), Point::new(vec![0.0, 0.0])),
    ];
    let mut notes = Vec::new();
    for (m, p) in cases {
        let grid = equivalence_grid(&m).map_err(|e| e.to_string())?;
        ensure(grid.len() == 200, || format!("grid has {} points", grid.len()))?;
        let report = equivalence_scan(&m, &p, &grid, &params).map_err(|e| e.to_string())?;
        ensure(report.disagreements.is_empty(), || {
            format!("{:?}: disagreements at {:?}", m, report.disagreements)
        })?;
        let spec = FieldSpec::DistToPoint { point: p.as_slice().to_vec() };
        let known = spec.known_singular_set(&m).expect("known set");
        let mut expected: Vec<usize> = grid
            .points
            .iter()
            .enumerate()
            .filter(|(_, q)| known.iter().any(|k| m.distance(k, q) < 1e-12))
            .map(|(i, _)| i)
            .collect();
        expected.sort_unstable();
        ensure(expected.len() == known.len() && report.singular == expected, || {
            format!("{:?}: singular {:?}, expected {:?}", m, report.singular, expected)
        })?;
        notes.push(format!(
            "{} pts, {} singular, {} indeterminate, 0 disagreements",
            report.counts.points, report.counts.singular, report.counts.indeterminate
        ));
    }
    Ok(notes.join("; "))
}

fn error_bound_cases() -> Result<Vec<(Arc<dyn EmbeddedMap>, ScanGrid)>, String> {
    let e = |x: nsmooth::Error| x.to_string();
    let sphere_grid = ScanGrid::fibonacci(&s2(), 500).map_err(e)?;
    let torus_grid = ScanGrid::lattice(&t2(), &[25, 20]).map_err(e)?;
    let mut out: Vec<(Arc<dyn EmbeddedMap>, ScanGrid)> = Vec::new();
    for spec in [
        FieldSpec::DistToPoint { point: vec![0.0, 0.0, 1.0] },
        FieldSpec::Height { axis: None },
        FieldSpec::DoubleBump { beta: 0.5 },
    ] {
        let f = spec.build(&s2()).map_err(e)?;
        out.push((Arc::new(f), sphere_grid.clone()));
    }
    let f = FieldSpec::DistToPoint { point: vec![0.0, 0.0] }.build(&t2()).map_err(e)?;
    out.push((Arc::new(f), torus_grid.clone()));
    for spec in [MapSpec::Angle { winding: 1 }, MapSpec::PwlWobble { a: 0.3, b: 0.3, teeth: 2 }] {
        let map = spec.build(&t2()).map_err(e)?;
        out.push((Arc::new(EmbeddedField::new(map).map_err(e)?), torus_grid.clone()));
    }
    Ok(out)
}

fn criterion_4() -> Outcome {
    let params = SmoothingParams::default();
    let mut worst_ratio: f64 = 0.0;
    let mut count = 0;
    for (field, grid) in error_bound_cases()? {
        let m = field.source().clone();
        let cover = build_cover(&m, default_cover_radius(&m)).map_err(|e| e.to_string())?;
        let lip = lipschitz_estimate(field.as_ref(), 10_000, 11).map_err(|e| e.to_string())?.value;
        for eps in [0.2, 0.1, 0.05] {
            let s = SmoothedMap::new(field.clone(), cover.clone(), eps, params.radial_nodes, params.angular_nodes)
                .map_err(|e| e.to_string())?;
            let mut max_err: f64 = 0.0;
            for q in &grid.points {
                let v = s.value(q).map_err(|e| e.to_string())?;
                max_err = max_err.max((v - field.eval(q)).norm());
            }
            let bound = eps * s.lambda * lip * (1.0 + 1e-3);
            ensure(max_err <= bound, || {
                format!("{} eps {eps}: error {max_err} > bound {bound}", field.name())
            })?;
            worst_ratio = worst_ratio.max(max_err / bound);
            count += 1;
        }
    }
    Ok(format!("{count} (field, eps) pairs, worst error/bound ratio {worst_ratio:.3}"))
}

fn criterion_5() -> Outcome {
    let m = s2();
    let field = FieldSpec::Height { axis: None }.build(&m).map_err(|e| e.to_string())?;
    let full = ScanGrid::fibonacci(&m, 2000).map_err(|e| e.to_string())?;
    let band: Vec<Point> = full.points.into_iter().filter(|q| q.coords[2].abs() <= 0.5).collect();
    let params = SamplingParams::default();
    let mut delta = Vec::with_capacity(band.len());
    for q in &band {
        let v = is_singular_scalar(&field, q, &params).map_err(|e| e.to_string())?;
        ensure(!v.singular, || format!("band point {:?} judged singular", q.as_slice()))?;
        delta.push(0.5 * v.margin);
    }
    let shared: Arc<dyn EmbeddedMap> = Arc::new(field);
    let cover = build_cover(&m, default_cover_radius(&m)).map_err(|e| e.to_string())?;
    let mut notes = Vec::new();
    for eps in [0.05, 0.025, 0.0125] {
        let s = SmoothedMap::new(shared.clone(), cover.clone(), eps, 8, 16).map_err(|e| e.to_string())?;
        let mut min_grad = f64::INFINITY;
        let mut min_slack = f64::INFINITY;
        for (q, d) in band.iter().zip(&delta) {
            let g = s.gradient(q, GradientPath::Jacobi).map_err(|e| e.to_string())?.norm();
            min_grad = min_grad.min(g);
            min_slack = min_slack.min(g - (d / 3.0 - 0.05));
        }
        ensure(min_grad > 0.4, || format!("eps {eps}: min |grad| {min_grad} <= 0.4"))?;
        ensure(min_slack >= 0.0, || format!("eps {eps}: |grad| < delta/3 - 0.05 by {}", -min_slack))?;
        notes.push(format!("eps {eps}: min |grad| {min_grad:.4}"));
    }
    Ok(format!("{} band points; {}", band.len(), notes.join(", ")))
}

fn criterion_6() -> Outcome {
    let m = t2();
    let map = MapSpec::PwlWobble { a: 0.3, b: 0.3, teeth: 2 }.build(&m).map_err(|e| e.to_string())?;
    let grid = fibration_grid(&m).map_err(|e| e.to_string())?;
    ensure(grid.len() == 64 * 64, || format!("grid has {} points", grid.len()))?;
    let ladder = [0.2, 0.1, 0.05, 0.025, 0.0125];
    let search = eta_search(&map, 0.2, &ladder, &grid, &SmoothingParams::default(), SUBMERSION_TOL)
        .map_err(|e| e.to_string())?;
    let r = &search.report;
    ensure(search.accepted_epsilon.is_some(), || format!("no rung accepted: {r:?}"))?;
    ensure(r.max_dist < 0.2 && r.min_sigma > 1e-3, || format!("accepted rung out of bounds: {r:?}"))?;
    Ok(format!(
        "accepted eps {} with max_dist {:.4}, min_sigma {:.4}",
        r.epsilon, r.max_dist, r.min_sigma
    ))
}

fn criterion_7() -> Outcome {
    let m = s2();
    let params = ReebParams::default();
    let cases = [
        (FieldSpec::DistToPoint { point: vec![0.0, 0.0, 1.0] }, PI / 2.0, (PI / 2.0 - 0.6, PI / 2.0 + 0.6)),
        (FieldSpec::Height { axis: None }, 0.0, (-0.6, 0.6)),
    ];
    let mut notes = Vec::new();
    for (spec, c, band) in cases {
        let f = spec.build(&m).map_err(|e| e.to_string())?;
        let report = reeb_report(&f, c, band, 0.05, &params).map_err(|e| e.to_string())?;
        let failed: Vec<String> = report
            .steps
            .iter()
            .filter(|s| !s.passed)
            .map(|s| format!("step {} ({}): {}", s.step, s.name, s.detail))
            .collect();
        ensure(failed.is_empty(), || format!("{}: {}", spec.label(), failed.join("; ")))?;
        notes.push(format!(
            "{}: {} clusters, {} level components, band min |grad| {:.3}",
            spec.label(),
            report.cluster_sizes.len(),
            report.level_components,
            report.band_min_grad
        ));
    }
    Ok(notes.join("; "))
}

/// Exact min-norm point by enumerating affinely independent subsets: the
/// optimum is the affine minimizer of the face containing it.
fn face_enumeration_min_norm(points: &[DVector<f64>]) -> f64 {
    let n = points.len();
    let dim = points[0].len();
    let mut best = f64::INFINITY;
    for mask in 1u32..(1 << n) {
        let idx: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
        if idx.len() > dim + 1 {
            continue;
        }
        let k = idx.len();
        // KKT system [G 1; 1^T 0]
        let mut a = nalgebra::DMatrix::zeros(k + 1, k + 1);
        let mut b = DVector::zeros(k + 1);
        for r in 0..k {
            for c in 0..k {
                a[(r, c)] = points[idx[r]].dot(&points[idx[c]]);
            }
            a[(r, k)] = 1.0;
            a[(k, r)] = 1.0;
        }
        b[k] = 1.0;
        let Some(sol) = a.lu().solve(&b) else { continue };
        if (0..k).any(|i| sol[i] < -1e-12) {
            continue;
        }
        let mut x = DVector::zeros(dim);
        for (i, &j) in idx.iter().enumerate() {
            x += &points[j] * sol[i];
        }
        best = best.min(x.norm());
    }
    best
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let manifolds = [
        Manifold::euclidean(3).unwrap(),
        s2(),
        Manifold::sphere(3, 2.0).unwrap(),
        t2(),
        Manifold::flat_torus(vec![1.0, 2.0, 0.5]).unwrap(),
    ];
    let mut worst_log: f64 = 0.0;
    let mut worst_jacobi: f64 = 0.0;
    for m in &manifolds {
        let reach = if m.is_compact() { 0.9 * m.injectivity_radius() } else { 10.0 };
        for _ in 0..1000 {
            let p = m.random_point(&mut rng);
            let v = m.random_tangent(&p, reach * rng.random::<f64>(), &mut rng);
            let q = m.exp_at(&p, &v);
            let back = m.log_vec(&p, &q).map_err(|e| format!("{m:?}: {e}"))?;
            let err = (&back - &v).norm();
            worst_log = worst_log.max(err / (1.0 + v.norm()));
            ensure(err <= 1e-9 * (1.0 + v.norm()), || format!("{m:?}: log(exp v) off by {err}"))?;
            let d = m.distance(&p, &q);
            ensure((d - v.norm()).abs() <= 1e-10, || format!("{m:?}: distance off by {}", d - v.norm()))?;
        }
        for _ in 0..100 {
            let p = m.random_point(&mut rng);
            let q = m.exp_at(&p, &m.random_tangent(&p, 0.5 * reach.min(1.0) * rng.random::<f64>(), &mut rng));
            let frame = m.frame(&p);
            let moved: Vec<DVector<f64>> = frame
                .basis
                .iter()
                .map(|e| m.parallel_transport(&p, &q, e))
                .collect::<Result<_, _>>()
                .map_err(|e| e.to_string())?;
            for (i, a) in moved.iter().enumerate() {
                for (j, b) in moved.iter().enumerate() {
                    let target = if i == j { 1.0 } else { 0.0 };
                    ensure((a.dot(b) - target).abs() <= 1e-10, || format!("{m:?}: transport Gram off"))?;
                }
            }
            // Jacobi endpoint against central differences of the variation
            let center = m.random_point(&mut rng);
            let budget = if m.is_compact() { 0.4 * m.injectivity_radius() } else { 1.0 };
            let q = m.exp_at(&center, &m.random_tangent(&center, budget * rng.random::<f64>(), &mut rng));
            let y = m.random_tangent(&center, 0.1, &mut rng);
            let v = m.random_tangent(&q, 1.0, &mut rng);
            let (_, j) = m.jacobi_endpoint(&center, &q, &y, &v).map_err(|e| e.to_string())?;
            let h = 1e-5;
            let var = |s: f64| -> Result<DVector<f64>, String> {
                let qs = m.exp_at(&q, &(&v * s));
                let a = m.log_vec(&center, &qs).map_err(|e| e.to_string())?;
                Ok(m.exp_at(&center, &(a - &y)).coords)
            };
            let mut fd = (var(h)? - var(-h)?) / (2.0 * h);
            if let Manifold::FlatTorus { periods } = m {
                for (k, l) in periods.iter().enumerate() {
                    fd[k] -= l * (fd[k] * 2.0 * h / l).round() / (2.0 * h);
                }
            }
            let rel = (&fd - &j).norm() / j.norm().max(1e-12);
            worst_jacobi = worst_jacobi.max(rel);
            ensure(rel <= 1e-6, || format!("{m:?}: Jacobi endpoint off by relative {rel}"))?;
        }
    }
    // quadrature exactness on monomials
    for dim in 1..=4usize {
        let order = 8;
        let rule = ball_quadrature(dim, 0.7, order).map_err(|e| e.to_string())?;
        for total in 0..=order {
            if total % 2 == 1 {
                let got = rule.integrate(|y| y[0].powi(total as i32));
                ensure(got.abs() < 1e-12, || format!("dim {dim}: odd monomial {total} gives {got}"))?;
                continue;
            }
            // int_B |y|^t = |S^{d-1}| R^{d+t} / (d+t)
            let exact = dim as f64 * unit_ball_volume(dim) * 0.7f64.powi((dim + total) as i32) / (dim + total) as f64;
            let got = rule.integrate(|y| y.norm_squared().powi(total as i32 / 2));
            ensure((got - exact).abs() <= 1e-10 * exact, || {
                format!("dim {dim}: |y|^{total} gives {got} vs {exact}")
            })?;
        }
    }
    // min-norm point against face enumeration
    let mut worst_mn: f64 = 0.0;
    for k in 0..50 {
        let dim = 2 + k % 2;
        let n = 1 + rng.random_range(0..6usize);
        let pts: Vec<DVector<f64>> = (0..n)
            .map(|_| DVector::from_fn(dim, |_, _| rng.random_range(-1.0..1.0) + 0.3))
            .collect();
        let got = min_norm_point(&pts).map_err(|e| e.to_string())?.norm;
        let want = face_enumeration_min_norm(&pts);
        worst_mn = worst_mn.max((got - want).abs());
        ensure((got - want).abs() <= 1e-6, || format!("min-norm {got} vs oracle {want}"))?;
    }
    Ok(format!(
        "log/exp rel {worst_log:.1e}, Jacobi rel {worst_jacobi:.1e}, min-norm {worst_mn:.1e}"
    ))
}

fn main() {
    let results = [
        run(1, "generalized gradient of max(|x|-1,(x-2)^2-1)", Duration::from_secs(1), criterion_1),
        run(2, "generalized gradient of x^2 sin(1/x) at 0", Duration::from_secs(1), criterion_2),
        run(3, "Clarke and Grove-Shiohama scans agree", Duration::from_secs(60), criterion_3),
        run(4, "smoothing error bound", Duration::from_secs(300), criterion_4),
        run(5, "smoothed gradient stays away from zero", Duration::from_secs(300), criterion_5),
        run(6, "fibration pipeline for pwl-wobble", Duration::from_secs(600), criterion_6),
        run(7, "Reeb checks on the round sphere", Duration::from_secs(300), criterion_7),
        run(8, "geometry kernel suite", Duration::from_secs(60), criterion_8),
    ];
    let failed = results.iter().filter(|ok| !**ok).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
