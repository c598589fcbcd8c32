//! A reduced invariant suite that runs in a few seconds, for installations
//! that want to check the kernels without the full test harness.

use std::sync::Arc;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::clarke::{generalized_gradient, is_singular_scalar, min_norm_point, SamplingParams};
use crate::error::Result;
use crate::manifold::{ball_quadrature, unit_ball_volume, Manifold, Point};
use crate::smoothing::{
    build_cover, cover_test_grid, default_cover_radius, EmbeddedMap, GradientPath, PartitionOfUnity, SmoothedMap,
    SmoothingParams,
};

use super::{equivalence_grid, equivalence_scan, FieldSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfTestCheck {
    pub name: String,
    pub passed: bool,
    /// Worst observed deviation.
    pub worst: f64,
    pub tolerance: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfTestReport {
    pub seed: u64,
    pub checks: Vec<SelfTestCheck>,
    pub passed: bool,
}

fn check(name: &str, worst: f64, tolerance: f64, samples: usize) -> SelfTestCheck {
    SelfTestCheck {
        name: name.into(),
        passed: worst <= tolerance,
        worst,
        tolerance,
        samples,
    }
}

fn manifolds() -> Vec<Manifold> {
    vec![
        Manifold::Euclidean { dim: 3 },
        Manifold::Sphere { dim: 2, radius: 1.0 },
        Manifold::Sphere { dim: 3, radius: 2.0 },
        Manifold::FlatTorus { periods: vec![1.0, 1.0] },
        Manifold::FlatTorus { periods: vec![1.0, 2.0, 0.5] },
    ]
}

fn reach(m: &Manifold) -> f64 {
    if m.is_compact() {
        0.9 * m.injectivity_radius()
    } else {
        10.0
    }
}

fn geometry_checks(rng: &mut ChaCha8Rng, out: &mut Vec<SelfTestCheck>) -> Result<()> {
    let (mut log_err, mut dist_err, mut gram_err, mut jac_err) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut n = 0;
    for m in manifolds() {
        for _ in 0..200 {
            let p = m.random_point(rng);
            let v = m.random_tangent(&p, reach(&m) * rng.random::<f64>(), rng);
            let q = m.exp_at(&p, &v);
            log_err = log_err.max((m.log_vec(&p, &q)? - &v).norm() / (1.0 + v.norm()));
            dist_err = dist_err.max((m.distance(&p, &q) - v.norm()).abs());

            let frame = m.frame(&p);
            let moved = frame
                .basis
                .iter()
                .map(|e| m.parallel_transport(&p, &q, e))
                .collect::<Result<Vec<_>>>()?;
            for (i, a) in moved.iter().enumerate() {
                for (j, b) in moved.iter().enumerate() {
                    let want = if i == j { 1.0 } else { 0.0 };
                    gram_err = gram_err.max((a.dot(b) - want).abs());
                }
            }

            let budget = if m.is_compact() { 0.4 * m.injectivity_radius() } else { 1.0 };
            let c = m.random_point(rng);
            let q = m.exp_at(&c, &m.random_tangent(&c, budget * rng.random::<f64>(), rng));
            let y = m.random_tangent(&c, 0.1 * budget, rng);
            let w = m.random_tangent(&q, 1.0, rng);
            let (shifted, j) = m.jacobi_endpoint(&c, &q, &y, &w)?;
            let h = 1e-5;
            let var = |s: f64| -> Result<Point> {
                let a = m.log_vec(&c, &m.exp_at(&q, &(&w * s)))?;
                Ok(m.exp_at(&c, &(a - &y)))
            };
            let fd = (m.log_vec(&shifted, &var(h)?)? - m.log_vec(&shifted, &var(-h)?)?) / (2.0 * h);
            jac_err = jac_err.max((fd - &j).norm() / j.norm().max(1e-12));
            n += 1;
        }
    }
    out.push(check("log inverts exp", log_err, 1e-9, n));
    out.push(check("distance equals tangent length", dist_err, 1e-10, n));
    out.push(check("transport preserves the metric", gram_err, 1e-10, n));
    out.push(check("Jacobi fields match finite differences", jac_err, 1e-6, n));
    Ok(())
}

fn quadrature_check(out: &mut Vec<SelfTestCheck>) -> Result<()> {
    let mut worst: f64 = 0.0;
    let mut n = 0;
    for dim in 1..=4usize {
        let rule = ball_quadrature(dim, 0.7, 8)?;
        for t in (0..=8).step_by(2) {
            let exact = dim as f64 * unit_ball_volume(dim) * 0.7f64.powi((dim + t) as i32) / (dim + t) as f64;
            let got = rule.integrate(|y| y.norm_squared().powi(t as i32 / 2));
            worst = worst.max((got - exact).abs() / exact);
            n += 1;
        }
    }
    out.push(check("ball quadrature is exact on radial monomials", worst, 1e-10, n));
    Ok(())
}

/// Min-norm point of a hull by enumerating its faces.
fn face_min_norm(points: &[DVector<f64>]) -> f64 {
    let (n, dim) = (points.len(), points[0].len());
    let mut best = f64::INFINITY;
    for mask in 1u32..(1 << n) {
        let idx: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
        let k = idx.len();
        if k > dim + 1 {
            continue;
        }
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
        let x = idx
            .iter()
            .enumerate()
            .fold(DVector::zeros(dim), |acc, (i, &j)| acc + &points[j] * sol[i]);
        best = best.min(x.norm());
    }
    best
}

fn min_norm_check(rng: &mut ChaCha8Rng, out: &mut Vec<SelfTestCheck>) -> Result<()> {
    let mut worst: f64 = 0.0;
    for k in 0..50 {
        let dim = 2 + k % 2;
        let n = rng.random_range(1..=6usize);
        let pts: Vec<DVector<f64>> = (0..n)
            .map(|_| DVector::from_fn(dim, |_, _| rng.random_range(-1.0..1.5)))
            .collect();
        worst = worst.max((min_norm_point(&pts)?.norm - face_min_norm(&pts)).abs());
    }
    out.push(check("min-norm point matches face enumeration", worst, 1e-6, 50));
    Ok(())
}

fn clarke_checks(out: &mut Vec<SelfTestCheck>) -> Result<()> {
    let line = Manifold::Euclidean { dim: 1 };
    let params = SamplingParams::default();
    let f = FieldSpec::AbsMax.build(&line)?;
    let mut worst: f64 = 0.0;
    for (x, lo, hi, singular) in [(1.0, -2.0, 1.0, true), (4.0, 1.0, 4.0, false)] {
        let p = Point::new(vec![x]);
        let (a, b) = generalized_gradient(&f, &p, &params)?.bounds()[0];
        worst = worst.max((a - lo).abs()).max((b - hi).abs());
        if is_singular_scalar(&f, &p, &params)?.singular != singular {
            worst = f64::INFINITY;
        }
    }
    out.push(check("abs-max generalized gradients", worst, 0.02, 2));
    let g = FieldSpec::X2sin.build(&line)?;
    let (a, b) = generalized_gradient(&g, &Point::new(vec![0.0]), &params)?.bounds()[0];
    out.push(check("x^2 sin(1/x) generalized gradient", (a + 1.0).abs().max((b - 1.0).abs()), 0.05, 1));

    let mut disagreements = 0;
    let mut n = 0;
    for (m, p) in [
        (Manifold::Sphere { dim: 2, radius: 1.0 }, Point::new(vec![0.0, 0.0, 1.0])),
        (Manifold::FlatTorus { periods: vec![1.0, 1.0] }, Point::new(vec![0.0, 0.0])),
    ] {
        let report = equivalence_scan(&m, &p, &equivalence_grid(&m)?, &params)?;
        disagreements += report.counts.disagreements;
        n += report.counts.points;
    }
    out.push(check("Clarke and Grove-Shiohama scans agree", disagreements as f64, 0.0, n));
    Ok(())
}

fn smoothing_checks(rng: &mut ChaCha8Rng, out: &mut Vec<SelfTestCheck>) -> Result<()> {
    let mut worst: f64 = 0.0;
    let mut n = 0;
    for m in [
        Manifold::Sphere { dim: 2, radius: 1.0 },
        Manifold::FlatTorus { periods: vec![1.0, 1.0] },
    ] {
        let pou = PartitionOfUnity::new(build_cover(&m, default_cover_radius(&m))?);
        for q in cover_test_grid(&m)?.points.iter().step_by(10) {
            let total: f64 = pou.weights(q).iter().map(|w| w.1).sum();
            worst = worst.max((total - 1.0).abs());
            n += 1;
        }
    }
    out.push(check("partition of unity sums to one", worst, 1e-12, n));

    let plane = Manifold::Euclidean { dim: 2 };
    let spec = FieldSpec::Affine { slope: vec![1.5, -0.5], offset: 0.25 };
    let f = spec.build(&plane)?;
    let shared: Arc<dyn EmbeddedMap> = Arc::new(f.clone());
    let s = SmoothedMap::build(shared, 0.1, &SmoothingParams::default())?;
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let q = plane.random_point(rng);
        worst = worst.max((s.scalar(&q)? - f.value(&q)).abs());
    }
    out.push(check("smoothing reproduces affine functions", worst, 1e-9, 50));

    let sphere = Manifold::Sphere { dim: 2, radius: 1.0 };
    let d: Arc<dyn EmbeddedMap> = Arc::new(FieldSpec::DistToPoint { point: vec![0.0, 0.0, 1.0] }.build(&sphere)?);
    let s = SmoothedMap::build(d, 0.1, &SmoothingParams::default())?;
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let q = sphere.random_point(rng);
        let j = s.differential(&q, GradientPath::Jacobi)?;
        let fd = s.differential(&q, GradientPath::FiniteDifference)?;
        worst = worst.max((&j - fd).norm() / j.norm().max(1e-3));
    }
    out.push(check("Jacobi and finite-difference gradients agree", worst, 1e-4, 50));
    Ok(())
}

/// Runs every check; a failing check is reported, not raised.
pub fn run_selftest(seed: u64) -> Result<SelfTestReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();
    geometry_checks(&mut rng, &mut checks)?;
    quadrature_check(&mut checks)?;
    min_norm_check(&mut rng, &mut checks)?;
    clarke_checks(&mut checks)?;
    smoothing_checks(&mut rng, &mut checks)?;
    let passed = checks.iter().all(|c| c.passed);
    Ok(SelfTestReport { seed, checks, passed })
}
