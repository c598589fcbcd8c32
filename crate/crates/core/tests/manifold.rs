use nalgebra::DVector;
use proptest::prelude::*;

use nsmooth::manifold::{ball_quadrature, Manifold, Point};

fn manifolds() -> Vec<Manifold> {
    vec![
        Manifold::euclidean(2).unwrap(),
        Manifold::euclidean(3).unwrap(),
        Manifold::sphere(2, 1.0).unwrap(),
        Manifold::sphere(3, 0.7).unwrap(),
        Manifold::flat_torus(vec![1.0, 1.0]).unwrap(),
        Manifold::flat_torus(vec![1.0, 2.5, 0.8]).unwrap(),
    ]
}

/// A point of `m` built from raw coordinates in `[-1, 1]`.
fn point_from(m: &Manifold, raw: &[f64]) -> Point {
    match m {
        Manifold::Euclidean { dim } => Point::new(raw[..*dim].to_vec()),
        Manifold::Sphere { dim, radius } => {
            let mut v = DVector::from_column_slice(&raw[..dim + 1]);
            if v.norm() < 1e-3 {
                v[0] = 1.0;
            }
            Point::new((v.normalize() * *radius).as_slice().to_vec())
        }
        Manifold::FlatTorus { periods } => m.normalize(Point::new(
            periods
                .iter()
                .zip(raw)
                .map(|(l, x)| 0.5 * (x + 1.0) * l)
                .collect::<Vec<_>>(),
        )),
    }
}

/// A tangent vector at `p` with the given length, direction from `raw`.
fn tangent_from(m: &Manifold, p: &Point, raw: &[f64], len: f64) -> DVector<f64> {
    let frame = m.frame(p);
    let mut c = DVector::from_fn(m.dim(), |i, _| raw[i]);
    if c.norm() < 1e-3 {
        c[0] = 1.0;
    }
    frame.to_ambient(&(c.normalize() * len))
}

fn reach(m: &Manifold) -> f64 {
    if m.is_compact() {
        0.9 * m.injectivity_radius()
    } else {
        10.0
    }
}

fn raw() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, 4)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn log_inverts_exp(k in 0usize..6, a in raw(), b in raw(), t in 0.0f64..1.0) {
        let m = &manifolds()[k];
        let p = point_from(m, &a);
        let v = tangent_from(m, &p, &b, t * reach(m));
        let q = m.exp_at(&p, &v);
        let back = m.log_vec(&p, &q).unwrap();
        prop_assert!((&back - &v).norm() <= 1e-9 * (1.0 + v.norm()));
        prop_assert!((m.distance(&p, &q) - v.norm()).abs() <= 1e-10);
    }

    #[test]
    fn points_and_frames_satisfy_their_invariants(k in 0usize..6, a in raw(), b in raw()) {
        let m = &manifolds()[k];
        let p = point_from(m, &a);
        prop_assert!(m.contains(&p));
        let q = m.exp_at(&p, &tangent_from(m, &p, &b, 3.0));
        prop_assert!(m.contains(&q));
        if let Manifold::Sphere { radius, .. } = m {
            prop_assert!((q.coords.norm() - radius).abs() <= 1e-12 * radius);
        }
        let frame = m.frame(&q);
        prop_assert_eq!(frame.basis.len(), m.dim());
        for (i, u) in frame.basis.iter().enumerate() {
            if let Manifold::Sphere { radius, .. } = m {
                prop_assert!(u.dot(&q.coords).abs() <= 1e-12 * radius * u.norm());
            }
            for (j, w) in frame.basis.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((m.inner(u, w) - want).abs() <= 1e-10);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn transport_preserves_gram(k in 0usize..6, a in raw(), b in raw(), c in prop::collection::vec(-1.0f64..1.0, 9), t in 0.0f64..1.0) {
        let m = &manifolds()[k];
        let p = point_from(m, &a);
        let q = m.exp_at(&p, &tangent_from(m, &p, &b, t * reach(m)));
        let frame = m.frame(&p);
        // a generic (non-orthonormal) frame
        let vs: Vec<DVector<f64>> = (0..m.dim())
            .map(|i| frame.to_ambient(&DVector::from_fn(m.dim(), |j, _| c[(3 * i + j) % 9] + if i == j { 2.0 } else { 0.0 })))
            .collect();
        let moved: Vec<DVector<f64>> = vs.iter().map(|v| m.parallel_transport(&p, &q, v).unwrap()).collect();
        for i in 0..vs.len() {
            for j in 0..vs.len() {
                prop_assert!((moved[i].dot(&moved[j]) - vs[i].dot(&vs[j])).abs() <= 1e-10 * (1.0 + vs[i].norm() * vs[j].norm()));
            }
        }
    }

    #[test]
    fn jacobi_endpoint_matches_variation(k in 0usize..6, a in raw(), b in raw(), c in raw(), d in raw(), t in 0.05f64..1.0) {
        let m = &manifolds()[k];
        let budget = if m.is_compact() { 0.4 * m.injectivity_radius() } else { 1.0 };
        let center = point_from(m, &a);
        let q = m.exp_at(&center, &tangent_from(m, &center, &b, t * budget));
        let y = tangent_from(m, &center, &c, 0.1 * budget);
        let v = tangent_from(m, &q, &d, 1.0);
        let (shifted, j) = m.jacobi_endpoint(&center, &q, &y, &v).unwrap();
        let h = 1e-5;
        let var = |s: f64| {
            let qs = m.exp_at(&q, &(&v * s));
            let w = m.log_vec(&center, &qs).unwrap() - &y;
            m.exp_at(&center, &w)
        };
        // differences read at the shifted point through the logarithm
        let up = m.log_vec(&shifted, &var(h)).unwrap();
        let down = m.log_vec(&shifted, &var(-h)).unwrap();
        let fd = (up - down) / (2.0 * h);
        prop_assert!((&fd - &j).norm() <= 1e-6 * j.norm(), "fd {} vs jacobi {}", fd, j);
    }
}

/// Brute force over lattice translates `q + k L`, `|k_i| <= 2`.
fn lattice_geodesics(periods: &[f64], p: &Point, q: &Point) -> (f64, Vec<DVector<f64>>) {
    let n = periods.len();
    let mut cands = Vec::new();
    let total = 5usize.pow(n as u32);
    for code in 0..total {
        let mut c = code;
        let d = DVector::from_fn(n, |i, _| {
            let k = (c % 5) as f64 - 2.0;
            c /= 5;
            q.coords[i] + k * periods[i] - p.coords[i]
        });
        cands.push(d);
    }
    let best = cands.iter().map(|d| d.norm()).fold(f64::INFINITY, f64::min);
    let ties = cands
        .into_iter()
        .filter(|d| d.norm() <= best + 1e-12)
        .map(|d| d / best)
        .collect();
    (best, ties)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn torus_geodesics_match_lattice_enumeration(a in raw(), b in raw(), half in prop::collection::vec(any::<bool>(), 3), generic in any::<bool>()) {
        for m in [Manifold::flat_torus(vec![1.0, 1.0]).unwrap(), Manifold::flat_torus(vec![1.0, 2.5, 0.8]).unwrap()] {
            let Manifold::FlatTorus { periods } = &m else { unreachable!() };
            let p = point_from(&m, &a);
            // either a generic pair or one placed exactly on the cut locus in some axes
            let q = if generic {
                point_from(&m, &b)
            } else {
                m.normalize(Point::new(
                    (0..periods.len())
                        .map(|i| p.coords[i] + if half[i] { 0.5 * periods[i] } else { 0.25 * periods[i] * b[i] })
                        .collect::<Vec<_>>(),
                ))
            };
            let (dist, mut want) = lattice_geodesics(periods, &p, &q);
            let got = m.minimal_geodesics(&p, &q, 64);
            prop_assert!((got.distance - dist).abs() <= 1e-12);
            if dist == 0.0 {
                continue;
            }
            let mut have = got.velocities.clone();
            prop_assert_eq!(have.len(), want.len());
            let key = |v: &DVector<f64>| v.iter().map(|x| (x * 1e9).round() as i64).collect::<Vec<_>>();
            have.sort_by_key(key);
            want.sort_by_key(key);
            for (h, w) in have.iter().zip(&want) {
                prop_assert!((h - w).norm() <= 1e-9);
            }
        }
    }
}

fn gamma_half(n: usize) -> f64 {
    // Gamma(n / 2)
    let mut g = if n % 2 == 0 { 1.0 } else { std::f64::consts::PI.sqrt() };
    let mut x = if n % 2 == 0 { 1.0 } else { 0.5 };
    while 2.0 * x < n as f64 {
        g *= x;
        x += 1.0;
    }
    g
}

/// `int_{B_R} y^alpha dy` from the Gamma-function formula for sphere moments.
fn monomial_ball_integral(alpha: &[usize], radius: f64) -> f64 {
    if alpha.iter().any(|a| a % 2 == 1) {
        return 0.0;
    }
    let d = alpha.len();
    let total: usize = alpha.iter().sum();
    let sphere = 2.0 * alpha.iter().map(|a| gamma_half(a + 1)).product::<f64>() / gamma_half(total + d);
    sphere * radius.powi((total + d) as i32) / (total + d) as f64
}

fn multi_indices(dim: usize, max_total: usize) -> Vec<Vec<usize>> {
    if dim == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for first in 0..=max_total {
        for mut rest in multi_indices(dim - 1, max_total - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

#[test]
fn gamma_oracle_matches_known_volumes() {
    // unit disc and unit ball
    assert!((monomial_ball_integral(&[0, 0], 1.0) - std::f64::consts::PI).abs() < 1e-14);
    assert!((monomial_ball_integral(&[0, 0, 0], 1.0) - 4.0 * std::f64::consts::PI / 3.0).abs() < 1e-14);
}

#[test]
fn ball_quadrature_is_exact_on_monomials() {
    for dim in 1..=4 {
        for order in [2usize, 4, 6, 8] {
            let radius = 0.37;
            let rule = ball_quadrature(dim, radius, order).unwrap();
            for alpha in multi_indices(dim, order) {
                let exact = monomial_ball_integral(&alpha, radius);
                let got = rule.integrate(|y| alpha.iter().enumerate().map(|(i, a)| y[i].powi(*a as i32)).product());
                let scale = monomial_ball_integral(&vec![0; dim], radius) * radius.powi(alpha.iter().sum::<usize>() as i32);
                assert!(
                    (got - exact).abs() <= 1e-10 * exact.abs().max(scale),
                    "dim {dim} order {order} alpha {alpha:?}: {got} vs {exact}"
                );
            }
        }
    }
}

#[test]
fn radii_match_closed_forms() {
    use std::f64::consts::PI;
    assert!(Manifold::euclidean(3).unwrap().injectivity_radius().is_infinite());
    assert_eq!(Manifold::sphere(2, 2.0).unwrap().injectivity_radius(), 2.0 * PI);
    assert_eq!(Manifold::flat_torus(vec![1.0, 0.6]).unwrap().injectivity_radius(), 0.3);
}

#[test]
fn invalid_manifolds_are_rejected() {
    assert!(Manifold::euclidean(0).is_err());
    assert!(Manifold::sphere(2, 0.0).is_err());
    assert!(Manifold::sphere(2, -1.0).is_err());
    assert!(Manifold::flat_torus(vec![1.0, 0.0]).is_err());
    assert!(Manifold::flat_torus(Vec::<f64>::new()).is_err());
}

#[test]
fn log_refuses_the_cut_locus() {
    let s = Manifold::sphere(2, 1.0).unwrap();
    let n = Point::new(vec![0.0, 0.0, 1.0]);
    let south = Point::new(vec![0.0, 0.0, -1.0]);
    assert!(s.log_vec(&n, &south).is_err());
    let t = Manifold::flat_torus(vec![1.0, 1.0]).unwrap();
    assert!(t.log_vec(&Point::new(vec![0.0, 0.0]), &Point::new(vec![0.5, 0.0])).is_err());
}
