//! Deterministic point sets: Halton sequences, ball samples and direction grids.

use nalgebra::DVector;
use std::f64::consts::PI;

const PRIMES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// Van der Corput radical inverse of `index` in `base`.
pub fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut scale = inv;
    let mut acc = 0.0;
    while index > 0 {
        acc += (index % base) as f64 * scale;
        index /= base;
        scale *= inv;
    }
    acc
}

/// The `index`-th point of the `dim`-dimensional Halton sequence in `[0,1)^dim`.
pub fn halton(index: u64, dim: usize) -> DVector<f64> {
    assert!(dim <= PRIMES.len(), "halton: dimension {dim} unsupported");
    DVector::from_iterator(dim, PRIMES[..dim].iter().map(|&b| radical_inverse(index, b)))
}

/// `n` quasi-random points in the open unit ball of `R^dim`.
///
/// Halton points of the cube `[-1,1]^dim` are kept when they fall strictly inside
/// the ball; the sequence starts at index `seed + 1` so different seeds give
/// disjoint stretches of the same sequence.
pub fn halton_unit_ball(dim: usize, n: usize, seed: u64) -> Vec<DVector<f64>> {
    let mut out = Vec::with_capacity(n);
    let mut index = seed.wrapping_add(1);
    while out.len() < n {
        let u = halton(index, dim);
        index += 1;
        let y = u.map(|c| 2.0 * c - 1.0);
        let r2 = y.norm_squared();
        if r2 < 1.0 && r2 > 0.0 {
            out.push(y);
        }
    }
    out
}

/// Deterministic grid of unit vectors in `R^dim`.
///
/// `dim = 1` gives `{+1, -1}`, `dim = 2` gives `count` equally spaced circle
/// points, `dim = 3` a Fibonacci sphere, and higher dimensions normalized
/// Halton ball points.
pub fn unit_directions(dim: usize, count: usize) -> Vec<DVector<f64>> {
    match dim {
        0 => Vec::new(),
        1 => vec![DVector::from_element(1, 1.0), DVector::from_element(1, -1.0)],
        2 => (0..count)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / count as f64;
                DVector::from_vec(vec![t.cos(), t.sin()])
            })
            .collect(),
        3 => fibonacci_sphere(count)
            .into_iter()
            .map(|p| DVector::from_vec(p.to_vec()))
            .collect(),
        _ => halton_unit_ball(dim, count, 0)
            .into_iter()
            .map(|y| {
                let n = y.norm();
                y / n
            })
            .collect(),
    }
}

/// `n` nearly uniform points on the unit 2-sphere (golden-angle spiral).
pub fn fibonacci_sphere(n: usize) -> Vec<[f64; 3]> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden * i as f64;
            [r * phi.cos(), r * phi.sin(), z]
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radical_inverse_base_two() {
        assert_eq!(radical_inverse(1, 2), 0.5);
        assert_eq!(radical_inverse(2, 2), 0.25);
        assert_eq!(radical_inverse(3, 2), 0.75);
        assert_eq!(radical_inverse(1, 3), 1.0 / 3.0);
    }

    #[test]
    fn ball_points_are_inside_and_reproducible() {
        let a = halton_unit_ball(3, 50, 7);
        let b = halton_unit_ball(3, 50, 7);
        assert_eq!(a, b);
        assert!(a.iter().all(|y| y.norm() < 1.0));
    }

    #[test]
    fn directions_are_unit() {
        for dim in 1..=5 {
            for u in unit_directions(dim, 64) {
                assert!((u.norm() - 1.0).abs() < 1e-12);
            }
        }
        assert_eq!(unit_directions(2, 64).len(), 64);
    }

    #[test]
    fn fibonacci_points_on_sphere() {
        for p in fibonacci_sphere(100) {
            let n = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
            assert!((n - 1.0).abs() < 1e-12);
        }
    }
}
