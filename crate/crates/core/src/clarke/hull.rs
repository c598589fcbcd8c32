//! Finite convex hulls and their minimum-norm points.
//!
//! The min-norm point is found with Wolfe's active-set method: a corral of
//! affinely independent points is grown by the vertex most violating the
//! optimality condition, and shrunk whenever the affine minimizer of the
//! corral leaves its convex hull.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative tolerance of the Wolfe optimality certificate.
pub const WOLFE_TOL: f64 = 1e-10;

const DEFAULT_MAX_ITER: usize = 10_000;

/// A finite point set whose convex hull approximates a generalized gradient or
/// differential. Matrices are stored flattened row-major with `matrix_shape`.
#[derive(Debug, Clone, PartialEq)]
pub struct HullSample {
    pub ambient_dim: usize,
    pub points: Vec<DVector<f64>>,
    pub matrix_shape: Option<(usize, usize)>,
    pub min_norm: Option<MinNorm>,
}

/// The minimum-norm point of a hull with its convex representation.
#[derive(Debug, Clone, PartialEq)]
pub struct MinNorm {
    pub point: DVector<f64>,
    pub norm: f64,
    /// `(index into points, coefficient)`, coefficients summing to one.
    pub support: Vec<(usize, f64)>,
    pub iterations: usize,
    pub converged: bool,
}

impl HullSample {
    pub fn new(ambient_dim: usize, points: Vec<DVector<f64>>) -> Self {
        HullSample {
            ambient_dim,
            points,
            matrix_shape: None,
            min_norm: None,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Computes (once) and caches the min-norm point.
    pub fn solve(&mut self) -> Result<&MinNorm> {
        if self.min_norm.is_none() {
            self.min_norm = Some(min_norm_point(&self.points)?);
        }
        Ok(self.min_norm.as_ref().expect("just set"))
    }

    pub fn merge(&mut self, other: HullSample) {
        self.points.extend(other.points);
        self.min_norm = None;
    }

    /// Coordinate-wise extent, mostly useful for one-dimensional hulls.
    pub fn bounds(&self) -> Vec<(f64, f64)> {
        (0..self.ambient_dim)
            .map(|k| {
                self.points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                    (lo.min(p[k]), hi.max(p[k]))
                })
            })
            .collect()
    }

    /// Largest pairwise distance between sample points.
    pub fn diameter(&self) -> f64 {
        let mut d: f64 = 0.0;
        for (i, a) in self.points.iter().enumerate() {
            for b in &self.points[i + 1..] {
                d = d.max((a - b).norm());
            }
        }
        d
    }
}

/// Euclidean minimum-norm point of `Conv(points)`.
///
/// The result satisfies `<x, p_i - x> >= -1e-10 * |x| * max_i |p_i|` for every
/// `i`; failing to certify it within the iteration budget yields
/// `NonConvergence`.
pub fn min_norm_point(points: &[DVector<f64>]) -> Result<MinNorm> {
    let best = min_norm_point_best_effort(points, DEFAULT_MAX_ITER)?;
    if best.converged {
        Ok(best)
    } else {
        Err(Error::NonConvergence {
            iterations: best.iterations,
            best_norm: best.norm,
        })
    }
}

/// Same as [`min_norm_point`] but returns the best iterate with `converged`
/// cleared instead of failing.
pub fn min_norm_point_best_effort(points: &[DVector<f64>], max_iter: usize) -> Result<MinNorm> {
    let Some(first) = points.first() else {
        return Err(Error::InvalidInput("min-norm point of an empty hull".into()));
    };
    let dim = first.len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::InvalidInput("hull points have mixed dimensions".into()));
    }
    let scale = points.iter().map(|p| p.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Ok(MinNorm {
            point: DVector::zeros(dim),
            norm: 0.0,
            support: vec![(0, 1.0)],
            iterations: 0,
            converged: true,
        });
    }

    let start = (0..points.len())
        .min_by(|&a, &b| points[a].norm_squared().total_cmp(&points[b].norm_squared()))
        .expect("nonempty");
    let mut corral = vec![start];
    let mut lambda = vec![1.0];
    let mut x = points[start].clone();
    let zero_tol = 1e-12 * scale;

    for iter in 1..=max_iter {
        let xn = x.norm();
        if xn <= zero_tol {
            return Ok(finish(points, corral, lambda, iter, true));
        }
        let (j, best) = points
            .iter()
            .enumerate()
            .map(|(i, p)| (i, x.dot(p)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("nonempty");
        if best - xn * xn >= -WOLFE_TOL * xn * scale || corral.contains(&j) {
            let converged = best - xn * xn >= -WOLFE_TOL * xn * scale;
            return Ok(finish(points, corral, lambda, iter, converged));
        }
        corral.push(j);
        lambda.push(0.0);

        // minor cycles
        loop {
            let alpha = affine_minimizer(points, &corral);
            if alpha.iter().all(|&a| a > 1e-14) {
                lambda = alpha;
                break;
            }
            let mut theta: f64 = 1.0;
            for (l, a) in lambda.iter().zip(&alpha) {
                if *a <= 1e-14 && l - a > 0.0 {
                    theta = theta.min(l / (l - a));
                }
            }
            for (l, a) in lambda.iter_mut().zip(&alpha) {
                *l = theta * a + (1.0 - theta) * *l;
            }
            let mut keep_c = Vec::with_capacity(corral.len());
            let mut keep_l = Vec::with_capacity(corral.len());
            for (c, l) in corral.iter().zip(&lambda) {
                if *l > 1e-14 {
                    keep_c.push(*c);
                    keep_l.push(*l);
                }
            }
            if keep_c.is_empty() {
                // numerical breakdown; restart from the best vertex
                keep_c.push(j);
                keep_l.push(1.0);
            }
            let s: f64 = keep_l.iter().sum();
            keep_l.iter_mut().for_each(|l| *l /= s);
            corral = keep_c;
            lambda = keep_l;
            if corral.len() == 1 {
                break;
            }
        }
        x = combine(points, &corral, &lambda);
    }
    Ok(finish(points, corral, lambda, max_iter, false))
}

fn combine(points: &[DVector<f64>], corral: &[usize], lambda: &[f64]) -> DVector<f64> {
    let mut x = DVector::zeros(points[0].len());
    for (c, l) in corral.iter().zip(lambda) {
        x.axpy(*l, &points[*c], 1.0);
    }
    x
}

/// Coefficients (summing to one) of the point of least norm in the affine hull
/// of `points[corral]`, via least squares on the differences to the first point.
fn affine_minimizer(points: &[DVector<f64>], corral: &[usize]) -> Vec<f64> {
    let k = corral.len();
    if k == 1 {
        return vec![1.0];
    }
    let p0 = &points[corral[0]];
    let dim = p0.len();
    let d = DMatrix::from_fn(dim, k - 1, |r, c| points[corral[c + 1]][r] - p0[r]);
    let rhs = -p0;
    let svd = d.svd(true, true);
    let eps = 1e-13 * svd.singular_values.max().max(f64::MIN_POSITIVE);
    let beta = svd
        .solve(&rhs, eps)
        .unwrap_or_else(|_| DVector::zeros(k - 1));
    let mut alpha = Vec::with_capacity(k);
    alpha.push(1.0 - beta.sum());
    alpha.extend(beta.iter().copied());
    alpha
}

/// Prunes the representation to at most `dim + 1` affinely independent points.
fn finish(
    points: &[DVector<f64>],
    corral: Vec<usize>,
    lambda: Vec<f64>,
    iterations: usize,
    converged: bool,
) -> MinNorm {
    let dim = points[0].len();
    let (corral, lambda) = caratheodory_reduce(points, corral, lambda, dim + 1);
    let point = combine(points, &corral, &lambda);
    let norm = point.norm();
    MinNorm {
        point,
        norm,
        support: corral.into_iter().zip(lambda).collect(),
        iterations,
        converged,
    }
}

/// Removes points from a convex combination along affine dependencies until
/// at most `limit` remain, keeping the represented point fixed.
fn caratheodory_reduce(
    points: &[DVector<f64>],
    mut corral: Vec<usize>,
    mut lambda: Vec<f64>,
    limit: usize,
) -> (Vec<usize>, Vec<f64>) {
    while corral.len() > limit {
        let dim = points[0].len();
        let k = corral.len();
        // [P; 1^T] mu = 0 has a nontrivial solution since k > dim + 1
        let a = DMatrix::from_fn(dim + 1, k, |r, c| {
            if r < dim {
                points[corral[c]][r]
            } else {
                1.0
            }
        });
        let mu = null_vector(&a);
        let mut t = f64::INFINITY;
        let mut drop = None;
        for (i, (&l, &m)) in lambda.iter().zip(mu.iter()).enumerate() {
            if m > 1e-15 && l / m < t {
                t = l / m;
                drop = Some(i);
            }
        }
        let Some(drop) = drop else { break };
        for (l, m) in lambda.iter_mut().zip(mu.iter()) {
            *l -= t * m;
        }
        corral.remove(drop);
        lambda.remove(drop);
        for l in lambda.iter_mut() {
            *l = l.max(0.0);
        }
        let s: f64 = lambda.iter().sum();
        lambda.iter_mut().for_each(|l| *l /= s);
    }
    (corral, lambda)
}

/// A unit vector in the null space of a wide matrix, via Gaussian elimination.
fn null_vector(a: &DMatrix<f64>) -> DVector<f64> {
    let (r, k) = a.shape();
    let mut m = a.clone();
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..k {
        if row == r {
            break;
        }
        let (best, val) = (row..r)
            .map(|i| (i, m[(i, col)].abs()))
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .expect("rows remain");
        if val < 1e-12 {
            continue;
        }
        m.swap_rows(row, best);
        let piv = m[(row, col)];
        for c in 0..k {
            m[(row, c)] /= piv;
        }
        for i in 0..r {
            if i != row {
                let f = m[(i, col)];
                if f != 0.0 {
                    for c in 0..k {
                        m[(i, c)] -= f * m[(row, c)];
                    }
                }
            }
        }
        pivots.push(col);
        row += 1;
    }
    let free = (0..k).find(|c| !pivots.contains(c)).unwrap_or(k - 1);
    let mut v = DVector::zeros(k);
    v[free] = 1.0;
    for (i, &pc) in pivots.iter().enumerate() {
        v[pc] = -m[(i, free)];
    }
    let n = v.norm();
    v / n
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    #[test]
    fn segment_between_unit_vectors() {
        let r = min_norm_point(&[v(&[1.0, 0.0]), v(&[0.0, 1.0])]).unwrap();
        assert_abs_diff_eq!(r.point[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(r.point[1], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(r.norm, std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-12);
    }

    #[test]
    fn origin_inside() {
        let pts = [v(&[1.0, 0.0]), v(&[-1.0, 1.0]), v(&[-1.0, -1.0]), v(&[0.3, 0.2])];
        let r = min_norm_point(&pts).unwrap();
        assert!(r.norm < 1e-12);
        assert!(r.support.len() <= 3);
    }

    #[test]
    fn singleton() {
        let r = min_norm_point(&[v(&[3.0, 4.0])]).unwrap();
        assert_eq!(r.norm, 5.0);
        assert_eq!(r.support, vec![(0, 1.0)]);
    }

    #[test]
    fn empty_is_rejected() {
        assert!(matches!(min_norm_point(&[]), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn interval_hull() {
        let pts: Vec<_> = [-2.0, 1.0, 0.5].iter().map(|x| v(&[*x])).collect();
        assert!(min_norm_point(&pts).unwrap().norm < 1e-15);
        let pts: Vec<_> = [1.0, 4.0, 2.5].iter().map(|x| v(&[*x])).collect();
        assert_abs_diff_eq!(min_norm_point(&pts).unwrap().norm, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn duplicated_points_are_harmless() {
        let pts = vec![v(&[1.0, 1.0]); 5];
        let r = min_norm_point(&pts).unwrap();
        assert_abs_diff_eq!(r.norm, 2f64.sqrt(), epsilon = 1e-14);
    }

    #[test]
    fn caratheodory_reduction_keeps_point() {
        let pts = [v(&[1.0, 0.0]), v(&[0.0, 1.0]), v(&[-1.0, 0.0]), v(&[0.0, -1.0])];
        let (c, l) = caratheodory_reduce(&pts, vec![0, 1, 2, 3], vec![0.25; 4], 3);
        assert!(c.len() <= 3);
        let x = combine(&pts, &c, &l);
        assert!(x.norm() < 1e-12);
        assert_abs_diff_eq!(l.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }
}
