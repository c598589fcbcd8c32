//! Generalized gradients and differentials of Lipschitz fields.
//!
//! A generalized gradient at `p` is approximated by the convex hull of
//! ordinary gradients sampled on a ladder of small balls around `p`, each one
//! parallel transported back to `T_p M`. A point is singular when the hull
//! comes within a tolerance of the origin (scalar case) or when some covector
//! annihilates it (map case).

mod field;
mod hull;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifold::{Frame, Manifold, Point};
use crate::sampling::{halton_unit_ball, unit_directions};

pub use field::{fd_step, FdGradient, MapField, ScalarField, FD_STEP};
pub use hull::{min_norm_point, min_norm_point_best_effort, HullSample, MinNorm, WOLFE_TOL};

/// Default singularity tolerance before Lipschitz scaling.
pub const TOL_SING: f64 = 1e-4;

/// Fraction of the Lipschitz estimate above which a forward/backward
/// mismatch marks a sample as sitting on a kink.
const KINK_FRACTION: f64 = 0.1;

/// A linear map between tangent spaces in chosen orthonormal frames.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearMapRep {
    pub source_frame: Frame,
    pub target_frame: Frame,
    /// `target_dim x source_dim`
    pub matrix: DMatrix<f64>,
}

impl LinearMapRep {
    /// The adjoint, which is the transpose in orthonormal frames.
    pub fn adjoint(&self) -> LinearMapRep {
        LinearMapRep {
            source_frame: self.target_frame.clone(),
            target_frame: self.source_frame.clone(),
            matrix: self.matrix.transpose(),
        }
    }

    /// Number of singular values above `tol`.
    pub fn rank(&self, tol: f64) -> usize {
        self.matrix
            .clone()
            .singular_values()
            .iter()
            .filter(|s| **s > tol)
            .count()
    }

    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        self.target_frame
            .to_ambient(&(&self.matrix * self.source_frame.components(v)))
    }
}

/// Knobs of the sampling plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingParams {
    /// Largest sampling radius; defaults to `min(1e-2, convexity_radius / 10)`.
    pub base_radius: Option<f64>,
    /// Number of radii `r0, r0/2, r0/4, ...`.
    pub rungs: usize,
    pub samples_per_rung: usize,
    pub seed: u64,
    pub tol_sing: f64,
    /// Covector directions probed for maps into manifolds of dimension >= 2.
    pub directions: usize,
}

impl Default for SamplingParams {
    fn default() -> Self {
        SamplingParams {
            base_radius: None,
            rungs: 3,
            samples_per_rung: 32,
            seed: 0,
            tol_sing: TOL_SING,
            directions: 64,
        }
    }
}

impl SamplingParams {
    pub fn base_radius_for(&self, manifold: &Manifold) -> f64 {
        self.base_radius
            .unwrap_or_else(|| (0.1 * manifold.convexity_radius()).min(1e-2))
    }

    pub fn radii(&self, manifold: &Manifold) -> Vec<f64> {
        let r0 = self.base_radius_for(manifold);
        (0..self.rungs.max(1)).map(|k| r0 / (1u64 << k) as f64).collect()
    }
}

/// Outcome of a singularity test, with the evidence it was based on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularityVerdict {
    pub singular: bool,
    /// Scalar case: distance from the hull to the origin. Map case: the
    /// surjectivity margin, half the smallest `|A^T u|` over unit covectors.
    pub margin: f64,
    pub threshold: f64,
    pub samples_used: usize,
    pub radii_used: Vec<f64>,
    /// Set when the evidence is a sample of a continuum of directions.
    #[serde(default)]
    pub continuum: bool,
}

fn check_radius(manifold: &Manifold, radius: f64) -> Result<()> {
    if !(radius > 0.0) || radius >= manifold.convexity_radius() {
        return Err(Error::DomainViolation(format!(
            "sampling radius {radius} must lie in (0, {})",
            manifold.convexity_radius()
        )));
    }
    Ok(())
}

/// Points `exp_p(radius * y)` for Halton points `y` of the unit ball.
fn ball_points(manifold: &Manifold, p: &Point, radius: f64, n: usize, seed: u64) -> Vec<Point> {
    let frame = manifold.frame(p);
    halton_unit_ball(manifold.dim(), n, seed)
        .into_iter()
        .map(|y| manifold.exp_at(p, &frame.to_ambient(&(y * radius))))
        .collect()
}

fn kink_threshold(lip: f64) -> f64 {
    KINK_FRACTION * lip.max(1e-3)
}

/// Gradients at `n` quasi-random points of `B_radius(p)`, transported to
/// `T_p M` and written in the standard frame at `p`.
///
/// Samples where finite differences straddle a kink are discarded; losing more
/// than half of them is an `InsufficientSamples` error.
pub fn sample_mixture(
    field: &ScalarField,
    p: &Point,
    radius: f64,
    n: usize,
    seed: u64,
) -> Result<HullSample> {
    let manifold = field.manifold();
    check_radius(manifold, radius)?;
    let m = manifold.dim();
    if n < m + 1 {
        return Err(Error::InvalidInput(format!("need at least {} samples, got {n}", m + 1)));
    }
    let frame = manifold.frame(p);
    let raw: Vec<(Point, Option<DVector<f64>>, f64)> = ball_points(manifold, p, radius, n, seed)
        .into_iter()
        .map(|x| {
            if field.has_gradient_oracle() {
                if let Some(g) = field.oracle_gradient(&x) {
                    return (x, Some(g), 0.0);
                }
            }
            let fd = field.fd_gradient(&x);
            (x, Some(fd.gradient), fd.kink_indicator)
        })
        .collect();
    let lip = field.lipschitz_hint().unwrap_or_else(|| {
        raw.iter()
            .filter_map(|(_, g, _)| g.as_ref().map(|g| g.norm()))
            .fold(0.0, f64::max)
    });
    let limit = kink_threshold(lip);
    let mut points = Vec::with_capacity(n);
    for (x, g, kink) in raw {
        let Some(g) = g else { continue };
        if kink > limit {
            continue;
        }
        let back = manifold.parallel_transport(&x, p, &g)?;
        points.push(frame.components(&back));
    }
    let discarded = n - points.len();
    if 2 * discarded > n {
        return Err(Error::InsufficientSamples { drawn: n, discarded });
    }
    Ok(HullSample::new(m, points))
}

/// Merged samples over the whole radius ladder.
pub fn generalized_gradient(field: &ScalarField, p: &Point, params: &SamplingParams) -> Result<HullSample> {
    let n = params.samples_per_rung;
    let mut hull: Option<HullSample> = None;
    for (k, r) in params.radii(field.manifold()).into_iter().enumerate() {
        let s = sample_mixture(field, p, r, n, params.seed.wrapping_add((k * n) as u64))?;
        match hull.as_mut() {
            Some(h) => h.merge(s),
            None => hull = Some(s),
        }
    }
    Ok(hull.expect("at least one rung"))
}

fn hull_lipschitz(hull: &HullSample, hint: Option<f64>) -> f64 {
    hint.unwrap_or_else(|| hull.points.iter().map(|g| g.norm()).fold(0.0, f64::max))
}

/// Singularity test for a scalar field: `0` within `tol_sing * max(1, Lip)`
/// of the sampled generalized gradient.
pub fn is_singular_scalar(field: &ScalarField, p: &Point, params: &SamplingParams) -> Result<SingularityVerdict> {
    let mut hull = generalized_gradient(field, p, params)?;
    let lip = hull_lipschitz(&hull, field.lipschitz_hint());
    let threshold = params.tol_sing * lip.max(1.0);
    let margin = hull.solve()?.norm;
    Ok(SingularityVerdict {
        singular: margin < threshold,
        margin,
        threshold,
        samples_used: hull.len(),
        radii_used: params.radii(field.manifold()),
        continuum: false,
    })
}

/// Differential samples of a map at points of `B_radius(p)`, each a
/// `target_dim x source_dim` matrix in the frames at `p` and `F(p)`.
pub fn sample_differential(
    field: &MapField,
    p: &Point,
    radius: f64,
    n: usize,
    seed: u64,
) -> Result<HullSample> {
    let source = field.source();
    let target = field.target();
    check_radius(source, radius)?;
    let (m, k) = (source.dim(), target.dim());
    if n < m + 1 {
        return Err(Error::InvalidInput(format!("need at least {} samples, got {n}", m + 1)));
    }
    let fp = field.value(p);
    let src_frame = source.frame(p);
    let tgt_frame = target.frame(&fp);
    let reach = target.injectivity_radius();

    let mut raw = Vec::with_capacity(n);
    for x in ball_points(source, p, radius, n, seed) {
        let fx = field.value(&x);
        let dist = target.distance(&fx, &fp);
        if dist >= reach {
            return Err(Error::TargetBallViolation {
                distance: dist,
                radius: reach,
            });
        }
        let mut mat = DMatrix::zeros(k, m);
        let mut kink: f64 = 0.0;
        for (col, e) in src_frame.basis.iter().enumerate() {
            let ex = source.parallel_transport(p, &x, e)?;
            let image = match field.oracle_directional(&x, &ex) {
                Some(v) => v,
                None => {
                    let (v, mismatch) = field.fd_directional(&x, &ex);
                    kink = kink.max(mismatch);
                    v
                }
            };
            let back = target.parallel_transport(&fx, &fp, &image)?;
            mat.set_column(col, &tgt_frame.components(&back));
        }
        raw.push((mat, kink));
    }
    let lip = field
        .lipschitz_hint()
        .unwrap_or_else(|| raw.iter().map(|(a, _)| a.norm()).fold(0.0, f64::max));
    let limit = kink_threshold(lip);
    let points: Vec<DVector<f64>> = raw
        .into_iter()
        .filter(|(_, kink)| *kink <= limit)
        .map(|(a, _)| DVector::from_row_slice(a.transpose().as_slice()))
        .collect();
    let discarded = n - points.len();
    if 2 * discarded > n {
        return Err(Error::InsufficientSamples { drawn: n, discarded });
    }
    let mut hull = HullSample::new(k * m, points);
    hull.matrix_shape = Some((k, m));
    Ok(hull)
}

/// Merged differential samples over the radius ladder.
pub fn generalized_differential(field: &MapField, p: &Point, params: &SamplingParams) -> Result<HullSample> {
    let n = params.samples_per_rung;
    let mut hull: Option<HullSample> = None;
    for (k, r) in params.radii(field.source()).into_iter().enumerate() {
        let s = sample_differential(field, p, r, n, params.seed.wrapping_add((k * n) as u64))?;
        match hull.as_mut() {
            Some(h) => h.merge(s),
            None => hull = Some(s),
        }
    }
    Ok(hull.expect("at least one rung"))
}

/// Unflattens a differential sample.
pub fn sample_matrix(hull: &HullSample, index: usize) -> DMatrix<f64> {
    let (rows, cols) = hull.matrix_shape.expect("differential hull");
    DMatrix::from_row_slice(rows, cols, hull.points[index].as_slice())
}

/// Surjectivity margin of a set of matrices: half the smallest distance from
/// the origin to `Conv{A^T u}` over the probed unit covectors `u`, together
/// with the minimizing covector.
pub fn surjectivity_margin(hull: &HullSample, directions: usize) -> Result<(f64, DVector<f64>)> {
    let (rows, cols) = hull
        .matrix_shape
        .ok_or_else(|| Error::InvalidInput("surjectivity margin needs matrix samples".into()))?;
    if rows > cols {
        return Ok((0.0, DVector::from_element(rows, 0.0)));
    }
    let mats: Vec<DMatrix<f64>> = (0..hull.len()).map(|i| sample_matrix(hull, i)).collect();
    let mut best = (f64::INFINITY, DVector::zeros(rows));
    for u in unit_directions(rows, directions) {
        let pts: Vec<DVector<f64>> = mats.iter().map(|a| a.tr_mul(&u)).collect();
        let norm = min_norm_point(&pts)?.norm;
        if norm < best.0 {
            best = (norm, u);
        }
    }
    Ok((0.5 * best.0, best.1))
}

/// Singularity test for a map: the sampled generalized differential fails to
/// be uniformly surjective.
pub fn is_singular_map(field: &MapField, p: &Point, params: &SamplingParams) -> Result<SingularityVerdict> {
    let hull = generalized_differential(field, p, params)?;
    let lip = field.lipschitz_hint().unwrap_or_else(|| {
        (0..hull.len())
            .map(|i| sample_matrix(&hull, i).norm())
            .fold(0.0, f64::max)
    });
    let threshold = params.tol_sing * lip.max(1.0);
    let (margin, _) = surjectivity_margin(&hull, params.directions)?;
    Ok(SingularityVerdict {
        singular: margin < threshold,
        margin,
        threshold,
        samples_used: hull.len(),
        radii_used: params.radii(field.source()),
        continuum: false,
    })
}

/// Critical points of `d_p` in the sense of Grove and Shiohama: `q` is critical
/// when `0` lies in the convex hull of the arrival velocities at `q` of all
/// minimal geodesics from `p`. The base point itself counts as critical.
pub fn gs_critical(manifold: &Manifold, p: &Point, q: &Point, params: &SamplingParams) -> Result<SingularityVerdict> {
    let geo = manifold.minimal_geodesics(p, q, params.directions.max(2));
    if geo.distance == 0.0 {
        return Ok(SingularityVerdict {
            singular: true,
            margin: 0.0,
            threshold: params.tol_sing,
            samples_used: 0,
            radii_used: Vec::new(),
            continuum: false,
        });
    }
    let frame = manifold.frame(q);
    let points: Vec<DVector<f64>> = geo
        .velocities
        .iter()
        .map(|u| frame.components(&manifold.geodesic_velocity(p, u, geo.distance)))
        .collect();
    let margin = min_norm_point(&points)?.norm;
    Ok(SingularityVerdict {
        singular: margin < params.tol_sing,
        margin,
        threshold: params.tol_sing,
        samples_used: points.len(),
        radii_used: Vec::new(),
        continuum: geo.continuum,
    })
}

/// Radius of nonsingular stability: a `lambda` such that every point of
/// `B_{2 lambda}(p)` is nonsingular, or `0` when `p` is (nearly) singular.
///
/// Doubles a trial radius `rho` while the hull sampled over `B_{rho + r0}(p)`
/// keeps a margin above twice the singularity threshold, and returns half the
/// last radius that passed.
pub fn stability_radius(field: &ScalarField, p: &Point, params: &SamplingParams) -> Result<f64> {
    let manifold = field.manifold();
    let r0 = params.base_radius_for(manifold);
    let limit = manifold.convexity_radius();
    let mut lambda = 0.0;
    let mut rho = r0;
    for step in 0..8 {
        if rho + r0 >= limit {
            break;
        }
        let n = 4 * params.samples_per_rung;
        let mut hull = sample_mixture(field, p, rho + r0, n, params.seed.wrapping_add(1000 + (step * n) as u64))?;
        hull.merge(generalized_gradient(field, p, params)?);
        let lip = hull_lipschitz(&hull, field.lipschitz_hint());
        let threshold = params.tol_sing * lip.max(1.0);
        if hull.solve()?.norm > 2.0 * threshold {
            lambda = 0.5 * rho;
            rho *= 2.0;
        } else {
            break;
        }
    }
    Ok(lambda)
}
