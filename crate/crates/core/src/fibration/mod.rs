//! From smooth approximations to submersions.
//!
//! The target manifold is embedded in Euclidean space, the smoothing is done
//! on the embedded values, and the result is pushed back onto the target with
//! the nearest-point projection of a tubular neighborhood. The composition is
//! certified on a grid: it stays inside the tube, stays within `eta` of the
//! original map, and its differential keeps full rank.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clarke::MapField;
use crate::error::{Error, Result};
use crate::manifold::{Manifold, Point, ScanGrid};
use crate::smoothing::{build_cover, default_cover_radius, EmbeddedMap, GradientPath, SmoothedMap, SmoothingParams};

/// Default ladder of mollifier radii tried by [`eta_search`].
pub const EPSILON_LADDER: [f64; 5] = [0.2, 0.1, 0.05, 0.025, 0.0125];

/// Default rank tolerance on the smallest singular value.
pub const SUBMERSION_TOL: f64 = 1e-3;

/// An isometric embedding of a built-in target with a tubular neighborhood of
/// radius `tube_radius` on which the nearest-point projection is smooth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Embedding {
    pub target: Manifold,
    pub ambient_dim: usize,
    pub tube_radius: f64,
}

impl Embedding {
    pub fn new(target: &Manifold) -> Result<Self> {
        target
            .validate()
            .map_err(|e| Error::UnsupportedTarget(e.to_string()))?;
        let (ambient_dim, tube_radius) = match target {
            Manifold::Euclidean { dim } => (*dim, f64::INFINITY),
            Manifold::Sphere { dim, radius } => (dim + 1, 0.5 * radius),
            Manifold::FlatTorus { periods } => (
                2 * periods.len(),
                periods.iter().copied().fold(f64::INFINITY, f64::min) / (4.0 * PI),
            ),
        };
        Ok(Embedding {
            target: target.clone(),
            ambient_dim,
            tube_radius,
        })
    }

    pub fn embed(&self, x: &Point) -> DVector<f64> {
        match &self.target {
            Manifold::FlatTorus { periods } => {
                let mut y = DVector::zeros(self.ambient_dim);
                for (i, l) in periods.iter().enumerate() {
                    let rho = l / (2.0 * PI);
                    let phi = 2.0 * PI * x.coords[i] / l;
                    y[2 * i] = rho * phi.cos();
                    y[2 * i + 1] = rho * phi.sin();
                }
                y
            }
            _ => x.coords.clone(),
        }
    }

    /// `dE_x(v)` for `v` tangent at `x`.
    pub fn embed_differential(&self, x: &Point, v: &DVector<f64>) -> DVector<f64> {
        match &self.target {
            Manifold::FlatTorus { periods } => {
                let mut y = DVector::zeros(self.ambient_dim);
                for (i, l) in periods.iter().enumerate() {
                    let phi = 2.0 * PI * x.coords[i] / l;
                    y[2 * i] = -phi.sin() * v[i];
                    y[2 * i + 1] = phi.cos() * v[i];
                }
                y
            }
            _ => v.clone(),
        }
    }

    /// Nearest point of the target to `y`.
    pub fn project(&self, y: &DVector<f64>) -> Result<Point> {
        match &self.target {
            Manifold::Euclidean { .. } => Ok(Point { coords: y.clone() }),
            Manifold::Sphere { radius, .. } => {
                let n = y.norm();
                if n == 0.0 {
                    return Err(Error::DomainViolation("projection of the sphere's center".into()));
                }
                Ok(Point { coords: y * (radius / n) })
            }
            Manifold::FlatTorus { periods } => {
                let mut theta = Vec::with_capacity(periods.len());
                for (i, l) in periods.iter().enumerate() {
                    let (a, b) = (y[2 * i], y[2 * i + 1]);
                    if a == 0.0 && b == 0.0 {
                        return Err(Error::DomainViolation(format!("projection of the axis of circle {i}")));
                    }
                    theta.push(l * b.atan2(a) / (2.0 * PI));
                }
                self.target.point(theta)
            }
        }
    }

    /// Differential of the projection at `y`, mapping `R^l` to tangent vectors
    /// of the target in its own coordinates.
    pub fn project_differential(&self, y: &DVector<f64>) -> DMatrix<f64> {
        match &self.target {
            Manifold::Euclidean { dim } => DMatrix::identity(*dim, *dim),
            Manifold::Sphere { radius, .. } => {
                let n = y.norm();
                let u = y / n;
                (DMatrix::identity(y.len(), y.len()) - &u * u.transpose()) * (radius / n)
            }
            Manifold::FlatTorus { periods } => {
                let mut d = DMatrix::zeros(periods.len(), self.ambient_dim);
                for (i, l) in periods.iter().enumerate() {
                    let (a, b) = (y[2 * i], y[2 * i + 1]);
                    let s2 = a * a + b * b;
                    // d(atan2(b, a)) = (a db - b da) / s^2
                    let k = l / (2.0 * PI) / s2;
                    d[(i, 2 * i)] = -b * k;
                    d[(i, 2 * i + 1)] = a * k;
                }
                d
            }
        }
    }

    /// Euclidean distance from `y` to the embedded target.
    pub fn offset(&self, y: &DVector<f64>) -> f64 {
        match &self.target {
            Manifold::Euclidean { .. } => 0.0,
            Manifold::Sphere { radius, .. } => (y.norm() - radius).abs(),
            Manifold::FlatTorus { periods } => periods
                .iter()
                .enumerate()
                .map(|(i, l)| {
                    let s = (y[2 * i].powi(2) + y[2 * i + 1].powi(2)).sqrt();
                    (s - l / (2.0 * PI)).powi(2)
                })
                .sum::<f64>()
                .sqrt(),
        }
    }
}

/// A map composed with the embedding of its target, seen as an `R^l`-valued field.
#[derive(Debug, Clone)]
pub struct EmbeddedField {
    pub map: MapField,
    pub embedding: Embedding,
}

impl EmbeddedField {
    pub fn new(map: MapField) -> Result<Self> {
        let embedding = Embedding::new(map.target())?;
        Ok(EmbeddedField { map, embedding })
    }
}

impl EmbeddedMap for EmbeddedField {
    fn name(&self) -> &str {
        &self.map.name
    }

    fn source(&self) -> &Manifold {
        self.map.source()
    }

    fn out_dim(&self) -> usize {
        self.embedding.ambient_dim
    }

    fn eval(&self, x: &Point) -> DVector<f64> {
        self.embedding.embed(&self.map.value(x))
    }

    fn directional(&self, x: &Point, v: &DVector<f64>) -> DVector<f64> {
        match self.map.oracle_directional(x, v) {
            Some(w) => self.embedding.embed_differential(&self.map.value(x), &w),
            None => {
                let m = self.map.source();
                let h = crate::clarke::fd_step(x);
                let up = self.eval(&m.exp_at(x, &(v * h)));
                let down = self.eval(&m.exp_at(x, &(v * -h)));
                (up - down) / (2.0 * h)
            }
        }
    }

    fn lipschitz_hint(&self) -> Option<f64> {
        self.map.lipschitz_hint()
    }
}

/// `f_eps = pi_N o F_eps`, checked to stay inside the tube on a grid.
#[derive(Debug, Clone)]
pub struct Fibration {
    pub smoothed: SmoothedMap,
    pub embedding: Embedding,
    /// Largest distance of a smoothed grid value to the embedded target.
    pub max_offset: f64,
}

/// Composes a smoothing of an embedded map with the tube projection.
///
/// Fails with `TubeEscape` at the first grid point (in grid order) whose
/// smoothed value leaves the tube.
pub fn compose_fibration(smoothed: SmoothedMap, embedding: &Embedding, grid: &ScanGrid) -> Result<Fibration> {
    if smoothed.field().out_dim() != embedding.ambient_dim {
        return Err(Error::InvalidInput("smoothed field and embedding disagree on dimension".into()));
    }
    let offsets: Vec<Result<f64>> = grid
        .points
        .par_iter()
        .map(|q| Ok(embedding.offset(&smoothed.value(q)?)))
        .collect();
    let mut max_offset: f64 = 0.0;
    for (q, off) in grid.points.iter().zip(offsets) {
        let off = off?;
        if !(off < embedding.tube_radius) {
            return Err(Error::TubeEscape {
                point: q.as_slice().to_vec(),
                distance: off,
                tube_radius: embedding.tube_radius,
            });
        }
        max_offset = max_offset.max(off);
    }
    Ok(Fibration {
        smoothed,
        embedding: embedding.clone(),
        max_offset,
    })
}

impl Fibration {
    pub fn eval(&self, q: &Point) -> Result<Point> {
        self.embedding.project(&self.smoothed.value(q)?)
    }

    /// `(df_eps)_q` as a `target_dim x source_dim` matrix in the standard
    /// frames at `q` and `f_eps(q)`.
    pub fn differential(&self, q: &Point, path: GradientPath) -> Result<DMatrix<f64>> {
        let y = self.smoothed.value(q)?;
        let fq = self.embedding.project(&y)?;
        let dproj = self.embedding.project_differential(&y);
        let dsmooth = self.smoothed.differential(q, path)?;
        let ambient = dproj * dsmooth;
        let frame = self.embedding.target.frame(&fq);
        let mut out = DMatrix::zeros(frame.dim(), ambient.ncols());
        for k in 0..ambient.ncols() {
            out.set_column(k, &frame.components(&ambient.column(k).into_owned()));
        }
        Ok(out)
    }

    /// Central differences of `f_eps` read through the target logarithm.
    pub fn differential_fd(&self, q: &Point, h: f64) -> Result<DMatrix<f64>> {
        let src = self.smoothed.manifold();
        let tgt = &self.embedding.target;
        let fq = self.eval(q)?;
        let frame_q = src.frame(q);
        let frame_t = tgt.frame(&fq);
        let mut out = DMatrix::zeros(frame_t.dim(), frame_q.dim());
        for (k, e) in frame_q.basis.iter().enumerate() {
            let up = tgt.log_vec(&fq, &self.eval(&src.exp_at(q, &(e * h)))?)?;
            let down = tgt.log_vec(&fq, &self.eval(&src.exp_at(q, &(e * -h)))?)?;
            out.set_column(k, &frame_t.components(&((up - down) / (2.0 * h))));
        }
        Ok(out)
    }
}

/// Smallest singular value of rank `target_dim`, or zero if rank is impossible.
pub fn rank_singular_value(d: &DMatrix<f64>) -> f64 {
    let n = d.nrows();
    if n > d.ncols() {
        return 0.0;
    }
    let mut s: Vec<f64> = d.clone().singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s[n - 1]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubmersionCheck {
    pub min_sigma: f64,
    pub transversal: bool,
    /// Grid index where `min_sigma` is attained.
    pub argmin: usize,
    pub tol: f64,
}

/// Rank certificate of `df_eps` over a grid.
pub fn submersion_check(fib: &Fibration, grid: &ScanGrid, tol: f64) -> Result<SubmersionCheck> {
    let sigmas: Vec<Result<f64>> = grid
        .points
        .par_iter()
        .map(|q| Ok(rank_singular_value(&fib.differential(q, GradientPath::Jacobi)?)))
        .collect();
    let mut best = (f64::INFINITY, 0);
    for (i, s) in sigmas.into_iter().enumerate() {
        let s = s?;
        if s < best.0 {
            best = (s, i);
        }
    }
    Ok(SubmersionCheck {
        min_sigma: best.0,
        transversal: best.0 > tol,
        argmin: best.1,
        tol,
    })
}

/// Per-rung outcome of the `epsilon` ladder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FibrationReport {
    pub epsilon: f64,
    pub eta: f64,
    pub min_sigma: f64,
    /// Largest target distance between `f_eps` and the original map on the grid.
    pub max_dist: f64,
    pub max_tube_offset: f64,
    pub tube_radius: f64,
    pub transversal: bool,
    pub accepted: bool,
    pub grid_size: usize,
    pub grid: String,
    /// Set when the precondition or tube containment failed at this rung.
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtaSearch {
    pub accepted_epsilon: Option<f64>,
    /// The accepted rung, or the rung with the smallest `max_dist`.
    pub report: FibrationReport,
    pub rungs: Vec<FibrationReport>,
    /// Properties implied by compact source, connected target and the rank
    /// certificate rather than tested separately.
    pub by_construction: Vec<String>,
}

/// Runs one rung of the ladder and reports it.
pub fn fibration_rung(
    field: &EmbeddedField,
    cover: &crate::smoothing::Cover,
    epsilon: f64,
    eta: f64,
    grid: &ScanGrid,
    params: &SmoothingParams,
    tol: f64,
) -> FibrationReport {
    let mut report = FibrationReport {
        epsilon,
        eta,
        min_sigma: f64::NAN,
        max_dist: f64::NAN,
        max_tube_offset: f64::NAN,
        tube_radius: field.embedding.tube_radius,
        transversal: false,
        accepted: false,
        grid_size: grid.len(),
        grid: grid.label.clone(),
        failure: None,
    };
    let run = || -> Result<(f64, f64, SubmersionCheck)> {
        let shared: Arc<dyn EmbeddedMap> = Arc::new(field.clone());
        let smoothed = SmoothedMap::new(shared, cover.clone(), epsilon, params.radial_nodes, params.angular_nodes)?;
        let fib = compose_fibration(smoothed, &field.embedding, grid)?;
        let target = &field.embedding.target;
        let dists: Vec<Result<f64>> = grid
            .points
            .par_iter()
            .map(|q| Ok(target.distance(&fib.eval(q)?, &field.map.value(q))))
            .collect();
        let mut max_dist: f64 = 0.0;
        for d in dists {
            max_dist = max_dist.max(d?);
        }
        let sub = submersion_check(&fib, grid, tol)?;
        Ok((max_dist, fib.max_offset, sub))
    };
    match run() {
        Ok((max_dist, offset, sub)) => {
            report.max_dist = max_dist;
            report.max_tube_offset = offset;
            report.min_sigma = sub.min_sigma;
            report.transversal = sub.transversal;
            report.accepted = max_dist < eta && sub.transversal;
        }
        Err(e) => report.failure = Some(e.to_string()),
    }
    report
}

/// Descends the ladder until a rung is within `eta` of the map and transversal.
pub fn eta_search(
    map: &MapField,
    eta: f64,
    ladder: &[f64],
    grid: &ScanGrid,
    params: &SmoothingParams,
    tol: f64,
) -> Result<EtaSearch> {
    if !(eta > 0.0) {
        return Err(Error::InvalidInput(format!("eta {eta} must be > 0")));
    }
    if ladder.is_empty() {
        return Err(Error::InvalidInput("empty epsilon ladder".into()));
    }
    let field = EmbeddedField::new(map.clone())?;
    let source = map.source();
    let r = params.cover_radius.unwrap_or_else(|| default_cover_radius(source));
    let cover = build_cover(source, r)?;
    let mut rungs = Vec::new();
    let mut accepted = None;
    for &eps in ladder {
        let report = fibration_rung(&field, &cover, eps, eta, grid, params, tol);
        let ok = report.accepted;
        rungs.push(report);
        if ok {
            accepted = Some(eps);
            break;
        }
    }
    let report = match accepted {
        Some(_) => rungs.last().cloned().expect("accepted rung"),
        None => rungs
            .iter()
            .filter(|r| r.failure.is_none())
            .min_by(|a, b| a.max_dist.total_cmp(&b.max_dist))
            .unwrap_or(&rungs[rungs.len() - 1])
            .clone(),
    };
    Ok(EtaSearch {
        accepted_epsilon: accepted,
        report,
        rungs,
        by_construction: vec![
            "properness: the source is compact".into(),
            "surjectivity: a submersion from a compact manifold onto a connected one".into(),
        ],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_projection() {
        let s1 = Manifold::sphere(1, 1.0).unwrap();
        let e = Embedding::new(&s1).unwrap();
        let p = e.project(&DVector::from_vec(vec![2.0, 0.0])).unwrap();
        assert_eq!(p.as_slice(), &[1.0, 0.0]);
        assert_eq!(e.tube_radius, 0.5);
    }

    #[test]
    fn circle_projection_keeps_angle() {
        let c = Manifold::flat_torus(vec![1.0]).unwrap();
        let e = Embedding::new(&c).unwrap();
        let x = c.point(vec![0.3]).unwrap();
        let y = e.embed(&x);
        assert!((y.norm() - 1.0 / (2.0 * PI)).abs() < 1e-15);
        let back = e.project(&(y * 0.9)).unwrap();
        assert!((back.coords[0] - 0.3).abs() < 1e-14);
    }

    #[test]
    fn torus_embedding_is_isometric_along_axes() {
        let t = Manifold::flat_torus(vec![1.0, 2.0]).unwrap();
        let e = Embedding::new(&t).unwrap();
        let x = t.point(vec![0.1, 1.7]).unwrap();
        let v = DVector::from_vec(vec![0.6, -0.8]);
        assert!((e.embed_differential(&x, &v).norm() - 1.0).abs() < 1e-15);
        let y = e.embed(&x) * 1.05;
        let d = e.project_differential(&y) * e.embed_differential(&x, &v);
        // radial scaling by 1.05 shrinks the projected tangent accordingly
        assert!((d - &v / 1.05).norm() < 1e-14);
    }

    #[test]
    fn rank_value() {
        let d = DMatrix::from_row_slice(1, 2, &[3.0, 4.0]);
        assert!((rank_singular_value(&d) - 5.0).abs() < 1e-14);
        assert_eq!(rank_singular_value(&DMatrix::zeros(2, 1)), 0.0);
    }
}
