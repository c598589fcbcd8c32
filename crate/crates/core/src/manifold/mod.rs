//! Closed-form Riemannian geometry for the built-in manifolds.
//!
//! Three model spaces are supported, each with an exact metric and exact
//! geodesics:
//!
//! * `Euclidean { dim }`: points and tangent vectors are plain `R^m` vectors.
//! * `Sphere { dim, radius }`: the round `m`-sphere of radius `R`, stored as
//!   points of `R^{m+1}` with `|x| = R`; tangent vectors are ambient vectors
//!   orthogonal to the base point.
//! * `FlatTorus { periods }`: `R^m` modulo the rectangular lattice spanned by
//!   the periods, with coordinates reduced to `[0, L_i)`.
//!
//! All operations are pure functions of their inputs.

mod grid;
mod quadrature;

pub use grid::ScanGrid;
pub use quadrature::{
    ball_quadrature, ball_quasi_monte_carlo, gauss_legendre, unit_ball_volume, BallRule,
};

use std::f64::consts::PI;

use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampling::unit_directions;

/// Angular distance beyond which a sphere point counts as antipodal.
pub const ANTIPODE_ANGLE_TOL: f64 = 1e-6;
/// Distance slack below the injectivity radius at which `log` gives up.
pub const CUT_DISTANCE_TOL: f64 = 1e-8;

/// A built-in Riemannian manifold with closed-form geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Manifold {
    Euclidean { dim: usize },
    Sphere { dim: usize, radius: f64 },
    FlatTorus { periods: Vec<f64> },
}

/// A point on a manifold, in the manifold's coordinate representation.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub coords: DVector<f64>,
}

/// A tangent vector together with its base point.
#[derive(Debug, Clone, PartialEq)]
pub struct Tangent {
    pub base: Point,
    pub vec: DVector<f64>,
}

/// An orthonormal basis of a tangent space.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub base: Point,
    pub basis: Vec<DVector<f64>>,
}

/// All minimal geodesics from `p` to `q`, as unit initial velocities at `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct MinimalGeodesics {
    pub distance: f64,
    pub velocities: Vec<DVector<f64>>,
    /// Set when the minimizers form a continuum (sphere antipodes) and
    /// `velocities` is only a sample of it.
    pub continuum: bool,
}

impl Point {
    pub fn new(coords: impl Into<Vec<f64>>) -> Self {
        Point {
            coords: DVector::from_vec(coords.into()),
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        self.coords.as_slice()
    }
}

impl Serialize for Point {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.coords.as_slice().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Point {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        Vec::<f64>::deserialize(deserializer).map(Point::new)
    }
}

impl Tangent {
    pub fn new(base: Point, vec: DVector<f64>) -> Self {
        Tangent { base, vec }
    }

    pub fn zero(base: &Point) -> Self {
        Tangent {
            base: base.clone(),
            vec: DVector::zeros(base.coords.len()),
        }
    }

    pub fn norm(&self) -> f64 {
        self.vec.norm()
    }
}

impl Frame {
    /// Checks orthonormality to 1e-10 before accepting the basis.
    pub fn new(base: Point, basis: Vec<DVector<f64>>) -> Result<Self> {
        for (i, a) in basis.iter().enumerate() {
            for (j, b) in basis.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                if (a.dot(b) - target).abs() > 1e-10 {
                    return Err(Error::InvalidInput(format!(
                        "frame not orthonormal: <e{i}, e{j}> = {}",
                        a.dot(b)
                    )));
                }
            }
        }
        Ok(Frame { base, basis })
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Ambient vector with the given frame components.
    pub fn to_ambient(&self, components: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.base.coords.len());
        for (c, e) in components.iter().zip(&self.basis) {
            out.axpy(*c, e, 1.0);
        }
        out
    }

    /// Frame components of an ambient tangent vector.
    pub fn components(&self, v: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(self.basis.len(), self.basis.iter().map(|e| e.dot(v)))
    }
}

fn wrap(x: f64, period: f64) -> f64 {
    let r = x.rem_euclid(period);
    if r >= period {
        0.0
    } else {
        r
    }
}

/// Representative of `d` modulo `period` in `[-period/2, period/2]`.
fn wrapped_difference(d: f64, period: f64) -> f64 {
    let r = d.rem_euclid(period);
    if r > 0.5 * period {
        r - period
    } else {
        r
    }
}

impl Manifold {
    pub fn euclidean(dim: usize) -> Result<Self> {
        let m = Manifold::Euclidean { dim };
        m.validate()?;
        Ok(m)
    }

    pub fn sphere(dim: usize, radius: f64) -> Result<Self> {
        let m = Manifold::Sphere { dim, radius };
        m.validate()?;
        Ok(m)
    }

    pub fn flat_torus(periods: impl Into<Vec<f64>>) -> Result<Self> {
        let m = Manifold::FlatTorus {
            periods: periods.into(),
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Manifold::Euclidean { dim } if *dim == 0 => {
                Err(Error::InvalidInput("dimension must be >= 1".into()))
            }
            Manifold::Sphere { dim, radius } => {
                if *dim == 0 {
                    Err(Error::InvalidInput("dimension must be >= 1".into()))
                } else if !(*radius > 0.0 && radius.is_finite()) {
                    Err(Error::InvalidInput(format!("sphere radius {radius} must be > 0")))
                } else {
                    Ok(())
                }
            }
            Manifold::FlatTorus { periods } => {
                if periods.is_empty() {
                    Err(Error::InvalidInput("torus needs at least one period".into()))
                } else if let Some(l) = periods.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
                    Err(Error::InvalidInput(format!("torus period {l} must be > 0")))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Manifold::Euclidean { dim } | Manifold::Sphere { dim, .. } => *dim,
            Manifold::FlatTorus { periods } => periods.len(),
        }
    }

    /// Length of the coordinate vectors used for points and tangents.
    pub fn ambient_dim(&self) -> usize {
        match self {
            Manifold::Sphere { dim, .. } => dim + 1,
            _ => self.dim(),
        }
    }

    pub fn is_compact(&self) -> bool {
        !matches!(self, Manifold::Euclidean { .. })
    }

    /// `+inf` stands for "unbounded" on Euclidean space.
    pub fn injectivity_radius(&self) -> f64 {
        match self {
            Manifold::Euclidean { .. } => f64::INFINITY,
            Manifold::Sphere { radius, .. } => PI * radius,
            Manifold::FlatTorus { periods } => 0.5 * min_of(periods),
        }
    }

    /// Radius below which every geodesic ball is strongly convex.
    pub fn convexity_radius(&self) -> f64 {
        match self {
            Manifold::Euclidean { .. } => f64::INFINITY,
            Manifold::Sphere { radius, .. } => 0.99 * PI * radius / 2.0,
            Manifold::FlatTorus { periods } => 0.25 * min_of(periods),
        }
    }

    /// Riemannian volume (`+inf` for Euclidean space).
    pub fn volume(&self) -> f64 {
        match self {
            Manifold::Euclidean { .. } => f64::INFINITY,
            Manifold::Sphere { dim, radius } => {
                // |S^m| = (m+1) * vol(B^{m+1})
                (*dim as f64 + 1.0) * unit_ball_volume(dim + 1) * radius.powi(*dim as i32)
            }
            Manifold::FlatTorus { periods } => periods.iter().product(),
        }
    }

    /// Validates coordinates as a point of this manifold. Torus coordinates are
    /// reduced modulo the periods; sphere points must already have norm `R`.
    pub fn point(&self, coords: impl Into<Vec<f64>>) -> Result<Point> {
        let coords: Vec<f64> = coords.into();
        if coords.len() != self.ambient_dim() {
            return Err(Error::InvalidInput(format!(
                "expected {} coordinates, got {}",
                self.ambient_dim(),
                coords.len()
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("non-finite coordinate".into()));
        }
        let p = Point::new(coords);
        match self {
            Manifold::Sphere { radius, .. } => {
                let n = p.coords.norm();
                if (n - radius).abs() > 1e-12 * radius {
                    return Err(Error::InvalidInput(format!(
                        "point norm {n} differs from sphere radius {radius}"
                    )));
                }
                Ok(p)
            }
            Manifold::FlatTorus { .. } => Ok(self.normalize(p)),
            Manifold::Euclidean { .. } => Ok(p),
        }
    }

    /// Pulls approximate coordinates back onto the manifold (radial rescaling on
    /// the sphere, reduction modulo periods on the torus).
    pub fn normalize(&self, mut p: Point) -> Point {
        match self {
            Manifold::Sphere { radius, .. } => {
                let n = p.coords.norm();
                if n > 0.0 {
                    p.coords *= radius / n;
                }
            }
            Manifold::FlatTorus { periods } => {
                for (c, l) in p.coords.iter_mut().zip(periods) {
                    *c = wrap(*c, *l);
                }
            }
            Manifold::Euclidean { .. } => {}
        }
        p
    }

    pub fn contains(&self, p: &Point) -> bool {
        if p.coords.len() != self.ambient_dim() {
            return false;
        }
        match self {
            Manifold::Sphere { radius, .. } => {
                (p.coords.norm() - radius).abs() <= 1e-12 * radius
            }
            Manifold::FlatTorus { periods } => p
                .coords
                .iter()
                .zip(periods)
                .all(|(c, l)| *c >= 0.0 && *c < *l),
            Manifold::Euclidean { .. } => true,
        }
    }

    /// Wraps `vec` as a tangent at `base`, checking tangency on the sphere.
    pub fn tangent(&self, base: &Point, vec: DVector<f64>) -> Result<Tangent> {
        if vec.len() != self.ambient_dim() {
            return Err(Error::InvalidInput("tangent has wrong length".into()));
        }
        if let Manifold::Sphere { radius, .. } = self {
            let dot = vec.dot(&base.coords);
            if dot.abs() > 1e-12 * radius * vec.norm() {
                return Err(Error::InvalidInput(format!(
                    "vector not tangent: <v, p> = {dot}"
                )));
            }
        }
        Ok(Tangent::new(base.clone(), vec))
    }

    /// Orthogonal projection of an ambient vector onto `T_p M`.
    pub fn project_tangent(&self, p: &Point, v: &DVector<f64>) -> DVector<f64> {
        match self {
            Manifold::Sphere { radius, .. } => {
                let c = v.dot(&p.coords) / (radius * radius);
                v - &p.coords * c
            }
            _ => v.clone(),
        }
    }

    /// The standard orthonormal frame at `p`.
    ///
    /// On the sphere the coordinate axis most aligned with `p` is dropped and the
    /// remaining axes are projected and Gram-Schmidt orthonormalized.
    pub fn frame(&self, p: &Point) -> Frame {
        let n = self.ambient_dim();
        let basis = match self {
            Manifold::Sphere { .. } => {
                let skip = p
                    .coords
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
                    .map(|(i, _)| i)
                    .unwrap_or(0);
                let mut basis: Vec<DVector<f64>> = Vec::with_capacity(n - 1);
                for i in (0..n).filter(|&i| i != skip) {
                    let mut e = self.project_tangent(p, &DVector::from_fn(n, |k, _| (k == i) as u8 as f64));
                    for b in &basis {
                        let c = e.dot(b);
                        e.axpy(-c, b, 1.0);
                    }
                    // second pass keeps orthogonality at 1e-16 level
                    for b in &basis {
                        let c = e.dot(b);
                        e.axpy(-c, b, 1.0);
                    }
                    let norm = e.norm();
                    basis.push(e / norm);
                }
                basis
            }
            _ => (0..n)
                .map(|i| DVector::from_fn(n, |k, _| (k == i) as u8 as f64))
                .collect(),
        };
        Frame {
            base: p.clone(),
            basis,
        }
    }

    pub fn inner(&self, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        u.dot(v)
    }

    pub fn distance(&self, p: &Point, q: &Point) -> f64 {
        match self {
            Manifold::Euclidean { .. } => (&q.coords - &p.coords).norm(),
            Manifold::Sphere { radius, .. } => radius * sphere_angle(&p.coords, &q.coords, *radius),
            Manifold::FlatTorus { periods } => p
                .coords
                .iter()
                .zip(q.coords.iter())
                .zip(periods)
                .map(|((a, b), l)| wrapped_difference(b - a, *l).powi(2))
                .sum::<f64>()
                .sqrt(),
        }
    }

    /// `exp_p(v)` for a vector `v` tangent at `p`.
    pub fn exp_at(&self, p: &Point, v: &DVector<f64>) -> Point {
        match self {
            Manifold::Euclidean { .. } => Point {
                coords: &p.coords + v,
            },
            Manifold::Sphere { radius, .. } => {
                let len = v.norm();
                if len == 0.0 {
                    return p.clone();
                }
                let theta = len / radius;
                let mut coords = &p.coords * theta.cos();
                coords.axpy(radius * theta.sin() / len, v, 1.0);
                self.normalize(Point { coords })
            }
            Manifold::FlatTorus { .. } => self.normalize(Point {
                coords: &p.coords + v,
            }),
        }
    }

    pub fn exp(&self, v: &Tangent) -> Point {
        self.exp_at(&v.base, &v.vec)
    }

    /// Inverse of `exp_p` on the injectivity domain.
    ///
    /// Fails with `CutLocusAmbiguity` when `q` lies within the cut tolerance of
    /// the cut locus of `p` (distance above `inj - 1e-8`, or an antipodal angle
    /// above `pi - 1e-6` on the sphere).
    pub fn log_vec(&self, p: &Point, q: &Point) -> Result<DVector<f64>> {
        match self {
            Manifold::Euclidean { .. } => Ok(&q.coords - &p.coords),
            Manifold::Sphere { radius, .. } => {
                let theta = sphere_angle(&p.coords, &q.coords, *radius);
                if theta > PI - ANTIPODE_ANGLE_TOL || radius * theta > PI * radius - CUT_DISTANCE_TOL {
                    return Err(Error::CutLocusAmbiguity {
                        distance: radius * theta,
                    });
                }
                let diff = &q.coords - &p.coords;
                // component of q - p orthogonal to p, without cancellation
                let w = &diff + &p.coords * (diff.norm_squared() / (2.0 * radius * radius));
                let wn = w.norm();
                if wn == 0.0 {
                    return Ok(DVector::zeros(p.coords.len()));
                }
                Ok(w * (radius * theta / wn))
            }
            Manifold::FlatTorus { periods } => {
                let v = DVector::from_iterator(
                    periods.len(),
                    p.coords
                        .iter()
                        .zip(q.coords.iter())
                        .zip(periods)
                        .map(|((a, b), l)| wrapped_difference(b - a, *l)),
                );
                let d = v.norm();
                if d > self.injectivity_radius() - CUT_DISTANCE_TOL {
                    return Err(Error::CutLocusAmbiguity { distance: d });
                }
                Ok(v)
            }
        }
    }

    pub fn log(&self, p: &Point, q: &Point) -> Result<Tangent> {
        Ok(Tangent::new(p.clone(), self.log_vec(p, q)?))
    }

    /// Distance from `q` to the cut locus of `p` (`+inf` when it is empty).
    pub fn cut_locus_distance(&self, p: &Point, q: &Point) -> f64 {
        match self {
            Manifold::Euclidean { .. } => f64::INFINITY,
            Manifold::Sphere { .. } => {
                let antipode = Point {
                    coords: -&p.coords,
                };
                self.distance(&antipode, q)
            }
            Manifold::FlatTorus { periods } => p
                .coords
                .iter()
                .zip(q.coords.iter())
                .zip(periods)
                .map(|((a, b), l)| (0.5 * l - wrapped_difference(b - a, *l).abs()).abs())
                .fold(f64::INFINITY, f64::min),
        }
    }

    /// Unit initial velocities of every minimal geodesic from `p` to `q`.
    ///
    /// On the torus the list is the complete set of tied lattice translates
    /// (up to `cap`); on the sphere an antipodal pair yields `cap` sampled
    /// directions with `continuum` set.
    pub fn minimal_geodesics(&self, p: &Point, q: &Point, cap: usize) -> MinimalGeodesics {
        let distance = self.distance(p, q);
        let empty = MinimalGeodesics {
            distance,
            velocities: Vec::new(),
            continuum: false,
        };
        if distance == 0.0 || cap == 0 {
            return empty;
        }
        match self {
            Manifold::Euclidean { .. } => MinimalGeodesics {
                distance,
                velocities: vec![(&q.coords - &p.coords) / distance],
                continuum: false,
            },
            Manifold::Sphere { radius, .. } => {
                let theta = sphere_angle(&p.coords, &q.coords, *radius);
                if theta > PI - ANTIPODE_ANGLE_TOL {
                    let frame = self.frame(p);
                    let velocities = unit_directions(self.dim(), cap)
                        .into_iter()
                        .take(cap)
                        .map(|u| frame.to_ambient(&u))
                        .collect();
                    MinimalGeodesics {
                        distance,
                        velocities,
                        continuum: true,
                    }
                } else {
                    let v = self
                        .log_vec(p, q)
                        .expect("non-antipodal sphere points have a unique geodesic");
                    MinimalGeodesics {
                        distance,
                        velocities: vec![&v / v.norm()],
                        continuum: false,
                    }
                }
            }
            Manifold::FlatTorus { periods } => {
                let base: Vec<f64> = p
                    .coords
                    .iter()
                    .zip(q.coords.iter())
                    .zip(periods)
                    .map(|((a, b), l)| wrapped_difference(b - a, *l))
                    .collect();
                let tol = 1e-9 * (1.0 + distance);
                let limit = (distance + tol).powi(2);
                let m = periods.len();
                let mut velocities = Vec::new();
                let total = 3usize.pow(m as u32);
                for code in 0..total {
                    let mut c = code;
                    let mut cand = DVector::zeros(m);
                    for i in 0..m {
                        let k = (c % 3) as f64 - 1.0;
                        c /= 3;
                        cand[i] = base[i] + k * periods[i];
                    }
                    if cand.norm_squared() <= limit {
                        let n = cand.norm();
                        velocities.push(cand / n);
                        if velocities.len() == cap {
                            break;
                        }
                    }
                }
                MinimalGeodesics {
                    distance,
                    velocities,
                    continuum: false,
                }
            }
        }
    }

    /// Velocity at time `t` of the unit-speed geodesic leaving `p` along `u`.
    pub fn geodesic_velocity(&self, p: &Point, u: &DVector<f64>, t: f64) -> DVector<f64> {
        match self {
            Manifold::Sphere { radius, .. } => {
                let theta = t / radius;
                u * theta.cos() - &p.coords * (theta.sin() / radius)
            }
            _ => u.clone(),
        }
    }

    /// Parallel transport of `v` from `p` to `q` along the unique minimal geodesic.
    pub fn parallel_transport(
        &self,
        p: &Point,
        q: &Point,
        v: &DVector<f64>,
    ) -> Result<DVector<f64>> {
        match self {
            Manifold::Sphere { radius, .. } => {
                let a = self.log_vec(p, q)?;
                let len = a.norm();
                if len == 0.0 {
                    return Ok(v.clone());
                }
                let t = &a / len;
                let theta = len / radius;
                let c = v.dot(&t);
                let arrival = &t * theta.cos() - &p.coords * (theta.sin() / radius);
                Ok(v - &t * c + arrival * c)
            }
            _ => {
                self.log_vec(p, q)?;
                Ok(v.clone())
            }
        }
    }

    /// Differential of `exp_c` at `b` applied to `w` (both tangent at `c`).
    pub fn dexp(&self, c: &Point, b: &DVector<f64>, w: &DVector<f64>) -> DVector<f64> {
        match self {
            Manifold::Sphere { radius, .. } => {
                let rho = b.norm();
                if rho < 1e-300 {
                    return w.clone();
                }
                let bh = b / rho;
                let theta = rho / radius;
                let par = w.dot(&bh);
                let perp = w - &bh * par;
                let arrival = &bh * theta.cos() - &c.coords * (theta.sin() / radius);
                arrival * par + perp * (radius * theta.sin() / rho)
            }
            _ => w.clone(),
        }
    }

    /// Differential of `log_c` at `q` applied to `v` tangent at `q`; the inverse
    /// of [`Manifold::dexp`] at `log_c q`.
    pub fn dlog(&self, c: &Point, q: &Point, v: &DVector<f64>) -> Result<DVector<f64>> {
        match self {
            Manifold::Sphere { radius, .. } => {
                let a = self.log_vec(c, q)?;
                let rho = a.norm();
                if rho < 1e-300 {
                    return Ok(v.clone());
                }
                let ah = &a / rho;
                let theta = rho / radius;
                let arrival = &ah * theta.cos() - &c.coords * (theta.sin() / radius);
                let par = v.dot(&arrival);
                let perp = v - &arrival * par;
                Ok(ah * par + perp * (rho / (radius * theta.sin())))
            }
            _ => Ok(v.clone()),
        }
    }

    /// Endpoint `J(1)` of the Jacobi field of the variation
    /// `(t, s) -> exp_center(t * (log_center(exp_q(s v)) - y))`.
    ///
    /// Returns the shifted point `exp_center(log_center q - y)` together with
    /// `J(1)`, which is tangent there.
    pub fn jacobi_endpoint(
        &self,
        center: &Point,
        q: &Point,
        y: &DVector<f64>,
        v: &DVector<f64>,
    ) -> Result<(Point, DVector<f64>)> {
        let a = self.log_vec(center, q)?;
        if a.norm() + y.norm() >= self.injectivity_radius() {
            return Err(Error::DomainViolation(format!(
                "|log q| + |y| = {} reaches the injectivity radius {}",
                a.norm() + y.norm(),
                self.injectivity_radius()
            )));
        }
        let b = &a - y;
        let shifted = self.exp_at(center, &b);
        let w = self.dlog(center, q, v)?;
        Ok((shifted, self.dexp(center, &b, &w)))
    }

    /// A uniformly distributed point (Euclidean space samples the box `[-1,1]^m`).
    pub fn random_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        match self {
            Manifold::Euclidean { dim } => {
                Point::new((0..*dim).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<_>>())
            }
            Manifold::Sphere { dim, radius } => {
                let g = DVector::from_fn(dim + 1, |_, _| rng.sample::<f64, _>(StandardNormal));
                let n = g.norm();
                Point { coords: g * (radius / n) }
            }
            Manifold::FlatTorus { periods } => self.normalize(Point::new(
                periods.iter().map(|l| rng.random_range(0.0..*l)).collect::<Vec<_>>(),
            )),
        }
    }

    /// A tangent vector at `p` with standard normal frame components scaled to
    /// length `len` (direction uniform).
    pub fn random_tangent<R: Rng + ?Sized>(&self, p: &Point, len: f64, rng: &mut R) -> DVector<f64> {
        let frame = self.frame(p);
        let g = DVector::from_fn(self.dim(), |_, _| rng.sample::<f64, _>(StandardNormal));
        let n = g.norm();
        frame.to_ambient(&(g * (len / n)))
    }
}

fn min_of(xs: &[f64]) -> f64 {
    xs.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Angle between two points of a sphere of radius `r`, stable near 0 and pi.
fn sphere_angle(p: &DVector<f64>, q: &DVector<f64>, r: f64) -> f64 {
    let a = (p - q).norm() / r;
    let b = (p + q).norm() / r;
    2.0 * a.atan2(b)
}
