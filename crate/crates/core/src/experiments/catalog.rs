//! Named Lipschitz fields and maps with known singular sets.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::clarke::{LinearMapRep, MapField, ScalarField};
use crate::error::{Error, Result};
use crate::manifold::{Manifold, Point};

fn default_beta() -> f64 {
    0.5
}

fn default_winding() -> i64 {
    1
}

fn default_wobble() -> f64 {
    0.3
}

fn default_teeth() -> u32 {
    2
}

/// A scalar field: a catalog entry or a composition of entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FieldSpec {
    /// Distance to a fixed point.
    DistToPoint { point: Vec<f64> },
    /// An ambient coordinate; on spheres the default axis is the last one.
    Height {
        #[serde(default)]
        axis: Option<usize>,
    },
    /// `max(|x| - 1, (x - 2)^2 - 1)` on the line.
    AbsMax,
    /// `x^2 sin(1/x)`, extended by `0`.
    X2sin,
    /// `x^2 + beta z` on the unit-scaled 2-sphere: two maxima, a saddle, a minimum.
    DoubleBump {
        #[serde(default = "default_beta")]
        beta: f64,
    },
    /// `<slope, x> + offset` on Euclidean space.
    Affine { slope: Vec<f64>, offset: f64 },
    Scale { factor: f64, field: Box<FieldSpec> },
    Add { left: Box<FieldSpec>, right: Box<FieldSpec> },
    Max { left: Box<FieldSpec>, right: Box<FieldSpec> },
    Min { left: Box<FieldSpec>, right: Box<FieldSpec> },
}

/// A map between manifolds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MapSpec {
    /// `theta_1 -> winding * theta_1 / L_1` into the unit circle `FlatTorus([1])`.
    Angle {
        #[serde(default = "default_winding")]
        winding: i64,
    },
    /// The angle map plus sawtooth perturbations of both coordinates:
    /// `theta_1 + a tri(theta_1) + b tri(theta_2)` with `tri` a unit-slope
    /// triangle wave of period `1 / teeth`. Nonsingular when `a < 1`.
    PwlWobble {
        #[serde(default = "default_wobble")]
        a: f64,
        #[serde(default = "default_wobble")]
        b: f64,
        #[serde(default = "default_teeth")]
        teeth: u32,
    },
    /// A constant map into the unit circle.
    Constant { value: f64 },
}

/// Unit-slope triangle wave of period `1 / k`, vanishing on `(1/k) Z`.
pub fn triangle_wave(t: f64, k: u32) -> f64 {
    let k = k as f64;
    let s = (t * k).rem_euclid(1.0);
    (0.5 - (s - 0.5).abs()) / k
}

/// Slope of [`triangle_wave`], `None` on the kinks.
pub fn triangle_slope(t: f64, k: u32) -> Option<f64> {
    let s = (t * k as f64).rem_euclid(1.0);
    if s == 0.0 || s == 0.5 {
        None
    } else if s < 0.5 {
        Some(1.0)
    } else {
        Some(-1.0)
    }
}

fn require_euclidean_line(m: &Manifold, name: &str) -> Result<()> {
    match m {
        Manifold::Euclidean { dim: 1 } => Ok(()),
        _ => Err(Error::InvalidInput(format!("{name} lives on euclidean dimension 1"))),
    }
}

/// Distance to `p`, with the arrival direction of the unique minimal geodesic
/// as exact gradient.
pub fn dist_to_point(m: &Manifold, p: Point) -> ScalarField {
    let mg = m.clone();
    let pg = p.clone();
    let mv = m.clone();
    ScalarField::new("dist-to-point", m.clone(), move |q| mv.distance(&p, q))
        .with_gradient(move |q| {
            let geo = mg.minimal_geodesics(&pg, q, 2);
            if geo.continuum || geo.velocities.len() != 1 {
                return None;
            }
            Some(mg.geodesic_velocity(&pg, &geo.velocities[0], geo.distance))
        })
        .with_lipschitz(1.0)
}

impl FieldSpec {
    pub fn label(&self) -> String {
        match self {
            FieldSpec::DistToPoint { .. } => "dist-to-point".into(),
            FieldSpec::Height { .. } => "height".into(),
            FieldSpec::AbsMax => "abs-max".into(),
            FieldSpec::X2sin => "x2sin".into(),
            FieldSpec::DoubleBump { .. } => "double-bump".into(),
            FieldSpec::Affine { .. } => "affine".into(),
            FieldSpec::Scale { factor, field } => format!("scale({factor},{})", field.label()),
            FieldSpec::Add { left, right } => format!("add({},{})", left.label(), right.label()),
            FieldSpec::Max { left, right } => format!("max({},{})", left.label(), right.label()),
            FieldSpec::Min { left, right } => format!("min({},{})", left.label(), right.label()),
        }
    }

    pub fn build(&self, m: &Manifold) -> Result<ScalarField> {
        m.validate()?;
        Ok(match self {
            FieldSpec::DistToPoint { point } => dist_to_point(m, m.point(point.clone())?),
            FieldSpec::Height { axis } => {
                let axis = match (axis, m) {
                    (Some(a), _) => *a,
                    (None, Manifold::FlatTorus { .. }) => 0,
                    (None, _) => m.ambient_dim() - 1,
                };
                match m {
                    Manifold::FlatTorus { .. } => {
                        return Err(Error::InvalidInput("height needs a sphere or euclidean space".into()))
                    }
                    _ if axis >= m.ambient_dim() => {
                        return Err(Error::InvalidInput(format!("height axis {axis} out of range")))
                    }
                    _ => {}
                }
                let mg = m.clone();
                ScalarField::new("height", m.clone(), move |p| p.coords[axis])
                    .with_gradient(move |p| {
                        let mut e = DVector::zeros(p.coords.len());
                        e[axis] = 1.0;
                        Some(mg.project_tangent(p, &e))
                    })
                    .with_lipschitz(1.0)
            }
            FieldSpec::AbsMax => {
                require_euclidean_line(m, "abs-max")?;
                ScalarField::new("abs-max", m.clone(), |p| {
                    let x = p.coords[0];
                    (x.abs() - 1.0).max((x - 2.0).powi(2) - 1.0)
                })
                .with_gradient(|p| {
                    let x = p.coords[0];
                    let (a, b) = (x.abs() - 1.0, (x - 2.0).powi(2) - 1.0);
                    let g = if a > b && x != 0.0 {
                        x.signum()
                    } else if b > a {
                        2.0 * (x - 2.0)
                    } else {
                        return None;
                    };
                    Some(DVector::from_element(1, g))
                })
            }
            FieldSpec::X2sin => {
                require_euclidean_line(m, "x2sin")?;
                ScalarField::new("x2sin", m.clone(), |p| {
                    let x = p.coords[0];
                    if x == 0.0 {
                        0.0
                    } else {
                        x * x * (1.0 / x).sin()
                    }
                })
                .with_gradient(|p| {
                    let x = p.coords[0];
                    if x == 0.0 {
                        return None;
                    }
                    Some(DVector::from_element(1, 2.0 * x * (1.0 / x).sin() - (1.0 / x).cos()))
                })
            }
            FieldSpec::DoubleBump { beta } => {
                let Manifold::Sphere { dim: 2, radius } = m else {
                    return Err(Error::InvalidInput("double-bump lives on a 2-sphere".into()));
                };
                let (r, beta) = (*radius, *beta);
                if !(beta.abs() < 2.0) {
                    return Err(Error::InvalidInput(format!("double-bump beta {beta} must satisfy |beta| < 2")));
                }
                let mg = m.clone();
                ScalarField::new("double-bump", m.clone(), move |p| {
                    let x = p.coords[0] / r;
                    x * x + beta * p.coords[2] / r
                })
                .with_gradient(move |p| {
                    let e = DVector::from_vec(vec![2.0 * p.coords[0] / (r * r), 0.0, beta / r]);
                    Some(mg.project_tangent(p, &e))
                })
                .with_lipschitz((4.0 + beta * beta).sqrt() / r)
            }
            FieldSpec::Affine { slope, offset } => {
                let Manifold::Euclidean { dim } = m else {
                    return Err(Error::InvalidInput("affine fields live on euclidean space".into()));
                };
                if slope.len() != *dim {
                    return Err(Error::InvalidInput(format!("affine slope needs {dim} entries")));
                }
                let a = DVector::from_vec(slope.clone());
                let (av, ag, c) = (a.clone(), a.clone(), *offset);
                ScalarField::new("affine", m.clone(), move |p| av.dot(&p.coords) + c)
                    .with_gradient(move |_| Some(ag.clone()))
                    .with_lipschitz(a.norm())
            }
            FieldSpec::Scale { factor, field } => field.build(m)?.scale(*factor),
            FieldSpec::Add { left, right } => left.build(m)?.add(&right.build(m)?),
            FieldSpec::Max { left, right } => left.build(m)?.max(&right.build(m)?),
            FieldSpec::Min { left, right } => left.build(m)?.min(&right.build(m)?),
        })
    }

    /// Analytically known singular points, when the entry has them.
    pub fn known_singular_set(&self, m: &Manifold) -> Option<Vec<Point>> {
        match (self, m) {
            (FieldSpec::DistToPoint { point }, _) => {
                let p = m.point(point.clone()).ok()?;
                Some(match m {
                    Manifold::Euclidean { .. } => vec![p],
                    Manifold::Sphere { .. } => vec![p.clone(), Point { coords: -&p.coords }],
                    Manifold::FlatTorus { periods } => {
                        let k = periods.len();
                        (0..1usize << k)
                            .map(|mask| {
                                let c: Vec<f64> = (0..k)
                                    .map(|i| p.coords[i] + if mask >> i & 1 == 1 { 0.5 * periods[i] } else { 0.0 })
                                    .collect();
                                m.normalize(Point::new(c))
                            })
                            .collect()
                    }
                })
            }
            (FieldSpec::Height { axis }, Manifold::Sphere { radius, .. }) => {
                let axis = axis.unwrap_or(m.ambient_dim() - 1);
                let mut n = vec![0.0; m.ambient_dim()];
                n[axis] = *radius;
                let s: Vec<f64> = n.iter().map(|x| -x).collect();
                Some(vec![Point::new(n), Point::new(s)])
            }
            (FieldSpec::Height { .. }, Manifold::Euclidean { .. }) => Some(Vec::new()),
            (FieldSpec::AbsMax, _) => Some(vec![Point::new(vec![1.0])]),
            (FieldSpec::DoubleBump { beta }, Manifold::Sphere { radius, .. }) => {
                let r = *radius;
                let z = beta / 2.0;
                let x = (1.0 - z * z).sqrt();
                Some(vec![
                    Point::new(vec![x * r, 0.0, z * r]),
                    Point::new(vec![-x * r, 0.0, z * r]),
                    Point::new(vec![0.0, 0.0, r]),
                    Point::new(vec![0.0, 0.0, -r]),
                ])
            }
            (FieldSpec::Affine { slope, .. }, _) if slope.iter().any(|s| *s != 0.0) => Some(Vec::new()),
            _ => None,
        }
    }
}

fn circle() -> Manifold {
    Manifold::FlatTorus { periods: vec![1.0] }
}

fn circle_rep(source: &Manifold, p: &Point, fp: &Point, row: &[f64]) -> LinearMapRep {
    LinearMapRep {
        source_frame: source.frame(p),
        target_frame: circle().frame(fp),
        matrix: DMatrix::from_row_slice(1, row.len(), row),
    }
}

impl MapSpec {
    pub fn label(&self) -> String {
        match self {
            MapSpec::Angle { .. } => "angle".into(),
            MapSpec::PwlWobble { .. } => "pwl-wobble".into(),
            MapSpec::Constant { .. } => "constant".into(),
        }
    }

    pub fn target(&self) -> Manifold {
        circle()
    }

    pub fn build(&self, m: &Manifold) -> Result<MapField> {
        m.validate()?;
        let target = circle();
        Ok(match self {
            MapSpec::Angle { winding } => {
                let Manifold::FlatTorus { periods } = m else {
                    return Err(Error::InvalidInput("angle maps start on a flat torus".into()));
                };
                let l = periods[0];
                let w = *winding as f64;
                let (src, tgt) = (m.clone(), target.clone());
                let mut row = vec![0.0; periods.len()];
                row[0] = w / l;
                MapField::new("angle", m.clone(), target.clone(), move |p| {
                    tgt.normalize(Point::new(vec![w * p.coords[0] / l]))
                })
                .with_differential(move |p| {
                    let fp = circle().normalize(Point::new(vec![w * p.coords[0] / l]));
                    Some(circle_rep(&src, p, &fp, &row))
                })
                .with_lipschitz(w.abs() / l)
            }
            MapSpec::PwlWobble { a, b, teeth } => {
                let Manifold::FlatTorus { periods } = m else {
                    return Err(Error::InvalidInput("pwl-wobble starts on a flat torus".into()));
                };
                if periods.len() != 2 || periods.iter().any(|l| *l != 1.0) {
                    return Err(Error::InvalidInput("pwl-wobble needs the unit square torus".into()));
                }
                if !(a.abs() < 1.0) || *teeth == 0 {
                    return Err(Error::InvalidInput("pwl-wobble needs |a| < 1 and teeth >= 1".into()));
                }
                let (a, b, k) = (*a, *b, *teeth);
                let eval = move |p: &Point| {
                    let (t1, t2) = (p.coords[0], p.coords[1]);
                    circle().normalize(Point::new(vec![t1 + a * triangle_wave(t1, k) + b * triangle_wave(t2, k)]))
                };
                let src = m.clone();
                MapField::new("pwl-wobble", m.clone(), target, eval)
                    .with_differential(move |p| {
                        let s1 = triangle_slope(p.coords[0], k)?;
                        let s2 = triangle_slope(p.coords[1], k)?;
                        Some(circle_rep(&src, p, &eval(p), &[1.0 + a * s1, b * s2]))
                    })
                    .with_lipschitz(((1.0 + a.abs()).powi(2) + b * b).sqrt())
            }
            MapSpec::Constant { value } => {
                let v = circle().normalize(Point::new(vec![*value]));
                let src = m.clone();
                let vd = v.clone();
                MapField::new("constant", m.clone(), target, move |_| v.clone())
                    .with_differential(move |p| Some(circle_rep(&src, p, &vd, &vec![0.0; src.dim()])))
                    .with_lipschitz(0.0)
            }
        })
    }

    /// Smallest singular value of the differential where it exists.
    pub fn analytic_min_sigma(&self, m: &Manifold) -> Option<f64> {
        match (self, m) {
            (MapSpec::Angle { winding }, Manifold::FlatTorus { periods }) => Some(*winding as f64 / periods[0]),
            (MapSpec::PwlWobble { a, b, .. }, _) => Some(((1.0 - a.abs()).powi(2) + b * b).sqrt()),
            (MapSpec::Constant { .. }, _) => Some(0.0),
            _ => None,
        }
        .map(f64::abs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn specs_parse_by_name() {
        let f: FieldSpec = serde_json::from_str(r#"{"name": "dist-to-point", "point": [0, 0, 1]}"#).unwrap();
        assert_eq!(f.label(), "dist-to-point");
        let f: FieldSpec = serde_json::from_str(
            r#"{"name": "max", "left": {"name": "height"}, "right": {"name": "scale", "factor": -1, "field": {"name": "height"}}}"#,
        )
        .unwrap();
        assert_eq!(f.label(), "max(height,scale(-1,height))");
        assert!(serde_json::from_str::<FieldSpec>(r#"{"name": "height", "bogus": 1}"#).is_err());
        let m: MapSpec = serde_json::from_str(r#"{"name": "pwl-wobble"}"#).unwrap();
        assert_eq!(m, MapSpec::PwlWobble { a: 0.3, b: 0.3, teeth: 2 });
    }

    #[test]
    fn triangle_wave_shape() {
        assert_eq!(triangle_wave(0.0, 2), 0.0);
        assert!((triangle_wave(0.25, 2) - 0.25).abs() < 1e-15);
        assert!((triangle_wave(0.6, 2) - 0.1).abs() < 1e-15);
        assert_eq!(triangle_slope(0.1, 2), Some(1.0));
        assert_eq!(triangle_slope(0.3, 2), Some(-1.0));
        assert_eq!(triangle_slope(0.5, 2), None);
    }

    #[test]
    fn double_bump_critical_points_have_zero_gradient() {
        let s2 = Manifold::sphere(2, 1.0).unwrap();
        let spec = FieldSpec::DoubleBump { beta: 0.5 };
        let f = spec.build(&s2).unwrap();
        for p in spec.known_singular_set(&s2).unwrap() {
            assert!(f.gradient(&p).norm() < 1e-12, "{:?}", p);
        }
    }

    #[test]
    fn wobble_is_well_defined_on_the_torus() {
        let t2 = Manifold::flat_torus(vec![1.0, 1.0]).unwrap();
        let f = MapSpec::PwlWobble { a: 0.3, b: 0.3, teeth: 2 }.build(&t2).unwrap();
        let c = circle();
        let a = f.value(&Point::new(vec![0.999999999, 0.3]));
        let b = f.value(&Point::new(vec![0.0, 0.3]));
        assert!(c.distance(&a, &b) < 1e-8);
    }

    #[test]
    fn torus_distance_singular_set() {
        let t2 = Manifold::flat_torus(vec![1.0, 1.0]).unwrap();
        let spec = FieldSpec::DistToPoint { point: vec![0.0, 0.0] };
        assert_eq!(spec.known_singular_set(&t2).unwrap().len(), 4);
    }
}
