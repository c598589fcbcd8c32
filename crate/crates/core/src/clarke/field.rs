use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::manifold::{Manifold, Point};

use super::LinearMapRep;

pub type EvalFn = Arc<dyn Fn(&Point) -> f64 + Send + Sync>;
pub type GradFn = Arc<dyn Fn(&Point) -> Option<DVector<f64>> + Send + Sync>;
pub type MapFn = Arc<dyn Fn(&Point) -> Point + Send + Sync>;
pub type DifferentialFn = Arc<dyn Fn(&Point) -> Option<LinearMapRep> + Send + Sync>;

/// Relative finite-difference step used for gradients of Lipschitz fields.
pub const FD_STEP: f64 = 1e-6;

pub fn fd_step(p: &Point) -> f64 {
    FD_STEP * (1.0 + p.coords.norm())
}

/// Central difference gradient plus the largest forward/backward mismatch,
/// which flags points sitting on a kink.
#[derive(Debug, Clone, PartialEq)]
pub struct FdGradient {
    pub gradient: DVector<f64>,
    pub kink_indicator: f64,
}

/// A locally Lipschitz function `M -> R`.
#[derive(Clone)]
pub struct ScalarField {
    pub name: String,
    manifold: Manifold,
    eval: EvalFn,
    grad_oracle: Option<GradFn>,
    lipschitz_hint: Option<f64>,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField")
            .field("name", &self.name)
            .field("manifold", &self.manifold)
            .field("grad_oracle", &self.grad_oracle.is_some())
            .field("lipschitz_hint", &self.lipschitz_hint)
            .finish()
    }
}

impl ScalarField {
    pub fn new(
        name: impl Into<String>,
        manifold: Manifold,
        eval: impl Fn(&Point) -> f64 + Send + Sync + 'static,
    ) -> Self {
        ScalarField {
            name: name.into(),
            manifold,
            eval: Arc::new(eval),
            grad_oracle: None,
            lipschitz_hint: None,
        }
    }

    /// Attaches an exact gradient (ambient tangent vector); returning `None`
    /// at a point falls back to finite differences there.
    pub fn with_gradient(
        mut self,
        grad: impl Fn(&Point) -> Option<DVector<f64>> + Send + Sync + 'static,
    ) -> Self {
        self.grad_oracle = Some(Arc::new(grad));
        self
    }

    pub fn with_lipschitz(mut self, lip: f64) -> Self {
        self.lipschitz_hint = Some(lip);
        self
    }

    pub fn manifold(&self) -> &Manifold {
        &self.manifold
    }

    pub fn lipschitz_hint(&self) -> Option<f64> {
        self.lipschitz_hint
    }

    pub fn has_gradient_oracle(&self) -> bool {
        self.grad_oracle.is_some()
    }

    pub fn value(&self, p: &Point) -> f64 {
        (self.eval)(p)
    }

    pub fn oracle_gradient(&self, p: &Point) -> Option<DVector<f64>> {
        self.grad_oracle.as_ref().and_then(|g| g(p))
    }

    pub fn fd_gradient(&self, p: &Point) -> FdGradient {
        let frame = self.manifold.frame(p);
        let h = fd_step(p);
        let f0 = self.value(p);
        let mut gradient = DVector::zeros(p.coords.len());
        let mut kink: f64 = 0.0;
        for e in &frame.basis {
            let fp = self.value(&self.manifold.exp_at(p, &(e * h)));
            let fm = self.value(&self.manifold.exp_at(p, &(e * -h)));
            let fwd = (fp - f0) / h;
            let bwd = (f0 - fm) / h;
            kink = kink.max((fwd - bwd).abs());
            gradient.axpy((fp - fm) / (2.0 * h), e, 1.0);
        }
        FdGradient {
            gradient,
            kink_indicator: kink,
        }
    }

    /// Exact gradient when the oracle provides one, else central differences.
    pub fn gradient(&self, p: &Point) -> DVector<f64> {
        self.oracle_gradient(p)
            .unwrap_or_else(|| self.fd_gradient(p).gradient)
    }

    /// `c * F`.
    pub fn scale(&self, c: f64) -> ScalarField {
        let inner = self.clone();
        let g = self.clone();
        let mut out = ScalarField::new(format!("{c}*{}", self.name), self.manifold.clone(), move |p| {
            c * inner.value(p)
        });
        if self.grad_oracle.is_some() {
            out = out.with_gradient(move |p| g.oracle_gradient(p).map(|v| v * c));
        }
        out.lipschitz_hint = self.lipschitz_hint.map(|l| l * c.abs());
        out
    }

    /// `F + G`.
    pub fn add(&self, other: &ScalarField) -> ScalarField {
        let (a, b) = (self.clone(), other.clone());
        let (ga, gb) = (self.clone(), other.clone());
        let mut out = ScalarField::new(
            format!("({}+{})", self.name, other.name),
            self.manifold.clone(),
            move |p| a.value(p) + b.value(p),
        );
        if self.grad_oracle.is_some() && other.grad_oracle.is_some() {
            out = out.with_gradient(move |p| Some(ga.oracle_gradient(p)? + gb.oracle_gradient(p)?));
        }
        out.lipschitz_hint = match (self.lipschitz_hint, other.lipschitz_hint) {
            (Some(x), Some(y)) => Some(x + y),
            _ => None,
        };
        out
    }

    /// Pointwise `max(F, G)`; the gradient follows the active branch and is
    /// left to finite differences on ties.
    pub fn max(&self, other: &ScalarField) -> ScalarField {
        self.select(other, "max", |a, b| a > b, |a, b| a.max(b))
    }

    /// Pointwise `min(F, G)`.
    pub fn min(&self, other: &ScalarField) -> ScalarField {
        self.select(other, "min", |a, b| a < b, |a, b| a.min(b))
    }

    fn select(
        &self,
        other: &ScalarField,
        label: &str,
        first_wins: fn(f64, f64) -> bool,
        combine: fn(f64, f64) -> f64,
    ) -> ScalarField {
        let (a, b) = (self.clone(), other.clone());
        let (ga, gb) = (self.clone(), other.clone());
        let mut out = ScalarField::new(
            format!("{label}({},{})", self.name, other.name),
            self.manifold.clone(),
            move |p| combine(a.value(p), b.value(p)),
        );
        if self.grad_oracle.is_some() && other.grad_oracle.is_some() {
            out = out.with_gradient(move |p| {
                let (va, vb) = (ga.value(p), gb.value(p));
                if va == vb {
                    None
                } else if first_wins(va, vb) {
                    ga.oracle_gradient(p)
                } else {
                    gb.oracle_gradient(p)
                }
            });
        }
        out.lipschitz_hint = match (self.lipschitz_hint, other.lipschitz_hint) {
            (Some(x), Some(y)) => Some(x.max(y)),
            _ => None,
        };
        out
    }
}

/// A locally Lipschitz map between built-in manifolds.
#[derive(Clone)]
pub struct MapField {
    pub name: String,
    source: Manifold,
    target: Manifold,
    eval: MapFn,
    differential: Option<DifferentialFn>,
    lipschitz_hint: Option<f64>,
}

impl fmt::Debug for MapField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MapField")
            .field("name", &self.name)
            .field("source", &self.source)
            .field("target", &self.target)
            .field("differential", &self.differential.is_some())
            .field("lipschitz_hint", &self.lipschitz_hint)
            .finish()
    }
}

impl MapField {
    pub fn new(
        name: impl Into<String>,
        source: Manifold,
        target: Manifold,
        eval: impl Fn(&Point) -> Point + Send + Sync + 'static,
    ) -> Self {
        MapField {
            name: name.into(),
            source,
            target,
            eval: Arc::new(eval),
            differential: None,
            lipschitz_hint: None,
        }
    }

    /// Attaches an exact differential, expressed in the standard frames at `x`
    /// and `F(x)`.
    pub fn with_differential(
        mut self,
        d: impl Fn(&Point) -> Option<LinearMapRep> + Send + Sync + 'static,
    ) -> Self {
        self.differential = Some(Arc::new(d));
        self
    }

    pub fn with_lipschitz(mut self, lip: f64) -> Self {
        self.lipschitz_hint = Some(lip);
        self
    }

    /// Views a scalar field as a map into `Euclidean(1)`.
    pub fn from_scalar(field: &ScalarField) -> MapField {
        let f = field.clone();
        let g = field.clone();
        let source = field.manifold().clone();
        let target = Manifold::Euclidean { dim: 1 };
        let mut out = MapField::new(field.name.clone(), source.clone(), target.clone(), move |p| {
            Point::new(vec![f.value(p)])
        });
        if field.has_gradient_oracle() {
            out = out.with_differential(move |p| {
                let grad = g.oracle_gradient(p)?;
                let frame = source.frame(p);
                let row = frame.components(&grad);
                let fp = Point::new(vec![g.value(p)]);
                Some(LinearMapRep {
                    source_frame: frame,
                    target_frame: target.frame(&fp),
                    matrix: DMatrix::from_row_slice(1, row.len(), row.as_slice()),
                })
            });
        }
        out.lipschitz_hint = field.lipschitz_hint();
        out
    }

    pub fn source(&self) -> &Manifold {
        &self.source
    }

    pub fn target(&self) -> &Manifold {
        &self.target
    }

    pub fn lipschitz_hint(&self) -> Option<f64> {
        self.lipschitz_hint
    }

    pub fn value(&self, p: &Point) -> Point {
        (self.eval)(p)
    }

    /// `dF_x(v)` from the oracle, as an ambient tangent vector at `F(x)`.
    pub fn oracle_directional(&self, x: &Point, v: &DVector<f64>) -> Option<DVector<f64>> {
        let d = self.differential.as_ref()?(x)?;
        let comps = d.source_frame.components(v);
        Some(d.target_frame.to_ambient(&(&d.matrix * comps)))
    }

    /// Central-difference `dF_x(v)` through the target logarithm, with the
    /// forward/backward mismatch.
    pub fn fd_directional(&self, x: &Point, v: &DVector<f64>) -> (DVector<f64>, f64) {
        let h = fd_step(x);
        let fx = self.value(x);
        let fp = self.value(&self.source.exp_at(x, &(v * h)));
        let fm = self.value(&self.source.exp_at(x, &(v * -h)));
        let up = self
            .target
            .log_vec(&fx, &fp)
            .unwrap_or_else(|_| DVector::zeros(fx.coords.len()));
        let down = self
            .target
            .log_vec(&fx, &fm)
            .unwrap_or_else(|_| DVector::zeros(fx.coords.len()));
        let central = (&up - &down) / (2.0 * h);
        let mismatch = ((&up + &down) / h).norm();
        (central, mismatch)
    }

    /// `dF_x(v)`: oracle when available, else central differences.
    pub fn directional(&self, x: &Point, v: &DVector<f64>) -> DVector<f64> {
        self.oracle_directional(x, v)
            .unwrap_or_else(|| self.fd_directional(x, v).0)
    }
}
