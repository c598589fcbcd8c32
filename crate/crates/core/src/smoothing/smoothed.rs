use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifold::{Manifold, Point};

use super::{build_cover, default_cover_radius, Cover, EmbeddedMap, MollifierSpec, PartitionOfUnity};
use super::{DEFAULT_ANGULAR, DEFAULT_RADIAL};

/// Step of the finite-difference gradient path.
pub const FD_GRADIENT_STEP: f64 = 1e-5;

/// Safety factor on the condition `epsilon * Lambda < inj / 2`.
const OMEGA_FACTOR: f64 = 1.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientPath {
    /// Differentiate under the integral with Jacobi fields.
    Jacobi,
    /// Central differences of the smoothed values.
    FiniteDifference,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmoothingParams {
    pub cover_radius: Option<f64>,
    pub radial_nodes: usize,
    pub angular_nodes: usize,
}

impl Default for SmoothingParams {
    fn default() -> Self {
        SmoothingParams {
            cover_radius: None,
            radial_nodes: DEFAULT_RADIAL,
            angular_nodes: DEFAULT_ANGULAR,
        }
    }
}

fn check_epsilon(manifold: &Manifold, radius: f64, epsilon: f64) -> Result<()> {
    let inj = manifold.injectivity_radius();
    if !(epsilon > 0.0) || epsilon >= 0.5 * inj {
        return Err(Error::DomainViolation(format!(
            "epsilon {epsilon} must lie in (0, {})",
            0.5 * inj
        )));
    }
    if radius + epsilon >= inj {
        return Err(Error::DomainViolation(format!(
            "cover radius {radius} + epsilon {epsilon} reaches the injectivity radius {inj}"
        )));
    }
    Ok(())
}

/// Convolution of the field pulled back to `T_center M`, evaluated at `q`.
pub fn local_smooth(
    field: &dyn EmbeddedMap,
    center: &Point,
    radius: f64,
    mollifier: &MollifierSpec,
    q: &Point,
) -> Result<DVector<f64>> {
    let m = field.source();
    check_epsilon(m, radius, mollifier.epsilon)?;
    let d = m.distance(center, q);
    if d >= radius {
        return Err(Error::DomainViolation(format!(
            "q at distance {d} lies outside the chart of radius {radius}"
        )));
    }
    let frame = m.frame(center);
    let a = m.log_vec(center, q)?;
    let mut acc = DVector::zeros(field.out_dim());
    for (y, w) in mollifier.nodes.iter().zip(&mollifier.weights) {
        let shifted = m.exp_at(center, &(&a - frame.to_ambient(y)));
        acc.axpy(*w, &field.eval(&shifted), 1.0);
    }
    Ok(acc)
}

/// Derivative of [`local_smooth`] at `q` along `v`, differentiating under the
/// integral: each node contributes `dF` at the shifted point applied to the
/// endpoint of the Jacobi field of the translated geodesic family.
pub fn local_smooth_derivative(
    field: &dyn EmbeddedMap,
    center: &Point,
    radius: f64,
    mollifier: &MollifierSpec,
    q: &Point,
    v: &DVector<f64>,
) -> Result<DVector<f64>> {
    let m = field.source();
    check_epsilon(m, radius, mollifier.epsilon)?;
    let d = m.distance(center, q);
    if d >= radius {
        return Err(Error::DomainViolation(format!(
            "q at distance {d} lies outside the chart of radius {radius}"
        )));
    }
    let frame = m.frame(center);
    let mut acc = DVector::zeros(field.out_dim());
    for (y, w) in mollifier.nodes.iter().zip(&mollifier.weights) {
        let (shifted, j) = m.jacobi_endpoint(center, q, &frame.to_ambient(y), v)?;
        acc.axpy(*w, &field.directional(&shifted, &j), 1.0);
    }
    Ok(acc)
}

/// Largest Lipschitz constant of `exp_{p_i}` on the balls of radius
/// `r_i + epsilon`.
///
/// Flat manifolds give exactly 1. On a sphere of radius `R`, `d exp` preserves
/// radial lengths and scales transverse ones by `sin(t)/t` with `t = |v|/R`,
/// so the constant is `max(1, sup sin(t)/t) = 1` below the injectivity radius.
pub fn lambda_eps(manifold: &Manifold, cover: &Cover, epsilon: f64) -> Result<f64> {
    for r in &cover.radii {
        check_epsilon(manifold, *r, epsilon)?;
    }
    Ok(match manifold {
        Manifold::Sphere { radius, .. } => {
            let t = (cover.max_radius() + epsilon) / radius;
            let transverse = if t > 0.0 { t.sin() / t } else { 1.0 };
            transverse.max(1.0)
        }
        _ => 1.0,
    })
}

/// Largest sampled difference quotient `d(exp a, exp b) / |a - b|` over `n`
/// random pairs in the balls of radius `r_i + epsilon`.
pub fn lambda_eps_sampled(manifold: &Manifold, cover: &Cover, epsilon: f64, n: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: f64 = 0.0;
    for k in 0..n {
        let i = k % cover.len();
        let c = &cover.centers[i];
        let reach = cover.radii[i] + epsilon;
        let a = manifold.random_tangent(c, reach * rand::Rng::random::<f64>(&mut rng), &mut rng);
        let b = if k % 2 == 0 {
            manifold.random_tangent(c, reach * rand::Rng::random::<f64>(&mut rng), &mut rng)
        } else {
            let dir = manifold.random_tangent(c, 1e-4 * reach, &mut rng);
            let b = &a + dir;
            let nb = b.norm();
            if nb >= reach {
                b * (reach * 0.999 / nb)
            } else {
                b
            }
        };
        let den = (&a - &b).norm();
        if den > 0.0 {
            let num = manifold.distance(&manifold.exp_at(c, &a), &manifold.exp_at(c, &b));
            best = best.max(num / den);
        }
    }
    best
}

/// A sampled Lipschitz constant; always a lower bound on the true one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LipschitzEstimate {
    pub value: f64,
    pub pairs: usize,
    pub lower_bound: bool,
}

/// Largest difference quotient `|F(x) - F(y)| / d(x, y)` over `n_pairs`
/// pairs, half of them uniformly random and half at short range.
pub fn lipschitz_estimate(field: &dyn EmbeddedMap, n_pairs: usize, seed: u64) -> Result<LipschitzEstimate> {
    if n_pairs < 1000 {
        return Err(Error::InvalidInput(format!("lipschitz estimate needs >= 1000 pairs, got {n_pairs}")));
    }
    let m = field.source();
    let local = 1e-3 * m.injectivity_radius().min(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: f64 = 0.0;
    for k in 0..n_pairs {
        let x = m.random_point(&mut rng);
        let y = if k % 2 == 0 {
            m.random_point(&mut rng)
        } else {
            let v = m.random_tangent(&x, local, &mut rng);
            m.exp_at(&x, &v)
        };
        let d = m.distance(&x, &y);
        if d > 0.0 {
            best = best.max((field.eval(&x) - field.eval(&y)).norm() / d);
        }
    }
    Ok(LipschitzEstimate {
        value: best,
        pairs: n_pairs,
        lower_bound: true,
    })
}

/// The global smooth approximation `sum_i psi_i(q) F_eps^{(i)}(q)`.
#[derive(Clone)]
pub struct SmoothedMap {
    field: Arc<dyn EmbeddedMap>,
    pub partition: PartitionOfUnity,
    pub mollifier: MollifierSpec,
    pub lambda: f64,
}

impl std::fmt::Debug for SmoothedMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SmoothedMap")
            .field("field", &self.field.name())
            .field("centers", &self.partition.cover.len())
            .field("epsilon", &self.mollifier.epsilon)
            .field("lambda", &self.lambda)
            .finish()
    }
}

impl SmoothedMap {
    pub fn new(
        field: Arc<dyn EmbeddedMap>,
        cover: Cover,
        epsilon: f64,
        radial_nodes: usize,
        angular_nodes: usize,
    ) -> Result<Self> {
        let m = field.source().clone();
        if cover.manifold != m {
            return Err(Error::InvalidInput("cover built for a different manifold".into()));
        }
        let lambda = lambda_eps(&m, &cover, epsilon)?;
        let omega = m.injectivity_radius() / (2.0 * lambda * OMEGA_FACTOR);
        if epsilon >= omega {
            return Err(Error::DomainViolation(format!(
                "epsilon {epsilon} must stay below inj / (2 Lambda 1.01) = {omega}"
            )));
        }
        let mollifier = MollifierSpec::with_order(m.dim(), epsilon, radial_nodes, angular_nodes)?;
        Ok(SmoothedMap {
            field,
            partition: PartitionOfUnity::new(cover),
            mollifier,
            lambda,
        })
    }

    /// Builds the cover too; reuse [`SmoothedMap::new`] to share a cover over
    /// several values of `epsilon`.
    pub fn build(field: Arc<dyn EmbeddedMap>, epsilon: f64, params: &SmoothingParams) -> Result<Self> {
        let m = field.source().clone();
        let r = params.cover_radius.unwrap_or_else(|| default_cover_radius(&m));
        let cover = build_cover(&m, r)?;
        Self::new(field, cover, epsilon, params.radial_nodes, params.angular_nodes)
    }

    pub fn field(&self) -> &Arc<dyn EmbeddedMap> {
        &self.field
    }

    pub fn manifold(&self) -> &Manifold {
        self.field.source()
    }

    pub fn cover(&self) -> &Cover {
        &self.partition.cover
    }

    pub fn epsilon(&self) -> f64 {
        self.mollifier.epsilon
    }

    /// `epsilon * Lambda(epsilon) * lip`.
    pub fn error_bound(&self, lip: f64) -> f64 {
        self.epsilon() * self.lambda * lip
    }

    pub fn local(&self, i: usize, q: &Point) -> Result<DVector<f64>> {
        let cover = self.cover();
        local_smooth(self.field.as_ref(), &cover.centers[i], cover.radii[i], &self.mollifier, q)
    }

    /// The smoothed value at `q`.
    pub fn value(&self, q: &Point) -> Result<DVector<f64>> {
        let mut acc = DVector::zeros(self.field.out_dim());
        for (i, psi) in self.partition.weights(q) {
            acc.axpy(psi, &self.local(i, q)?, 1.0);
        }
        Ok(acc)
    }

    /// Scalar convenience for one-dimensional outputs.
    pub fn scalar(&self, q: &Point) -> Result<f64> {
        Ok(self.value(q)?[0])
    }

    /// The differential at `q` as an `out_dim x m` matrix acting on components
    /// in the standard frame at `q`.
    pub fn differential(&self, q: &Point, path: GradientPath) -> Result<DMatrix<f64>> {
        let m = self.manifold();
        let frame = m.frame(q);
        let l = self.field.out_dim();
        let mut out = DMatrix::zeros(l, frame.dim());
        match path {
            GradientPath::Jacobi => {
                let cover = self.cover();
                for (i, psi, grad_psi) in self.partition.weights_with_gradients(q) {
                    let local = self.local(i, q)?;
                    for (k, e) in frame.basis.iter().enumerate() {
                        let dl = local_smooth_derivative(
                            self.field.as_ref(),
                            &cover.centers[i],
                            cover.radii[i],
                            &self.mollifier,
                            q,
                            e,
                        )?;
                        let col = &local * grad_psi.dot(e) + dl * psi;
                        let mut target = out.column_mut(k);
                        target += col;
                    }
                }
            }
            GradientPath::FiniteDifference => {
                let h = FD_GRADIENT_STEP;
                for (k, e) in frame.basis.iter().enumerate() {
                    let up = self.value(&m.exp_at(q, &(e * h)))?;
                    let down = self.value(&m.exp_at(q, &(e * -h)))?;
                    out.set_column(k, &((up - down) / (2.0 * h)));
                }
            }
        }
        Ok(out)
    }

    /// Riemannian gradient (ambient tangent vector at `q`) of a scalar field.
    pub fn gradient(&self, q: &Point, path: GradientPath) -> Result<DVector<f64>> {
        if self.field.out_dim() != 1 {
            return Err(Error::InvalidInput("gradient of a vector-valued field".into()));
        }
        let d = self.differential(q, path)?;
        let frame = self.manifold().frame(q);
        Ok(frame.to_ambient(&d.row(0).transpose()))
    }
}
