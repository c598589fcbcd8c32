//! Smooth approximation of Lipschitz fields by Riemannian convolution.
//!
//! The manifold is covered by finitely many small geodesic balls. On each ball
//! the field is pulled back to the tangent space at the center, convolved with
//! a mollifier of radius `epsilon`, and the local results are blended with a
//! smooth partition of unity. The blend is within `epsilon * Lambda(epsilon) *
//! Lip(F)` of the field everywhere.

mod cover;
mod mollifier;
mod partition;
mod smoothed;

use nalgebra::DVector;

use crate::clarke::{fd_step, ScalarField};
use crate::manifold::{Manifold, Point};

pub use cover::{build_cover, cover_test_grid, default_cover_radius, Cover};
pub use mollifier::{mollifier_alpha, mollifier_profile, MollifierSpec, DEFAULT_ANGULAR, DEFAULT_RADIAL};
pub use partition::{bump, PartitionOfUnity};
pub use smoothed::{
    lambda_eps, lambda_eps_sampled, lipschitz_estimate, local_smooth, local_smooth_derivative,
    GradientPath, LipschitzEstimate, SmoothedMap, SmoothingParams, FD_GRADIENT_STEP,
};

/// A field on a manifold with values in `R^l`: scalar fields, or maps whose
/// target has been embedded in Euclidean space.
pub trait EmbeddedMap: Send + Sync {
    fn name(&self) -> &str;

    fn source(&self) -> &Manifold;

    fn out_dim(&self) -> usize;

    fn eval(&self, x: &Point) -> DVector<f64>;

    /// Derivative along the tangent vector `v` at `x`. Defaults to central
    /// differences along the geodesic through `x`.
    fn directional(&self, x: &Point, v: &DVector<f64>) -> DVector<f64> {
        let h = fd_step(x);
        let up = self.eval(&self.source().exp_at(x, &(v * h)));
        let down = self.eval(&self.source().exp_at(x, &(v * -h)));
        (up - down) / (2.0 * h)
    }

    fn lipschitz_hint(&self) -> Option<f64> {
        None
    }
}

impl EmbeddedMap for ScalarField {
    fn name(&self) -> &str {
        &self.name
    }

    fn source(&self) -> &Manifold {
        self.manifold()
    }

    fn out_dim(&self) -> usize {
        1
    }

    fn eval(&self, x: &Point) -> DVector<f64> {
        DVector::from_element(1, self.value(x))
    }

    fn directional(&self, x: &Point, v: &DVector<f64>) -> DVector<f64> {
        match self.oracle_gradient(x) {
            Some(g) => DVector::from_element(1, g.dot(v)),
            None => {
                let h = fd_step(x);
                let m = self.manifold();
                let d = (self.value(&m.exp_at(x, &(v * h))) - self.value(&m.exp_at(x, &(v * -h)))) / (2.0 * h);
                DVector::from_element(1, d)
            }
        }
    }

    fn lipschitz_hint(&self) -> Option<f64> {
        ScalarField::lipschitz_hint(self)
    }
}
