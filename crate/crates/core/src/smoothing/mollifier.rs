use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifold::{ball_quasi_monte_carlo, gauss_legendre, unit_ball_volume, BallRule};

use super::bump;

pub const DEFAULT_RADIAL: usize = 8;
pub const DEFAULT_ANGULAR: usize = 16;

const QMC_NODES: usize = 4096;

/// `exp(-1/(1 - |y|^2))` on the unit ball.
pub fn mollifier_profile(y: &DVector<f64>) -> f64 {
    bump(y.norm())
}

/// `int_0^1 exp(-1/(1-r^2)) r^{m-1} dr` by composite Gauss-Legendre.
fn radial_moment(m: usize) -> f64 {
    let (x, w) = gauss_legendre(20);
    let panels = 400;
    let h = 1.0 / panels as f64;
    let mut total = 0.0;
    for k in 0..panels {
        let a = k as f64 * h;
        for (xi, wi) in x.iter().zip(&w) {
            let r = a + 0.5 * h * (xi + 1.0);
            total += 0.5 * h * wi * bump(r) * r.powi(m as i32 - 1);
        }
    }
    total
}

fn alpha_any_dim(m: usize) -> f64 {
    // |S^{m-1}| = m * |B^m|
    1.0 / (m as f64 * unit_ball_volume(m) * radial_moment(m))
}

/// Normalization making `alpha * exp(-1/(1-|y|^2))` a unit-mass density on
/// the unit ball of `R^m`.
pub fn mollifier_alpha(m: usize) -> Result<f64> {
    if m == 0 || m > 4 {
        return Err(Error::UnsupportedDim(m));
    }
    Ok(alpha_any_dim(m))
}

/// A discretized mollifier `rho_eps(y) = alpha eps^{-m} exp(-1/(1-|y/eps|^2))`.
///
/// `weights[j]` already includes the density and sums to one, so averaging a
/// field over the nodes never leaves the convex hull of its values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MollifierSpec {
    pub dim: usize,
    pub epsilon: f64,
    pub alpha: f64,
    pub radial_nodes: usize,
    pub angular_nodes: usize,
    /// Mass of the density under the rule before renormalization.
    pub raw_mass: f64,
    #[serde(skip)]
    pub nodes: Vec<DVector<f64>>,
    #[serde(skip)]
    pub weights: Vec<f64>,
}

impl MollifierSpec {
    pub fn new(dim: usize, epsilon: f64) -> Result<Self> {
        Self::with_order(dim, epsilon, DEFAULT_RADIAL, DEFAULT_ANGULAR)
    }

    /// Product rule with `radial` radial nodes and `angular` azimuths (polar
    /// angles on the 3-ball get `angular / 2` Gauss nodes). Dimensions above 4
    /// fall back to a quasi-Monte Carlo rule.
    pub fn with_order(dim: usize, epsilon: f64, radial: usize, angular: usize) -> Result<Self> {
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(Error::InvalidInput(format!("mollifier radius {epsilon} must be > 0")));
        }
        if dim == 0 {
            return Err(Error::UnsupportedDim(0));
        }
        let alpha = alpha_any_dim(dim);
        let rule = if dim <= 4 {
            BallRule::product(dim, epsilon, radial.max(1), angular.max(1) - 1)?
        } else {
            ball_quasi_monte_carlo(dim, epsilon, QMC_NODES, 0)
        };
        let scale = alpha / epsilon.powi(dim as i32);
        let mut nodes = Vec::with_capacity(rule.len());
        let mut weights = Vec::with_capacity(rule.len());
        for (y, w) in rule.nodes.into_iter().zip(rule.weights) {
            let rho = scale * mollifier_profile(&(&y / epsilon));
            if rho > 0.0 {
                nodes.push(y);
                weights.push(w * rho);
            }
        }
        let raw_mass: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= raw_mass);
        Ok(MollifierSpec {
            dim,
            epsilon,
            alpha,
            radial_nodes: radial,
            angular_nodes: angular,
            raw_mass,
            nodes,
            weights,
        })
    }

    /// The continuous density at `y`.
    pub fn density(&self, y: &DVector<f64>) -> f64 {
        self.alpha / self.epsilon.powi(self.dim as i32) * mollifier_profile(&(y / self.epsilon))
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Weighted mean of `|y|` over the nodes.
    pub fn mean_radius(&self) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(y, w)| w * y.norm())
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_in_one_dimension() {
        assert!((mollifier_alpha(1).unwrap() - 2.252283).abs() < 1e-6);
        assert_eq!(mollifier_alpha(5), Err(Error::UnsupportedDim(5)));
    }

    #[test]
    fn weights_normalized_and_raw_mass_close() {
        for dim in 1..=3 {
            let s = MollifierSpec::new(dim, 0.1).unwrap();
            assert!((s.weights.iter().sum::<f64>() - 1.0).abs() < 1e-13);
            assert!((s.raw_mass - 1.0).abs() < 0.05, "dim {dim}: {}", s.raw_mass);
            assert!(s.nodes.iter().all(|y| y.norm() < 0.1));
        }
    }

    #[test]
    fn first_moment_vanishes() {
        let s = MollifierSpec::new(2, 0.2).unwrap();
        let mut m = DVector::zeros(2);
        for (y, w) in s.nodes.iter().zip(&s.weights) {
            m += y * *w;
        }
        assert!(m.norm() < 1e-15);
    }

    #[test]
    fn high_dimension_falls_back() {
        let s = MollifierSpec::new(5, 0.1).unwrap();
        assert!(!s.is_empty());
    }
}
