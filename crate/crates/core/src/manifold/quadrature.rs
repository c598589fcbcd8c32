//! Product quadrature rules on Euclidean balls.
//!
//! Rules are built in polar form: a Gauss-Legendre radial rule carrying the
//! `r^{m-1}` Jacobian times an angular rule on `S^{m-1}`. The angular rules are
//! exact for spherical polynomials up to a requested degree:
//!
//! * `m = 2`: equally spaced angles,
//! * `m = 3`: Gauss-Legendre in `cos(theta)` times equally spaced azimuths,
//! * `m = 4`: Hopf coordinates `(sqrt(1-t) e^{i xi1}, sqrt(t) e^{i xi2})` with
//!   Gauss-Legendre in `t` and equally spaced `xi1`, `xi2`.

use std::f64::consts::PI;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::sampling::halton_unit_ball;

/// Nodes and positive weights on the ball `B_radius(0)` of `R^dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct BallRule {
    pub dim: usize,
    pub radius: f64,
    pub nodes: Vec<DVector<f64>>,
    pub weights: Vec<f64>,
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Volume of the unit ball of `R^dim`.
pub fn unit_ball_volume(dim: usize) -> f64 {
    match dim {
        0 => 1.0,
        1 => 2.0,
        _ => unit_ball_volume(dim - 2) * 2.0 * PI / dim as f64,
    }
}

/// Radial rule for `int_0^radius f(r) r^{dim-1} dr` made of `panels` equal
/// Gauss-Legendre panels with `per_panel` nodes each.
fn radial_rule(dim: usize, radius: f64, panels: usize, per_panel: usize) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(per_panel);
    let h = radius / panels as f64;
    let mut out = Vec::with_capacity(panels * per_panel);
    for k in 0..panels {
        let a = k as f64 * h;
        for (xi, wi) in x.iter().zip(&w) {
            let r = a + 0.5 * h * (xi + 1.0);
            out.push((r, 0.5 * h * wi * r.powi(dim as i32 - 1)));
        }
    }
    out
}

/// Angular rule on `S^{dim-1}` exact for polynomials of degree `<= degree`.
fn angular_rule(dim: usize, degree: usize) -> Result<Vec<(DVector<f64>, f64)>> {
    let k = degree + 1;
    let azimuths = |count: usize| -> Vec<f64> {
        (0..count)
            .map(|j| 2.0 * PI * (j as f64 + 0.5) / count as f64)
            .collect()
    };
    match dim {
        1 => Ok(vec![
            (DVector::from_element(1, 1.0), 1.0),
            (DVector::from_element(1, -1.0), 1.0),
        ]),
        2 => Ok(azimuths(k)
            .into_iter()
            .map(|t| (DVector::from_vec(vec![t.cos(), t.sin()]), 2.0 * PI / k as f64))
            .collect()),
        3 => {
            let (z, wz) = gauss_legendre(degree / 2 + 1);
            let mut out = Vec::with_capacity(z.len() * k);
            for (zi, wi) in z.iter().zip(&wz) {
                let s = (1.0 - zi * zi).sqrt();
                for t in azimuths(k) {
                    out.push((
                        DVector::from_vec(vec![s * t.cos(), s * t.sin(), *zi]),
                        wi * 2.0 * PI / k as f64,
                    ));
                }
            }
            Ok(out)
        }
        4 => {
            let (x, wx) = gauss_legendre(degree / 4 + 1);
            let mut out = Vec::new();
            let az = azimuths(k);
            let wa = 2.0 * PI / k as f64;
            for (xi, wi) in x.iter().zip(&wx) {
                let t = 0.5 * (xi + 1.0);
                // dA = (1/2) dt dxi1 dxi2, dt = dx/2
                let wt = 0.25 * wi;
                let (c, s) = ((1.0 - t).sqrt(), t.sqrt());
                for a in &az {
                    for b in &az {
                        out.push((
                            DVector::from_vec(vec![c * a.cos(), c * a.sin(), s * b.cos(), s * b.sin()]),
                            wt * wa * wa,
                        ));
                    }
                }
            }
            Ok(out)
        }
        _ => Err(Error::UnsupportedDim(dim)),
    }
}

impl BallRule {
    /// Product rule with `radial` Gauss-Legendre nodes and an angular rule exact
    /// to `angular_degree` (for `dim = 2`, `angular_degree + 1` equally spaced angles).
    pub fn product(dim: usize, radius: f64, radial: usize, angular_degree: usize) -> Result<Self> {
        Self::composite(dim, radius, 1, radial, angular_degree)
    }

    /// Like [`BallRule::product`] with the radial interval split into `panels`.
    pub fn composite(
        dim: usize,
        radius: f64,
        panels: usize,
        per_panel: usize,
        angular_degree: usize,
    ) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::InvalidInput(format!("ball radius {radius} must be > 0")));
        }
        if dim == 0 || panels == 0 || per_panel == 0 {
            return Err(Error::InvalidInput("empty quadrature rule".into()));
        }
        let angular = angular_rule(dim, angular_degree)?;
        let radial = radial_rule(dim, radius, panels, per_panel);
        let mut nodes = Vec::with_capacity(radial.len() * angular.len());
        let mut weights = Vec::with_capacity(nodes.capacity());
        for (r, wr) in &radial {
            for (u, wu) in &angular {
                nodes.push(u * *r);
                weights.push(wr * wu);
            }
        }
        Ok(BallRule {
            dim,
            radius,
            nodes,
            weights,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: Fn(&DVector<f64>) -> f64>(&self, f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(y, w)| w * f(y))
            .sum()
    }
}

/// Rule on `B_radius(0) ⊂ R^dim` exact for polynomials of total degree `<= order`.
///
/// Supported for `1 <= dim <= 4`; larger dimensions must use
/// [`ball_quasi_monte_carlo`].
pub fn ball_quadrature(dim: usize, radius: f64, order: usize) -> Result<BallRule> {
    if order < 2 {
        return Err(Error::InvalidInput(format!("quadrature order {order} < 2")));
    }
    if dim == 0 || dim > 4 {
        return Err(Error::UnsupportedDim(dim));
    }
    // radial integrand r^{dim-1} p(r) has degree order + dim - 1
    let radial = (order + dim) / 2 + 1;
    BallRule::product(dim, radius, radial, order)
}

/// Equal-weight Halton rule on the ball, for dimensions beyond the product rules.
pub fn ball_quasi_monte_carlo(dim: usize, radius: f64, n: usize, seed: u64) -> BallRule {
    let w = unit_ball_volume(dim) * radius.powi(dim as i32) / n as f64;
    BallRule {
        dim,
        radius,
        nodes: halton_unit_ball(dim, n, seed)
            .into_iter()
            .map(|y| y * radius)
            .collect(),
        weights: vec![w; n],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(5);
        for deg in 0..10 {
            let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
            let got: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg)).sum();
            assert!((got - exact).abs() < 1e-14, "deg {deg}: {got} vs {exact}");
        }
    }

    #[test]
    fn constant_integrates_to_volume() {
        for dim in 1..=4 {
            let rule = ball_quadrature(dim, 0.7, 6).unwrap();
            assert_relative_eq!(
                rule.integrate(|_| 1.0),
                unit_ball_volume(dim) * 0.7f64.powi(dim as i32),
                max_relative = 1e-13
            );
        }
    }

    #[test]
    fn odd_monomial_vanishes() {
        let rule = ball_quadrature(2, 1.0, 4).unwrap();
        assert!(rule.integrate(|y| y[0]).abs() < 1e-12);
    }

    #[test]
    fn squared_radius_in_the_plane() {
        let rule = ball_quadrature(2, 1.0, 4).unwrap();
        assert_relative_eq!(rule.integrate(|y| y.norm_squared()), PI / 2.0, max_relative = 1e-13);
    }

    #[test]
    fn nodes_inside_and_weights_positive() {
        for dim in 1..=4 {
            let rule = ball_quadrature(dim, 0.3, 8).unwrap();
            assert!(rule.nodes.iter().all(|y| y.norm() < 0.3));
            assert!(rule.weights.iter().all(|w| *w > 0.0));
        }
    }

    #[test]
    fn rejects_high_dimension() {
        assert_eq!(ball_quadrature(5, 1.0, 4), Err(Error::UnsupportedDim(5)));
        let qmc = ball_quasi_monte_carlo(5, 1.0, 100, 3);
        assert_eq!(qmc.len(), 100);
    }
}
