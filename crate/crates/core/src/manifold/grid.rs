use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::sampling::{fibonacci_sphere, halton_unit_ball};

use super::{Manifold, Point};

/// A deterministic, quasi-uniform set of points with a nominal spacing.
///
/// `spacing` is the typical nearest-neighbor distance; scans use it as the
/// resolution of their claims.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanGrid {
    pub label: String,
    pub points: Vec<Point>,
    pub spacing: f64,
}

impl ScanGrid {
    /// Regular lattice with `counts[i]` nodes along axis `i`.
    ///
    /// Torus axes cover `[0, L_i)`; Euclidean axes cover `[-1, 1]` including both ends.
    pub fn lattice(manifold: &Manifold, counts: &[usize]) -> Result<Self> {
        if counts.len() != manifold.dim() || counts.contains(&0) {
            return Err(Error::InvalidInput("lattice counts must match the dimension".into()));
        }
        let axes: Vec<Vec<f64>> = match manifold {
            Manifold::FlatTorus { periods } => counts
                .iter()
                .zip(periods)
                .map(|(&c, l)| (0..c).map(|k| l * k as f64 / c as f64).collect())
                .collect(),
            Manifold::Euclidean { .. } => counts
                .iter()
                .map(|&c| {
                    if c == 1 {
                        vec![0.0]
                    } else {
                        (0..c).map(|k| -1.0 + 2.0 * k as f64 / (c - 1) as f64).collect()
                    }
                })
                .collect(),
            Manifold::Sphere { .. } => {
                return Err(Error::InvalidInput("lattice grids need a flat manifold".into()))
            }
        };
        let spacing = match manifold {
            Manifold::FlatTorus { periods } => counts
                .iter()
                .zip(periods)
                .map(|(&c, l)| l / c as f64)
                .fold(0.0, f64::max),
            _ => counts
                .iter()
                .map(|&c| if c > 1 { 2.0 / (c - 1) as f64 } else { 2.0 })
                .fold(0.0, f64::max),
        };
        let total: usize = counts.iter().product();
        let mut points = Vec::with_capacity(total);
        // last axis fastest
        for mut code in 0..total {
            let mut coords = vec![0.0; counts.len()];
            for i in (0..counts.len()).rev() {
                coords[i] = axes[i][code % counts[i]];
                code /= counts[i];
            }
            points.push(manifold.normalize(Point::new(coords)));
        }
        Ok(ScanGrid {
            label: format!("lattice{counts:?}"),
            points,
            spacing,
        })
    }

    /// Golden-angle spiral on a 2-sphere.
    pub fn fibonacci(manifold: &Manifold, n: usize) -> Result<Self> {
        let Manifold::Sphere { dim: 2, radius } = manifold else {
            return Err(Error::InvalidInput("fibonacci grids live on 2-spheres".into()));
        };
        let points = fibonacci_sphere(n)
            .into_iter()
            .map(|p| Point::new(p.iter().map(|c| c * radius).collect::<Vec<_>>()))
            .map(|p| manifold.normalize(p))
            .collect();
        Ok(ScanGrid {
            label: format!("fibonacci{n}"),
            points,
            spacing: (4.0 * PI / n as f64).sqrt() * radius,
        })
    }

    /// A quasi-uniform grid of roughly `n` points suited to the manifold.
    pub fn default_for(manifold: &Manifold, n: usize) -> Result<Self> {
        let n = n.max(1);
        match manifold {
            Manifold::Sphere { dim: 2, .. } => Self::fibonacci(manifold, n),
            Manifold::Sphere { dim: 1, radius } => {
                let points = (0..n)
                    .map(|k| {
                        let t = 2.0 * PI * k as f64 / n as f64;
                        manifold.normalize(Point::new(vec![radius * t.cos(), radius * t.sin()]))
                    })
                    .collect();
                Ok(ScanGrid {
                    label: format!("circle{n}"),
                    points,
                    spacing: 2.0 * PI * radius / n as f64,
                })
            }
            Manifold::Sphere { dim, radius } => {
                let points = halton_unit_ball(dim + 1, n, 0)
                    .into_iter()
                    .map(|y| {
                        let s = y.norm();
                        manifold.normalize(Point { coords: y * (radius / s) })
                    })
                    .collect();
                Ok(ScanGrid {
                    label: format!("halton-sphere{n}"),
                    points,
                    spacing: (manifold.volume() / n as f64).powf(1.0 / *dim as f64),
                })
            }
            _ => {
                let m = manifold.dim();
                let per_axis = ((n as f64).powf(1.0 / m as f64).round() as usize).max(1);
                Self::lattice(manifold, &vec![per_axis; m])
            }
        }
    }

    /// Adds points not already present (used to pin analytically known points).
    pub fn with_points(mut self, extra: impl IntoIterator<Item = Point>) -> Self {
        for p in extra {
            if !self.points.iter().any(|q| q == &p) {
                self.points.push(p);
            }
        }
        self
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn torus_lattice_counts_and_spacing() {
        let m = Manifold::flat_torus(vec![1.0, 1.0]).unwrap();
        let g = ScanGrid::lattice(&m, &[10, 20]).unwrap();
        assert_eq!(g.len(), 200);
        assert!((g.spacing - 0.1).abs() < 1e-15);
        assert!(g.points.iter().all(|p| m.contains(p)));
    }

    #[test]
    fn sphere_grid_on_sphere() {
        let m = Manifold::sphere(2, 2.0).unwrap();
        let g = ScanGrid::default_for(&m, 500).unwrap();
        assert_eq!(g.len(), 500);
        assert!(g.points.iter().all(|p| m.contains(p)));
    }
}
