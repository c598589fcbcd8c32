use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifold::{unit_ball_volume, Manifold, Point, ScanGrid};

/// Finitely many geodesic balls covering the manifold (or, for Euclidean
/// space, the box `[-1, 1]^m`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cover {
    pub manifold: Manifold,
    pub centers: Vec<Point>,
    pub radii: Vec<f64>,
    /// Largest test-grid distance to the nearest center when the cover was built.
    pub max_gap: f64,
    pub test_grid_size: usize,
}

impl Cover {
    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn max_radius(&self) -> f64 {
        self.radii.iter().copied().fold(0.0, f64::max)
    }

    /// A one-ball cover, for fields supported in a single chart.
    pub fn single(manifold: &Manifold, center: Point, radius: f64) -> Result<Cover> {
        check_radius(manifold, radius)?;
        Ok(Cover {
            manifold: manifold.clone(),
            centers: vec![center],
            radii: vec![radius],
            max_gap: 0.0,
            test_grid_size: 0,
        })
    }
}

/// Cover radius used when none is configured: a quarter of the injectivity
/// radius, or `0.5` on Euclidean space.
pub fn default_cover_radius(manifold: &Manifold) -> f64 {
    match manifold {
        Manifold::Euclidean { .. } => 0.5,
        _ => 0.25 * manifold.injectivity_radius(),
    }
}

/// The dense grid used to certify coverage: at least `10^4` points.
pub fn cover_test_grid(manifold: &Manifold) -> Result<ScanGrid> {
    match manifold {
        Manifold::Sphere { dim: 2, .. } => ScanGrid::fibonacci(manifold, 10_000),
        Manifold::Sphere { .. } => ScanGrid::default_for(manifold, 10_000),
        _ => {
            let m = manifold.dim();
            let per_axis = (10_000f64.powf(1.0 / m as f64) - 1e-9).ceil() as usize;
            ScanGrid::lattice(manifold, &vec![per_axis; m])
        }
    }
}

fn check_radius(manifold: &Manifold, radius: f64) -> Result<()> {
    let limit = 0.5 * manifold.injectivity_radius();
    if !(radius > 0.0) || radius >= limit {
        return Err(Error::InvalidInput(format!(
            "cover radius {radius} must lie in (0, {limit})"
        )));
    }
    Ok(())
}

/// Greedy farthest-point cover by balls of radius `target_r`.
///
/// Centers are added at the test-grid point farthest from the current centers
/// until every grid point lies within `target_r - spacing`, which also covers
/// the gaps between grid points.
pub fn build_cover(manifold: &Manifold, target_r: f64) -> Result<Cover> {
    check_radius(manifold, target_r)?;
    let grid = cover_test_grid(manifold)?;
    let slack = grid.spacing;
    let goal = target_r - slack;
    if goal <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "cover radius {target_r} is below the test grid resolution {slack}"
        )));
    }
    let m = manifold.dim() as i32;
    let volume = match manifold {
        Manifold::Euclidean { dim } => 2f64.powi(*dim as i32),
        _ => manifold.volume(),
    };
    let expected = (volume / (unit_ball_volume(manifold.dim()) * target_r.powi(m))).ceil() as usize;
    let budget = 10 * expected.max(1) + 10;

    let mut centers = vec![grid.points[0].clone()];
    let mut gap: Vec<f64> = grid
        .points
        .iter()
        .map(|q| manifold.distance(&centers[0], q))
        .collect();
    loop {
        let (far, worst) = gap
            .iter()
            .copied()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .expect("nonempty grid");
        if worst < goal {
            return Ok(Cover {
                manifold: manifold.clone(),
                radii: vec![target_r; centers.len()],
                centers,
                max_gap: worst,
                test_grid_size: grid.len(),
            });
        }
        if centers.len() >= budget {
            return Err(Error::CoverageFailure {
                iterations: centers.len(),
            });
        }
        let c = grid.points[far].clone();
        for (g, q) in gap.iter_mut().zip(&grid.points) {
            *g = g.min(manifold.distance(&c, q));
        }
        centers.push(c);
    }
}
