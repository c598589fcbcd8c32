//! Scenario runners: the field catalog, Clarke versus Grove-Shiohama scans,
//! the nonvanishing-gradient scan and the Reeb checks.

pub mod catalog;
mod reeb;
mod scan;
pub mod selftest;

use crate::error::Result;
use crate::manifold::{Manifold, Point, ScanGrid};

pub use selftest::{run_selftest, SelfTestCheck, SelfTestReport};
pub use catalog::{dist_to_point, triangle_slope, triangle_wave, FieldSpec, MapSpec};
pub use reeb::{reeb_check, reeb_report, ReebParams, ReebReport, ReebStep, ADJACENCY_FACTOR, SHRINK_FRACTION};
pub use scan::{
    clusters, equivalence_scan, in_indeterminate_band, nonvanishing_scan, singular_scan, NonvanishingReport,
    NonvanishingRung, PointVerdict, ScanCounts, ScanReport, INDETERMINATE_FACTOR, TOL_CUT,
};

/// The 200-point grids used by the equivalence scans: a Fibonacci sphere with
/// both poles added, or a 10 x 20 lattice on a 2-torus. Other manifolds get
/// [`ScanGrid::default_for`].
pub fn equivalence_grid(m: &Manifold) -> Result<ScanGrid> {
    match m {
        Manifold::Sphere { dim: 2, radius } => Ok(ScanGrid::fibonacci(m, 198)?.with_points([
            Point::new(vec![0.0, 0.0, *radius]),
            Point::new(vec![0.0, 0.0, -*radius]),
        ])),
        Manifold::FlatTorus { periods } if periods.len() == 2 => ScanGrid::lattice(m, &[10, 20]),
        _ => ScanGrid::default_for(m, 200),
    }
}

/// Grid of the fibration certificates: 64 x 64 on 2-tori, about 4096 points otherwise.
pub fn fibration_grid(m: &Manifold) -> Result<ScanGrid> {
    match m {
        Manifold::FlatTorus { periods } if periods.len() == 2 => ScanGrid::lattice(m, &[64, 64]),
        _ => ScanGrid::default_for(m, 4096),
    }
}
