use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clarke::{gs_critical, is_singular_scalar, ScalarField, SamplingParams, SingularityVerdict};
use crate::error::Result;
use crate::manifold::{Manifold, Point, ScanGrid};
use crate::smoothing::{build_cover, default_cover_radius, EmbeddedMap, GradientPath, SmoothedMap, SmoothingParams};

use super::catalog::dist_to_point;

/// Band around the cut locus and the base point, in units of the largest
/// sampling radius, where sampled verdicts are not judged.
pub const INDETERMINATE_FACTOR: f64 = 1.05;

/// Distance below which a point counts as lying on the cut locus itself.
pub const TOL_CUT: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointVerdict {
    pub index: usize,
    pub point: Point,
    pub clarke: SingularityVerdict,
    pub gs: SingularityVerdict,
    pub indeterminate: bool,
    pub agree: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanCounts {
    pub points: usize,
    pub agreements: usize,
    pub disagreements: usize,
    pub indeterminate: usize,
    pub singular: usize,
}

/// Clarke verdicts for `d_p` against the Grove-Shiohama criterion on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub field: String,
    pub manifold: Manifold,
    pub base_point: Point,
    pub grid: String,
    pub spacing: f64,
    pub band_width: f64,
    pub points: Vec<PointVerdict>,
    /// Grid indices where judged verdicts differ.
    pub disagreements: Vec<usize>,
    /// Grid indices judged singular by both tests.
    pub singular: Vec<usize>,
    pub counts: ScanCounts,
}

/// Whether `q` sits close to, but not on, the cut locus of `p` or `p` itself.
pub fn in_indeterminate_band(m: &Manifold, p: &Point, q: &Point, width: f64) -> bool {
    let cut = m.cut_locus_distance(p, q);
    let base = m.distance(p, q);
    (cut > TOL_CUT && cut < width) || (base > TOL_CUT && base < width)
}

pub fn equivalence_scan(m: &Manifold, p: &Point, grid: &ScanGrid, params: &SamplingParams) -> Result<ScanReport> {
    let field = dist_to_point(m, p.clone());
    let width = INDETERMINATE_FACTOR * params.base_radius_for(m);
    let rows: Vec<Result<PointVerdict>> = grid
        .points
        .par_iter()
        .enumerate()
        .map(|(index, q)| {
            let clarke = is_singular_scalar(&field, q, params)?;
            let gs = gs_critical(m, p, q, params)?;
            let indeterminate = in_indeterminate_band(m, p, q, width);
            Ok(PointVerdict {
                index,
                point: q.clone(),
                agree: clarke.singular == gs.singular,
                clarke,
                gs,
                indeterminate,
            })
        })
        .collect();
    let points = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let disagreements: Vec<usize> = points
        .iter()
        .filter(|v| !v.indeterminate && !v.agree)
        .map(|v| v.index)
        .collect();
    let singular: Vec<usize> = points
        .iter()
        .filter(|v| !v.indeterminate && v.clarke.singular && v.gs.singular)
        .map(|v| v.index)
        .collect();
    let counts = ScanCounts {
        points: points.len(),
        agreements: points.iter().filter(|v| !v.indeterminate && v.agree).count(),
        disagreements: disagreements.len(),
        indeterminate: points.iter().filter(|v| v.indeterminate).count(),
        singular: singular.len(),
    };
    Ok(ScanReport {
        field: field.name.clone(),
        manifold: m.clone(),
        base_point: p.clone(),
        grid: grid.label.clone(),
        spacing: grid.spacing,
        band_width: width,
        points,
        disagreements,
        singular,
        counts,
    })
}

/// Clarke verdicts of a scalar field at every grid point.
pub fn singular_scan(field: &ScalarField, grid: &ScanGrid, params: &SamplingParams) -> Result<Vec<SingularityVerdict>> {
    grid.points
        .par_iter()
        .map(|q| is_singular_scalar(field, q, params))
        .collect()
}

/// Connected components of the flagged points under the graph joining points
/// closer than `radius`. Components are listed by smallest index.
pub fn clusters(m: &Manifold, points: &[Point], flagged: &[usize], radius: f64) -> Vec<Vec<usize>> {
    let n = flagged.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for a in 0..n {
        for b in a + 1..n {
            if m.distance(&points[flagged[a]], &points[flagged[b]]) < radius {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                if ra != rb {
                    parent[ra.max(rb)] = ra.min(rb);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut root_of: Vec<Option<usize>> = vec![None; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        match root_of[r] {
            Some(g) => groups[g].push(flagged[i]),
            None => {
                root_of[r] = Some(groups.len());
                groups.push(vec![flagged[i]]);
            }
        }
    }
    groups
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonvanishingRung {
    pub epsilon: f64,
    pub min_grad_norm: f64,
    pub argmin: usize,
    /// Smallest `|grad F_eps| - delta_hat / 3` over the grid.
    pub min_delta_slack: f64,
    pub positive: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonvanishingReport {
    pub field: String,
    pub grid: String,
    pub grid_size: usize,
    pub tol: f64,
    /// Per-point margin estimates `delta_hat`, half the hull distance to the origin.
    pub delta_hat: Vec<f64>,
    pub singular_points: Vec<usize>,
    pub rungs: Vec<NonvanishingRung>,
    /// Largest ladder value below which every rung keeps the gradient above `tol`.
    pub threshold_epsilon: Option<f64>,
}

/// Smallest smoothed-gradient norm over a grid of nonsingular points, for each
/// `epsilon`, compared with a third of the margin estimates.
pub fn nonvanishing_scan(
    field: &ScalarField,
    grid: &ScanGrid,
    ladder: &[f64],
    params: &SamplingParams,
    smoothing: &SmoothingParams,
) -> Result<NonvanishingReport> {
    let verdicts = singular_scan(field, grid, params)?;
    let delta_hat: Vec<f64> = verdicts.iter().map(|v| 0.5 * v.margin).collect();
    let singular_points: Vec<usize> = verdicts
        .iter()
        .enumerate()
        .filter(|(_, v)| v.singular)
        .map(|(i, _)| i)
        .collect();
    let m = field.manifold();
    let r = smoothing.cover_radius.unwrap_or_else(|| default_cover_radius(m));
    let cover = build_cover(m, r)?;
    let shared: Arc<dyn EmbeddedMap> = Arc::new(field.clone());
    let mut rungs = Vec::new();
    for &eps in ladder {
        let s = SmoothedMap::new(shared.clone(), cover.clone(), eps, smoothing.radial_nodes, smoothing.angular_nodes)?;
        let norms: Vec<Result<f64>> = grid
            .points
            .par_iter()
            .map(|q| Ok(s.gradient(q, GradientPath::Jacobi)?.norm()))
            .collect();
        let norms = norms.into_iter().collect::<Result<Vec<_>>>()?;
        let (argmin, min) = norms
            .iter()
            .copied()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap_or((0, f64::NAN));
        let slack = norms
            .iter()
            .zip(&delta_hat)
            .map(|(g, d)| g - d / 3.0)
            .fold(f64::INFINITY, f64::min);
        rungs.push(NonvanishingRung {
            epsilon: eps,
            min_grad_norm: min,
            argmin,
            min_delta_slack: slack,
            positive: min > params.tol_sing,
        });
    }
    let mut sorted: Vec<&NonvanishingRung> = rungs.iter().collect();
    sorted.sort_by(|a, b| a.epsilon.total_cmp(&b.epsilon));
    let mut threshold = None;
    for r in sorted {
        if r.positive {
            threshold = Some(r.epsilon);
        } else {
            break;
        }
    }
    Ok(NonvanishingReport {
        field: field.name.clone(),
        grid: grid.label.clone(),
        grid_size: grid.len(),
        tol: params.tol_sing,
        delta_hat,
        singular_points,
        rungs,
        threshold_epsilon: threshold,
    })
}
