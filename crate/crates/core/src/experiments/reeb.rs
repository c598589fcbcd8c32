use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clarke::{SamplingParams, ScalarField};
use crate::error::{Error, Result};
use crate::manifold::{Manifold, Point, ScanGrid};
use crate::smoothing::{lipschitz_estimate, EmbeddedMap, GradientPath, SmoothedMap, SmoothingParams};

use super::scan::{clusters, singular_scan};

/// Graph radius for clusters and level-set connectivity, in grid spacings.
pub const ADJACENCY_FACTOR: f64 = 2.5;

/// Levels probed near the extremes, as a fraction of the range of values.
pub const SHRINK_FRACTION: f64 = 0.02;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReebParams {
    pub grid_points: usize,
    pub sampling: SamplingParams,
    pub smoothing: SmoothingParams,
    pub lipschitz_pairs: usize,
    pub seed: u64,
}

impl Default for ReebParams {
    fn default() -> Self {
        ReebParams {
            grid_points: 2000,
            sampling: SamplingParams::default(),
            smoothing: SmoothingParams::default(),
            lipschitz_pairs: 2000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReebStep {
    pub step: u8,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReebReport {
    pub field: String,
    pub level: f64,
    pub band: (f64, f64),
    pub epsilon: f64,
    pub grid: String,
    pub grid_size: usize,
    pub spacing: f64,
    pub adjacency_radius: f64,
    pub level_tol: f64,
    pub lipschitz: f64,
    pub sampling_radius: f64,
    /// One representative point (smallest margin) per singular cluster.
    pub cluster_representatives: Vec<Point>,
    pub cluster_sizes: Vec<usize>,
    pub level_points: usize,
    pub level_components: usize,
    pub level_min_degree: usize,
    pub band_points: usize,
    pub band_min_grad: f64,
    pub shrink_levels: (f64, f64),
    pub shrink_radius: f64,
    pub shrink_clusters: (Option<usize>, Option<usize>),
    pub steps: Vec<ReebStep>,
    pub passed: bool,
}

impl ReebReport {
    /// The first failing step as a `HypothesisFailure`.
    pub fn into_result(self) -> Result<ReebReport> {
        match self.steps.iter().find(|s| !s.passed) {
            Some(s) => Err(Error::HypothesisFailure {
                step: s.step,
                detail: format!("{}: {}", s.name, s.detail),
            }),
            None => Ok(self),
        }
    }
}

fn degrees(m: &Manifold, points: &[Point], subset: &[usize], radius: f64) -> Vec<usize> {
    subset
        .iter()
        .map(|&a| {
            subset
                .iter()
                .filter(|&&b| b != a && m.distance(&points[a], &points[b]) < radius)
                .count()
        })
        .collect()
}

/// Index of the cluster within `radius` of every point of `level`, if any.
fn localizing_cluster(m: &Manifold, points: &[Point], level: &[usize], groups: &[Vec<usize>], radius: f64) -> Option<usize> {
    if level.is_empty() {
        return None;
    }
    groups.iter().position(|g| {
        level
            .iter()
            .all(|&i| g.iter().any(|&j| m.distance(&points[i], &points[j]) < radius))
    })
}

/// Runs the four Reeb checks and reports every step.
///
/// 1. the singular set splits into exactly two clusters;
/// 2. the level set `F = c` is sampled as one connected closed curve;
/// 3. the smoothed gradient stays away from zero on `b1 <= F_eps <= b2`;
/// 4. levels near the minimum and maximum sit close to distinct clusters.
pub fn reeb_report(field: &ScalarField, c: f64, band: (f64, f64), epsilon: f64, params: &ReebParams) -> Result<ReebReport> {
    let m = field.manifold();
    let (b1, b2) = band;
    if !(b1 < c && c < b2) {
        return Err(Error::InvalidInput(format!("need b1 < c < b2, got {b1} < {c} < {b2}")));
    }
    let grid = ScanGrid::default_for(m, params.grid_points)?;
    let pts = &grid.points;
    let values: Vec<f64> = pts.par_iter().map(|q| field.value(q)).collect();
    let fmin = values.iter().copied().fold(f64::INFINITY, f64::min);
    let fmax = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(fmin < b1 && b2 < fmax) {
        return Err(Error::InvalidInput(format!(
            "band ({b1}, {b2}) must lie strictly inside the sampled range ({fmin}, {fmax})"
        )));
    }
    let adjacency = ADJACENCY_FACTOR * grid.spacing;
    let mut steps = Vec::new();

    // 1: singular clusters
    let mut sampling = params.sampling.clone();
    if sampling.base_radius.is_none() {
        sampling.base_radius = Some(grid.spacing.min(0.5 * m.convexity_radius()));
    }
    let sampling_radius = sampling.base_radius_for(m);
    let verdicts = singular_scan(field, &grid, &sampling)?;
    let flagged: Vec<usize> = (0..pts.len()).filter(|&i| verdicts[i].singular).collect();
    let groups = clusters(m, pts, &flagged, adjacency);
    let representatives: Vec<Point> = groups
        .iter()
        .map(|g| {
            let best = g
                .iter()
                .copied()
                .min_by(|&a, &b| verdicts[a].margin.total_cmp(&verdicts[b].margin))
                .expect("nonempty cluster");
            pts[best].clone()
        })
        .collect();
    steps.push(ReebStep {
        step: 1,
        name: "singular clusters".into(),
        passed: groups.len() == 2,
        detail: format!("{} clusters from {} singular grid points", groups.len(), flagged.len()),
    });

    // 2: level set connectivity
    let lipschitz = match field.lipschitz_hint() {
        Some(l) => l,
        None => lipschitz_estimate(field, params.lipschitz_pairs, params.seed)?.value,
    };
    let level_tol = 2.0 * lipschitz * grid.spacing;
    let level: Vec<usize> = (0..pts.len()).filter(|&i| (values[i] - c).abs() < level_tol).collect();
    let components = clusters(m, pts, &level, adjacency).len();
    let min_degree = degrees(m, pts, &level, adjacency).into_iter().min().unwrap_or(0);
    let closed = m.dim() != 2 || min_degree >= 2;
    steps.push(ReebStep {
        step: 2,
        name: "level set connectivity".into(),
        passed: !level.is_empty() && components == 1 && closed,
        detail: format!(
            "{} level points, {components} components, min degree {min_degree}",
            level.len()
        ),
    });

    // 3: gradient on the band
    let shared: Arc<dyn EmbeddedMap> = Arc::new(field.clone());
    let smoothed = SmoothedMap::build(shared, epsilon, &params.smoothing)?;
    let smooth_vals: Vec<Result<(f64, f64)>> = pts
        .par_iter()
        .map(|q| {
            let v = smoothed.scalar(q)?;
            if v >= b1 && v <= b2 {
                Ok((v, smoothed.gradient(q, GradientPath::Jacobi)?.norm()))
            } else {
                Ok((v, f64::NAN))
            }
        })
        .collect();
    let smooth_vals = smooth_vals.into_iter().collect::<Result<Vec<_>>>()?;
    let band_grads: Vec<f64> = smooth_vals.iter().map(|x| x.1).filter(|g| !g.is_nan()).collect();
    let band_min_grad = band_grads.iter().copied().fold(f64::INFINITY, f64::min);
    steps.push(ReebStep {
        step: 3,
        name: "band gradient".into(),
        passed: !band_grads.is_empty() && band_min_grad > sampling.tol_sing,
        detail: format!("min |grad| = {band_min_grad} over {} band points", band_grads.len()),
    });

    // 4: shrinking levels
    let range = fmax - fmin;
    let k1 = fmin + SHRINK_FRACTION * range;
    let k2 = fmax - SHRINK_FRACTION * range;
    let shrink_radius = 0.25 * m.injectivity_radius().min(std::f64::consts::PI);
    let lvl = |k: f64| -> Vec<usize> { (0..pts.len()).filter(|&i| (values[i] - k).abs() < level_tol).collect() };
    let (l1, l2) = (lvl(k1), lvl(k2));
    let c1 = localizing_cluster(m, pts, &l1, &groups, shrink_radius);
    let c2 = localizing_cluster(m, pts, &l2, &groups, shrink_radius);
    steps.push(ReebStep {
        step: 4,
        name: "shrinking levels".into(),
        passed: c1.is_some() && c2.is_some() && c1 != c2,
        detail: format!(
            "levels {k1} ({} pts) and {k2} ({} pts) localize at clusters {c1:?} and {c2:?}",
            l1.len(),
            l2.len()
        ),
    });

    let passed = steps.iter().all(|s| s.passed);
    Ok(ReebReport {
        field: field.name.clone(),
        level: c,
        band,
        epsilon,
        grid: grid.label.clone(),
        grid_size: grid.len(),
        spacing: grid.spacing,
        adjacency_radius: adjacency,
        level_tol,
        lipschitz,
        sampling_radius,
        cluster_sizes: groups.iter().map(|g| g.len()).collect(),
        cluster_representatives: representatives,
        level_points: level.len(),
        level_components: components,
        level_min_degree: min_degree,
        band_points: band_grads.len(),
        band_min_grad,
        shrink_levels: (k1, k2),
        shrink_radius,
        shrink_clusters: (c1, c2),
        steps,
        passed,
    })
}

/// [`reeb_report`], failing with `HypothesisFailure` at the first failed step.
pub fn reeb_check(field: &ScalarField, c: f64, band: (f64, f64), epsilon: f64, params: &ReebParams) -> Result<ReebReport> {
    reeb_report(field, c, band, epsilon, params)?.into_result()
}
