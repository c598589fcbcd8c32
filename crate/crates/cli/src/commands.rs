use std::sync::Arc;

use serde_json::{json, Value};

use nsmooth::clarke::{
    generalized_gradient, gs_critical, is_singular_map, is_singular_scalar, stability_radius, SamplingParams,
    SingularityVerdict,
};
use nsmooth::experiments::{
    equivalence_grid, equivalence_scan, fibration_grid, reeb_report, run_selftest, singular_scan, FieldSpec, ReebParams,
};
use nsmooth::fibration::{compose_fibration, eta_search, rank_singular_value, EmbeddedField, EPSILON_LADDER};
use nsmooth::manifold::{Manifold, Point, ScanGrid};
use nsmooth::smoothing::{
    build_cover, default_cover_radius, lipschitz_estimate, EmbeddedMap, GradientPath, SmoothedMap,
};
use nsmooth::Result;

use crate::config::RunConfig;
use crate::output::GridRow;
use crate::RunResult;

/// What a command produced: the `result` section of report.json, the rows of
/// grid.csv, and whether every checked claim held.
pub struct Outcome {
    pub result: Value,
    pub rows: Vec<GridRow>,
    pub passed: bool,
}

const SMOOTH_LADDER: [f64; 3] = [0.2, 0.1, 0.05];

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("reports serialize")
}

fn verdict_label(v: &SingularityVerdict) -> &'static str {
    if v.singular {
        "singular"
    } else {
        "regular"
    }
}

fn sampling(cfg: &RunConfig) -> SamplingParams {
    SamplingParams {
        seed: cfg.seed,
        ..cfg.sampling.clone()
    }
}

fn grid_or(cfg: &RunConfig, default: impl FnOnce(&Manifold) -> Result<ScanGrid>) -> RunResult<ScanGrid> {
    match &cfg.grid {
        Some(g) => Ok(g.build(&cfg.manifold)?),
        None => Ok(default(&cfg.manifold)?),
    }
}


/// Smoothed value and differential norm of a scalar field at each point.
fn smoothed_columns(s: &SmoothedMap, points: &[Point]) -> Result<Vec<(f64, f64)>> {
    points
        .iter()
        .map(|q| Ok((s.scalar(q)?, s.differential(q, GradientPath::Jacobi)?.norm())))
        .collect()
}

pub fn probe(cfg: &RunConfig) -> RunResult<Outcome> {
    let m = &cfg.manifold;
    let spec = cfg.field.as_ref().expect("validated");
    let field = spec.build(m)?;
    let p = m.point(cfg.point.clone().expect("validated"))?;
    let params = sampling(cfg);
    let mut hull = generalized_gradient(&field, &p, &params)?;
    let min_norm = hull.solve()?.clone();
    let clarke = is_singular_scalar(&field, &p, &params)?;
    let gs = match spec {
        FieldSpec::DistToPoint { point } => Some(gs_critical(m, &m.point(point.clone())?, &p, &params)?),
        _ => None,
    };
    let lambda = stability_radius(&field, &p, &params)?;
    let smoothed = match cfg.epsilon {
        Some(eps) => {
            let s = SmoothedMap::build(Arc::new(field.clone()), eps, &cfg.smoothing)?;
            Some(smoothed_columns(&s, std::slice::from_ref(&p))?[0])
        }
        None => None,
    };
    let value = field.value(&p);
    let result = json!({
        "field": field.name,
        "point": p.as_slice(),
        "value": value,
        "hull_size": hull.len(),
        "hull_bounds": hull.bounds(),
        "hull_diameter": hull.diameter(),
        "min_norm_point": min_norm.point.as_slice(),
        "clarke": to_value(&clarke),
        "grove_shiohama": gs.as_ref().map(to_value),
        "agree": gs.as_ref().map(|g| g.singular == clarke.singular),
        "stability_radius": lambda,
        "smoothed": smoothed.map(|(v, g)| json!({"epsilon": cfg.epsilon, "value": v, "grad_norm": g})),
    });
    let rows = vec![GridRow {
        coords: p.as_slice().to_vec(),
        value: Some(value),
        smoothed: smoothed.map(|x| x.0),
        grad_norm: smoothed.map(|x| x.1),
        margin: Some(clarke.margin),
        verdict: verdict_label(&clarke).into(),
    }];
    Ok(Outcome { result, rows, passed: true })
}

pub fn scan(cfg: &RunConfig) -> RunResult<Outcome> {
    let m = &cfg.manifold;
    let base = m.point(cfg.point.clone().expect("validated"))?;
    let grid = grid_or(cfg, equivalence_grid)?;
    let report = equivalence_scan(m, &base, &grid, &sampling(cfg))?;
    let smoothed = match cfg.epsilon {
        Some(eps) => {
            let field = nsmooth::experiments::dist_to_point(m, base.clone());
            let s = SmoothedMap::build(Arc::new(field), eps, &cfg.smoothing)?;
            Some(smoothed_columns(&s, &grid.points)?)
        }
        None => None,
    };
    let rows = report
        .points
        .iter()
        .enumerate()
        .map(|(i, v)| GridRow {
            coords: v.point.as_slice().to_vec(),
            value: Some(m.distance(&base, &v.point)),
            smoothed: smoothed.as_ref().map(|s| s[i].0),
            grad_norm: smoothed.as_ref().map(|s| s[i].1),
            margin: Some(v.clarke.margin),
            verdict: if v.indeterminate {
                "indeterminate".into()
            } else if !v.agree {
                "disagree".into()
            } else {
                verdict_label(&v.clarke).into()
            },
        })
        .collect();
    let passed = report.disagreements.is_empty();
    Ok(Outcome {
        result: to_value(&report),
        rows,
        passed,
    })
}

fn default_smooth_grid(m: &Manifold) -> Result<ScanGrid> {
    match m {
        Manifold::Sphere { dim: 2, .. } => ScanGrid::fibonacci(m, 500),
        Manifold::FlatTorus { periods } if periods.len() == 2 => ScanGrid::lattice(m, &[25, 20]),
        _ => ScanGrid::default_for(m, 500),
    }
}

enum Source {
    Scalar(nsmooth::clarke::ScalarField),
    Map(EmbeddedField),
}

impl Source {
    fn shared(&self) -> Arc<dyn EmbeddedMap> {
        match self {
            Source::Scalar(f) => Arc::new(f.clone()),
            Source::Map(f) => Arc::new(f.clone()),
        }
    }

    /// `(F, F_eps, |dF_eps|, margin, verdict)` columns at `q`.
    fn row(&self, s: &SmoothedMap, q: &Point, params: &SamplingParams) -> Result<GridRow> {
        let d = s.differential(q, GradientPath::Jacobi)?.norm();
        let (value, smoothed, verdict) = match self {
            Source::Scalar(f) => (f.value(q), Some(s.scalar(q)?), is_singular_scalar(f, q, params)?),
            Source::Map(f) => {
                let projected = f.embedding.project(&s.value(q)?).ok().map(|p| p.coords[0]);
                (f.map.value(q).coords[0], projected, is_singular_map(&f.map, q, params)?)
            }
        };
        Ok(GridRow {
            coords: q.as_slice().to_vec(),
            value: Some(value),
            smoothed,
            grad_norm: Some(d),
            margin: Some(verdict.margin),
            verdict: verdict_label(&verdict).into(),
        })
    }
}

pub fn smooth(cfg: &RunConfig) -> RunResult<Outcome> {
    let m = &cfg.manifold;
    let source = match (&cfg.field, &cfg.map) {
        (Some(f), _) => Source::Scalar(f.build(m)?),
        (None, Some(map)) => Source::Map(EmbeddedField::new(map.build(m)?)?),
        (None, None) => unreachable!("validated"),
    };
    let field = source.shared();
    let ladder = cfg.epsilon_ladder.clone().unwrap_or(SMOOTH_LADDER.to_vec());
    let grid = grid_or(cfg, default_smooth_grid)?;
    let lip = lipschitz_estimate(field.as_ref(), cfg.lipschitz_pairs, cfg.seed)?;
    let radius = cfg.smoothing.cover_radius.unwrap_or_else(|| default_cover_radius(m));
    let cover = build_cover(m, radius)?;
    let mut table = Vec::new();
    let mut passed = true;
    let mut finest: Option<SmoothedMap> = None;
    for &eps in &ladder {
        let s = SmoothedMap::new(
            field.clone(),
            cover.clone(),
            eps,
            cfg.smoothing.radial_nodes,
            cfg.smoothing.angular_nodes,
        )?;
        let mut max_error: f64 = 0.0;
        for q in &grid.points {
            max_error = max_error.max((s.value(q)? - field.eval(q)).norm());
        }
        let bound = s.error_bound(lip.value) * (1.0 + 1e-3);
        let within = max_error <= bound;
        passed &= within;
        table.push(json!({
            "epsilon": eps,
            "lambda": s.lambda,
            "lipschitz": lip.value,
            "max_error": max_error,
            "bound": bound,
            "within_bound": within,
        }));
        if finest.as_ref().is_none_or(|f| eps < f.epsilon()) {
            finest = Some(s);
        }
    }
    let finest = finest.expect("nonempty ladder");
    let params = sampling(cfg);
    let rows = grid
        .points
        .iter()
        .map(|q| source.row(&finest, q, &params))
        .collect::<Result<Vec<_>>>()?;
    let result = json!({
        "field": field.name(),
        "grid": grid.label,
        "grid_size": grid.len(),
        "cover_centers": cover.len(),
        "cover_radius": radius,
        "lipschitz": to_value(&lip),
        "rows_epsilon": finest.epsilon(),
        "table": table,
    });
    Ok(Outcome { result, rows, passed })
}

pub fn fibrate(cfg: &RunConfig) -> RunResult<Outcome> {
    let m = &cfg.manifold;
    let spec = cfg.map.as_ref().expect("validated");
    let map = spec.build(m)?;
    let eta = cfg.eta.unwrap_or(0.2);
    let ladder = cfg.epsilon_ladder.clone().unwrap_or(EPSILON_LADDER.to_vec());
    let grid = grid_or(cfg, fibration_grid)?;
    let search = eta_search(&map, eta, &ladder, &grid, &cfg.smoothing, cfg.submersion_tol)?;

    let field = EmbeddedField::new(map.clone())?;
    let radius = cfg.smoothing.cover_radius.unwrap_or_else(|| default_cover_radius(m));
    let cover = build_cover(m, radius)?;
    let eps = search.report.epsilon;
    let s = SmoothedMap::new(
        Arc::new(field.clone()),
        cover,
        eps,
        cfg.smoothing.radial_nodes,
        cfg.smoothing.angular_nodes,
    )?;
    let fib = compose_fibration(s, &field.embedding, &grid).ok();
    let params = sampling(cfg);
    let rows = grid
        .points
        .iter()
        .map(|q| {
            let verdict = is_singular_map(&map, q, &params)?;
            let (smoothed, sigma) = match &fib {
                Some(f) => (
                    Some(f.eval(q)?.coords[0]),
                    Some(rank_singular_value(&f.differential(q, GradientPath::Jacobi)?)),
                ),
                None => (None, None),
            };
            Ok(GridRow {
                coords: q.as_slice().to_vec(),
                value: Some(map.value(q).coords[0]),
                smoothed,
                grad_norm: sigma,
                margin: Some(verdict.margin),
                verdict: verdict_label(&verdict).into(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let passed = search.accepted_epsilon.is_some();
    let result = json!({
        "map": spec.label(),
        "analytic_min_sigma": spec.analytic_min_sigma(m),
        "tube_radius": field.embedding.tube_radius,
        "search": to_value(&search),
        "rows_epsilon": eps,
    });
    Ok(Outcome { result, rows, passed })
}

pub fn reeb(cfg: &RunConfig) -> RunResult<Outcome> {
    let m = &cfg.manifold;
    let field = cfg.field.as_ref().expect("validated").build(m)?;
    let [b1, b2] = cfg.band.expect("validated");
    let level = cfg.level.expect("validated");
    let eps = cfg.epsilon.unwrap_or(0.05);
    let mut params = ReebParams {
        sampling: sampling(cfg),
        smoothing: cfg.smoothing.clone(),
        lipschitz_pairs: cfg.lipschitz_pairs,
        seed: cfg.seed,
        ..ReebParams::default()
    };
    if let Some(crate::config::GridSpec::Default { points }) = &cfg.grid {
        params.grid_points = *points;
    }
    let report = reeb_report(&field, level, (b1, b2), eps, &params)?;

    let grid = ScanGrid::default_for(m, params.grid_points)?;
    let mut scan_params = params.sampling.clone();
    if scan_params.base_radius.is_none() {
        scan_params.base_radius = Some(report.sampling_radius);
    }
    let verdicts = singular_scan(&field, &grid, &scan_params)?;
    let s = SmoothedMap::build(Arc::new(field.clone()), eps, &cfg.smoothing)?;
    let smoothed = smoothed_columns(&s, &grid.points)?;
    let rows = grid
        .points
        .iter()
        .zip(verdicts.iter().zip(&smoothed))
        .map(|(q, (v, (fs, g)))| GridRow {
            coords: q.as_slice().to_vec(),
            value: Some(field.value(q)),
            smoothed: Some(*fs),
            grad_norm: Some(*g),
            margin: Some(v.margin),
            verdict: verdict_label(v).into(),
        })
        .collect();
    let passed = report.passed;
    Ok(Outcome {
        result: to_value(&report),
        rows,
        passed,
    })
}

pub fn selftest(seed: u64) -> RunResult<Outcome> {
    let report = run_selftest(seed)?;
    Ok(Outcome {
        passed: report.passed,
        result: to_value(&report),
        rows: Vec::new(),
    })
}
