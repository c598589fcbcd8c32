//! Run configuration: parsing with field paths, defaults and validation.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use nsmooth::clarke::SamplingParams;
use nsmooth::experiments::{FieldSpec, MapSpec};
use nsmooth::manifold::{Manifold, ScanGrid};
use nsmooth::smoothing::SmoothingParams;

use crate::Command;

/// A configuration problem, located by a path such as `epsilon_ladder[0]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "config error: {}", self.message)
        } else {
            write!(f, "config error at {}: {}", self.path, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

/// Which points a command scans.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GridSpec {
    /// About `points` points spread by the manifold's default rule.
    Default { points: usize },
    /// A Fibonacci lattice on the 2-sphere.
    Fibonacci { points: usize },
    /// A product lattice on a torus or the Euclidean box, `counts[i]` per axis.
    Lattice { counts: Vec<usize> },
}

impl GridSpec {
    pub fn build(&self, m: &Manifold) -> Result<ScanGrid, ConfigError> {
        let built = match self {
            GridSpec::Default { points } => ScanGrid::default_for(m, *points),
            GridSpec::Fibonacci { points } => ScanGrid::fibonacci(m, *points),
            GridSpec::Lattice { counts } => ScanGrid::lattice(m, counts),
        };
        built.map_err(|e| ConfigError::new("grid", e.to_string()))
    }
}

fn default_submersion_tol() -> f64 {
    nsmooth::fibration::SUBMERSION_TOL
}

fn default_lipschitz_pairs() -> usize {
    10_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub manifold: Manifold,
    /// Scalar field for `probe`, `smooth` and `reeb`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<FieldSpec>,
    /// Circle-valued map for `fibrate` (and `smooth`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map: Option<MapSpec>,
    /// Probe point, or the base point of a `scan`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon_ladder: Option<Vec<f64>>,
    /// Smoothing radius of `reeb`, and of the smoothed columns of `probe` and `scan`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub band: Option<[f64; 2]>,
    #[serde(default)]
    pub sampling: SamplingParams,
    #[serde(default)]
    pub smoothing: SmoothingParams,
    #[serde(default = "default_submersion_tol")]
    pub submersion_tol: f64,
    #[serde(default = "default_lipschitz_pairs")]
    pub lipschitz_pairs: usize,
    #[serde(default)]
    pub seed: u64,
}

impl RunConfig {
    /// A configuration with only a manifold, for `selftest` runs without a file.
    pub fn minimal(manifold: Manifold) -> Self {
        RunConfig {
            manifold,
            field: None,
            map: None,
            point: None,
            grid: None,
            epsilon_ladder: None,
            epsilon: None,
            eta: None,
            level: None,
            band: None,
            sampling: SamplingParams::default(),
            smoothing: SmoothingParams::default(),
            submersion_tol: default_submersion_tol(),
            lipschitz_pairs: default_lipschitz_pairs(),
            seed: 0,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let path = if path == "." { String::new() } else { path };
            ConfigError::new(path, e.into_inner().to_string())
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new("", format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Checks every value and the fields `command` needs.
    pub fn validate(&self, command: Command) -> Result<(), ConfigError> {
        self.manifold
            .validate()
            .map_err(|e| ConfigError::new("manifold", e.to_string()))?;
        if let Some(f) = &self.field {
            f.build(&self.manifold)
                .map_err(|e| ConfigError::new("field", e.to_string()))?;
        }
        if let Some(m) = &self.map {
            m.build(&self.manifold)
                .map_err(|e| ConfigError::new("map", e.to_string()))?;
        }
        if let Some(p) = &self.point {
            self.manifold
                .point(p.clone())
                .map_err(|e| ConfigError::new("point", e.to_string()))?;
        }
        if let Some(g) = &self.grid {
            match g {
                GridSpec::Default { points } | GridSpec::Fibonacci { points } if *points == 0 => {
                    return Err(ConfigError::new("grid.points", "must be at least 1"))
                }
                GridSpec::Lattice { counts } => {
                    if let Some(i) = counts.iter().position(|c| *c == 0) {
                        return Err(ConfigError::new(format!("grid.counts[{i}]"), "must be at least 1"));
                    }
                }
                _ => {}
            }
            g.build(&self.manifold)?;
        }
        if let Some(ladder) = &self.epsilon_ladder {
            if ladder.is_empty() {
                return Err(ConfigError::new("epsilon_ladder", "must not be empty"));
            }
            for (i, e) in ladder.iter().enumerate() {
                positive(&format!("epsilon_ladder[{i}]"), *e)?;
            }
        }
        if let Some(e) = self.epsilon {
            positive("epsilon", e)?;
        }
        if let Some(e) = self.eta {
            positive("eta", e)?;
        }
        if let Some([b1, b2]) = self.band {
            if !(b1.is_finite() && b2.is_finite() && b1 < b2) {
                return Err(ConfigError::new("band", format!("need finite b1 < b2, got [{b1}, {b2}]")));
            }
            if let Some(c) = self.level {
                if !(b1 < c && c < b2) {
                    return Err(ConfigError::new("level", format!("{c} must lie strictly inside the band")));
                }
            }
        }
        if let Some(r) = self.sampling.base_radius {
            positive("sampling.base_radius", r)?;
        }
        positive("sampling.tol_sing", self.sampling.tol_sing)?;
        at_least("sampling.rungs", self.sampling.rungs, 1)?;
        at_least("sampling.samples_per_rung", self.sampling.samples_per_rung, 2)?;
        at_least("sampling.directions", self.sampling.directions, 1)?;
        if let Some(r) = self.smoothing.cover_radius {
            positive("smoothing.cover_radius", r)?;
        }
        at_least("smoothing.radial_nodes", self.smoothing.radial_nodes, 1)?;
        at_least("smoothing.angular_nodes", self.smoothing.angular_nodes, 2)?;
        positive("submersion_tol", self.submersion_tol)?;
        at_least("lipschitz_pairs", self.lipschitz_pairs, 1000)?;

        let name = command.name();
        let need = |present: bool, path: &str| -> Result<(), ConfigError> {
            if present {
                Ok(())
            } else {
                Err(ConfigError::new(path, format!("required by `{name}`")))
            }
        };
        match command {
            Command::Probe => {
                need(self.field.is_some(), "field")?;
                need(self.point.is_some(), "point")?;
            }
            Command::Scan => need(self.point.is_some(), "point")?,
            Command::Smooth => need(self.field.is_some() || self.map.is_some(), "field")?,
            Command::Fibrate => need(self.map.is_some(), "map")?,
            Command::Reeb => {
                need(self.field.is_some(), "field")?;
                need(self.level.is_some(), "level")?;
                need(self.band.is_some(), "band")?;
                if let Some(g) = &self.grid {
                    if !matches!(g, GridSpec::Default { .. }) {
                        return Err(ConfigError::new("grid.kind", "`reeb` uses the default grid rule"));
                    }
                }
            }
            Command::Selftest => {}
        }
        Ok(())
    }
}

fn positive(path: &str, x: f64) -> Result<(), ConfigError> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::new(path, format!("must be a finite number > 0, got {x}")))
    }
}

fn at_least(path: &str, x: usize, min: usize) -> Result<(), ConfigError> {
    if x >= min {
        Ok(())
    } else {
        Err(ConfigError::new(path, format!("must be at least {min}, got {x}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere_config(extra: &str) -> String {
        format!(r#"{{"manifold": {{"kind": "sphere", "dim": 2, "radius": 1.0}}{extra}}}"#)
    }

    #[test]
    fn negative_epsilon_is_located() {
        let c = RunConfig::from_json(&sphere_config(r#", "field": {"name": "height"}, "epsilon_ladder": [-0.1, 0.05]"#))
            .unwrap();
        let e = c.validate(Command::Smooth).unwrap_err();
        assert_eq!(e.path, "epsilon_ladder[0]");
    }

    #[test]
    fn type_errors_carry_their_path() {
        let e = RunConfig::from_json(&sphere_config(r#", "epsilon_ladder": [0.1, "x"]"#)).unwrap_err();
        assert_eq!(e.path, "epsilon_ladder[1]");
        let e = RunConfig::from_json(&sphere_config(r#", "sampling": {"tol_sing": 1e-4, "bogus": 1}"#)).unwrap_err();
        assert_eq!(e.path, "sampling.bogus");
    }

    #[test]
    fn missing_fields_are_named() {
        let c = RunConfig::from_json(&sphere_config("")).unwrap();
        assert_eq!(c.validate(Command::Probe).unwrap_err().path, "field");
        assert_eq!(c.validate(Command::Fibrate).unwrap_err().path, "map");
        assert!(c.validate(Command::Selftest).is_ok());
    }

    #[test]
    fn catalog_mismatches_are_config_errors() {
        let c = RunConfig::from_json(&sphere_config(r#", "map": {"name": "angle"}"#)).unwrap();
        assert_eq!(c.validate(Command::Fibrate).unwrap_err().path, "map");
        let c = RunConfig::from_json(&sphere_config(r#", "point": [1.0, 0.0]"#)).unwrap();
        assert_eq!(c.validate(Command::Scan).unwrap_err().path, "point");
    }
}
