use thiserror::Error;

/// Errors raised by the geometry, sampling, smoothing and fibration layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// The two points do not admit a unique minimal geodesic at the working tolerance.
    #[error("cut locus ambiguity: distance {distance} is within tolerance of the cut locus")]
    CutLocusAmbiguity { distance: f64 },

    #[error("domain violation: {0}")]
    DomainViolation(String),

    #[error("unsupported dimension {0}")]
    UnsupportedDim(usize),

    #[error("insufficient samples: {discarded} of {drawn} points flagged non-differentiable")]
    InsufficientSamples { drawn: usize, discarded: usize },

    #[error("image of the sampling ball leaves the convex target ball (distance {distance}, radius {radius})")]
    TargetBallViolation { distance: f64, radius: f64 },

    #[error("min-norm point did not converge after {iterations} iterations (best norm {best_norm})")]
    NonConvergence { iterations: usize, best_norm: f64 },

    #[error("cover failed to reach the test grid after {iterations} centers")]
    CoverageFailure { iterations: usize },

    #[error("unsupported target manifold: {0}")]
    UnsupportedTarget(String),

    #[error("smoothed value escapes the tubular neighborhood at {point:?} (distance {distance}, tube {tube_radius})")]
    TubeEscape {
        point: Vec<f64>,
        distance: f64,
        tube_radius: f64,
    },

    #[error("hypothesis failure at step {step}: {detail}")]
    HypothesisFailure { step: u8, detail: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
