//! Numerical nonsmooth analysis on built-in Riemannian manifolds.
//!
//! The crate estimates Clarke generalized gradients and differentials of
//! Lipschitz maps, decides singularity through min-norm points of sampled
//! convex hulls, builds mollifier smoothings glued by a partition of unity,
//! and checks the submersion and Reeb-type consequences numerically.
//!
//! Module map:
//!
//! * [`manifold`]: closed-form geometry (distance, exp/log, transport, Jacobi
//!   fields) and ball quadrature.
//! * [`clarke`]: gradient sampling, min-norm points, singularity verdicts.
//! * [`smoothing`]: covers, partitions of unity, mollifiers, global smoothing.
//! * [`fibration`]: embeddings, tubular projections, submersion certificates.
//! * [`experiments`]: the field catalog and the scan scenarios.

pub mod clarke;
pub mod error;
pub mod experiments;
pub mod fibration;
pub mod manifold;
pub mod sampling;
pub mod smoothing;

pub use error::{Error, Result};
pub use manifold::{Frame, Manifold, Point, Tangent};
