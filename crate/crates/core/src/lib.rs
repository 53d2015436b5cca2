//! Homogeneous Ricci flow through the bracket flow.
//!
//! A homogeneous space with isotropy dimension `q` and dimension `n` is
//! encoded as a skew-symmetric bracket on a fixed `(q + n)`-dimensional space
//! with a fixed inner product. The crate computes its Ricci operator,
//! integrates the bracket flow, detects finite-time singularities and checks
//! the curvature and growth estimates that hold along the flow.

pub mod algebra;
pub mod catalog;
pub mod curvature;
pub mod error;
pub mod flow;
pub mod integrator;
pub mod io;
pub mod metric_flow;
pub mod verify;

pub use algebra::{bracket_norm, check_conditions, pi_action, scale_bracket, Dimensions, LieBracket};
pub use error::{Error, Result};
