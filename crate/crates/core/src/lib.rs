//! Gluing trajectories and shadowing of pseudo-trajectories for piecewise
//! bijective maps.
//!
//! The crate builds true trajectories that glue a backward semi-trajectory to
//! a forward one, merges the true segments of a perturbed orbit level by level
//! (parallel gluing), and measures the resulting shadowing errors against the
//! closed-form bounds that follow from a summable gluing rate.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod averages;
pub mod config;
pub mod error;
pub mod gluing;
pub mod lemmas;
pub mod linalg;
pub mod maps;
pub mod output;
pub mod perturbation;
pub mod rate;
mod roots;
pub mod runner;
pub mod shadowing;
pub mod space;

pub use error::{Error, Result};
pub use gluing::{glue, glue_with, verify_gluing, GlueOptions, GluePolicy, GluingMode, GluingReport};
pub use maps::{HyperbolicAffine2D, Map, NeutralMap, PiecewiseBijectiveMap, PiecewiseLinearMap, TorusLinearMap};
pub use perturbation::{PerturbationKind, PerturbationSpec, PseudoTrajectory};
pub use rate::{RateForm, RateFunction, Side};
pub use roots::{solve_increasing, ROOT_TOL};
pub use shadowing::{consecutive_glue, parallel_glue, ShadowOptions, ShadowingReport};
pub use space::{distance, verify_trajectory, SpaceTag, State, TrajectoryWindow};

/// Default trajectory-defect tolerance.
pub const DEFECT_TOL: f64 = 1e-12;

/// Gaps at or below this value are treated as numerical noise, not
/// perturbations.
pub const GAP_THRESHOLD: f64 = 1e-12;
