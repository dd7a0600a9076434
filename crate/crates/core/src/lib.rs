//! Quasi-homogeneous thermodynamic potentials and the conformal
//! representation-change metrics built on them.
//!
//! * [`expr`] parses potentials and differentiates them exactly.
//! * [`systems`] holds the built-in black-hole systems and the system file format.
//! * [`homogeneity`] detects and verifies per-variable scaling weights.
//! * [`geometry`] builds the base metric, the induced representation metrics
//!   and their conformal factors.

// `!(x <= tol)` is deliberate: NaN must fail the check.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod exec;
pub mod expr;
pub mod geometry;
pub mod homogeneity;
pub mod linalg;
pub mod scan;
pub mod systems;

pub use error::{Error, Result};
pub use exec::ExecMode;
pub use expr::{parse, Expression, Params, Point, Symbols};
pub use geometry::{BilinearForm, Chi, ConformalReport, MetricSpec};
pub use homogeneity::{HomogeneityReport, Status, WeightAssignment};
pub use systems::ThermoSystem;
