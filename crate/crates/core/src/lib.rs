//! Numerical laboratory for subgradient flows of convex functions.
//!
//! The crate integrates curves `γ' ∈ -∂f(γ)` with the proximal-point scheme and
//! builds checks on top of them:
//!
//! - [`convex`]: the [`ConvexFn`] interface, proximal maps, minimal-norm
//!   subgradients, Moreau envelopes and a catalog of functions with known
//!   asymptotic data.
//! - [`flow`]: implicit Euler integration and flow-level diagnostics
//!   (contraction, energy identity, straight-line motion).
//! - [`asymptotics`]: slopes, three estimators of the Crandall–Pazy direction
//!   and cosmic secants of diverging curves.
//! - [`constructions`]: a convex potential realising a prescribed speed
//!   profile, and a planar convex function whose flow oscillates between the
//!   two axes at infinity.
//! - [`determination`]: executable checks of "equal slopes and equal
//!   Crandall–Pazy directions imply equality up to a constant".

pub mod asymptotics;
pub mod constructions;
pub mod convex;
pub mod determination;
pub mod error;
pub mod flow;
pub mod point;
pub mod probes;
pub mod quadrature;

pub use asymptotics::{CpEstimate, CpMethod, SecantConfig, SecantSet};
pub use constructions::{Counterexample2D, Potential1D, Schedule, SpeedProfile};
pub use convex::catalog::{Catalog, CatalogEntry};
pub use convex::ConvexFn;
pub use determination::{DeterminationConfig, DeterminationReport, Verdict};
pub use error::{Error, Result};
pub use flow::{FlowConfig, StepPolicy, Trajectory};
pub use point::Point;
