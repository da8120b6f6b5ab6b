//! Explicit constructions: the 1-D potential realising a speed profile and
//! the planar function whose flow oscillates between the axes at infinity.

pub mod blend;
pub mod counterexample;
pub mod potential;
pub mod profile;

pub use blend::{blend, Blend};
pub use counterexample::{
    build_counterexample, flow_from_origin, CheckpointOptions, Counterexample2D,
};
pub use potential::{build_potential, GridOptions, Potential1D};
pub use profile::{
    build_profile, AlphaSpec, FnSpeed, Schedule, SchedulePolicy, ScheduleRow, SpeedFn,
    SpeedProfile,
};
