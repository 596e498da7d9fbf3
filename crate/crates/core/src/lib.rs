//! Misalignment-aware Saleh-Valenzuela channel model for 60 GHz fixed
//! uplinks.
//!
//! The crate covers the full loop around a clustered multipath model:
//!
//! * [`geometry`]: total misalignment from elevation/azimuth offsets and the
//!   angular bins that select a parameter set,
//! * [`sv`] and [`registry`]: model primitives and the tabulated O2I/O2O
//!   parameter sets,
//! * [`simulator`]: impulse response and power delay profile generation,
//! * [`extraction`]: parameter estimation from measured or simulated
//!   profiles,
//! * [`metrics`]: RMS delay spread, correlation and two-sample K-S
//!   statistic,
//! * [`trace`] and [`paramfile`]: the on-disk formats.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod error;
pub mod extraction;
pub mod geometry;
pub mod metrics;
pub mod paramfile;
pub mod registry;
pub mod simulator;
pub mod sv;
pub mod trace;

pub use error::{Error, Result};
pub use geometry::{bin_for, total_misalignment, AngularPose, MisalignmentBin};
pub use metrics::{GofReport, Pdp};
pub use registry::{lookup_parameters, table_parameters, ParameterRegistry};
pub use simulator::SimConfig;
pub use sv::{Cir, RayTap, Scenario, SvParameterSet};
