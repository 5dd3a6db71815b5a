//! Benchmark toolkit for MILP reoptimization.
//!
//! The crate provides the building blocks for evaluating solvers on series of
//! closely related mixed integer linear programs:
//!
//! - [`model`] — in-memory MILP representation, solution evaluation and
//!   feasibility checking;
//! - [`mps`] — reading and writing instances in MPS format;
//! - [`simgen`] — deterministic generation of 50-instance series by controlled
//!   perturbation of a base instance, plus the selection metrics used to pick
//!   suitable candidates;
//! - [`score`] — the per-instance scoring function (`reltime + gap + nofeas`),
//!   ranking across teams and the weighted final score;
//! - [`harness`] — drives an external solver process over a series under the
//!   sequential protocol and records outcomes;
//! - [`reopt`] — a minimal reference solver that carries primal solutions
//!   across the instances of a series and speaks the harness protocol;
//! - [`oracle`] — an exhaustive enumeration solver for desk-scale instances,
//!   used both as a verification oracle and as the default backend.

pub mod harness;
pub mod model;
pub mod mps;
pub mod oracle;
pub mod reopt;
pub mod score;
pub mod simgen;
pub mod solfile;

pub(crate) mod serde_util;
