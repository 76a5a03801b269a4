//! LP and mixed-integer LP solving for moderately sized models.
//!
//! The crate provides four pieces that compose into a small but complete
//! MILP toolchain:
//!
//! * [`MilpModel`]: a sparse maximization model with bounded continuous and
//!   binary columns;
//! * [`solve_lp`]: a two-phase bounded-variable revised simplex for the LP
//!   relaxation, with dual values;
//! * [`solve_milp`]: best-bound branch and bound with depth-first plunging,
//!   deterministic for a fixed model and limits;
//! * [`export_mps`] / [`import_mps`]: fixed-format MPS with exact numeric
//!   round-trip, for interoperating with external solvers.
//!
//! Everything is pure Rust with no solver dependencies, and all tolerances
//! are centralized in [`Tolerances`].

pub mod bnb;
pub mod model;
pub mod mps;
pub mod simplex;

pub use bnb::{solve_milp, BnbStats, MilpOutcome, MilpStatus, SolveLimits};
pub use model::{MilpModel, ModelError, RowSense};
pub use mps::{export_mps, export_mps_string, import_mps, MpsError};
pub use simplex::{solve_lp, LpSolution, LpStatus, Tolerances};
