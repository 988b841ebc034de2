//! Pilot-pattern design and evaluation for TDD time-frequency grids.
//!
//! The crate builds hopping pilot patterns on a `k x k` slot/subband grid,
//! scores their geometry (coverage radius, modular-line collinearity,
//! virtual-domain coherence), constructs minimum-coverage patterns with
//! collinearity control by exact branch-and-bound, and validates patterns
//! end-to-end with a synthetic sparse delay-Doppler channel simulator and a
//! FISTA-based sliding-window recovery pipeline.
//!
//! Module map:
//! - [`pattern`]: pilot patterns, feasibility checks, baseline constructions.
//! - [`geometry`]: grid metric, coverage reports, modular lines, coherence
//!   maps, and the legacy block-hopping correlation kernel.
//! - [`solver`]: two-stage exact optimizer and LP-format model export.
//! - [`sim`]: sparse delay-Doppler channels and windowed pilot observations.
//! - [`recovery`]: FISTA with support refinement and latest-slot scoring.
//! - [`harness`]: cyclic-shift evaluation protocol, sweeps, comparisons.
//! - [`io`]: pattern files, observation bundles, CSV/JSON reports.

pub mod error;
pub mod geometry;
pub mod harness;
pub mod io;
pub mod pattern;
pub mod recovery;
pub mod sim;
pub mod solver;

pub use error::{Error, Result};
pub use pattern::{baseline_3gpp, baseline_chirp, baseline_random, GridDims, PilotPattern};
