//! Numerical lab for the invasion of a sexually reproducing population with
//! an evolving dispersal trait: an explicit solver for the nonlocal
//! reaction-diffusion model, front and trait diagnostics, and the
//! asymptotic profiles they are compared against.

// `!(v > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod io;
pub mod params;
pub mod reproduction;
pub mod stepper;

pub use error::{Error, Result};
pub use grid::{build_grid, init_field, population_size, DensityVector, Field, Grid};
pub use params::{InitKind, Params, Preset, RightBoundary};
pub use reproduction::{FastReproduction, ReproductionMethod, SegregationKernel};
pub use stepper::{run, run_observed, Model, RunEvent, RunOutput, SimState, Snapshot};
pub use asymptotics::{critical_y, FrontSolution, PrefactorExponent, SeriesOptions};
