//! Adaptive finite-difference solver for `u_t = u_xx + u^p - |u_x|^q` on
//! `(-1, 1)` with zero boundary values, plus tools to study numerical blow-up.
//!
//! Everything is generic over [`Scalar`] (`f32` or `f64`); the `*64` aliases
//! below are what most callers want.

pub mod analysis;
pub mod config;
pub mod grid;
pub mod io;
pub mod params;
pub mod scalar;
pub mod simulator;
pub mod stepper;
pub mod summation;
pub mod tridiag;

pub use grid::{build_grid, compute_h, compute_tau, regrid, GridError, GridState};
pub use params::{
    make_initial, validate, InitialData, ParamError, Regime, SimParams, ValidationReport,
};
pub use scalar::Scalar;
pub use simulator::{
    run, run_until, run_with_observer, tail_estimate, RunHistory, RunOptions, RunOutcome,
    RunStatus, SolutionState, StepRecord,
};
pub use stepper::{assemble, step, StepError, StepResult};
pub use summation::ExactSum;
pub use tridiag::{TriDiagError, TriDiagSystem};

pub type SimParams64 = SimParams<f64>;
pub type SimParams32 = SimParams<f32>;
pub type InitialData64 = InitialData<f64>;
pub type GridState64 = GridState<f64>;
pub type SolutionState64 = SolutionState<f64>;
pub type RunHistory64 = RunHistory<f64>;
pub type RunOutcome64 = RunOutcome<f64>;
