//! Post-processing of run histories: peak-ratio diagnostics, blow-up set
//! classification, blow-up time bounds and grid-refinement studies.

pub mod blowup_set;
pub mod convergence;
pub mod diagnostics;
pub mod time_bounds;

pub use blowup_set::{
    classify_blowup_set, BlowupReport, ClassifyError, OffsetEvidence, TheoryStatus, Verdict,
};
pub use convergence::{
    convergence_study, grid_error, ConvergenceCase, ConvergenceError, ConvergenceReport,
};
pub use diagnostics::{peak_ratio_diagnostics, PeakDiagnostics, StepDiagnostics, WindowSummary};
pub use time_bounds::{blowup_time_bounds, g_lambda, t_star_star, BoundsError, TimeBounds};

use crate::scalar::Scalar;

/// Least-squares slope of `y` against `x`.
pub fn ls_slope<T: Scalar>(x: &[T], y: &[T]) -> T {
    let n = T::from_usize_lossy(x.len());
    let mx = x.iter().fold(T::zero(), |a, &v| a + v) / n;
    let my = y.iter().fold(T::zero(), |a, &v| a + v) / n;
    let (mut sxy, mut sxx) = (T::zero(), T::zero());
    for (&a, &b) in x.iter().zip(y) {
        sxy = sxy + (a - mx) * (b - my);
        sxx = sxx + (a - mx) * (a - mx);
    }
    sxy / sxx
}
