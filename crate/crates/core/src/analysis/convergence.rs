//! Grid-refinement study against a finer self-solution.
//!
//! Each level and a reference run `REFERENCE_FACTOR` times finer than the
//! finest level are advanced to `T_check`, interpolated linearly in time, and
//! compared at the level's nodes. The observed order is the least-squares
//! slope of `log E` against `log h`.

use serde::Serialize;
use thiserror::Error;

use super::ls_slope;
use crate::grid::GridState;
use crate::params::{InitialData, SimParams};
use crate::scalar::Scalar;
use crate::simulator::{run, run_until, Bracket, RunOptions, RunStatus, RunUntilError};

pub const REFERENCE_FACTOR: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ConvergenceCase {
    /// `p > 2, q < 2(p-1)/p`: order `3 - q` on nodes `1..=m-2`.
    A,
    /// `q = 1`: order 2 on nodes `1..=m-1`.
    B,
}

impl ConvergenceCase {
    pub fn for_params<T: Scalar>(params: &SimParams<T>) -> Option<Self> {
        if params.q == T::one() && params.p > T::one() {
            Some(Self::B)
        } else if params.p > T::lit(2.0) && params.q < params.q_single_node_bound() {
            Some(Self::A)
        } else {
            None
        }
    }

    pub fn expected_order<T: Scalar>(self, q: T) -> T {
        match self {
            Self::A => T::lit(3.0) - q,
            Self::B => T::lit(2.0),
        }
    }

    /// How many nodes next to the peak are excluded from the comparison.
    fn peak_gap(self) -> usize {
        match self {
            Self::A => 2,
            Self::B => 1,
        }
    }

    pub fn range_label(self) -> &'static str {
        match self {
            Self::A => "1..m-2",
            Self::B => "1..m-1",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport<T> {
    pub case: ConvergenceCase,
    #[serde(rename = "T_check")]
    pub t_check: T,
    pub levels: Vec<T>,
    pub errors: Vec<T>,
    pub reference_h: T,
    /// `E_k / E_{k+1}` for consecutive levels.
    pub reduction_factors: Vec<T>,
    pub fitted_order: T,
    pub expected_order: T,
    pub compared_range: &'static str,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConvergenceError {
    #[error("need at least 3 grid levels, got {0}")]
    TooFewLevels(usize),
    #[error("each level must halve the previous spacing ({prev} -> {next})")]
    NotHalving { prev: f64, next: f64 },
    #[error("exponents p = {p}, q = {q} are outside both refinement cases")]
    Unsupported { p: f64, q: f64 },
    #[error("grid with {level} intervals is not nested in the reference grid with {reference}")]
    NonNested { level: usize, reference: usize },
    #[error("T_check = {t_check:e} lies beyond blow-up on the grid with h = {h}")]
    BeyondBlowup { t_check: f64, h: f64 },
    #[error("T_check must be positive, got {0:e}")]
    BadCheckTime(f64),
    #[error("run on h = {h} failed: {message}")]
    Run { h: f64, message: String },
}

/// Max over the compared nodes of `|u_j - u_ref(x_j)|`; `ref_grid` must be a
/// refinement of `grid`.
pub fn grid_error<T: Scalar>(
    u: &[T],
    grid: &GridState<T>,
    u_ref: &[T],
    ref_grid: &GridState<T>,
    case: ConvergenceCase,
) -> Result<T, ConvergenceError> {
    let (k, kr) = (grid.intervals(), ref_grid.intervals());
    if kr < k || kr % k != 0 {
        return Err(ConvergenceError::NonNested {
            level: k,
            reference: kr,
        });
    }
    let stride = kr / k;
    let last = grid.mid().saturating_sub(case.peak_gap());
    Ok((1..=last).fold(T::zero(), |acc, j| {
        acc.max((u[j] - u_ref[j * stride]).abs())
    }))
}

fn bracket<T: Scalar>(
    params: &SimParams<T>,
    initial: &InitialData<T>,
    h: T,
    t_check: T,
) -> Result<Bracket<T>, ConvergenceError> {
    run_until(&params.with_h(h), initial, t_check).map_err(|e| match e {
        RunUntilError::BlewUpFirst(_) => ConvergenceError::BeyondBlowup {
            t_check: t_check.to_f64_lossy(),
            h: h.to_f64_lossy(),
        },
        other => ConvergenceError::Run {
            h: h.to_f64_lossy(),
            message: other.to_string(),
        },
    })
}

/// Default check time: half the blow-up time on the coarsest level.
pub fn default_t_check<T: Scalar>(
    params: &SimParams<T>,
    initial: &InitialData<T>,
    coarsest_h: T,
) -> Result<T, ConvergenceError> {
    let run_err = |message: String| ConvergenceError::Run {
        h: coarsest_h.to_f64_lossy(),
        message,
    };
    let (out, _) = run(&params.with_h(coarsest_h), initial, RunOptions::default())
        .map_err(|e| run_err(e.to_string()))?;
    if out.status != RunStatus::BlewUp {
        return Err(run_err(format!("coarsest run ended with {:?}", out.status)));
    }
    Ok(out.t_num_partial / T::lit(2.0))
}

/// Runs the study on the sine bump of amplitude `params.lambda`.
///
/// `t_check = None` uses [`default_t_check`]. Levels and the reference run concurrently.
pub fn convergence_study<T: Scalar>(
    params: &SimParams<T>,
    t_check: Option<T>,
    levels: &[T],
) -> Result<ConvergenceReport<T>, ConvergenceError> {
    let case = ConvergenceCase::for_params(params).ok_or(ConvergenceError::Unsupported {
        p: params.p.to_f64_lossy(),
        q: params.q.to_f64_lossy(),
    })?;
    if levels.len() < 3 {
        return Err(ConvergenceError::TooFewLevels(levels.len()));
    }
    for w in levels.windows(2) {
        let ratio = w[0] / w[1];
        if (ratio - T::lit(2.0)).abs() > T::lit(1e-9) {
            return Err(ConvergenceError::NotHalving {
                prev: w[0].to_f64_lossy(),
                next: w[1].to_f64_lossy(),
            });
        }
    }
    let initial = InitialData::sine(params.lambda);
    let t_check = match t_check {
        Some(t) => t,
        None => default_t_check(params, &initial, levels[0])?,
    };
    if !(t_check > T::zero()) {
        return Err(ConvergenceError::BadCheckTime(t_check.to_f64_lossy()));
    }
    let reference_h = levels[levels.len() - 1] / T::from_usize_lossy(REFERENCE_FACTOR);

    let mut hs: Vec<T> = levels.to_vec();
    hs.push(reference_h);
    let results: Vec<Result<Bracket<T>, ConvergenceError>> = std::thread::scope(|s| {
        let handles: Vec<_> = hs
            .iter()
            .map(|&h| {
                let initial = &initial;
                s.spawn(move || bracket(params, initial, h, t_check))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("level thread panicked"))
            .collect()
    });
    let mut brackets = Vec::with_capacity(results.len());
    for r in results {
        brackets.push(r?);
    }
    let reference = brackets.pop().expect("reference bracket");
    let u_ref = reference.at(t_check);
    let mut errors = Vec::with_capacity(levels.len());
    for b in &brackets {
        errors.push(grid_error(
            &b.at(t_check),
            &b.grid,
            &u_ref,
            &reference.grid,
            case,
        )?);
    }
    let logs_h: Vec<T> = brackets.iter().map(|b| b.grid.h().ln()).collect();
    let logs_e: Vec<T> = errors.iter().map(|e| e.ln()).collect();
    let reduction_factors = errors.windows(2).map(|w| w[0] / w[1]).collect();
    Ok(ConvergenceReport {
        case,
        t_check,
        levels: brackets.iter().map(|b| b.grid.h()).collect(),
        errors,
        reference_h: reference.grid.h(),
        reduction_factors,
        fitted_order: ls_slope(&logs_h, &logs_e),
        expected_order: case.expected_order(params.q),
        compared_range: case.range_label(),
    })
}
