//! One step of the semi-implicit scheme
//!
//! ```text
//! (u_j' - u_j)/tau_n = (u_{j+1}' - 2u_j' + u_{j-1}')/h_n^2 + u_j^p
//!                      - (2h_n)^{-q} |u_{j+1} - u_{j-1}|^{q-1} |u_{j+1}' - u_{j-1}'|
//! ```
//!
//! with `u_0 = u_{N+1} = 0`. Diffusion is implicit, the source explicit, and the
//! gradient term mixes levels: its weight comes from level `n`, the absolute
//! value from level `n+1`. The absolute value is linearised by freezing the sign
//! of `u_{j+1}' - u_{j-1}'` from level `n`, then checked against the solution;
//! if any sign was wrong the signs are re-frozen from the latest iterate
//! (Picard) until the pattern is self-consistent.

use thiserror::Error;

use crate::grid::{compute_tau, is_mirror_symmetric, GridError, GridState};
use crate::params::SimParams;
use crate::scalar::{signum0, sup_norm, Scalar};
use crate::simulator::SolutionState;
use crate::tridiag::{TriDiagError, TriDiagSystem};

/// Maximum number of times `tau_n` is halved when the matrix loses dominance.
pub const MAX_HALVINGS: usize = 20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StepError {
    #[error("matrix not diagonally dominant at row {row} (after {halvings} halvings of tau_n)")]
    Stiff { row: usize, halvings: usize },
    #[error("tridiagonal solve hit a zero pivot at row {0}")]
    Singular(usize),
    #[error("sign pattern of the gradient term did not settle within {0} Picard iterations")]
    NoPicardFixpoint(usize),
    #[error("negative value {value:e} at node {index}")]
    NegativeSolution { index: usize, value: f64 },
    #[error("value {value:e} at node {index} is at or above the blow-up threshold")]
    AboveThreshold { index: usize, value: f64 },
    #[error("non-finite value at node {0}")]
    NonFinite(usize),
    #[error("state has {got} values, grid has {want} nodes")]
    SizeMismatch { got: usize, want: usize },
    #[error(transparent)]
    Grid(#[from] GridError),
}

impl From<TriDiagError> for StepError {
    fn from(e: TriDiagError) -> Self {
        match e {
            TriDiagError::NotDominant { row } => StepError::Stiff { row, halvings: 0 },
            TriDiagError::Singular(i) => StepError::Singular(i),
            // Shapes are built here; a mismatch is a programming error.
            e @ TriDiagError::Shape { .. } => panic!("{e}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult<T> {
    pub next: SolutionState<T>,
    /// Extra solves after the first one.
    pub picard_iters: usize,
    /// Nodes whose frozen sign was contradicted by the first solve.
    pub sign_flips: usize,
    /// Time step actually used (after any halving).
    pub tau_n: T,
    /// `tau_n / h_n^2`.
    pub lambda_n: T,
    pub halvings: usize,
    /// Whether the mirror-symmetric half system was solved.
    pub symmetric_solve: bool,
}

/// Gradient-term weights `gamma_j = tau_n (2h)^{-q} |u_{j+1} - u_{j-1}|^{q-1}`
/// for interior nodes `j = 1..=N` (entry `j-1`).
pub fn gradient_weights<T: Scalar>(
    u: &[T],
    grid: &GridState<T>,
    params: &SimParams<T>,
    tau_n: T,
) -> Vec<T> {
    let n = grid.n_interior();
    let base = tau_n * (T::lit(2.0) * grid.h()).powf(-params.q);
    let expo = params.q - T::one();
    (1..=n)
        .map(|j| {
            if expo == T::zero() {
                base
            } else {
                base * (u[j + 1] - u[j - 1]).abs().powf(expo)
            }
        })
        .collect()
}

/// Signs `sgn(u_{j+1} - u_{j-1})` for `j = 1..=N`.
pub fn frozen_signs<T: Scalar>(u: &[T]) -> Vec<i8> {
    (1..u.len() - 1)
        .map(|j| signum0(u[j + 1] - u[j - 1]))
        .collect()
}

fn sign_as<T: Scalar>(s: i8) -> T {
    T::lit(f64::from(s))
}

/// Full `N x N` system for one step under the sign hypothesis `signs` (length `N`).
///
/// Row `j`: `(1+2l) u_j' - l (u_{j+1}' + u_{j-1}') + g_j s_j (u_{j+1}' - u_{j-1}') = u_j + tau_n u_j^p`.
pub fn assemble<T: Scalar>(
    state: &SolutionState<T>,
    grid: &GridState<T>,
    params: &SimParams<T>,
    tau_n: T,
    signs: &[i8],
) -> Result<TriDiagSystem<T>, StepError> {
    let gamma = gradient_weights(&state.u, grid, params, tau_n);
    let sys = assemble_with(
        &state.u,
        grid,
        params,
        tau_n,
        &gamma,
        signs,
        grid.n_interior(),
    );
    sys.check_dominance()?;
    Ok(sys)
}

/// Rows `j = 1..=rows`. With `rows == m` the last row uses the reflection
/// `u_{m+1}' = u_{m-1}'`, which cancels the gradient term at the peak.
fn assemble_with<T: Scalar>(
    u: &[T],
    grid: &GridState<T>,
    params: &SimParams<T>,
    tau_n: T,
    gamma: &[T],
    signs: &[i8],
    rows: usize,
) -> TriDiagSystem<T> {
    let n = grid.n_interior();
    let half = rows < n;
    let lam = grid.mesh_ratio(tau_n);
    let two = T::lit(2.0);
    let diag = vec![T::one() + two * lam; rows];
    let mut sub = Vec::with_capacity(rows.saturating_sub(1));
    let mut sup = Vec::with_capacity(rows.saturating_sub(1));
    let mut rhs = Vec::with_capacity(rows);
    for j in 1..=rows {
        rhs.push(u[j] + tau_n * u[j].powf(params.p));
        let gs = gamma[j - 1] * sign_as(signs[j - 1]);
        if j > 1 {
            if half && j == rows {
                sub.push(-two * lam);
            } else {
                sub.push(-lam - gs);
            }
        }
        if j < rows {
            sup.push(-lam + gs);
        }
    }
    TriDiagSystem {
        sub,
        diag,
        sup,
        rhs,
    }
}

struct Attempt<T> {
    u: Vec<T>,
    picard_iters: usize,
    sign_flips: usize,
}

/// Nodes where `gamma_j > 0` and the solution contradicts the assumed sign by more than `noise`.
fn contradictions<T: Scalar>(x: &[T], signs: &[i8], gamma: &[T], noise: T) -> usize {
    (1..x.len() - 1)
        .filter(|&j| {
            let d = x[j + 1] - x[j - 1];
            gamma[j - 1] > T::zero() && d.abs() > noise && signum0(d) != signs[j - 1]
        })
        .count()
}

fn solve_with_signs<T: Scalar>(
    u: &[T],
    grid: &GridState<T>,
    params: &SimParams<T>,
    tau_n: T,
    gamma: &[T],
    signs: &[i8],
    symmetric: bool,
) -> Result<Vec<T>, StepError> {
    let k = grid.intervals();
    let rows = if symmetric {
        grid.mid()
    } else {
        grid.n_interior()
    };
    let sys = assemble_with(u, grid, params, tau_n, gamma, signs, rows);
    sys.check_dominance()?;
    let interior = sys.solve()?;
    let mut x = vec![T::zero(); k + 1];
    x[1..=rows].copy_from_slice(&interior);
    if symmetric {
        for j in 1..grid.mid() {
            x[k - j] = x[j];
        }
    }
    Ok(x)
}

fn attempt<T: Scalar>(
    u: &[T],
    grid: &GridState<T>,
    params: &SimParams<T>,
    tau_n: T,
    symmetric: bool,
    noise: T,
) -> Result<Attempt<T>, StepError> {
    let gamma = gradient_weights(u, grid, params, tau_n);
    let mut signs = frozen_signs(u);
    let mut x = solve_with_signs(u, grid, params, tau_n, &gamma, &signs, symmetric)?;
    let sign_flips = contradictions(&x, &signs, &gamma, noise);
    let mut picard_iters = 0;
    if sign_flips > 0 {
        loop {
            if picard_iters >= params.picard_max_iters {
                return Err(StepError::NoPicardFixpoint(picard_iters));
            }
            signs = frozen_signs(&x);
            let next = solve_with_signs(u, grid, params, tau_n, &gamma, &signs, symmetric)?;
            picard_iters += 1;
            let change = next
                .iter()
                .zip(&x)
                .fold(T::zero(), |acc, (a, b)| acc.max((*a - *b).abs()));
            let settled = contradictions(&next, &signs, &gamma, noise) == 0;
            x = next;
            if settled && change <= noise {
                break;
            }
        }
    }
    Ok(Attempt {
        u: x,
        picard_iters,
        sign_flips,
    })
}

/// Advances `state` by one step on `grid`.
pub fn step<T: Scalar>(
    state: &SolutionState<T>,
    grid: &GridState<T>,
    params: &SimParams<T>,
) -> Result<StepResult<T>, StepError> {
    let u = &state.u;
    if u.len() != grid.nodes().len() {
        return Err(StepError::SizeMismatch {
            got: u.len(),
            want: grid.nodes().len(),
        });
    }
    if let Some(i) = u.iter().position(|v| !v.is_finite()) {
        return Err(StepError::NonFinite(i));
    }
    if let Some(i) = u.iter().position(|&v| v >= params.blow_threshold) {
        return Err(StepError::AboveThreshold {
            index: i,
            value: u[i].to_f64_lossy(),
        });
    }
    let k = grid.intervals();
    let sup = sup_norm(u);
    if sup == T::zero() {
        // Zero is a fixed point; tau_n falls back to the base step.
        let tau_n = params.tau;
        return Ok(StepResult {
            next: state.advanced(vec![T::zero(); k + 1], tau_n),
            picard_iters: 0,
            sign_flips: 0,
            tau_n,
            lambda_n: grid.mesh_ratio(tau_n),
            halvings: 0,
            symmetric_solve: true,
        });
    }
    let tau_rule = compute_tau(params, sup)?;
    let symmetric = is_mirror_symmetric(u);
    let scale = sup.max(T::one());
    let noise = params.picard_tol.max(T::noise_floor()) * scale;

    let mut tau_n = tau_rule;
    let mut last_row = 0;
    for halvings in 0..=MAX_HALVINGS {
        match attempt(u, grid, params, tau_n, symmetric, noise) {
            Ok(mut a) => {
                for (i, v) in a.u.iter_mut().enumerate() {
                    if !v.is_finite() {
                        return Err(StepError::NonFinite(i));
                    }
                    if *v < T::zero() {
                        if -*v <= noise {
                            *v = T::zero();
                        } else {
                            return Err(StepError::NegativeSolution {
                                index: i,
                                value: v.to_f64_lossy(),
                            });
                        }
                    }
                }
                return Ok(StepResult {
                    next: state.advanced(a.u, tau_n),
                    picard_iters: a.picard_iters,
                    sign_flips: a.sign_flips,
                    tau_n,
                    lambda_n: grid.mesh_ratio(tau_n),
                    halvings,
                    symmetric_solve: symmetric,
                });
            }
            Err(StepError::Stiff { row, .. }) => {
                last_row = row;
                tau_n = tau_n / T::lit(2.0);
            }
            Err(e) => return Err(e),
        }
    }
    Err(StepError::Stiff {
        row: last_row,
        halvings: MAX_HALVINGS,
    })
}

/// Relative residual of the peak-row balance
/// `(1+2l) u_m' - 2l u_{m-1}' = (1 + tau_n u_m^{p-1}) u_m`, which every step on
/// symmetric data satisfies because the gradient term cancels at `x = 0`.
pub fn midpoint_identity_residual<T: Scalar>(
    prev: &[T],
    next: &[T],
    grid: &GridState<T>,
    params: &SimParams<T>,
    tau_n: T,
) -> T {
    let m = grid.mid();
    let lam = grid.mesh_ratio(tau_n);
    let two = T::lit(2.0);
    let lhs = (T::one() + two * lam) * next[m] - two * lam * next[m - 1];
    let rhs = (T::one() + tau_n * prev[m].powf(params.p - T::one())) * prev[m];
    (lhs - rhs).abs() / rhs.abs().max(T::one())
}
