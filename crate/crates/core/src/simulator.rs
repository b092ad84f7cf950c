//! The run loop: adapt `tau_n` and `h_n`, regrid, step, accumulate time.

use serde::{Serialize, Serializer};

use crate::grid::{
    build_grid, compute_h, grid_with_intervals, regrid, snapped_intervals, GridState,
};
use crate::params::{make_initial, InitialData, ParamError, SimParams};
use crate::scalar::{sup_norm, Scalar};
use crate::stepper::{step, StepError, StepResult};
use crate::summation::{compare_snapshots, ExactSum, SNAPSHOT_LEN};

/// `U^n` together with `t^n`, `n` and the step that produced it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolutionState<T> {
    pub u: Vec<T>,
    pub t: T,
    pub n: usize,
    /// `tau_{n-1}`; zero for the initial state.
    pub tau_last: T,
}

impl<T: Scalar> SolutionState<T> {
    pub fn initial(u: Vec<T>) -> Self {
        Self {
            u,
            t: T::zero(),
            n: 0,
            tau_last: T::zero(),
        }
    }

    /// State after a step of length `tau_n` that produced `u`.
    pub fn advanced(&self, u: Vec<T>, tau_n: T) -> Self {
        Self {
            u,
            t: self.t + tau_n,
            n: self.n + 1,
            tau_last: tau_n,
        }
    }

    pub fn sup_norm(&self) -> T {
        sup_norm(&self.u)
    }
}

/// One row of the run history.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepRecord<T> {
    pub n: usize,
    pub t: T,
    /// Leading components of the exact accumulated time; `t` is their
    /// rounded sum.
    #[serde(skip)]
    pub t_parts: [T; SNAPSHOT_LEN],
    /// Step that produced this state (zero for `n = 0`).
    pub tau_n: T,
    pub h_n: T,
    pub intervals: usize,
    pub sup_norm: T,
    pub u_m: T,
    pub u_m_minus_1: T,
    pub u_m_plus_1: T,
    /// Absent when `m < 2` (a grid with fewer than four intervals).
    pub u_m_minus_2: Option<T>,
    pub u_m_plus_2: Option<T>,
    #[serde(skip)]
    pub picard_iters: usize,
    #[serde(skip)]
    pub halvings: usize,
}

impl<T: Scalar> StepRecord<T> {
    fn capture(
        state: &SolutionState<T>,
        grid: &GridState<T>,
        t_parts: [T; SNAPSHOT_LEN],
        result: Option<&StepResult<T>>,
    ) -> Self {
        let m = grid.mid();
        let u = &state.u;
        let (minus2, plus2) = if m >= 2 {
            (Some(u[m - 2]), Some(u[m + 2]))
        } else {
            (None, None)
        };
        Self {
            n: state.n,
            t: state.t,
            t_parts,
            tau_n: state.tau_last,
            h_n: grid.h(),
            intervals: grid.intervals(),
            sup_norm: state.sup_norm(),
            u_m: u[m],
            u_m_minus_1: u[m - 1],
            u_m_plus_1: u[m + 1],
            u_m_minus_2: minus2,
            u_m_plus_2: plus2,
            picard_iters: result.map_or(0, |r| r.picard_iters),
            halvings: result.map_or(0, |r| r.halvings),
        }
    }

    /// Value at offset `-2..=2` from the peak index.
    pub fn offset(&self, k: i32) -> Option<T> {
        match k {
            -2 => self.u_m_minus_2,
            -1 => Some(self.u_m_minus_1),
            0 => Some(self.u_m),
            1 => Some(self.u_m_plus_1),
            2 => self.u_m_plus_2,
            _ => None,
        }
    }

    /// Whether this record lies strictly later than `earlier`, comparing the
    /// exact accumulated times.
    pub fn is_after(&self, earlier: &Self) -> bool {
        compare_snapshots(&self.t_parts, &earlier.t_parts) == std::cmp::Ordering::Greater
    }
}

/// Full profile at one step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Snapshot<T> {
    pub n: usize,
    pub t: T,
    pub x: Vec<T>,
    pub u: Vec<T>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct RunHistory<T> {
    pub records: Vec<StepRecord<T>>,
    pub snapshots: Vec<Snapshot<T>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RunStatus {
    BlewUp,
    BudgetExhausted,
    SolverError,
}

fn error_message<S: Serializer>(e: &Option<StepError>, s: S) -> Result<S::Ok, S::Error> {
    match e {
        Some(e) => s.serialize_some(&e.to_string()),
        None => s.serialize_none(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunOutcome<T> {
    pub status: RunStatus,
    #[serde(serialize_with = "error_message")]
    pub error: Option<StepError>,
    /// Sum of the accepted `tau_n`, rounded from an exact expansion.
    #[serde(rename = "T_num_partial")]
    pub t_num_partial: T,
    /// Geometric estimate of the steps not taken; only for blown-up runs.
    #[serde(rename = "T_num_tail")]
    pub t_num_tail: Option<T>,
    pub n_final: usize,
    pub initial_sup_norm: T,
    pub final_sup_norm: T,
    pub final_h: T,
    #[serde(skip)]
    pub final_state: SolutionState<T>,
    #[serde(skip)]
    pub final_grid: GridState<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunOptions {
    /// Store a full profile every `snapshot_every` steps (plus the last one); 0 disables.
    pub snapshot_every: usize,
}

/// Rough sup norm of the initial profile, used to pick the first grid.
fn initial_norm_estimate<T: Scalar>(initial: &InitialData<T>) -> T {
    match initial {
        InitialData::SineBump { amplitude } => amplitude.abs(),
        InitialData::Custom { samples } => {
            samples.iter().fold(T::zero(), |a, &(_, u)| a.max(u.abs()))
        }
    }
}

/// Validates `params` and samples `initial` on the grid chosen for its sup norm.
pub fn prepare<T: Scalar>(
    params: &SimParams<T>,
    initial: &InitialData<T>,
) -> Result<(SolutionState<T>, GridState<T>), ParamError> {
    params.validate().into_result()?;
    let est = initial_norm_estimate(initial);
    let h0 = if est > T::zero() {
        compute_h(params, est).map_err(|e| ParamError::Invalid(e.to_string()))?
    } else {
        params.h
    };
    let grid = build_grid(h0).map_err(|e| ParamError::Invalid(e.to_string()))?;
    let state = make_initial(params, initial, &grid)?;
    Ok((state, grid))
}

enum Stop {
    BlewUp,
    Budget,
    Reached,
    Failed(StepError),
}

struct Driver<'a, T> {
    params: &'a SimParams<T>,
    state: SolutionState<T>,
    grid: GridState<T>,
    time: ExactSum<T>,
}

impl<'a, T: Scalar> Driver<'a, T> {
    /// Regrids if the snapped target is finer than the current grid.
    fn adapt(&mut self) -> Result<(), StepError> {
        let sup = self.state.sup_norm();
        if sup <= T::zero() {
            return Ok(());
        }
        let k = snapped_intervals(compute_h(self.params, sup)?)?;
        if k > self.grid.intervals() {
            let fine = grid_with_intervals(k);
            self.state = regrid(&self.state, &self.grid, &fine)?;
            self.grid = fine;
        }
        Ok(())
    }

    /// Advances until blow-up, budget exhaustion, an error, or `until(state)`.
    fn drive(
        &mut self,
        mut until: impl FnMut(&SolutionState<T>) -> bool,
        mut observe: impl FnMut(&SolutionState<T>, &GridState<T>, &StepResult<T>, [T; SNAPSHOT_LEN]),
    ) -> Stop {
        loop {
            if self.state.sup_norm() >= self.params.blow_threshold {
                return Stop::BlewUp;
            }
            if until(&self.state) {
                return Stop::Reached;
            }
            if self.state.n >= self.params.max_steps {
                return Stop::Budget;
            }
            if let Err(e) = self.adapt() {
                return Stop::Failed(e);
            }
            match step(&self.state, &self.grid, self.params) {
                Ok(mut r) => {
                    self.time.add(r.tau_n);
                    r.next.t = self.time.value();
                    let prev = std::mem::replace(&mut self.state, r.next.clone());
                    observe(&prev, &self.grid, &r, self.time.snapshot());
                }
                Err(e) => return Stop::Failed(e),
            }
        }
    }
}

/// Runs to blow-up (or budget exhaustion, or a solver error).
pub fn run<T: Scalar>(
    params: &SimParams<T>,
    initial: &InitialData<T>,
    options: RunOptions,
) -> Result<(RunOutcome<T>, RunHistory<T>), ParamError> {
    run_with_observer(params, initial, options, |_, _, _| {})
}

/// As [`run`], calling `observer(previous_state, grid, step_result)` after every accepted step.
pub fn run_with_observer<T: Scalar>(
    params: &SimParams<T>,
    initial: &InitialData<T>,
    options: RunOptions,
    mut observer: impl FnMut(&SolutionState<T>, &GridState<T>, &StepResult<T>),
) -> Result<(RunOutcome<T>, RunHistory<T>), ParamError> {
    let (state, grid) = prepare(params, initial)?;
    let initial_sup_norm = state.sup_norm();
    let mut history = RunHistory {
        records: vec![StepRecord::capture(
            &state,
            &grid,
            [T::zero(); SNAPSHOT_LEN],
            None,
        )],
        snapshots: Vec::new(),
    };
    let every = options.snapshot_every;
    let snap = |s: &SolutionState<T>, g: &GridState<T>| Snapshot {
        n: s.n,
        t: s.t,
        x: g.nodes().to_vec(),
        u: s.u.clone(),
    };
    if every > 0 {
        history.snapshots.push(snap(&state, &grid));
    }
    let mut driver = Driver {
        params,
        state,
        grid,
        time: ExactSum::new(),
    };
    let stop = driver.drive(
        |_| false,
        |prev, grid, r, parts| {
            observer(prev, grid, r);
            history
                .records
                .push(StepRecord::capture(&r.next, grid, parts, Some(r)));
            if every > 0 && r.next.n % every == 0 {
                history.snapshots.push(snap(&r.next, grid));
            }
        },
    );
    if every > 0 && history.snapshots.last().map(|s| s.n) != Some(driver.state.n) {
        history.snapshots.push(snap(&driver.state, &driver.grid));
    }
    let (status, error) = match stop {
        Stop::BlewUp => (RunStatus::BlewUp, None),
        Stop::Budget | Stop::Reached => (RunStatus::BudgetExhausted, None),
        Stop::Failed(e) => (RunStatus::SolverError, Some(e)),
    };
    let mut outcome = RunOutcome {
        status,
        error,
        t_num_partial: driver.time.value(),
        t_num_tail: None,
        n_final: driver.state.n,
        initial_sup_norm,
        final_sup_norm: driver.state.sup_norm(),
        final_h: driver.grid.h(),
        final_state: driver.state,
        final_grid: driver.grid,
    };
    outcome.t_num_tail = tail_estimate(&outcome, params);
    Ok((outcome, history))
}

/// Two consecutive states bracketing a target time.
#[derive(Debug, Clone, PartialEq)]
pub struct Bracket<T> {
    pub before: SolutionState<T>,
    pub after: SolutionState<T>,
    pub grid: GridState<T>,
}

impl<T: Scalar> Bracket<T> {
    /// Linear interpolation in time between the bracketing states.
    pub fn at(&self, t: T) -> Vec<T> {
        let span = self.after.t - self.before.t;
        let w = if span > T::zero() {
            ((t - self.before.t) / span).max(T::zero()).min(T::one())
        } else {
            T::one()
        };
        self.before
            .u
            .iter()
            .zip(&self.after.u)
            .map(|(&a, &b)| a + w * (b - a))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RunUntilError {
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error("blow-up threshold reached at t = {0:e} before the target time")]
    BlewUpFirst(f64),
    #[error("step budget exhausted at t = {0:e} before the target time")]
    BudgetFirst(f64),
    #[error(transparent)]
    Solver(#[from] StepError),
    #[error("the grid was refined between the bracketing steps")]
    RegridInBracket,
}

/// Runs until `t^n >= t_end` and returns the states on either side of `t_end`.
pub fn run_until<T: Scalar>(
    params: &SimParams<T>,
    initial: &InitialData<T>,
    t_end: T,
) -> Result<Bracket<T>, RunUntilError> {
    let (state, grid) = prepare(params, initial)?;
    let mut driver = Driver {
        params,
        state: state.clone(),
        grid,
        time: ExactSum::new(),
    };
    let mut before = state;
    let mut before_k = driver.grid.intervals();
    let stop = driver.drive(
        |s| s.t >= t_end,
        |prev, g, _, _| {
            before = prev.clone();
            before_k = g.intervals();
        },
    );
    match stop {
        Stop::Reached => {
            if driver.state.n == 0 {
                return Ok(Bracket {
                    before: driver.state.clone(),
                    after: driver.state,
                    grid: driver.grid,
                });
            }
            if before_k != driver.grid.intervals() || before.u.len() != driver.state.u.len() {
                return Err(RunUntilError::RegridInBracket);
            }
            Ok(Bracket {
                before,
                after: driver.state,
                grid: driver.grid,
            })
        }
        Stop::BlewUp => Err(RunUntilError::BlewUpFirst(driver.state.t.to_f64_lossy())),
        Stop::Budget => Err(RunUntilError::BudgetFirst(driver.state.t.to_f64_lossy())),
        Stop::Failed(e) => Err(e.into()),
    }
}

/// `tau_last * r / (1 - r)` with `r = (1+tau)^{-(p-1)}`: the sum of the
/// remaining steps if `u_m` keeps growing by the limiting factor `1+tau`.
pub fn tail_estimate<T: Scalar>(outcome: &RunOutcome<T>, params: &SimParams<T>) -> Option<T> {
    if outcome.status != RunStatus::BlewUp {
        return None;
    }
    Some(geometric_tail(
        outcome.final_state.tau_last,
        params.tau,
        params.p,
    ))
}

pub fn geometric_tail<T: Scalar>(tau_last: T, tau: T, p: T) -> T {
    let r = (T::one() + tau).powf(-(p - T::one()));
    tau_last * r / (T::one() - r)
}
