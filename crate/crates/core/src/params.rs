//! Run parameters, admissibility checks and initial data.

use serde::Serialize;
use thiserror::Error;

use crate::grid::GridState;
use crate::scalar::Scalar;
use crate::simulator::SolutionState;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamError {
    #[error("invalid parameters: {0}")]
    Invalid(String),
    #[error("initial data violates {assumption}: {detail}")]
    InitialData {
        assumption: &'static str,
        detail: String,
    },
}

/// Immutable contract of a single run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimParams<T> {
    /// Source exponent, `p > 1`.
    pub p: T,
    /// Gradient exponent, `1 <= q <= 2p/(p+1)`.
    pub q: T,
    /// Base time-step parameter.
    pub tau: T,
    /// Base (largest) space step, `0 < h <= 2`.
    pub h: T,
    /// Amplitude of the sine-bump initial profile.
    pub lambda: T,
    /// Sup norm at which the run is declared blown up.
    pub blow_threshold: T,
    pub max_steps: usize,
    pub picard_tol: T,
    pub picard_max_iters: usize,
}

impl<T: Scalar> Default for SimParams<T> {
    fn default() -> Self {
        Self {
            p: T::lit(3.0),
            q: T::one(),
            tau: T::lit(0.1),
            h: T::lit(0.05),
            lambda: T::lit(10.0),
            blow_threshold: T::lit(1e12),
            max_steps: 100_000,
            picard_tol: T::lit(1e-12),
            picard_max_iters: 50,
        }
    }
}

impl<T: Scalar> SimParams<T> {
    /// Upper end `2p/(p+1)` of the admissible `q` range.
    pub fn q_max(&self) -> T {
        let two = T::lit(2.0);
        two * self.p / (self.p + T::one())
    }

    /// `2(p-1)/p`, the boundary between the single-node and open regimes.
    pub fn q_single_node_bound(&self) -> T {
        T::lit(2.0) * (self.p - T::one()) / self.p
    }

    pub fn regime(&self) -> Regime {
        let one = T::one();
        let two = T::lit(2.0);
        if self.p == two && self.q == one {
            Regime::MultiNode
        } else if self.p > two && self.q < self.q_single_node_bound() {
            Regime::SingleNode
        } else if self.p > one
            && self.p < two
            && self.q >= self.q_single_node_bound()
            && self.q < self.q_max()
        {
            Regime::Open
        } else {
            Regime::Uncovered
        }
    }

    /// `h < 1/(1+tau)`, the hypothesis needed for divergence next to the peak.
    pub fn neighbour_blowup_condition(&self) -> bool {
        self.h < T::one() / (T::one() + self.tau)
    }

    /// Space step the adaptive rule reaches at `blow_threshold`.
    ///
    /// Running with this as the base `h` keeps the grid fixed for the whole
    /// run, so node indices near the peak keep their meaning.
    pub fn fixed_grid_h(&self) -> T {
        crate::grid::compute_h(self, self.blow_threshold).unwrap_or(self.h)
    }

    pub fn with_h(mut self, h: T) -> Self {
        self.h = h;
        self
    }

    /// One-line `key=value` rendering used as a header in every output file.
    pub fn describe(&self) -> String {
        format!(
            "p={} q={} tau={} h={} lambda={} blow_threshold={:e} max_steps={} picard_tol={:e} picard_max_iters={}",
            self.p,
            self.q,
            self.tau,
            self.h,
            self.lambda,
            self.blow_threshold,
            self.max_steps,
            self.picard_tol,
            self.picard_max_iters
        )
    }

    pub fn validate(&self) -> ValidationReport {
        validate(self)
    }
}

/// Which blow-up-set statement applies to a `(p, q)` pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `p = 2, q = 1`: the peak and its two neighbours blow up, `m±2` stay bounded.
    MultiNode,
    /// `p > 2, q < 2(p-1)/p`: only the peak blows up.
    SingleNode,
    /// `1 < p < 2, 2(p-1)/p <= q < 2p/(p+1)`: boundedness next to the peak is unknown.
    Open,
    /// No statement covers these exponents.
    Uncovered,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
    /// Whether `h < 1/(1+tau)` holds.
    pub neighbour_blowup_condition: bool,
    pub regime: Regime,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn into_result(self) -> Result<Self, ParamError> {
        if self.is_ok() {
            Ok(self)
        } else {
            let msg = self
                .failures()
                .map(|c| format!("{}: {}", c.name, c.detail))
                .collect::<Vec<_>>()
                .join("; ");
            Err(ParamError::Invalid(msg))
        }
    }
}

/// Checks every admissibility condition. Never panics, also on NaN input.
pub fn validate<T: Scalar>(params: &SimParams<T>) -> ValidationReport {
    let one = T::one();
    let zero = T::zero();
    let mut checks = Vec::new();
    let mut push = |name: &'static str, passed: bool, detail: String| {
        checks.push(Check {
            name,
            passed,
            detail,
        })
    };

    push("p > 1", params.p > one, format!("p = {}", params.p));
    let q_max = params.q_max();
    push(
        "1 <= q <= 2p/(p+1)",
        params.q >= one && params.q <= q_max,
        format!("q = {}, 2p/(p+1) = {}", params.q, q_max),
    );
    push(
        "tau > 0",
        params.tau > zero,
        format!("tau = {}", params.tau),
    );
    push(
        "0 < h <= 2",
        params.h > zero && params.h <= T::lit(2.0),
        format!("h = {}", params.h),
    );
    push(
        "lambda > 0",
        params.lambda > zero,
        format!("lambda = {}", params.lambda),
    );
    push(
        "blow_threshold > 1",
        params.blow_threshold > one,
        format!("blow_threshold = {:e}", params.blow_threshold),
    );
    let thr_pow = params.blow_threshold.powf(params.p);
    push(
        "blow_threshold^p finite",
        thr_pow.is_finite(),
        format!("blow_threshold^p = {:e}", thr_pow),
    );
    push(
        "picard_tol > 0",
        params.picard_tol > zero,
        format!("picard_tol = {:e}", params.picard_tol),
    );
    push(
        "picard_max_iters >= 1",
        params.picard_max_iters >= 1,
        format!("picard_max_iters = {}", params.picard_max_iters),
    );

    let mut warnings = Vec::new();
    let regime = params.regime();
    let cond = params.neighbour_blowup_condition();
    if regime == Regime::MultiNode && !cond {
        warnings.push(format!(
            "h = {} does not satisfy h < 1/(1+tau) = {}; divergence at x_(m±1) is not guaranteed",
            params.h,
            one / (one + params.tau)
        ));
    }
    if params.lambda > zero && params.lambda <= T::lit(10.0) {
        warnings.push(format!(
            "lambda = {} is not large; the blow-up analysis assumes ||u0|| >> 1",
            params.lambda
        ));
    }

    ValidationReport {
        checks,
        neighbour_blowup_condition: cond,
        regime,
        warnings,
    }
}

/// Initial profile on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialData<T> {
    /// `lambda * sin(pi (x+1) / 2)`, evaluated as `lambda * cos(pi x / 2)`.
    SineBump { amplitude: T },
    /// Piecewise-linear interpolant of `(x, u0)` samples with strictly increasing `x`.
    Custom { samples: Vec<(T, T)> },
}

impl<T: Scalar> InitialData<T> {
    pub fn sine(amplitude: T) -> Self {
        Self::SineBump { amplitude }
    }

    pub fn eval(&self, x: T) -> T {
        match self {
            Self::SineBump { amplitude } => *amplitude * (T::FRAC_PI_2() * x).cos(),
            Self::Custom { samples } => interp_table(samples, x),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::SineBump { .. } => "sine",
            Self::Custom { .. } => "custom",
        }
    }
}

fn interp_table<T: Scalar>(samples: &[(T, T)], x: T) -> T {
    let k = samples.partition_point(|&(xs, _)| xs < x);
    if k == 0 {
        return samples[0].1;
    }
    if k == samples.len() {
        return samples[k - 1].1;
    }
    let (x0, u0) = samples[k - 1];
    let (x1, u1) = samples[k];
    if x == x1 {
        return u1;
    }
    let w = (x - x0) / (x1 - x0);
    u0 + w * (u1 - u0)
}

fn check_table<T: Scalar>(samples: &[(T, T)]) -> Result<(), ParamError> {
    let fail = |assumption, detail: String| Err(ParamError::InitialData { assumption, detail });
    if samples.len() < 3 {
        return fail(
            "nonnegative nontrivial data",
            format!("{} samples, need at least 3", samples.len()),
        );
    }
    if samples
        .iter()
        .any(|&(x, u)| !x.is_finite() || !u.is_finite())
    {
        return fail("nonnegative nontrivial data", "non-finite sample".into());
    }
    if samples.windows(2).any(|w| w[1].0 <= w[0].0) {
        return fail(
            "nonnegative nontrivial data",
            "x values must be strictly increasing".into(),
        );
    }
    let (first, last) = (samples[0], samples[samples.len() - 1]);
    if first.0 != -T::one() || last.0 != T::one() {
        return fail(
            "zero boundary values",
            format!("table must span [-1, 1], got [{}, {}]", first.0, last.0),
        );
    }
    Ok(())
}

/// Samples the initial profile on `grid` and checks it on the nodes: finite,
/// nonnegative and not constant, mirror-symmetric, strictly increasing towards
/// `x = 0`, zero at both ends, and with a peak above 1.
pub fn make_initial<T: Scalar>(
    params: &SimParams<T>,
    initial: &InitialData<T>,
    grid: &GridState<T>,
) -> Result<SolutionState<T>, ParamError> {
    if let InitialData::Custom { samples } = initial {
        check_table(samples)?;
    }
    let k = grid.intervals();
    let m = grid.mid();
    let mut u: Vec<T> = grid.nodes().iter().map(|&x| initial.eval(x)).collect();
    if let InitialData::Custom { samples } = initial {
        let (l, r) = (samples[0].1, samples[samples.len() - 1].1);
        if l != T::zero() || r != T::zero() {
            return Err(ParamError::InitialData {
                assumption: "zero boundary values",
                detail: format!("u0(-1) = {}, u0(1) = {}", l, r),
            });
        }
    }
    u[0] = T::zero();
    u[k] = T::zero();

    if u.iter().any(|v| !v.is_finite() || *v < T::zero()) {
        return Err(ParamError::InitialData {
            assumption: "nonnegative nontrivial data",
            detail: "initial data must be finite and nonnegative".into(),
        });
    }
    let sup = crate::scalar::sup_norm(&u);
    if u.iter().all(|&v| v == u[0]) {
        return Err(ParamError::InitialData {
            assumption: "nonnegative nontrivial data",
            detail: "initial data is constant on the grid".into(),
        });
    }
    let sym_tol = T::noise_floor() * sup;
    for j in 0..=m {
        if (u[j] - u[k - j]).abs() > sym_tol {
            return Err(ParamError::InitialData {
                assumption: "mirror symmetry",
                detail: format!(
                    "u0({}) = {} but u0({}) = {}",
                    grid.x(j),
                    u[j],
                    grid.x(k - j),
                    u[k - j]
                ),
            });
        }
    }
    // Make the mirror image exact so the symmetric solve applies.
    for j in 0..m {
        u[k - j] = u[j];
    }
    if let Some(j) = (1..=m).find(|&j| u[j] <= u[j - 1]) {
        return Err(ParamError::InitialData {
            assumption: "monotone profile",
            detail: format!("not strictly increasing at x = {}", grid.x(j)),
        });
    }
    if sup <= T::one() {
        return Err(ParamError::InitialData {
            assumption: "peak above 1",
            detail: format!("||u0|| = {} must exceed 1", sup),
        });
    }
    let _ = params;
    Ok(SolutionState::initial(u))
}
