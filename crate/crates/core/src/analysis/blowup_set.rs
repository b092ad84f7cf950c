//! Which nodes next to the peak blow up.
//!
//! Limits `n -> infinity` can only be judged at a finite threshold, so each
//! verdict is a heuristic over the final stretch of the run in which the peak
//! grew by at least [`PEAK_GROWTH`]:
//!
//! * `Bounded`: the value moved by less than [`DRIFT`] (relative) over that stretch.
//! * `BlowsUp`: the value moved by at least [`DRIFT`], is increasing, and either
//!   grows geometrically (final value above `sqrt(threshold)` and mean per-step
//!   factor above `1 + tau/2`) or keeps a sustained increment (the second half
//!   of the stretch adds at least half as much as the first half).
//! * `Undetermined` otherwise.
//!
//! The second `BlowsUp` branch covers divergence that is only arithmetic,
//! which is what happens next to the peak when `p = 2, q = 1`.

use serde::Serialize;
use thiserror::Error;

use crate::params::{Regime, SimParams};
use crate::scalar::Scalar;
use crate::simulator::{RunHistory, StepRecord};

/// Minimal growth of `u_m` across the judged window.
pub const PEAK_GROWTH: f64 = 100.0;
/// Relative change separating `Bounded` from moving values.
pub const DRIFT: f64 = 0.01;
/// Relative tolerance for the symmetry check between offsets `-k` and `+k`.
pub const SYMMETRY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    BlowsUp,
    Bounded,
    Undetermined,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TheoryStatus {
    /// Theory predicts the verdicts in `expected`.
    Predicted,
    /// The exponents lie in the range where boundedness next to the peak is open.
    UndeterminedByTheory,
    /// The `p = 2, q = 1` statement needs `h < 1/(1+tau)`, which fails here.
    HypothesisFails,
    /// No statement covers these exponents.
    NoStatement,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OffsetEvidence<T> {
    pub offset: i32,
    pub verdict: Verdict,
    pub expected: Option<Verdict>,
    pub initial_value: T,
    pub window_start_value: T,
    pub final_value: T,
    pub relative_drift: T,
    /// Geometric mean of the per-step factor over the window.
    pub growth_per_step: T,
    /// Second-half increment over first-half increment.
    pub increment_ratio: Option<T>,
    pub rule: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlowupReport<T> {
    pub regime: Regime,
    pub theory: TheoryStatus,
    pub window_start_n: usize,
    pub window_steps: usize,
    pub peak_growth_over_window: T,
    /// False when `u_m` never grew by the required factor, so no offset can be judged bounded.
    pub window_complete: bool,
    pub offsets: Vec<OffsetEvidence<T>>,
    /// Whether every predicted verdict was observed; `None` without a prediction.
    pub matches_theory: Option<bool>,
}

impl<T> BlowupReport<T> {
    pub fn verdict(&self, offset: i32) -> Option<Verdict> {
        self.offsets
            .iter()
            .find(|o| o.offset == offset)
            .map(|o| o.verdict)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClassifyError {
    #[error("run stopped at sup norm {0:e}, below the blow-up threshold")]
    NotBlownUp(f64),
    #[error("history is not symmetric at step {n}, offset {offset}")]
    Asymmetric { n: usize, offset: i32 },
    #[error("history needs at least two records")]
    TooShort,
}

fn expected<T: Scalar>(params: &SimParams<T>) -> (TheoryStatus, [Option<Verdict>; 3]) {
    use Verdict::*;
    match params.regime() {
        Regime::MultiNode if params.neighbour_blowup_condition() => (
            TheoryStatus::Predicted,
            [Some(BlowsUp), Some(BlowsUp), Some(Bounded)],
        ),
        Regime::MultiNode => (
            TheoryStatus::HypothesisFails,
            [Some(BlowsUp), None, Some(Bounded)],
        ),
        Regime::SingleNode => (
            TheoryStatus::Predicted,
            [Some(BlowsUp), Some(Bounded), Some(Bounded)],
        ),
        Regime::Open => (
            TheoryStatus::UndeterminedByTheory,
            [Some(BlowsUp), None, None],
        ),
        Regime::Uncovered => (TheoryStatus::NoStatement, [Some(BlowsUp), None, None]),
    }
}

fn judge<T: Scalar>(
    series: &[T],
    window_complete: bool,
    threshold: T,
    tau: T,
) -> (Verdict, T, T, Option<T>, String) {
    let (v0, v1) = (series[0], series[series.len() - 1]);
    let steps = T::from_usize_lossy(series.len() - 1);
    let drift = if v1 == v0 {
        T::zero()
    } else {
        (v1 - v0).abs() / v1.abs().max(v0.abs())
    };
    let growth = if v0 > T::zero() && v1 > T::zero() {
        (v1 / v0).powf(T::one() / steps)
    } else {
        T::one()
    };
    let mid = series[series.len() / 2];
    let (inc1, inc2) = (mid - v0, v1 - mid);
    let inc_ratio = (inc1 > T::zero()).then(|| inc2 / inc1);

    if window_complete && drift < T::lit(DRIFT) {
        let rule = format!(
            "relative drift {:.3e} < {DRIFT} while u_m grew >= {PEAK_GROWTH}x",
            drift.to_f64_lossy()
        );
        return (Verdict::Bounded, drift, growth, inc_ratio, rule);
    }
    if drift >= T::lit(DRIFT) && v1 > v0 {
        if v1 > threshold.sqrt() && growth > T::one() + tau / T::lit(2.0) {
            let rule = format!(
                "value {:.3e} > sqrt(threshold), per-step factor {:.4} > 1 + tau/2",
                v1.to_f64_lossy(),
                growth.to_f64_lossy()
            );
            return (Verdict::BlowsUp, drift, growth, inc_ratio, rule);
        }
        if let Some(r) = inc_ratio {
            if inc2 > T::zero() && r >= T::lit(0.5) {
                let rule = format!(
                    "sustained increase: drift {:.3e}, second-half/first-half increment {:.3}",
                    drift.to_f64_lossy(),
                    r.to_f64_lossy()
                );
                return (Verdict::BlowsUp, drift, growth, inc_ratio, rule);
            }
        }
    }
    (
        Verdict::Undetermined,
        drift,
        growth,
        inc_ratio,
        "neither criterion met".into(),
    )
}

/// Classifies offsets `0, ±1, ±2` from the peak of a blown-up symmetric run.
pub fn classify_blowup_set<T: Scalar>(
    history: &RunHistory<T>,
    params: &SimParams<T>,
) -> Result<BlowupReport<T>, ClassifyError> {
    let recs = &history.records;
    if recs.len() < 2 {
        return Err(ClassifyError::TooShort);
    }
    let last = recs[recs.len() - 1];
    if last.sup_norm < params.blow_threshold {
        return Err(ClassifyError::NotBlownUp(last.sup_norm.to_f64_lossy()));
    }
    let tol = T::lit(SYMMETRY_TOL);
    for r in recs {
        let scale = r.sup_norm.max(T::one());
        for k in 1..=2 {
            let (a, b) = (r.offset(-k), r.offset(k));
            let ok = match (a, b) {
                (Some(a), Some(b)) => (a - b).abs() <= tol * scale,
                (None, None) => true,
                _ => false,
            };
            if !ok {
                return Err(ClassifyError::Asymmetric { n: r.n, offset: k });
            }
        }
    }

    let growth_needed = T::lit(PEAK_GROWTH);
    let start = (0..recs.len() - 1)
        .rev()
        .find(|&i| last.u_m / recs[i].u_m >= growth_needed);
    let window_complete = start.is_some();
    let start = start.unwrap_or(0);
    let window: &[StepRecord<T>] = &recs[start..];

    let (theory, exp) = expected(params);
    let mut offsets = Vec::new();
    for k in [-2, -1, 0, 1, 2] {
        let series: Option<Vec<T>> = window.iter().map(|r| r.offset(k)).collect();
        let Some(series) = series else { continue };
        let idx = k.unsigned_abs() as usize;
        let (verdict, drift, growth, inc_ratio, rule) = if k == 0 {
            let (_, d, g, ir, _) =
                judge(&series, window_complete, params.blow_threshold, params.tau);
            (
                Verdict::BlowsUp,
                d,
                g,
                ir,
                "peak reached the blow-up threshold".to_string(),
            )
        } else {
            judge(&series, window_complete, params.blow_threshold, params.tau)
        };
        offsets.push(OffsetEvidence {
            offset: k,
            verdict,
            expected: exp[idx],
            initial_value: recs[0].offset(k).unwrap_or(T::zero()),
            window_start_value: series[0],
            final_value: series[series.len() - 1],
            relative_drift: drift,
            growth_per_step: growth,
            increment_ratio: inc_ratio,
            rule,
        });
    }
    let predicted: Vec<_> = offsets.iter().filter(|o| o.expected.is_some()).collect();
    let matches_theory = (theory == TheoryStatus::Predicted
        || theory == TheoryStatus::HypothesisFails)
        .then(|| predicted.iter().all(|o| o.expected == Some(o.verdict)));
    Ok(BlowupReport {
        regime: params.regime(),
        theory,
        window_start_n: recs[start].n,
        window_steps: recs.len() - 1 - start,
        peak_growth_over_window: last.u_m / recs[start].u_m,
        window_complete,
        offsets,
        matches_theory,
    })
}
