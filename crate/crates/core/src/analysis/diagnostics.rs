//! Behaviour of the peak ratio `a_n = u_{m-1}/u_m` and of the peak growth
//! `u_m^{n+1}/u_m^n` near blow-up.
//!
//! In the single-node regime `a_n` decreases to zero with `a_{n+1}/a_n -> 1/(1+tau)`,
//! and the peak grows by `1+tau` per step.

use serde::Serialize;

use crate::params::{Regime, SimParams};
use crate::scalar::Scalar;
use crate::simulator::RunHistory;

/// Length of the window used for the limit means.
pub const LIMIT_WINDOW: usize = 50;
/// Length of the window over which `a_n` must decrease strictly.
pub const MONOTONE_WINDOW: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepDiagnostics<T> {
    pub n: usize,
    pub a_n: T,
    /// `a_{n+1}/a_n`; absent for the last record and across a regrid.
    pub ratio_a: Option<T>,
    /// `u_m^{n+1}/u_m^n`; absent for the last record.
    pub growth: Option<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowSummary<T> {
    pub steps: usize,
    pub growth_mean: T,
    pub growth_target: T,
    pub growth_rel_dev: T,
    pub ratio_a_mean: T,
    pub ratio_a_target: T,
    pub ratio_a_rel_dev: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeakDiagnostics<T> {
    pub regime: Regime,
    /// False outside the single-node regime or when the run stopped short of the threshold.
    pub applicable: bool,
    pub note: String,
    pub steps: Vec<StepDiagnostics<T>>,
    pub final_window: Option<WindowSummary<T>>,
    /// Number of trailing transitions checked for strict decrease of `a_n`.
    pub monotone_window: usize,
    pub a_strictly_decreasing: bool,
    /// First step in the window at which `a_{n+1} >= a_n`.
    pub first_increase: Option<usize>,
    pub sup_u_m_minus_1: T,
    /// `3(1+tau)/h^2` evaluated at the final spacing.
    pub sup_condition_threshold: T,
    pub sup_condition_observed: bool,
    pub growth_ok: bool,
    pub ratio_a_ok: bool,
}

impl<T: Scalar> PeakDiagnostics<T> {
    pub fn passes(&self) -> bool {
        self.applicable && self.growth_ok && self.ratio_a_ok && self.a_strictly_decreasing
    }
}

fn mean<T: Scalar>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |a, &x| a + x) / T::from_usize_lossy(v.len().max(1))
}

pub fn peak_ratio_diagnostics<T: Scalar>(
    history: &RunHistory<T>,
    params: &SimParams<T>,
) -> PeakDiagnostics<T> {
    let regime = params.regime();
    let recs = &history.records;
    let sup_u_m_minus_1 = recs.iter().fold(T::zero(), |a, r| a.max(r.u_m_minus_1));
    let h_last = recs.last().map_or(params.h, |r| r.h_n);
    let sup_condition_threshold = T::lit(3.0) * (T::one() + params.tau) / (h_last * h_last);
    let mut report = PeakDiagnostics {
        regime,
        applicable: false,
        note: String::new(),
        steps: Vec::new(),
        final_window: None,
        monotone_window: 0,
        a_strictly_decreasing: false,
        first_increase: None,
        sup_u_m_minus_1,
        sup_condition_threshold,
        sup_condition_observed: sup_u_m_minus_1 > sup_condition_threshold,
        growth_ok: false,
        ratio_a_ok: false,
    };
    if regime != Regime::SingleNode {
        report.note =
            format!("limits are stated for p > 2, q < 2(p-1)/p only; regime is {regime:?}");
        return report;
    }
    let reached = recs
        .last()
        .is_some_and(|r| r.sup_norm >= params.blow_threshold);
    if !reached {
        report.note = "run did not reach the blow-up threshold".into();
        return report;
    }
    report.applicable = true;

    report.steps = recs
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let next = recs.get(i + 1);
            let a = r.u_m_minus_1 / r.u_m;
            StepDiagnostics {
                n: r.n,
                a_n: a,
                ratio_a: next
                    .filter(|s| s.intervals == r.intervals)
                    .map(|s| (s.u_m_minus_1 / s.u_m) / a),
                growth: next.map(|s| s.u_m / r.u_m),
            }
        })
        .collect();

    let last = report.steps.len() - 1;
    let start = last.saturating_sub(LIMIT_WINDOW);
    let window = &report.steps[start..last];
    let growth: Vec<T> = window.iter().filter_map(|d| d.growth).collect();
    let ratio: Vec<T> = window.iter().filter_map(|d| d.ratio_a).collect();
    let one = T::one();
    let g_target = one + params.tau;
    let r_target = one / g_target;
    let (g_mean, r_mean) = (mean(&growth), mean(&ratio));
    let summary = WindowSummary {
        steps: window.len(),
        growth_mean: g_mean,
        growth_target: g_target,
        growth_rel_dev: (g_mean - g_target).abs() / g_target,
        ratio_a_mean: r_mean,
        ratio_a_target: r_target,
        ratio_a_rel_dev: (r_mean - r_target).abs() / r_target,
    };
    report.growth_ok = !growth.is_empty() && summary.growth_rel_dev < T::lit(0.01);
    report.ratio_a_ok = !ratio.is_empty() && summary.ratio_a_rel_dev < T::lit(0.02);
    report.final_window = Some(summary);

    let mstart = last.saturating_sub(MONOTONE_WINDOW);
    report.monotone_window = last - mstart;
    report.first_increase = (mstart..last)
        .find(|&i| report.steps[i + 1].a_n >= report.steps[i].a_n)
        .map(|i| report.steps[i].n);
    report.a_strictly_decreasing =
        report.monotone_window == MONOTONE_WINDOW && report.first_increase.is_none();
    report
}
