//! Bounds on the numerical blow-up time `T_num = sum tau_n`.

use serde::Serialize;
use thiserror::Error;

use crate::params::SimParams;
use crate::scalar::Scalar;
use crate::simulator::{RunOutcome, RunStatus};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeBounds<T> {
    pub lambda: T,
    #[serde(rename = "T_num")]
    pub t_num: T,
    pub tail: T,
    /// Lower bound `1/((p-1) lambda^{p-1})` on the continuous blow-up time.
    pub g: T,
    /// Geometric upper bound; `None` when its ratio is not below 1.
    #[serde(rename = "T_star_star")]
    pub t_star_star: Option<T>,
    pub lower_ok: bool,
    pub upper_ok: Option<bool>,
    /// `g <= T_num + tail <= T**`.
    pub sandwich_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundsError {
    #[error("bounds need a blown-up run, status was {0:?}")]
    NotBlownUp(RunStatus),
}

pub fn g_lambda<T: Scalar>(p: T, lambda: T) -> T {
    T::one() / ((p - T::one()) * lambda.powf(p - T::one()))
}

/// `tau/lambda^{p-1} / (1 - rho^{p-1})` with
/// `rho = (1 + tau 2^{-q/(2-q)} lambda^{(q(1+p)-2p)/(2-q)}) / (1+tau)`.
pub fn t_star_star<T: Scalar>(p: T, q: T, tau: T, lambda: T) -> Option<T> {
    let one = T::one();
    let two = T::lit(2.0);
    let expo = (q * (one + p) - two * p) / (two - q);
    let rho = (one + tau * two.powf(-q / (two - q)) * lambda.powf(expo)) / (one + tau);
    let ratio = rho.powf(p - one);
    if !(ratio < one) || !ratio.is_finite() {
        return None;
    }
    Some(tau / lambda.powf(p - one) / (one - ratio))
}

/// Compares `T_num` of a blown-up run with `g(lambda)` and `T**`, taking
/// `lambda` as the initial peak value `u_m^0`.
pub fn blowup_time_bounds<T: Scalar>(
    outcome: &RunOutcome<T>,
    params: &SimParams<T>,
) -> Result<TimeBounds<T>, BoundsError> {
    if outcome.status != RunStatus::BlewUp {
        return Err(BoundsError::NotBlownUp(outcome.status));
    }
    let lambda = outcome.initial_sup_norm;
    let tail = outcome.t_num_tail.unwrap_or(T::zero());
    let total = outcome.t_num_partial + tail;
    let g = g_lambda(params.p, lambda);
    let tss = t_star_star(params.p, params.q, params.tau, lambda);
    let lower_ok = g <= total;
    let upper_ok = tss.map(|b| total <= b);
    Ok(TimeBounds {
        lambda,
        t_num: outcome.t_num_partial,
        tail,
        g,
        t_star_star: tss,
        lower_ok,
        upper_ok,
        sandwich_ok: lower_ok && upper_ok == Some(true),
    })
}
