//! Reference solvers and invariant checks for the test suites.
//!
//! The reference solvers use dense linear algebra and never call into the
//! stepper or the tridiagonal solver they are compared against.

use cw_core::grid::GridState;
use cw_core::simulator::{RunHistory, StepRecord};
use cw_core::stepper::StepResult;
use cw_core::SolutionState;

/// Dense Gaussian elimination with partial pivoting.
pub fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut s = b[row];
        for k in row + 1..n {
            s -= a[row][k] * x[k];
        }
        x[row] = s / a[row][row];
    }
    x
}

/// Residual of the nonlinear step with the absolute value kept:
/// `(1+2l) x_j - l (x_{j+1} + x_{j-1}) + g_j |x_{j+1} - x_{j-1}| - u_j - t u_j^p`
/// for interior `j`, with `x` including zero boundary entries.
pub fn nonlinear_residual(u: &[f64], x: &[f64], h: f64, tau_n: f64, p: f64, q: f64) -> Vec<f64> {
    let lam = tau_n / (h * h);
    let n = u.len() - 2;
    (1..=n)
        .map(|j| {
            let g = tau_n * (2.0 * h).powf(-q) * (u[j + 1] - u[j - 1]).abs().powf(q - 1.0);
            (1.0 + 2.0 * lam) * x[j] - lam * (x[j + 1] + x[j - 1]) + g * (x[j + 1] - x[j - 1]).abs()
                - u[j]
                - tau_n * u[j].powf(p)
        })
        .collect()
}

/// Solves the nonlinear step by semismooth Newton on the full system, one
/// dense solve per iteration. The map is piecewise linear, so the iteration
/// stops once the active sign pattern is right.
pub fn newton_step(u: &[f64], h: f64, tau_n: f64, p: f64, q: f64) -> Vec<f64> {
    let n = u.len() - 2;
    let lam = tau_n / (h * h);
    let mut x = u.to_vec();
    for _ in 0..100 {
        let r = nonlinear_residual(u, &x, h, tau_n, p, q);
        let mut jac = vec![vec![0.0; n]; n];
        for j in 1..=n {
            let g = tau_n * (2.0 * h).powf(-q) * (u[j + 1] - u[j - 1]).abs().powf(q - 1.0);
            let d = x[j + 1] - x[j - 1];
            let s = if d > 0.0 {
                1.0
            } else if d < 0.0 {
                -1.0
            } else {
                0.0
            };
            jac[j - 1][j - 1] = 1.0 + 2.0 * lam;
            if j > 1 {
                jac[j - 1][j - 2] = -lam - g * s;
            }
            if j < n {
                jac[j - 1][j] = -lam + g * s;
            }
        }
        let dx = dense_solve(jac, r.iter().map(|v| -v).collect());
        let mut change: f64 = 0.0;
        for j in 1..=n {
            x[j] += dx[j - 1];
            change = change.max(dx[j - 1].abs());
        }
        let scale = x.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        if change <= 1e-15 * scale {
            break;
        }
    }
    x
}

/// Collects violations of the per-step structural invariants.
#[derive(Debug, Default)]
pub struct InvariantChecker {
    pub steps: usize,
    pub violations: Vec<String>,
}

pub const SYMMETRY_TOL: f64 = 1e-10;

impl InvariantChecker {
    fn fail(&mut self, msg: String) {
        if self.violations.len() < 20 {
            self.violations.push(msg);
        }
    }

    /// Checks the state produced by one step.
    pub fn observe(
        &mut self,
        _prev: &SolutionState<f64>,
        grid: &GridState<f64>,
        r: &StepResult<f64>,
    ) {
        self.steps += 1;
        let u = &r.next.u;
        let n = r.next.n;
        let k = grid.intervals();
        let m = grid.mid();
        let scale = r.next.sup_norm().max(1.0);
        if u.len() != k + 1 {
            self.fail(format!(
                "step {n}: {} values on a grid of {} nodes",
                u.len(),
                k + 1
            ));
            return;
        }
        if u[0] != 0.0 || u[k] != 0.0 {
            self.fail(format!("step {n}: boundary values {} {}", u[0], u[k]));
        }
        if let Some(j) = u.iter().position(|v| !(*v >= 0.0)) {
            self.fail(format!("step {n}: u[{j}] = {}", u[j]));
        }
        let asym = (0..=m).map(|j| (u[j] - u[k - j]).abs()).fold(0.0, f64::max);
        if asym > SYMMETRY_TOL * scale {
            self.fail(format!("step {n}: asymmetry {asym:e}"));
        }
        if let Some(j) = (1..=m).find(|&j| u[j] < u[j - 1]) {
            self.fail(format!(
                "step {n}: u[{j}] = {} < u[{}] = {}",
                u[j],
                j - 1,
                u[j - 1]
            ));
        }
        if u[m] != r.next.sup_norm() {
            self.fail(format!("step {n}: peak not at the middle node"));
        }
    }

    /// Checks the time, step and spacing sequences of the history.
    pub fn check_history(&mut self, history: &RunHistory<f64>) {
        let recs: &[StepRecord<f64>] = &history.records;
        for w in recs.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            if !b.is_after(a) {
                self.fail(format!("step {}: time did not increase", b.n));
            }
            if b.h_n > a.h_n {
                self.fail(format!(
                    "step {}: h_n grew from {} to {}",
                    b.n, a.h_n, b.h_n
                ));
            }
        }
        // tau_n comes from ||U^n||, so it may only grow if the norm shrank.
        for w in recs.windows(3) {
            let (a, b, c) = (&w[0], &w[1], &w[2]);
            if a.sup_norm >= 1.0 && b.sup_norm >= a.sup_norm && c.tau_n > b.tau_n {
                self.fail(format!("step {}: tau_n grew while the norm grew", c.n));
            }
        }
    }

    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn summary(&self) -> String {
        if self.ok() {
            format!("{} steps clean", self.steps)
        } else {
            format!(
                "{} steps, violations: {}",
                self.steps,
                self.violations.join("; ")
            )
        }
    }
}
