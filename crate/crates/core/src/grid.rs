//! Adaptive time/space increments and uniform grids on `[-1, 1]`.

use thiserror::Error;

use crate::params::SimParams;
use crate::scalar::Scalar;
use crate::simulator::SolutionState;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("sup norm must be positive, got {0}")]
    NonPositiveNorm(f64),
    #[error("q = {0} >= 2 makes the space-step rule singular")]
    UnsupportedQ(f64),
    #[error("target spacing must lie in (0, 2], got {0}")]
    BadSpacing(f64),
    #[error("refusing to coarsen from {old} to {new} intervals")]
    Coarsening { old: usize, new: usize },
    #[error("state has {got} values, grid has {want} nodes")]
    SizeMismatch { got: usize, want: usize },
}

/// Uniform grid `x_j = -1 + j h_n`, `j = 0..=K`, with `K` even so `x_{K/2} = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridState<T> {
    h: T,
    intervals: usize,
    nodes: Vec<T>,
}

impl<T: Scalar> GridState<T> {
    /// Current spacing `h_n = 2/K`.
    pub fn h(&self) -> T {
        self.h
    }

    /// Number of intervals `K = N_n + 1`.
    pub fn intervals(&self) -> usize {
        self.intervals
    }

    /// Interior node count `N_n`.
    pub fn n_interior(&self) -> usize {
        self.intervals - 1
    }

    /// Middle index `m = (N_n + 1)/2`, the node at `x = 0`.
    pub fn mid(&self) -> usize {
        self.intervals / 2
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn x(&self, j: usize) -> T {
        self.nodes[j]
    }

    /// `lambda_n = tau_n / h_n^2`.
    pub fn mesh_ratio(&self, tau_n: T) -> T {
        tau_n / (self.h * self.h)
    }
}

/// `tau_n = tau * min(1, ||U^n||^(1-p))`.
pub fn compute_tau<T: Scalar>(params: &SimParams<T>, sup_norm: T) -> Result<T, GridError> {
    if !(sup_norm > T::zero()) {
        return Err(GridError::NonPositiveNorm(sup_norm.to_f64_lossy()));
    }
    let scale = sup_norm.powf(T::one() - params.p).min(T::one());
    Ok(params.tau * scale)
}

/// `min(h, (2 ||U^n||^(1-q))^(1/(2-q)))`, before snapping to an even interval count.
pub fn compute_h<T: Scalar>(params: &SimParams<T>, sup_norm: T) -> Result<T, GridError> {
    let two = T::lit(2.0);
    if !(params.q < two) {
        return Err(GridError::UnsupportedQ(params.q.to_f64_lossy()));
    }
    if !(sup_norm > T::zero()) {
        return Err(GridError::NonPositiveNorm(sup_norm.to_f64_lossy()));
    }
    let branch = (two * sup_norm.powf(T::one() - params.q)).powf(T::one() / (two - params.q));
    Ok(params.h.min(branch))
}

/// Smallest even `K` with `2/K <= h_target` (up to a relative slack of 1e-9
/// so exact divisors such as 0.05 or 4e-4 are not bumped by roundoff).
pub fn snapped_intervals<T: Scalar>(h_target: T) -> Result<usize, GridError> {
    if !(h_target > T::zero() && h_target <= T::lit(2.0)) {
        return Err(GridError::BadSpacing(h_target.to_f64_lossy()));
    }
    let ratio = 2.0 / h_target.to_f64_lossy();
    let mut k = (ratio * (1.0 - 1e-9)).ceil().max(1.0) as usize;
    if k % 2 == 1 {
        k += 1;
    }
    Ok(k)
}

/// Grid with `K = snapped_intervals(h_target)`.
pub fn build_grid<T: Scalar>(h_target: T) -> Result<GridState<T>, GridError> {
    Ok(grid_with_intervals(snapped_intervals(h_target)?))
}

/// Grid with exactly `k` intervals (`k` even, at least 2).
pub fn grid_with_intervals<T: Scalar>(k: usize) -> GridState<T> {
    assert!(
        k >= 2 && k % 2 == 0,
        "interval count must be even, got {}",
        k
    );
    let h = T::lit(2.0) / T::from_usize_lossy(k);
    let m = k / 2;
    let mut nodes = vec![T::zero(); k + 1];
    for j in 0..m {
        nodes[j] = -T::one() + T::from_usize_lossy(j) * h;
        nodes[k - j] = -nodes[j];
    }
    nodes[m] = T::zero();
    GridState {
        h,
        intervals: k,
        nodes,
    }
}

/// Transfers `state` onto the finer grid `new` by piecewise-linear interpolation.
///
/// Nodes shared by both grids, including the peak node `x = 0`, carry their
/// values over exactly. Mirror-symmetric states are interpolated on the left half and reflected.
pub fn regrid<T: Scalar>(
    state: &SolutionState<T>,
    old: &GridState<T>,
    new: &GridState<T>,
) -> Result<SolutionState<T>, GridError> {
    if state.u.len() != old.nodes.len() {
        return Err(GridError::SizeMismatch {
            got: state.u.len(),
            want: old.nodes.len(),
        });
    }
    if new.intervals < old.intervals {
        return Err(GridError::Coarsening {
            old: old.intervals,
            new: new.intervals,
        });
    }
    let k = new.intervals;
    let symmetric = is_mirror_symmetric(&state.u);
    let upto = if symmetric { new.mid() } else { k };
    // Node j of the new grid sits at old index j*K_old/K_new; integer
    // arithmetic keeps shared nodes exact.
    let (ko, kn) = (old.intervals, k);
    let mut u = vec![T::zero(); k + 1];
    for (j, slot) in u.iter_mut().enumerate().take(upto + 1) {
        let cell = j * ko / kn;
        let rem = j * ko % kn;
        *slot = if rem == 0 {
            state.u[cell]
        } else {
            let w = T::from_usize_lossy(rem) / T::from_usize_lossy(kn);
            let (u0, u1) = (state.u[cell], state.u[cell + 1]);
            u0 + w * (u1 - u0)
        };
    }
    if symmetric {
        for j in 0..new.mid() {
            u[k - j] = u[j];
        }
    }
    u[0] = T::zero();
    u[k] = T::zero();
    Ok(SolutionState {
        u,
        t: state.t,
        n: state.n,
        tau_last: state.tau_last,
    })
}

/// Bit-exact mirror symmetry `u_j == u_{K-j}`.
pub fn is_mirror_symmetric<T: Scalar>(u: &[T]) -> bool {
    let k = u.len() - 1;
    (0..u.len() / 2).all(|j| u[j] == u[k - j])
}
