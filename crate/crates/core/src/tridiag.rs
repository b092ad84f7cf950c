//! Tridiagonal systems and the Thomas algorithm.

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TriDiagError {
    #[error("zero pivot at row {0}")]
    Singular(usize),
    #[error("row {row} is not strictly diagonally dominant")]
    NotDominant { row: usize },
    #[error("inconsistent band lengths: sub {sub}, diag {diag}, sup {sup}, rhs {rhs}")]
    Shape {
        sub: usize,
        diag: usize,
        sup: usize,
        rhs: usize,
    },
}

/// `A x = rhs` with `A` tridiagonal.
///
/// Row `i` reads `sub[i-1] x[i-1] + diag[i] x[i] + sup[i] x[i+1] = rhs[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TriDiagSystem<T> {
    pub sub: Vec<T>,
    pub diag: Vec<T>,
    pub sup: Vec<T>,
    pub rhs: Vec<T>,
}

impl<T: Scalar> TriDiagSystem<T> {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    fn check_shape(&self) -> Result<(), TriDiagError> {
        let n = self.diag.len();
        let off = n.saturating_sub(1);
        if self.sub.len() != off || self.sup.len() != off || self.rhs.len() != n {
            return Err(TriDiagError::Shape {
                sub: self.sub.len(),
                diag: n,
                sup: self.sup.len(),
                rhs: self.rhs.len(),
            });
        }
        Ok(())
    }

    /// `|diag_i| > |sub_{i-1}| + |sup_i|` on every row.
    pub fn check_dominance(&self) -> Result<(), TriDiagError> {
        self.check_shape()?;
        let n = self.len();
        for i in 0..n {
            let left = if i > 0 {
                self.sub[i - 1].abs()
            } else {
                T::zero()
            };
            let right = if i + 1 < n {
                self.sup[i].abs()
            } else {
                T::zero()
            };
            if !(self.diag[i].abs() > left + right) {
                return Err(TriDiagError::NotDominant { row: i });
            }
        }
        Ok(())
    }

    /// Thomas algorithm. Stable without pivoting for dominant systems.
    pub fn solve(&self) -> Result<Vec<T>, TriDiagError> {
        self.check_shape()?;
        let n = self.len();
        if n == 0 {
            return Ok(Vec::new());
        }
        let mut c = vec![T::zero(); n];
        let mut d = vec![T::zero(); n];
        let mut pivot = self.diag[0];
        if pivot == T::zero() {
            return Err(TriDiagError::Singular(0));
        }
        if n > 1 {
            c[0] = self.sup[0] / pivot;
        }
        d[0] = self.rhs[0] / pivot;
        for i in 1..n {
            pivot = self.diag[i] - self.sub[i - 1] * c[i - 1];
            if pivot == T::zero() || !pivot.is_finite() {
                return Err(TriDiagError::Singular(i));
            }
            if i + 1 < n {
                c[i] = self.sup[i] / pivot;
            }
            d[i] = (self.rhs[i] - self.sub[i - 1] * d[i - 1]) / pivot;
        }
        for i in (0..n - 1).rev() {
            d[i] = d[i] - c[i] * d[i + 1];
        }
        Ok(d)
    }

    /// `max_i |(A x - rhs)_i|`.
    pub fn residual(&self, x: &[T]) -> T {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut r = self.diag[i] * x[i] - self.rhs[i];
                if i > 0 {
                    r = r + self.sub[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    r = r + self.sup[i] * x[i + 1];
                }
                r.abs()
            })
            .fold(T::zero(), T::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_by_three_by_substitution() {
        let sys = TriDiagSystem {
            sub: vec![-1.0, -1.0],
            diag: vec![2.0, 2.0, 2.0],
            sup: vec![-1.0, -1.0],
            rhs: vec![1.0, 0.0, 1.0],
        };
        let x = sys.solve().unwrap();
        for v in &x {
            assert!((v - 1.0f64).abs() < 1e-15);
        }
        assert!(sys.residual(&x) < 1e-15);
    }

    #[test]
    fn one_by_one() {
        let sys = TriDiagSystem {
            sub: vec![],
            diag: vec![4.0f64],
            sup: vec![],
            rhs: vec![2.0],
        };
        assert_eq!(sys.solve().unwrap(), vec![0.5]);
        sys.check_dominance().unwrap();
    }

    #[test]
    fn zero_pivot_is_reported() {
        let sys = TriDiagSystem {
            sub: vec![1.0],
            diag: vec![1.0f64, 1.0],
            sup: vec![1.0],
            rhs: vec![1.0, 1.0],
        };
        assert_eq!(sys.solve(), Err(TriDiagError::Singular(1)));
        assert_eq!(
            sys.check_dominance(),
            Err(TriDiagError::NotDominant { row: 0 })
        );
    }

    #[test]
    fn bad_shape_is_reported() {
        let sys = TriDiagSystem {
            sub: vec![1.0f64],
            diag: vec![3.0, 3.0],
            sup: vec![],
            rhs: vec![1.0, 1.0],
        };
        assert!(matches!(sys.solve(), Err(TriDiagError::Shape { .. })));
    }

    #[test]
    fn dominance_is_strict() {
        let sys = TriDiagSystem {
            sub: vec![-1.0f64],
            diag: vec![1.0, 2.0],
            sup: vec![-1.0],
            rhs: vec![0.0, 0.0],
        };
        assert_eq!(
            sys.check_dominance(),
            Err(TriDiagError::NotDominant { row: 0 })
        );
    }

    #[test]
    fn works_in_single_precision() {
        let sys = TriDiagSystem {
            sub: vec![-1.0f32; 4],
            diag: vec![4.0; 5],
            sup: vec![-1.0; 4],
            rhs: vec![3.0, 2.0, 2.0, 2.0, 3.0],
        };
        let x = sys.solve().unwrap();
        assert!(x.iter().all(|v| (v - 1.0).abs() < 1e-6));
    }
}
