//! Thomas algorithm for the per-line systems of the ADI sweeps.

use crate::error::{Error, Result};

/// Tridiagonal matrix; `lower[0]` and `upper[n-1]` are unused.
#[derive(Debug, Clone, PartialEq)]
pub struct TriDiag {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl TriDiag {
    pub fn identity(n: usize) -> Self {
        Self {
            lower: vec![0.0; n],
            diag: vec![1.0; n],
            upper: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// `y = A x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * x[i];
                if i > 0 {
                    s += self.lower[i] * x[i - 1];
                }
                if i + 1 < n {
                    s += self.upper[i] * x[i + 1];
                }
                s
            })
            .collect()
    }

    /// Solve `A x = rhs` in place.
    pub fn solve_in_place(&self, rhs: &mut [f64], scratch: &mut Vec<f64>) -> Result<()> {
        thomas(&self.lower, &self.diag, &self.upper, rhs, scratch)
    }

    /// Solve `A^T x = rhs` in place.
    pub fn solve_transpose_in_place(&self, rhs: &mut [f64], scratch: &mut Vec<f64>) -> Result<()> {
        let n = self.len();
        // (A^T)_{i,i-1} = A_{i-1,i},  (A^T)_{i,i+1} = A_{i+1,i}
        let mut lower = vec![0.0; n];
        let mut upper = vec![0.0; n];
        for i in 1..n {
            lower[i] = self.upper[i - 1];
            upper[i - 1] = self.lower[i];
        }
        thomas(&lower, &self.diag, &upper, rhs, scratch)
    }
}

fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], x: &mut [f64], cp: &mut Vec<f64>) -> Result<()> {
    let n = diag.len();
    debug_assert_eq!(x.len(), n);
    cp.clear();
    cp.resize(n, 0.0);
    let mut den = diag[0];
    if den == 0.0 || !den.is_finite() {
        return Err(Error::SingularSystem {
            context: "tridiagonal sweep",
            row: 0,
            pivot: den,
        });
    }
    cp[0] = if n > 1 { upper[0] / den } else { 0.0 };
    x[0] /= den;
    for i in 1..n {
        den = diag[i] - lower[i] * cp[i - 1];
        if den == 0.0 || !den.is_finite() {
            return Err(Error::SingularSystem {
                context: "tridiagonal sweep",
                row: i,
                pivot: den,
            });
        }
        if i + 1 < n {
            cp[i] = upper[i] / den;
        }
        x[i] = (x[i] - lower[i] * x[i - 1]) / den;
    }
    for i in (0..n - 1).rev() {
        x[i] -= cp[i] * x[i + 1];
    }
    Ok(())
}
