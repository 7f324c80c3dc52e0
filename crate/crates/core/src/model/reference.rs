//! Explicit, loop-based evaluation of the basis stack and convolution.
//!
//! These routines materialize every `N × N` channel and are only practical
//! for small graphs. They serve as the second path against which the fused
//! tape kernels are checked.

use alloc::vec::Vec;

use crate::linalg::Matrix;

/// `U diag(values) Uᵀ` by explicit triple loop.
pub fn reconstruct(eigenvectors: &Matrix, values: &[f64]) -> Matrix {
    let (n, k) = (eigenvectors.rows(), eigenvectors.cols());
    assert_eq!(k, values.len());
    Matrix::from_fn(n, n, |i, j| {
        (0..k)
            .map(|c| eigenvectors[(i, c)] * values[c] * eigenvectors[(j, c)])
            .sum()
    })
}

/// Entrywise FFN over `[I ‖ S_1 ‖ … ‖ S_M]` with the hidden layer kept and
/// output channels produced on demand.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseStack {
    /// `relu(Σ_m w1[h,m] T_m + b1[h])` per hidden unit.
    pub hidden: Vec<Matrix>,
    /// `H × C` output weights, row-major.
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

impl BaseStack {
    /// `w1` is `H × (M+1)` row-major, `b1` has `H` entries, `w2` is `H × C`
    /// row-major, `b2` has `C` entries.
    pub fn new(
        eigenvectors: &Matrix,
        lambda_primes: &[Vec<f64>],
        w1: &[f64],
        b1: &[f64],
        w2: &[f64],
        b2: &[f64],
    ) -> Self {
        let n = eigenvectors.rows();
        let mut stacked = Vec::with_capacity(lambda_primes.len() + 1);
        stacked.push(Matrix::identity(n));
        stacked.extend(lambda_primes.iter().map(|l| reconstruct(eigenvectors, l)));
        let m1 = stacked.len();
        let hidden = b1
            .iter()
            .enumerate()
            .map(|(h, &bias)| {
                Matrix::from_fn(n, n, |i, j| {
                    let s: f64 = (0..m1).map(|m| w1[h * m1 + m] * stacked[m][(i, j)]).sum::<f64>() + bias;
                    s.max(0.0)
                })
            })
            .collect();
        Self {
            hidden,
            w2: w2.to_vec(),
            b2: b2.to_vec(),
        }
    }

    pub fn channels(&self) -> usize {
        self.b2.len()
    }

    /// Materialize output channel `c`: `Σ_h w2[h,c] H_h + b2[c]`.
    pub fn channel(&self, c: usize) -> Matrix {
        let n = self.hidden.first().map_or(0, Matrix::rows);
        let cc = self.channels();
        Matrix::from_fn(n, n, |i, j| {
            self.hidden
                .iter()
                .enumerate()
                .map(|(h, m)| self.w2[h * cc + c] * m[(i, j)])
                .sum::<f64>()
                + self.b2[c]
        })
    }

    /// Column `c` of the result is `Ŝ_c x[:, c]`, one channel at a time.
    pub fn convolve(&self, x: &Matrix) -> Matrix {
        assert_eq!(x.cols(), self.channels());
        let n = x.rows();
        let mut out = Matrix::zeros(n, x.cols());
        for c in 0..x.cols() {
            let s = self.channel(c);
            let col = s.matvec(&x.column(c));
            for i in 0..n {
                out.as_mut_slice()[i * x.cols() + c] = col[i];
            }
        }
        out
    }
}
