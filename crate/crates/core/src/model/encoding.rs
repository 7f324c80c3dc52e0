//! Sinusoidal eigenvalue encoding and the proximity matrix built from it.

use alloc::vec::Vec;

use super::ModelError;
use crate::linalg::Matrix;
use crate::math;

/// `ω_i = 100 / 10000^{2i/d}`.
pub fn frequency(i: usize, dim: usize) -> f64 {
    100.0 / math::powf(10000.0, (2 * i) as f64 / dim as f64)
}

/// `[sin(ω_0 λ), cos(ω_0 λ), sin(ω_1 λ), cos(ω_1 λ), …]`, `dim` entries.
/// `dim` must be even; callers validate it.
pub fn encode_scalar(lambda: f64, dim: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(dim);
    for i in 0..dim / 2 {
        let a = frequency(i, dim) * lambda;
        out.push(math::sin(a));
        out.push(math::cos(a));
    }
    out
}

fn check_dim(dim: usize) -> Result<(), ModelError> {
    if dim < 2 || dim % 2 != 0 {
        return Err(ModelError::EncodingDim(dim));
    }
    Ok(())
}

/// `K × dim` matrix whose row `k` encodes `lambdas[k]`.
pub fn encode_eigenvalues(lambdas: &[f64], dim: usize) -> Result<Matrix, ModelError> {
    check_dim(dim)?;
    let mut data = Vec::with_capacity(lambdas.len() * dim);
    for &l in lambdas {
        data.extend(encode_scalar(l, dim));
    }
    Ok(Matrix::from_vec(lambdas.len(), dim, data))
}

/// `R = ρ ρᵀ` for an encoding matrix `ρ`.
pub fn proximity_matrix(encoded: &Matrix) -> Matrix {
    let mut r = encoded.matmul(&encoded.transpose());
    // The product is symmetric up to rounding in the kernel; pin it exactly.
    r.symmetrize();
    r
}

/// `Σ_i cos(ω_i (a − b))`, the gap-only form of `ρ(a)ᵀρ(b)`.
pub fn proximity_closed_form(a: f64, b: f64, dim: usize) -> f64 {
    (0..dim / 2).map(|i| math::cos(frequency(i, dim) * (a - b))).sum()
}

/// Attention input `Z = [λ ‖ ρ(λ)]` (`K × (dim+1)`) and its proximity matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenEncoding {
    pub encoded: Matrix,
    pub proximity: Matrix,
}

impl EigenEncoding {
    pub fn new(lambdas: &[f64], dim: usize) -> Result<Self, ModelError> {
        let rho = encode_eigenvalues(lambdas, dim)?;
        let proximity = proximity_matrix(&rho);
        let encoded = Matrix::from_fn(lambdas.len(), dim + 1, |k, j| {
            if j == 0 {
                lambdas[k]
            } else {
                rho[(k, j - 1)]
            }
        });
        Ok(Self { encoded, proximity })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_example() {
        let e = encode_scalar(1.0, 4);
        let want = [-0.50637, 0.86232, 0.84147, 0.54030];
        for (a, b) in e.iter().zip(want) {
            assert!((a - b).abs() < 5e-6, "{e:?}");
        }
        assert_eq!(encode_scalar(0.0, 6), [0.0, 1.0, 0.0, 1.0, 0.0, 1.0]);
    }

    #[test]
    fn odd_dim_rejected() {
        assert_eq!(encode_eigenvalues(&[0.5], 3), Err(ModelError::EncodingDim(3)));
        assert!(EigenEncoding::new(&[0.5], 0).is_err());
    }

    #[test]
    fn diagonal_is_half_dim() {
        let enc = EigenEncoding::new(&[0.0, 0.3, 1.7, 2.0], 8).unwrap();
        for i in 0..4 {
            assert!((enc.proximity[(i, i)] - 4.0).abs() < 1e-12);
        }
        assert_eq!(enc.proximity.asymmetry(), 0.0);
        assert_eq!(enc.encoded.cols(), 9);
        assert_eq!(enc.encoded[(2, 0)], 1.7);
    }
}
