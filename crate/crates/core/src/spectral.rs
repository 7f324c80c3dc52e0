//! Graph Laplacians, their eigendecomposition, the graph Fourier transform
//! and spectral-energy statistics of a node signal.
//!
//! For a signal `x` with Fourier coefficients `x̂ = Uᵀx`, the spectral energy
//! at `λ_k` is `f_k = x̂_k² / Σ x̂²`. Its mean over the spectrum equals the
//! Rayleigh quotient `xᵀLx / xᵀx`; its variance measures how far the energy
//! spreads toward the two ends of the spectrum.

use alloc::vec;
use alloc::vec::Vec;

use crate::graph::WeightedGraph;
use crate::linalg::{self, symmetric_eigen, EigenError, Matrix};
use crate::math;

/// Largest tolerated `|L_ij − L_ji|` on input to [`eigendecompose`].
pub const SYMMETRY_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SpectralError {
    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error(transparent)]
    Eigen(#[from] EigenError),
    #[error("signal has length {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("signal has no spectral energy")]
    DegenerateSignal,
    #[error("KDE needs at least 2 grid points, got {0}")]
    GridTooSmall(usize),
    #[error("bandwidth must be positive, got {0}")]
    InvalidBandwidth(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LaplacianKind {
    /// `L = D − A`
    Regular,
    /// `L = I − D^{-1/2} A D^{-1/2}`
    Normalized,
}

impl LaplacianKind {
    pub fn name(self) -> &'static str {
        match self {
            LaplacianKind::Regular => "regular",
            LaplacianKind::Normalized => "normalized",
        }
    }
}

/// Dense Laplacian of `g`. The result is exactly symmetric.
///
/// For the normalized kind, zero-degree nodes get `D^{-1/2} = 0`, so their
/// row and column reduce to the identity row and column.
pub fn laplacian(g: &WeightedGraph, kind: LaplacianKind) -> Matrix {
    let n = g.node_count();
    let deg = g.degrees();
    let mut l = Matrix::zeros(n, n);
    match kind {
        LaplacianKind::Regular => {
            for (i, &d) in deg.iter().enumerate() {
                l[(i, i)] = d;
            }
            for e in g.edges() {
                l[(e.source, e.target)] -= e.weight;
                l[(e.target, e.source)] -= e.weight;
            }
        }
        LaplacianKind::Normalized => {
            let inv_sqrt: Vec<f64> = deg
                .iter()
                .map(|&d| if d > 0.0 { 1.0 / math::sqrt(d) } else { 0.0 })
                .collect();
            for i in 0..n {
                l[(i, i)] = 1.0;
            }
            for e in g.edges() {
                let v = e.weight * inv_sqrt[e.source] * inv_sqrt[e.target];
                l[(e.source, e.target)] -= v;
                l[(e.target, e.source)] -= v;
            }
        }
    }
    l.symmetrize();
    l
}

/// Ascending eigenvalues with column-orthonormal eigenvectors, possibly only
/// the `q` smallest and `q` largest pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<f64>,
    eigenvectors: Matrix,
    kind: Option<LaplacianKind>,
    truncation: Option<usize>,
}

impl SpectralDecomposition {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// `N × K`, column `k` pairs with `eigenvalues()[k]`.
    pub fn eigenvectors(&self) -> &Matrix {
        &self.eigenvectors
    }

    pub fn kind(&self) -> Option<LaplacianKind> {
        self.kind
    }

    pub fn truncation(&self) -> Option<usize> {
        self.truncation
    }

    pub fn node_count(&self) -> usize {
        self.eigenvectors.rows()
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.len() == self.node_count()
    }

    /// Keep the `q` smallest and `q` largest pairs. When `2q` covers every
    /// retained pair the decomposition is returned unchanged.
    pub fn truncated(&self, q: usize) -> SpectralDecomposition {
        let k = self.len();
        if 2 * q >= k {
            let mut out = self.clone();
            out.truncation = Some(q);
            return out;
        }
        let keep: Vec<usize> = (0..q).chain(k - q..k).collect();
        let n = self.node_count();
        let vectors = Matrix::from_fn(n, keep.len(), |r, c| self.eigenvectors[(r, keep[c])]);
        SpectralDecomposition {
            eigenvalues: keep.iter().map(|&c| self.eigenvalues[c]).collect(),
            eigenvectors: vectors,
            kind: self.kind,
            truncation: Some(q),
        }
    }

    /// `‖UᵀU − I‖_max`.
    pub fn orthonormality_error(&self) -> f64 {
        let u = &self.eigenvectors;
        let mut utu = vec![0.0; u.cols() * u.cols()];
        linalg::gemm(
            u.cols(),
            u.rows(),
            u.cols(),
            1.0,
            (u.as_slice(), 1, u.cols() as isize),
            (u.as_slice(), u.cols() as isize, 1),
            0.0,
            &mut utu,
        );
        let k = u.cols();
        let mut worst = 0.0f64;
        for i in 0..k {
            for j in 0..k {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((utu[i * k + j] - target).abs());
            }
        }
        worst
    }

    /// Largest `‖L u_k − λ_k u_k‖₂ / max(1, |λ_k|)` over retained pairs.
    pub fn max_relative_residual(&self, l: &Matrix) -> f64 {
        let lu = l.matmul(&self.eigenvectors);
        let mut worst = 0.0f64;
        for (k, &lam) in self.eigenvalues.iter().enumerate() {
            let mut r2 = 0.0;
            for i in 0..lu.rows() {
                let r = lu[(i, k)] - lam * self.eigenvectors[(i, k)];
                r2 += r * r;
            }
            worst = worst.max(math::sqrt(r2) / lam.abs().max(1.0));
        }
        worst
    }

    /// `U diag(values) Uᵀ`.
    pub fn reconstruct_with(&self, values: &[f64]) -> Matrix {
        assert_eq!(values.len(), self.len());
        let u = &self.eigenvectors;
        let scaled = Matrix::from_fn(u.rows(), u.cols(), |r, c| u[(r, c)] * values[c]);
        let mut out = Matrix::zeros(u.rows(), u.rows());
        linalg::gemm(
            u.rows(),
            u.cols(),
            u.rows(),
            1.0,
            (scaled.as_slice(), u.cols() as isize, 1),
            (u.as_slice(), 1, u.cols() as isize),
            0.0,
            out.as_mut_slice(),
        );
        out
    }
}

/// Eigendecomposition of a symmetric matrix with an optional `q`-truncation.
///
/// Each eigenvector is signed so that its largest-magnitude entry is positive
/// (first such entry on ties).
pub fn eigendecompose(
    l: &Matrix,
    truncation: Option<usize>,
) -> Result<SpectralDecomposition, SpectralError> {
    let asym = l.asymmetry();
    if !(asym <= SYMMETRY_TOLERANCE) {
        return Err(SpectralError::NotSymmetric(asym));
    }
    let eig = symmetric_eigen(l)?;
    let mut vectors = eig.vectors;
    let n = vectors.rows();
    for c in 0..vectors.cols() {
        let mut best = 0usize;
        let mut best_abs = -1.0;
        for r in 0..n {
            let a = vectors[(r, c)].abs();
            if a > best_abs {
                best_abs = a;
                best = r;
            }
        }
        if n > 0 && vectors[(best, c)] < 0.0 {
            for r in 0..n {
                vectors[(r, c)] = -vectors[(r, c)];
            }
        }
    }
    let full = SpectralDecomposition {
        eigenvalues: eig.values,
        eigenvectors: vectors,
        kind: None,
        truncation: None,
    };
    Ok(match truncation {
        Some(q) => full.truncated(q),
        None => full,
    })
}

/// Laplacian of `g` followed by [`eigendecompose`].
pub fn decompose_graph(
    g: &WeightedGraph,
    kind: LaplacianKind,
    truncation: Option<usize>,
) -> Result<SpectralDecomposition, SpectralError> {
    let mut d = eigendecompose(&laplacian(g, kind), truncation)?;
    d.kind = Some(kind);
    Ok(d)
}

/// `x̂ = Uᵀ x`.
pub fn graph_fourier(decomp: &SpectralDecomposition, x: &[f64]) -> Result<Vec<f64>, SpectralError> {
    if x.len() != decomp.node_count() {
        return Err(SpectralError::DimensionMismatch {
            expected: decomp.node_count(),
            got: x.len(),
        });
    }
    Ok(decomp.eigenvectors.tmatvec(x))
}

/// Spectral energy of a signal over the retained eigenvalues.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EnergyProfile {
    pub eigenvalues: Vec<f64>,
    /// `f_k`, sums to 1.
    pub energies: Vec<f64>,
    /// `η_k = Σ_{i≤k} f_i`, ends at 1.
    pub cumulative: Vec<f64>,
    /// `Σ λ_k f_k`
    pub expectation: f64,
    /// `Σ λ_k² f_k − expectation²`
    pub variance: f64,
}

impl EnergyProfile {
    /// Profile from precomputed eigenvalues and Fourier coefficients.
    pub fn from_coefficients(eigenvalues: &[f64], coeffs: &[f64]) -> Result<Self, SpectralError> {
        let total: f64 = coeffs.iter().map(|c| c * c).sum();
        if !(total > 0.0) {
            return Err(SpectralError::DegenerateSignal);
        }
        let energies: Vec<f64> = coeffs.iter().map(|c| c * c / total).collect();
        let mut acc = 0.0;
        let mut cumulative: Vec<f64> = energies
            .iter()
            .map(|f| {
                acc += f;
                acc
            })
            .collect();
        if let Some(last) = cumulative.last_mut() {
            *last = 1.0;
        }
        let expectation: f64 = eigenvalues.iter().zip(&energies).map(|(l, f)| l * f).sum();
        let variance: f64 = eigenvalues
            .iter()
            .zip(&energies)
            .map(|(l, f)| f * (l - expectation) * (l - expectation))
            .sum();
        Ok(Self {
            eigenvalues: eigenvalues.to_vec(),
            energies,
            cumulative,
            expectation,
            variance,
        })
    }

    /// Index of the eigenvalue at the given percentile of the spectrum
    /// (`0 ≤ p ≤ 100`), rounded to the nearest index.
    pub fn percentile_index(&self, p: f64) -> usize {
        let k = self.energies.len();
        if k == 0 {
            return 0;
        }
        let idx = math::round(p / 100.0 * (k - 1) as f64) as usize;
        idx.min(k - 1)
    }
}

pub fn energy_profile(
    decomp: &SpectralDecomposition,
    x: &[f64],
) -> Result<EnergyProfile, SpectralError> {
    let coeffs = graph_fourier(decomp, x)?;
    EnergyProfile::from_coefficients(decomp.eigenvalues(), &coeffs)
}

/// `xᵀLx / xᵀx`. The regular kind uses the edge sum
/// `Σ_{edges} w_ij (x_i − x_j)²`; the normalized kind evaluates the dense
/// quadratic form.
pub fn rayleigh_quotient(
    g: &WeightedGraph,
    x: &[f64],
    kind: LaplacianKind,
) -> Result<f64, SpectralError> {
    if x.len() != g.node_count() {
        return Err(SpectralError::DimensionMismatch {
            expected: g.node_count(),
            got: x.len(),
        });
    }
    let xx = linalg::dot(x, x);
    if !(xx > 0.0) {
        return Err(SpectralError::DegenerateSignal);
    }
    let num = match kind {
        LaplacianKind::Regular => g
            .edges()
            .iter()
            .map(|e| {
                let d = x[e.source] - x[e.target];
                e.weight * d * d
            })
            .sum::<f64>(),
        LaplacianKind::Normalized => quadratic_form(&laplacian(g, kind), x),
    };
    Ok(num / xx)
}

/// `xᵀ M x`.
pub fn quadratic_form(m: &Matrix, x: &[f64]) -> f64 {
    linalg::dot(x, &m.matvec(x))
}

#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize, serde::Deserialize)]
pub struct KdeOptions {
    /// Kernel bandwidth; Scott's rule on the energy-weighted sample if unset.
    pub bandwidth: Option<f64>,
    /// Drop the energy at the first eigenvalue (the constant mode of the
    /// regular Laplacian) and renormalise the rest.
    pub exclude_first: bool,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EnergyKde {
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
    pub bandwidth: f64,
}

impl EnergyKde {
    pub fn trapezoid_integral(&self) -> f64 {
        self.grid
            .windows(2)
            .zip(self.density.windows(2))
            .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
            .sum()
    }
}

/// Gaussian-kernel density over the eigenvalue axis, each eigenvalue
/// weighted by its spectral energy. The grid spans the eigenvalues padded by
/// five bandwidths on each side.
pub fn energy_kde(
    profile: &EnergyProfile,
    eigenvalues: &[f64],
    grid_points: usize,
    options: KdeOptions,
) -> Result<EnergyKde, SpectralError> {
    if grid_points < 2 {
        return Err(SpectralError::GridTooSmall(grid_points));
    }
    if eigenvalues.len() != profile.energies.len() {
        return Err(SpectralError::DimensionMismatch {
            expected: profile.energies.len(),
            got: eigenvalues.len(),
        });
    }
    let skip = usize::from(options.exclude_first);
    let lams = &eigenvalues[skip.min(eigenvalues.len())..];
    let raw = &profile.energies[skip.min(eigenvalues.len())..];
    let total: f64 = raw.iter().sum();
    if !(total > 0.0) {
        return Err(SpectralError::DegenerateSignal);
    }
    let weights: Vec<f64> = raw.iter().map(|f| f / total).collect();

    let lo = lams.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = lams.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let h = match options.bandwidth {
        Some(b) if b > 0.0 => b,
        Some(b) => return Err(SpectralError::InvalidBandwidth(b)),
        None => scott_bandwidth(lams, &weights, hi - lo),
    };

    let start = lo - 5.0 * h;
    let end = hi + 5.0 * h;
    let step = (end - start) / (grid_points - 1) as f64;
    let norm = 1.0 / (h * math::sqrt(2.0 * core::f64::consts::PI));
    let mut grid = Vec::with_capacity(grid_points);
    let mut density = Vec::with_capacity(grid_points);
    for g in 0..grid_points {
        let t = start + step * g as f64;
        let mut acc = 0.0;
        for (&l, &w) in lams.iter().zip(&weights) {
            if w > 0.0 {
                let z = (t - l) / h;
                acc += w * math::exp(-0.5 * z * z);
            }
        }
        grid.push(t);
        density.push(acc * norm);
    }
    Ok(EnergyKde {
        grid,
        density,
        bandwidth: h,
    })
}

/// Scott's rule `σ · n_eff^{-1/5}` with the Kish effective sample size of the
/// weights. A zero-spread sample falls back to 5% of the eigenvalue range,
/// or 0.1 if that is also zero.
fn scott_bandwidth(values: &[f64], weights: &[f64], range: f64) -> f64 {
    let mean: f64 = values.iter().zip(weights).map(|(v, w)| v * w).sum();
    let var: f64 = values
        .iter()
        .zip(weights)
        .map(|(v, w)| w * (v - mean) * (v - mean))
        .sum();
    let n_eff = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();
    let sd = math::sqrt(var);
    if sd > 0.0 {
        sd * math::powf(n_eff, -0.2)
    } else if range > 0.0 {
        0.05 * range
    } else {
        0.1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;

    fn two_node(w: f64) -> WeightedGraph {
        WeightedGraph::from_edges(2, [(0, 1, w)], (0.0, 2.0)).unwrap()
    }

    #[test]
    fn two_node_laplacians() {
        let l = laplacian(&two_node(0.5), LaplacianKind::Regular);
        assert_eq!(l, Matrix::from_rows(&[&[0.5, -0.5], &[-0.5, 0.5]]));
        let d = eigendecompose(&l, None).unwrap();
        assert!((d.eigenvalues()[0]).abs() < 1e-15 && (d.eigenvalues()[1] - 1.0).abs() < 1e-15);
        let u0 = d.eigenvectors().column(0);
        let s = 1.0 / 2f64.sqrt();
        assert!((u0[0] - s).abs() < 1e-12 && (u0[1] - s).abs() < 1e-12);

        for w in [0.3, 1.0, 1.7] {
            let d = decompose_graph(&two_node(w), LaplacianKind::Normalized, None).unwrap();
            assert!(d.eigenvalues()[0].abs() < 1e-12);
            assert!((d.eigenvalues()[1] - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn regular_rows_sum_to_zero() {
        let g = synth::assign_gaussian_weights(
            &synth::generate_er(40, 0.2, 1).unwrap(),
            &synth::WeightScheme::new(0.5, 0.09, 2),
        )
        .unwrap();
        let l = laplacian(&g, LaplacianKind::Regular);
        for i in 0..40 {
            assert!(l.row(i).iter().sum::<f64>().abs() < 1e-12);
        }
    }

    #[test]
    fn isolated_node_normalized() {
        let g = WeightedGraph::from_edges(3, [(0, 1, 0.5)], (0.0, 1.0)).unwrap();
        let l = laplacian(&g, LaplacianKind::Normalized);
        assert_eq!(l.row(2), &[0.0, 0.0, 1.0]);
        assert!(l.as_slice().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn identity_and_asymmetric_input() {
        let d = eigendecompose(&Matrix::identity(4), None).unwrap();
        assert!(d.eigenvalues().iter().all(|&l| (l - 1.0).abs() < 1e-15));
        assert!(d.max_relative_residual(&Matrix::identity(4)) < 1e-12);
        let bad = Matrix::from_rows(&[&[1.0, 0.0], &[1e-6, 1.0]]);
        assert!(matches!(eigendecompose(&bad, None), Err(SpectralError::NotSymmetric(_))));
    }

    #[test]
    fn sign_convention() {
        let g = synth::generate_er(15, 0.4, 3).unwrap();
        let d = decompose_graph(&g, LaplacianKind::Regular, None).unwrap();
        for c in 0..d.len() {
            let col = d.eigenvectors().column(c);
            let (mut best, mut best_abs) = (0, -1.0);
            for (i, v) in col.iter().enumerate() {
                if v.abs() > best_abs {
                    best_abs = v.abs();
                    best = i;
                }
            }
            assert!(col[best] > 0.0);
        }
    }

    #[test]
    fn truncation_selects_extremes() {
        let g = synth::generate_er(20, 0.3, 4).unwrap();
        let full = decompose_graph(&g, LaplacianKind::Normalized, None).unwrap();
        let t = full.truncated(3);
        assert_eq!(t.len(), 6);
        assert_eq!(&t.eigenvalues()[..3], &full.eigenvalues()[..3]);
        assert_eq!(&t.eigenvalues()[3..], &full.eigenvalues()[17..]);
        let all = full.truncated(10);
        assert_eq!(all.eigenvalues(), full.eigenvalues());
        assert_eq!(all.eigenvectors(), full.eigenvectors());
    }

    #[test]
    fn fourier_of_eigenvector_is_basis_vector() {
        let g = synth::generate_er(12, 0.5, 5).unwrap();
        let d = decompose_graph(&g, LaplacianKind::Regular, None).unwrap();
        let x = d.eigenvectors().column(4);
        let xh = graph_fourier(&d, &x).unwrap();
        for (k, v) in xh.iter().enumerate() {
            let want = if k == 4 { 1.0 } else { 0.0 };
            assert!((v - want).abs() < 1e-10);
        }
        let p = energy_profile(&d, &x).unwrap();
        assert!((p.expectation - d.eigenvalues()[4]).abs() < 1e-10);
        assert!(p.variance.abs() < 1e-10);
        assert!(graph_fourier(&d, &[1.0]).is_err());
    }

    #[test]
    fn constant_signal_energy_at_zero() {
        let g = synth::generate_er(30, 0.3, 6).unwrap();
        // connected with overwhelming probability at this density
        let d = decompose_graph(&g, LaplacianKind::Regular, None).unwrap();
        let p = energy_profile(&d, &[1.0; 30]).unwrap();
        assert!((p.energies[0] - 1.0).abs() < 1e-10);
        assert!(p.expectation.abs() < 1e-10);
        assert!(matches!(energy_profile(&d, &[0.0; 30]), Err(SpectralError::DegenerateSignal)));
    }

    #[test]
    fn two_node_expectation() {
        let d = decompose_graph(&two_node(1.0), LaplacianKind::Regular, None).unwrap();
        let p = energy_profile(&d, &[1.0, -1.0]).unwrap();
        assert!((p.expectation - 2.0).abs() < 1e-12);
        let r = rayleigh_quotient(&two_node(1.0), &[1.0, -1.0], LaplacianKind::Regular).unwrap();
        assert_eq!(r, 2.0);
        let c = rayleigh_quotient(&two_node(1.0), &[3.0, 3.0], LaplacianKind::Regular).unwrap();
        assert_eq!(c, 0.0);
    }

    #[test]
    fn kde_single_line_and_normalisation() {
        let lams = [0.0, 0.5, 1.0, 1.5];
        let p = EnergyProfile::from_coefficients(&lams, &[0.0, 0.0, 1.0, 0.0]).unwrap();
        let kde = energy_kde(&p, &lams, 401, KdeOptions::default()).unwrap();
        let argmax = (0..kde.grid.len())
            .max_by(|&a, &b| kde.density[a].total_cmp(&kde.density[b]))
            .unwrap();
        let nearest = (0..kde.grid.len())
            .min_by(|&a, &b| (kde.grid[a] - 1.0).abs().total_cmp(&(kde.grid[b] - 1.0).abs()))
            .unwrap();
        assert_eq!(argmax, nearest);
        assert!((kde.trapezoid_integral() - 1.0).abs() < 1e-3);
        assert!(energy_kde(&p, &lams, 1, KdeOptions::default()).is_err());
    }

    #[test]
    fn kde_symmetric_lines() {
        let lams = [0.5, 1.5];
        let p = EnergyProfile::from_coefficients(&lams, &[1.0, 1.0]).unwrap();
        let kde = energy_kde(&p, &lams, 201, KdeOptions::default()).unwrap();
        let n = kde.grid.len();
        for i in 0..n {
            assert!((kde.grid[i] - 1.0 + (kde.grid[n - 1 - i] - 1.0)).abs() < 1e-12);
            assert!((kde.density[i] - kde.density[n - 1 - i]).abs() < 1e-12);
        }
        assert!((kde.trapezoid_integral() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn kde_excluding_first_line() {
        let lams = [0.0, 1.0];
        let only_first = EnergyProfile::from_coefficients(&lams, &[1.0, 0.0]).unwrap();
        let opts = KdeOptions {
            exclude_first: true,
            ..KdeOptions::default()
        };
        assert!(matches!(
            energy_kde(&only_first, &lams, 10, opts),
            Err(SpectralError::DegenerateSignal)
        ));
    }
}
