//! Numerical checks of the spectral-energy results:
//!
//! * the mean of the spectral energy equals the Rayleigh quotient,
//! * the expected spectral-energy variance grows with the edge-weight
//!   variance σ² (Monte Carlo over Gaussian weights),
//! * heavier weight heterogeneity pushes energy toward both ends of the
//!   spectrum ("flattening out") on BA and ER graphs,
//! * the eigenvalue proximity matrix is a symmetric function of eigenvalue
//!   gaps.

use alloc::string::String;
use alloc::vec::Vec;
use alloc::format;

use rand::Rng as _;

use crate::graph::{GraphError, WeightedGraph};
use crate::model::encoding;
use crate::rng;
use crate::spectral::{
    self, decompose_graph, energy_kde, energy_profile, laplacian, quadratic_form,
    rayleigh_quotient, EnergyKde, EnergyProfile, KdeOptions, LaplacianKind, SpectralError,
};
use crate::synth::{self, SynthError, WeightScheme};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TheoryError {
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("invalid experiment parameter: {0}")]
    Parameter(String),
    #[error("graph has no positive labels")]
    NoPositives,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RayleighReport {
    pub trials: usize,
    pub n_range: (usize, usize),
    pub seed: u64,
    pub rng: String,
    /// Largest `|Σλ_k f_k − xᵀLx/xᵀx|` over all trials and both kinds.
    pub max_discrepancy: f64,
    /// Largest gap between the edge-sum and dense quadratic forms.
    pub max_form_discrepancy: f64,
}

/// Random Gaussian-weighted ER graphs and Gaussian signals; compares the
/// spectral mean against the Rayleigh quotient for both Laplacian kinds.
pub fn verify_rayleigh(
    trials: usize,
    n_range: (usize, usize),
    seed: u64,
) -> Result<RayleighReport, TheoryError> {
    if trials == 0 || n_range.0 < 2 || n_range.0 > n_range.1 {
        return Err(TheoryError::Parameter(format!(
            "need trials >= 1 and 2 <= n_lo <= n_hi, got {trials} and {n_range:?}"
        )));
    }
    let mut rng = rng::seeded(seed);
    let mut max_discrepancy = 0.0f64;
    let mut max_form = 0.0f64;
    for t in 0..trials {
        let n = rng.random_range(n_range.0..=n_range.1);
        let p = rng.random_range(0.1..0.6);
        let topo = synth::generate_er(n, p, rng::mix_seed(seed, 2 * t as u64))?;
        if topo.edge_count() == 0 {
            continue;
        }
        let g = synth::assign_gaussian_weights(
            &topo,
            &WeightScheme::new(1.0, 0.09, rng::mix_seed(seed, 2 * t as u64 + 1)),
        )?;
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        for kind in [LaplacianKind::Regular, LaplacianKind::Normalized] {
            let d = decompose_graph(&g, kind, None)?;
            let e = energy_profile(&d, &x)?.expectation;
            let r = rayleigh_quotient(&g, &x, kind)?;
            max_discrepancy = max_discrepancy.max((e - r).abs());
            let dense = quadratic_form(&laplacian(&g, kind), &x) / crate::linalg::dot(&x, &x);
            max_form = max_form.max((dense - r).abs());
        }
    }
    Ok(RayleighReport {
        trials,
        n_range,
        seed,
        rng: rng::RNG_ALGORITHM.into(),
        max_discrepancy,
        max_form_discrepancy: max_form,
    })
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TopologyDescriptor {
    pub description: String,
    pub node_count: usize,
    pub edge_count: usize,
}

impl TopologyDescriptor {
    pub fn of(g: &WeightedGraph, description: impl Into<String>) -> Self {
        Self {
            description: description.into(),
            node_count: g.node_count(),
            edge_count: g.edge_count(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MonteCarloReport {
    pub sigma2_values: Vec<f64>,
    /// Mean of `Var_λ` over the draws, per σ².
    pub mean_variance: Vec<f64>,
    /// Standard error of that mean, per σ².
    pub stderr: Vec<f64>,
    pub draws: usize,
    pub mu: f64,
    pub kind: LaplacianKind,
    pub topology: TopologyDescriptor,
    pub signal_seed: Option<u64>,
    pub seed: u64,
    pub rng: String,
}

impl MonteCarloReport {
    /// Gaps `mean[i+1] − mean[i] − k·(se[i] + se[i+1])` between consecutive
    /// σ² levels; all positive means strictly increasing with a `k`-stderr
    /// margin.
    pub fn separation_margins(&self, k: f64) -> Vec<f64> {
        (1..self.mean_variance.len())
            .map(|i| {
                self.mean_variance[i]
                    - self.mean_variance[i - 1]
                    - k * (self.stderr[i] + self.stderr[i - 1])
            })
            .collect()
    }

    pub fn is_increasing_with_margin(&self, k: f64) -> bool {
        self.separation_margins(k).iter().all(|&m| m > 0.0)
    }
}

/// Spectral-energy variance of `x` on `g` from its eigendecomposition.
pub fn spectral_variance(
    g: &WeightedGraph,
    x: &[f64],
    kind: LaplacianKind,
) -> Result<f64, TheoryError> {
    let d = decompose_graph(g, kind, None)?;
    Ok(energy_profile(&d, x)?.variance)
}

/// The same variance through `xᵀL²x/xᵀx − (xᵀLx/xᵀx)²`, without an
/// eigendecomposition.
pub fn spectral_variance_quadratic(g: &WeightedGraph, x: &[f64], kind: LaplacianKind) -> f64 {
    let l = laplacian(g, kind);
    let lx = l.matvec(x);
    let xx = crate::linalg::dot(x, x);
    let mean = crate::linalg::dot(x, &lx) / xx;
    crate::linalg::dot(&lx, &lx) / xx - mean * mean
}

/// Draw `draws` unclamped Gaussian weight assignments on `topology` for each
/// σ² and average `Var_λ` of the fixed signal. Draw `d` uses the same
/// underlying normal deviates at every σ² level (paired design).
#[allow(clippy::too_many_arguments)]
pub fn monte_carlo_variance(
    topology: &WeightedGraph,
    description: &str,
    mu: f64,
    sigma2_list: &[f64],
    draws: usize,
    signal: &[f64],
    signal_seed: Option<u64>,
    kind: LaplacianKind,
    seed: u64,
) -> Result<MonteCarloReport, TheoryError> {
    if draws < 2 {
        return Err(TheoryError::Parameter("draws must be >= 2".into()));
    }
    if sigma2_list.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(TheoryError::Parameter("sigma2 list must be strictly ascending".into()));
    }
    if signal.len() != topology.node_count() {
        return Err(SpectralError::DimensionMismatch {
            expected: topology.node_count(),
            got: signal.len(),
        }
        .into());
    }
    let mut mean_variance = Vec::with_capacity(sigma2_list.len());
    let mut stderr = Vec::with_capacity(sigma2_list.len());
    for &s2 in sigma2_list {
        // Welford keeps identical draws at exactly zero spread.
        let mut mean = 0.0;
        let mut m2 = 0.0;
        for d in 0..draws {
            let scheme = WeightScheme::unclamped(mu, s2, rng::mix_seed(seed, d as u64));
            let g = synth::assign_gaussian_weights(topology, &scheme)?;
            let v = spectral_variance(&g, signal, kind)?;
            let delta = v - mean;
            mean += delta / (d + 1) as f64;
            m2 += delta * (v - mean);
        }
        let var = m2 / (draws - 1) as f64;
        mean_variance.push(mean);
        stderr.push(crate::math::sqrt(var.max(0.0) / draws as f64));
    }
    Ok(MonteCarloReport {
        sigma2_values: sigma2_list.to_vec(),
        mean_variance,
        stderr,
        draws,
        mu,
        kind,
        topology: TopologyDescriptor::of(topology, description),
        signal_seed,
        seed,
        rng: rng::RNG_ALGORITHM.into(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum TopologySpec {
    Ba { n: usize, m: usize },
    Er { n: usize, p: f64 },
}

impl TopologySpec {
    pub fn generate(&self, seed: u64) -> Result<WeightedGraph, SynthError> {
        match *self {
            TopologySpec::Ba { n, m } => synth::generate_ba(n, m, seed),
            TopologySpec::Er { n, p } => synth::generate_er(n, p, seed),
        }
    }

    pub fn describe(&self) -> String {
        match *self {
            TopologySpec::Ba { n, m } => format!("BA(n={n}, m={m})"),
            TopologySpec::Er { n, p } => format!("ER(n={n}, p={p})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FlattenSpec {
    pub topology: TopologySpec,
    pub topology_seed: u64,
    pub sigma2_list: Vec<f64>,
    /// Weight mean; 1 makes σ² = 0 the unweighted graph.
    pub mu: f64,
    pub clamp: (f64, f64),
    pub weight_seed: u64,
    pub signal_seed: u64,
    pub kind: LaplacianKind,
    pub kde_grid_points: usize,
    pub low_percentile: f64,
    pub high_percentile: f64,
}

impl FlattenSpec {
    pub fn new(topology: TopologySpec, sigma2_list: Vec<f64>) -> Self {
        Self {
            topology,
            topology_seed: 42,
            sigma2_list,
            mu: 1.0,
            clamp: WeightScheme::DEFAULT_CLAMP,
            weight_seed: 43,
            signal_seed: 44,
            kind: LaplacianKind::Regular,
            kde_grid_points: 512,
            low_percentile: 5.0,
            high_percentile: 95.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FlattenLevel {
    pub sigma2: f64,
    pub profile: EnergyProfile,
    /// KDE with the first eigenvalue's energy left out.
    pub kde: EnergyKde,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FlattenReport {
    pub spec: FlattenSpec,
    pub topology: TopologyDescriptor,
    pub rng: String,
    pub levels: Vec<FlattenLevel>,
    pub low_index: usize,
    pub high_index: usize,
    /// `η` at `low_index`, per level.
    pub low_cumulative: Vec<f64>,
    /// `1 − η` at `high_index`, per level.
    pub high_tail: Vec<f64>,
    pub low_increasing: bool,
    pub high_increasing: bool,
}

impl FlattenReport {
    pub fn passed(&self) -> bool {
        self.low_increasing && self.high_increasing
    }
}

/// One clamped Gaussian weighting per σ² on a shared topology and signal,
/// then the energy profile, its KDE and the two end-of-spectrum trends.
pub fn flatten_experiment(spec: &FlattenSpec) -> Result<FlattenReport, TheoryError> {
    if spec.sigma2_list.is_empty() {
        return Err(TheoryError::Parameter("sigma2 list is empty".into()));
    }
    let topo = spec.topology.generate(spec.topology_seed)?;
    let signal = synth::uniform_signal(topo.node_count(), spec.signal_seed);
    let mut levels = Vec::with_capacity(spec.sigma2_list.len());
    for &s2 in &spec.sigma2_list {
        let scheme = WeightScheme {
            mu: spec.mu,
            sigma2: s2,
            clamp: Some(spec.clamp),
            seed: spec.weight_seed,
        };
        let g = synth::assign_gaussian_weights(&topo, &scheme)?;
        let d = decompose_graph(&g, spec.kind, None)?;
        let profile = energy_profile(&d, &signal)?;
        let kde = energy_kde(
            &profile,
            d.eigenvalues(),
            spec.kde_grid_points,
            KdeOptions {
                bandwidth: None,
                exclude_first: true,
            },
        )?;
        levels.push(FlattenLevel {
            sigma2: s2,
            profile,
            kde,
        });
    }
    let low_index = levels[0].profile.percentile_index(spec.low_percentile);
    let high_index = levels[0].profile.percentile_index(spec.high_percentile);
    let low_cumulative: Vec<f64> = levels
        .iter()
        .map(|l| l.profile.cumulative[low_index])
        .collect();
    let high_tail: Vec<f64> = levels
        .iter()
        .map(|l| 1.0 - l.profile.cumulative[high_index])
        .collect();
    let increasing = |xs: &[f64]| xs.windows(2).all(|w| w[1] > w[0]);
    Ok(FlattenReport {
        spec: spec.clone(),
        topology: TopologyDescriptor::of(&topo, spec.topology.describe()),
        rng: rng::RNG_ALGORITHM.into(),
        levels,
        low_index,
        high_index,
        low_increasing: increasing(&low_cumulative),
        high_increasing: increasing(&high_tail),
        low_cumulative,
        high_tail,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct HeterogeneityContrast {
    pub variance_with: f64,
    pub variance_without: f64,
}

/// `Var_λ` of `signal` on `g` and on the copy whose positive nodes have all
/// incident weights set to 0.5.
pub fn heterogeneity_contrast(
    g: &WeightedGraph,
    signal: &[f64],
    kind: LaplacianKind,
) -> Result<HeterogeneityContrast, TheoryError> {
    let positives = g.positive_nodes();
    if positives.is_empty() {
        return Err(TheoryError::NoPositives);
    }
    let flat = g.flatten_weights(&positives, 0.5);
    Ok(HeterogeneityContrast {
        variance_with: spectral_variance(g, signal, kind)?,
        variance_without: spectral_variance(&flat, signal, kind)?,
    })
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EncodingReport {
    pub pairs: usize,
    pub dim: usize,
    pub seed: u64,
    /// `|ρ(λ_i)ᵀρ(λ_j) − Σ_k cos(ω_k(λ_i − λ_j))|`, maximised.
    pub max_closed_form_error: f64,
    pub max_asymmetry: f64,
    /// `|R(λ_i + c, λ_j + c) − R(λ_i, λ_j)|`, maximised.
    pub max_shift_error: f64,
}

impl EncodingReport {
    pub fn passed(&self, tol: f64) -> bool {
        self.max_closed_form_error <= tol && self.max_asymmetry <= tol && self.max_shift_error <= tol
    }
}

/// Random eigenvalue pairs in `[0, 2]` and shifts in `[−1, 1]`.
pub fn verify_encoding(pairs: usize, dim: usize, seed: u64) -> Result<EncodingReport, TheoryError> {
    if dim < 2 || dim % 2 != 0 {
        return Err(TheoryError::Parameter(format!("encoding dim must be even and >= 2, got {dim}")));
    }
    let mut rng = rng::seeded(seed);
    let mut closed = 0.0f64;
    let mut asym = 0.0f64;
    let mut shift = 0.0f64;
    let dot = |a: f64, b: f64| {
        let ea = encoding::encode_scalar(a, dim);
        let eb = encoding::encode_scalar(b, dim);
        crate::linalg::dot(&ea, &eb)
    };
    for _ in 0..pairs {
        let a = rng.random_range(0.0..2.0);
        let b = rng.random_range(0.0..2.0);
        let c = rng.random_range(-1.0..1.0);
        let r_ab = dot(a, b);
        closed = closed.max((r_ab - encoding::proximity_closed_form(a, b, dim)).abs());
        asym = asym.max((r_ab - dot(b, a)).abs());
        shift = shift.max((dot(a + c, b + c) - r_ab).abs());
    }
    Ok(EncodingReport {
        pairs,
        dim,
        seed,
        max_closed_form_error: closed,
        max_asymmetry: asym,
        max_shift_error: shift,
    })
}

/// Per-node weight variance and label.
pub fn node_variance_table(g: &WeightedGraph) -> Vec<(usize, f64, Option<f64>)> {
    let var = g.per_node_weight_variance();
    let labels = g.labels();
    (0..g.node_count())
        .map(|i| (i, var[i], labels.and_then(|l| l[i].as_target())))
        .collect()
}

/// Mean per-node weight variance of positives and of negatives.
pub fn class_variance_means(g: &WeightedGraph) -> Option<(f64, f64)> {
    let labels = g.labels()?;
    let var = g.per_node_weight_variance();
    let mut sums = [0.0; 2];
    let mut counts = [0usize; 2];
    for (i, l) in labels.iter().enumerate() {
        if let Some(t) = l.as_target() {
            let c = usize::from(t == 1.0);
            sums[c] += var[i];
            counts[c] += 1;
        }
    }
    if counts.contains(&0) {
        return None;
    }
    Some((sums[1] / counts[1] as f64, sums[0] / counts[0] as f64))
}

// Keep the import list honest for `spectral::` paths used in docs.
#[allow(unused_imports)]
use spectral::SpectralDecomposition as _;
