//! Synthetic graphs: Barabási–Albert and Erdős–Rényi topologies, Gaussian
//! edge weights, planted weight-heterogeneity anomalies and uniform signals.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::graph::{GraphError, Label, WeightedGraph};
use crate::linalg::Matrix;
use crate::math;
use crate::rng;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SynthError {
    #[error("invalid generator parameter: {0}")]
    Parameter(&'static str),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Gaussian weight assignment `w ~ N(mu, sigma2)`, optionally clamped.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct WeightScheme {
    pub mu: f64,
    pub sigma2: f64,
    /// `None` keeps the raw Gaussian draws.
    pub clamp: Option<(f64, f64)>,
    pub seed: u64,
}

impl WeightScheme {
    pub const DEFAULT_CLAMP: (f64, f64) = (0.0, 2.0);

    pub fn new(mu: f64, sigma2: f64, seed: u64) -> Self {
        Self {
            mu,
            sigma2,
            clamp: Some(Self::DEFAULT_CLAMP),
            seed,
        }
    }

    pub fn unclamped(mu: f64, sigma2: f64, seed: u64) -> Self {
        Self {
            clamp: None,
            ..Self::new(mu, sigma2, seed)
        }
    }

    fn validate(&self) -> Result<(), SynthError> {
        if !(self.sigma2 >= 0.0) {
            return Err(SynthError::Parameter("sigma2 must be >= 0"));
        }
        if let Some((lo, hi)) = self.clamp {
            if !(lo < hi) {
                return Err(SynthError::Parameter("clamp.lo must be < clamp.hi"));
            }
        }
        Ok(())
    }
}

/// Preferential attachment: a complete graph on `m + 1` seed nodes, then each
/// new node links to `m` distinct existing nodes chosen with probability
/// proportional to their current degree. All weights are 1.
pub fn generate_ba(n: usize, m: usize, seed: u64) -> Result<WeightedGraph, SynthError> {
    if m == 0 || m >= n {
        return Err(SynthError::Parameter("BA requires 1 <= m < n"));
    }
    let mut rng = rng::seeded(seed);
    let mut g = WeightedGraph::new(n, (1.0, 1.0))?;
    // Each edge endpoint appears once here, so a uniform pick is
    // degree-proportional.
    let mut endpoints = Vec::with_capacity(2 * (m * (m + 1) / 2 + m * n));
    for i in 0..=m {
        for j in (i + 1)..=m {
            g.add_edge(i, j, 1.0)?;
            endpoints.push(i);
            endpoints.push(j);
        }
    }
    for v in (m + 1)..n {
        let mut targets = BTreeSet::new();
        while targets.len() < m {
            let t = endpoints[rng.random_range(0..endpoints.len())];
            targets.insert(t);
        }
        for t in targets {
            g.add_edge(t, v, 1.0)?;
            endpoints.push(t);
            endpoints.push(v);
        }
    }
    Ok(g)
}

/// Each unordered pair present independently with probability `p`.
pub fn generate_er(n: usize, p: f64, seed: u64) -> Result<WeightedGraph, SynthError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(SynthError::Parameter("ER requires 0 <= p <= 1"));
    }
    let mut rng = rng::seeded(seed);
    let mut g = WeightedGraph::new(n, (1.0, 1.0))?;
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random::<f64>() < p {
                g.add_edge(i, j, 1.0)?;
            }
        }
    }
    Ok(g)
}

fn draw_weight(rng: &mut rng::Rng, mu: f64, sigma2: f64, clamp: Option<(f64, f64)>) -> f64 {
    let w = if sigma2 == 0.0 {
        mu
    } else {
        let z: f64 = StandardNormal.sample(rng);
        mu + math::sqrt(sigma2) * z
    };
    match clamp {
        Some((lo, hi)) => w.clamp(lo, hi),
        None => w,
    }
}

/// One Gaussian draw per undirected edge, in edge insertion order, then
/// clamping. The topology is untouched.
pub fn assign_gaussian_weights(
    g: &WeightedGraph,
    scheme: &WeightScheme,
) -> Result<WeightedGraph, SynthError> {
    scheme.validate()?;
    if g.edge_count() == 0 {
        return Err(SynthError::Parameter("graph has no edges"));
    }
    let mut rng = rng::seeded(scheme.seed);
    let weights: Vec<f64> = (0..g.edge_count())
        .map(|_| draw_weight(&mut rng, scheme.mu, scheme.sigma2, scheme.clamp))
        .collect();
    let range = match scheme.clamp {
        Some(r) => r,
        None => weights
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &w| (lo.min(w), hi.max(w))),
    };
    Ok(g.with_weights(&weights, range)?)
}

/// Parameters of a planted weight-heterogeneity instance.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PlantSpec {
    pub anomaly_fraction: f64,
    pub sigma2_anom: f64,
    pub sigma2_norm: f64,
    pub mu: f64,
    pub clamp: (f64, f64),
    /// Width of the Gaussian noise feature matrix; 0 attaches no features.
    pub feature_dim: usize,
    pub seed: u64,
}

impl Default for PlantSpec {
    fn default() -> Self {
        Self {
            anomaly_fraction: 0.2,
            sigma2_anom: 0.09,
            sigma2_norm: 0.0,
            mu: 0.5,
            clamp: WeightScheme::DEFAULT_CLAMP,
            feature_dim: 4,
            seed: 42,
        }
    }
}

/// Label a random `anomaly_fraction` of the nodes positive and give every
/// edge touching a positive node a `N(mu, sigma2_anom)` weight; the remaining
/// edges get `N(mu, sigma2_norm)`. Features, if any, are standard Gaussian
/// noise.
pub fn plant_anomalies(g: &WeightedGraph, spec: &PlantSpec) -> Result<WeightedGraph, SynthError> {
    if !(spec.anomaly_fraction > 0.0 && spec.anomaly_fraction < 1.0) {
        return Err(SynthError::Parameter("anomaly_fraction must be in (0, 1)"));
    }
    if !(spec.sigma2_anom > spec.sigma2_norm && spec.sigma2_norm >= 0.0) {
        return Err(SynthError::Parameter("need sigma2_anom > sigma2_norm >= 0"));
    }
    let n = g.node_count();
    let k = (math::round(spec.anomaly_fraction * n as f64) as usize).clamp(1, n.saturating_sub(1).max(1));
    let mut label_rng = rng::substream(spec.seed, 1);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut label_rng);
    let mut labels = vec![Label::Negative; n];
    for &i in &order[..k] {
        labels[i] = Label::Positive;
    }

    let mut weight_rng = rng::substream(spec.seed, 2);
    let weights: Vec<f64> = g
        .edges()
        .iter()
        .map(|e| {
            let anomalous =
                labels[e.source] == Label::Positive || labels[e.target] == Label::Positive;
            let s2 = if anomalous {
                spec.sigma2_anom
            } else {
                spec.sigma2_norm
            };
            draw_weight(&mut weight_rng, spec.mu, s2, Some(spec.clamp))
        })
        .collect();

    let planted = g.with_weights(&weights, spec.clamp)?.with_labels(labels)?;
    if spec.feature_dim == 0 {
        return Ok(planted);
    }
    let mut feature_rng = rng::substream(spec.seed, 3);
    let features = Matrix::from_fn(n, spec.feature_dim, |_, _| StandardNormal.sample(&mut feature_rng));
    Ok(planted.with_features(features)?)
}

/// i.i.d. `Uniform[0, 1]` graph signal.
pub fn uniform_signal(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng::seeded(seed);
    (0..n).map(|_| rng.random::<f64>()).collect()
}

/// i.i.d. `N(0, 1)` vector.
pub fn gaussian_vector(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng::seeded(seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    (0..n).map(|_| normal.sample(&mut rng)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ba_edge_counts() {
        let g = generate_ba(3, 1, 7).unwrap();
        assert_eq!(g.edge_count(), 2);
        let g = generate_ba(500, 5, 1).unwrap();
        assert_eq!(g.edge_count(), 15 + 5 * 494);
        assert_eq!(g.edges(), generate_ba(500, 5, 1).unwrap().edges());
        assert!(generate_ba(5, 5, 1).is_err());
    }

    #[test]
    fn er_extremes() {
        assert_eq!(generate_er(20, 0.0, 3).unwrap().edge_count(), 0);
        assert_eq!(generate_er(4, 1.0, 3).unwrap().edge_count(), 6);
        assert!(generate_er(4, 1.5, 3).is_err());
    }

    #[test]
    fn er_binomial_edge_count() {
        let g = generate_er(500, 0.02, 11).unwrap();
        let pairs = 500.0 * 499.0 / 2.0;
        let mean = 0.02 * pairs;
        let sd = (pairs * 0.02 * 0.98f64).sqrt();
        assert!(((g.edge_count() as f64) - mean).abs() < 4.0 * sd);
    }

    #[test]
    fn gaussian_weights() {
        let g = generate_er(60, 0.3, 5).unwrap();
        let z = assign_gaussian_weights(&g, &WeightScheme::new(0.5, 0.0, 1)).unwrap();
        assert!(z.edges().iter().all(|e| e.weight == 0.5));
        assert_eq!(z.edge_keys(), g.edge_keys());

        let wide = assign_gaussian_weights(&g, &WeightScheme::new(1.5, 4.0, 2)).unwrap();
        assert!(wide.edges().iter().all(|e| (0.0..=2.0).contains(&e.weight)));
        assert!(wide.edges().iter().any(|e| e.weight == 2.0));
    }

    #[test]
    fn gaussian_weight_moments() {
        let g = generate_er(200, 0.5, 8).unwrap();
        assert!(g.edge_count() > 9000);
        let w = assign_gaussian_weights(&g, &WeightScheme::new(0.5, 0.09, 3)).unwrap();
        let ws: Vec<f64> = w.edges().iter().map(|e| e.weight).collect();
        let (mean, var) = math::mean_var(&ws);
        assert!((mean - 0.5).abs() < 0.02);
        assert!((var - 0.09).abs() < 0.15 * 0.09);
    }

    #[test]
    fn planted_instance() {
        let g = generate_er(500, 0.04, 1).unwrap();
        let p = plant_anomalies(&g, &PlantSpec::default()).unwrap();
        let labels = p.labels().unwrap();
        assert_eq!(labels.iter().filter(|l| **l == Label::Positive).count(), 100);
        for e in p.edges() {
            if labels[e.source] == Label::Negative && labels[e.target] == Label::Negative {
                assert_eq!(e.weight, 0.5);
            }
        }
        let var = p.per_node_weight_variance();
        let mean_of = |want: Label| {
            let xs: Vec<f64> = (0..500).filter(|&i| labels[i] == want).map(|i| var[i]).collect();
            xs.iter().sum::<f64>() / xs.len() as f64
        };
        assert!(mean_of(Label::Positive) > mean_of(Label::Negative));
        assert!(plant_anomalies(&g, &PlantSpec { anomaly_fraction: 1.0, ..PlantSpec::default() }).is_err());
    }

    #[test]
    fn uniform_signal_props() {
        let x = uniform_signal(100_000, 4);
        assert!(x.iter().all(|v| (0.0..=1.0).contains(v)));
        assert_eq!(x[..10], uniform_signal(10, 4)[..]);
        let mean = x.iter().sum::<f64>() / x.len() as f64;
        assert!((mean - 0.5).abs() < 0.01);
    }
}
