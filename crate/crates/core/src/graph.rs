//! Weighted undirected graphs with optional node features and binary labels,
//! plus the structural helpers the experiments need: label splits, negative
//! edge sampling, weight flattening and per-node weight variance.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::linalg::Matrix;
use crate::math;
use crate::rng;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GraphError {
    #[error("self-loop on node {node}")]
    SelfLoop { node: usize },
    #[error("duplicate edge ({i}, {j})")]
    DuplicateEdge { i: usize, j: usize },
    #[error("weight {weight} of edge ({i}, {j}) outside [{lo}, {hi}]")]
    WeightOutOfRange {
        i: usize,
        j: usize,
        weight: f64,
        lo: f64,
        hi: f64,
    },
    #[error("node {node} out of range for a graph with {node_count} nodes")]
    NodeOutOfRange { node: usize, node_count: usize },
    #[error("invalid weight range [{lo}, {hi}]")]
    InvalidRange { lo: f64, hi: f64 },
    #[error("feature matrix has {rows} rows, graph has {node_count} nodes")]
    FeatureShape { rows: usize, node_count: usize },
    #[error("label vector has {len} entries, graph has {node_count} nodes")]
    LabelLength { len: usize, node_count: usize },
    #[error("graph has no labels")]
    MissingLabels,
    #[error("cannot sample {requested} negative edges, only {available} non-edges remain")]
    NegativeSamplingCapacity { requested: usize, available: usize },
    #[error("class {class} has {members} labeled nodes, fewer than {required} required")]
    Stratification {
        class: &'static str,
        members: usize,
        required: usize,
    },
    #[error("invalid split: {0}")]
    InvalidSplit(String),
}

/// Node label for the semi-supervised task.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Positive,
    Negative,
    Unlabeled,
}

impl Label {
    pub fn as_target(self) -> Option<f64> {
        match self {
            Label::Positive => Some(1.0),
            Label::Negative => Some(0.0),
            Label::Unlabeled => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub source: usize,
    pub target: usize,
    pub weight: f64,
}

/// Unordered node pair in canonical `(min, max)` order.
pub fn pair_key(i: usize, j: usize) -> (usize, usize) {
    if i < j {
        (i, j)
    } else {
        (j, i)
    }
}

/// Undirected weighted graph. Immutable once built; every transformation
/// returns a new graph.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    node_count: usize,
    edges: Vec<Edge>,
    index: BTreeMap<(usize, usize), usize>,
    incident: Vec<Vec<usize>>,
    features: Option<Matrix>,
    labels: Option<Vec<Label>>,
    weight_range: (f64, f64),
    node_names: Option<Vec<String>>,
}

impl WeightedGraph {
    pub fn new(node_count: usize, weight_range: (f64, f64)) -> Result<Self, GraphError> {
        let (lo, hi) = weight_range;
        if !(lo <= hi) || lo.is_nan() || hi.is_nan() {
            return Err(GraphError::InvalidRange { lo, hi });
        }
        Ok(Self {
            node_count,
            edges: Vec::new(),
            index: BTreeMap::new(),
            incident: vec![Vec::new(); node_count],
            features: None,
            labels: None,
            weight_range,
            node_names: None,
        })
    }

    pub fn from_edges(
        node_count: usize,
        edges: impl IntoIterator<Item = (usize, usize, f64)>,
        weight_range: (f64, f64),
    ) -> Result<Self, GraphError> {
        let mut g = Self::new(node_count, weight_range)?;
        for (i, j, w) in edges {
            g.add_edge(i, j, w)?;
        }
        Ok(g)
    }

    pub fn add_edge(&mut self, i: usize, j: usize, weight: f64) -> Result<(), GraphError> {
        for node in [i, j] {
            if node >= self.node_count {
                return Err(GraphError::NodeOutOfRange {
                    node,
                    node_count: self.node_count,
                });
            }
        }
        if i == j {
            return Err(GraphError::SelfLoop { node: i });
        }
        let (lo, hi) = self.weight_range;
        if !(weight >= lo && weight <= hi) {
            return Err(GraphError::WeightOutOfRange {
                i,
                j,
                weight,
                lo,
                hi,
            });
        }
        let key = pair_key(i, j);
        if self.index.contains_key(&key) {
            return Err(GraphError::DuplicateEdge { i, j });
        }
        let id = self.edges.len();
        self.index.insert(key, id);
        self.edges.push(Edge {
            source: i,
            target: j,
            weight,
        });
        self.incident[i].push(id);
        self.incident[j].push(id);
        Ok(())
    }

    pub fn with_features(mut self, features: Matrix) -> Result<Self, GraphError> {
        if features.rows() != self.node_count {
            return Err(GraphError::FeatureShape {
                rows: features.rows(),
                node_count: self.node_count,
            });
        }
        self.features = Some(features);
        Ok(self)
    }

    pub fn with_labels(mut self, labels: Vec<Label>) -> Result<Self, GraphError> {
        if labels.len() != self.node_count {
            return Err(GraphError::LabelLength {
                len: labels.len(),
                node_count: self.node_count,
            });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn with_node_names(mut self, names: Vec<String>) -> Self {
        assert_eq!(names.len(), self.node_count, "one name per node");
        self.node_names = Some(names);
        self
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges in insertion order.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn features(&self) -> Option<&Matrix> {
        self.features.as_ref()
    }

    /// Model input: the attached features, or one all-ones column.
    pub fn feature_matrix(&self) -> Matrix {
        self.features
            .clone()
            .unwrap_or_else(|| Matrix::from_fn(self.node_count, 1, |_, _| 1.0))
    }

    pub fn labels(&self) -> Option<&[Label]> {
        self.labels.as_deref()
    }

    pub fn weight_range(&self) -> (f64, f64) {
        self.weight_range
    }

    pub fn node_names(&self) -> Option<&[String]> {
        self.node_names.as_deref()
    }

    pub fn node_name(&self, i: usize) -> String {
        match &self.node_names {
            Some(names) => names[i].clone(),
            None => format!("{i}"),
        }
    }

    pub fn weight(&self, i: usize, j: usize) -> Option<f64> {
        self.index.get(&pair_key(i, j)).map(|&e| self.edges[e].weight)
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.index.contains_key(&pair_key(i, j))
    }

    pub fn edge_keys(&self) -> BTreeSet<(usize, usize)> {
        self.index.keys().copied().collect()
    }

    /// Weights of the edges incident to `node`, in edge insertion order.
    pub fn incident_weights(&self, node: usize) -> impl Iterator<Item = f64> + '_ {
        self.incident[node].iter().map(move |&e| self.edges[e].weight)
    }

    pub fn neighbors(&self, node: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.incident[node].iter().map(move |&e| {
            let edge = &self.edges[e];
            let other = if edge.source == node {
                edge.target
            } else {
                edge.source
            };
            (other, edge.weight)
        })
    }

    pub fn degree_count(&self, node: usize) -> usize {
        self.incident[node].len()
    }

    /// Weighted degrees `d_i = Σ_j w_ij`.
    pub fn degrees(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.node_count];
        for e in &self.edges {
            d[e.source] += e.weight;
            d[e.target] += e.weight;
        }
        d
    }

    /// Dense symmetric adjacency matrix.
    pub fn adjacency(&self) -> Matrix {
        let mut a = Matrix::zeros(self.node_count, self.node_count);
        for e in &self.edges {
            a[(e.source, e.target)] = e.weight;
            a[(e.target, e.source)] = e.weight;
        }
        a
    }

    /// Same topology and metadata with new per-edge weights (insertion
    /// order) and a new admissible range.
    pub fn with_weights(&self, weights: &[f64], weight_range: (f64, f64)) -> Result<Self, GraphError> {
        assert_eq!(weights.len(), self.edges.len(), "one weight per edge");
        let (lo, hi) = weight_range;
        if !(lo <= hi) {
            return Err(GraphError::InvalidRange { lo, hi });
        }
        let mut g = self.clone();
        g.weight_range = weight_range;
        for (edge, &w) in g.edges.iter_mut().zip(weights) {
            if !(w >= lo && w <= hi) {
                return Err(GraphError::WeightOutOfRange {
                    i: edge.source,
                    j: edge.target,
                    weight: w,
                    lo,
                    hi,
                });
            }
            edge.weight = w;
        }
        Ok(g)
    }

    /// Population variance of each node's incident weights; nodes with at
    /// most one incident edge get 0.
    pub fn per_node_weight_variance(&self) -> Vec<f64> {
        (0..self.node_count)
            .map(|i| {
                if self.incident[i].len() <= 1 {
                    0.0
                } else {
                    let ws: Vec<f64> = self.incident_weights(i).collect();
                    math::mean_var(&ws).1
                }
            })
            .collect()
    }

    /// Copy of the graph where every edge touching `nodes` has weight
    /// `value`. The admissible range is widened to include `value` if needed.
    pub fn flatten_weights(&self, nodes: &BTreeSet<usize>, value: f64) -> WeightedGraph {
        let mut g = self.clone();
        let (lo, hi) = g.weight_range;
        g.weight_range = (lo.min(value), hi.max(value));
        for edge in g.edges.iter_mut() {
            if nodes.contains(&edge.source) || nodes.contains(&edge.target) {
                edge.weight = value;
            }
        }
        g
    }

    /// Nodes carrying the positive label.
    pub fn positive_nodes(&self) -> BTreeSet<usize> {
        match &self.labels {
            Some(labels) => labels
                .iter()
                .enumerate()
                .filter(|(_, l)| **l == Label::Positive)
                .map(|(i, _)| i)
                .collect(),
            None => BTreeSet::new(),
        }
    }

    /// Graph induced on `nodes` (kept in the given order); features, labels
    /// and names follow their nodes.
    pub fn induced_subgraph(&self, nodes: &[usize]) -> Result<WeightedGraph, GraphError> {
        let mut map = BTreeMap::new();
        for (new, &old) in nodes.iter().enumerate() {
            if old >= self.node_count {
                return Err(GraphError::NodeOutOfRange {
                    node: old,
                    node_count: self.node_count,
                });
            }
            map.insert(old, new);
        }
        let mut g = WeightedGraph::new(nodes.len(), self.weight_range)?;
        for e in &self.edges {
            if let (Some(&a), Some(&b)) = (map.get(&e.source), map.get(&e.target)) {
                g.add_edge(a, b, e.weight)?;
            }
        }
        if let Some(f) = &self.features {
            let sub = Matrix::from_fn(nodes.len(), f.cols(), |r, c| f[(nodes[r], c)]);
            g = g.with_features(sub)?;
        }
        if let Some(labels) = &self.labels {
            g = g.with_labels(nodes.iter().map(|&i| labels[i]).collect())?;
        }
        if let Some(names) = &self.node_names {
            g = g.with_node_names(nodes.iter().map(|&i| names[i].clone()).collect());
        }
        Ok(g)
    }

    /// Relabel node `i` as `perm[i]`, keeping edge insertion order.
    pub fn permute_nodes(&self, perm: &[usize]) -> Result<WeightedGraph, GraphError> {
        assert_eq!(perm.len(), self.node_count, "permutation length");
        let mut g = WeightedGraph::new(self.node_count, self.weight_range)?;
        for e in &self.edges {
            g.add_edge(perm[e.source], perm[e.target], e.weight)?;
        }
        let mut inverse = vec![0; perm.len()];
        for (i, &p) in perm.iter().enumerate() {
            inverse[p] = i;
        }
        if let Some(f) = &self.features {
            g = g.with_features(Matrix::from_fn(f.rows(), f.cols(), |r, c| f[(inverse[r], c)]))?;
        }
        if let Some(labels) = &self.labels {
            g = g.with_labels(inverse.iter().map(|&i| labels[i]).collect())?;
        }
        Ok(g)
    }

    /// Per-column z-scoring of the node features (constant columns are only
    /// centred).
    pub fn standardize_features(&self) -> WeightedGraph {
        let mut g = self.clone();
        if let Some(f) = g.features.as_mut() {
            for c in 0..f.cols() {
                let col = f.column(c);
                let (mean, var) = math::mean_var(&col);
                let sd = math::sqrt(var);
                for r in 0..f.rows() {
                    f[(r, c)] = if sd > 0.0 {
                        (f[(r, c)] - mean) / sd
                    } else {
                        f[(r, c)] - mean
                    };
                }
            }
        }
        g
    }

    /// Uniformly sample `count` distinct node pairs that are neither edges of
    /// the graph nor in `exclusion`, without self-loops.
    ///
    /// Rejection sampling is tried first with a budget of `100 · count`
    /// attempts; if that runs out, the remaining admissible pairs are
    /// enumerated and the rest of the sample is drawn from them.
    pub fn sample_negative_edges(
        &self,
        count: usize,
        seed: u64,
        exclusion: &BTreeSet<(usize, usize)>,
    ) -> Result<Vec<(usize, usize)>, GraphError> {
        let n = self.node_count;
        let total_pairs = n * n.saturating_sub(1) / 2;
        let mut blocked: BTreeSet<(usize, usize)> = self.index.keys().copied().collect();
        blocked.extend(
            exclusion
                .iter()
                .map(|&(i, j)| pair_key(i, j))
                .filter(|&(i, j)| i != j && j < n),
        );
        let available = total_pairs - blocked.len();
        if count > available {
            return Err(GraphError::NegativeSamplingCapacity {
                requested: count,
                available,
            });
        }
        let mut rng = rng::seeded(seed);
        let mut chosen = BTreeSet::new();
        let mut out = Vec::with_capacity(count);
        let budget = 100usize.saturating_mul(count);
        let mut attempts = 0;
        while out.len() < count && attempts < budget {
            attempts += 1;
            let i = rng.random_range(0..n);
            let j = rng.random_range(0..n);
            if i == j {
                continue;
            }
            let key = pair_key(i, j);
            if blocked.contains(&key) || !chosen.insert(key) {
                continue;
            }
            out.push(key);
        }
        if out.len() < count {
            let mut pool: Vec<(usize, usize)> = Vec::with_capacity(available - out.len());
            for i in 0..n {
                for j in (i + 1)..n {
                    if !blocked.contains(&(i, j)) && !chosen.contains(&(i, j)) {
                        pool.push((i, j));
                    }
                }
            }
            let need = count - out.len();
            let (picked, _) = pool.partial_shuffle(&mut rng, need);
            out.extend_from_slice(picked);
        }
        Ok(out)
    }

    /// Labeled-node train/test splits, one entry per fold.
    ///
    /// With `fold_count == 1` this is a single (optionally stratified)
    /// shuffle split: `train_ratio` of the labeled nodes train, the rest
    /// test. With `fold_count ≥ 2` the labeled nodes are dealt into
    /// `fold_count` test folds; each fold trains on `train_ratio` of all
    /// labeled nodes drawn from the other folds (all of them when the ratio
    /// exceeds what is left).
    pub fn make_splits(&self, spec: &SplitSpec) -> Result<Vec<Fold>, GraphError> {
        let labels = self.labels.as_ref().ok_or(GraphError::MissingLabels)?;
        spec.validate()?;
        let mut rng = rng::seeded(spec.seed);
        let positives: Vec<usize> = (0..self.node_count)
            .filter(|&i| labels[i] == Label::Positive)
            .collect();
        let negatives: Vec<usize> = (0..self.node_count)
            .filter(|&i| labels[i] == Label::Negative)
            .collect();
        let classes: Vec<(&'static str, Vec<usize>)> = if spec.stratified {
            vec![("positive", positives), ("negative", negatives)]
        } else {
            let mut all = positives;
            all.extend(negatives);
            all.sort_unstable();
            vec![("labeled", all)]
        };
        let required = spec.fold_count.max(2);
        for (name, members) in &classes {
            if members.len() < required {
                return Err(GraphError::Stratification {
                    class: name,
                    members: members.len(),
                    required,
                });
            }
        }
        let labeled: usize = classes.iter().map(|(_, m)| m.len()).sum();
        let train_total = (math::round(spec.train_ratio * labeled as f64) as usize).clamp(1, labeled - 1);

        let mut shuffled: Vec<Vec<usize>> = classes
            .into_iter()
            .map(|(_, mut m)| {
                m.shuffle(&mut rng);
                m
            })
            .collect();

        if spec.fold_count == 1 {
            let sizes: Vec<usize> = shuffled.iter().map(Vec::len).collect();
            let quotas = apportion(&sizes, train_total);
            let mut train = Vec::new();
            let mut test = Vec::new();
            for (members, q) in shuffled.iter().zip(&quotas) {
                let q = (*q).min(members.len() - 1).max(1);
                train.extend_from_slice(&members[..q]);
                test.extend_from_slice(&members[q..]);
            }
            train.sort_unstable();
            test.sort_unstable();
            return Ok(vec![Fold { train, test }]);
        }

        // Deal every class round-robin into folds, carrying the rotation over
        // between classes so fold sizes stay balanced.
        let k = spec.fold_count;
        let mut fold_of = BTreeMap::new();
        let mut cursor = 0;
        for members in &shuffled {
            for &node in members {
                fold_of.insert(node, cursor % k);
                cursor += 1;
            }
        }
        let mut folds = Vec::with_capacity(k);
        for f in 0..k {
            let mut train = Vec::new();
            let mut test = Vec::new();
            let remaining: Vec<Vec<usize>> = shuffled
                .iter_mut()
                .map(|members| {
                    members
                        .iter()
                        .copied()
                        .filter(|node| {
                            let in_test = fold_of[node] == f;
                            if in_test {
                                test.push(*node);
                            }
                            !in_test
                        })
                        .collect()
                })
                .collect();
            let sizes: Vec<usize> = remaining.iter().map(Vec::len).collect();
            let budget = train_total.min(sizes.iter().sum());
            let quotas = apportion(&sizes, budget);
            for (members, q) in remaining.iter().zip(&quotas) {
                train.extend_from_slice(&members[..(*q).min(members.len())]);
            }
            train.sort_unstable();
            test.sort_unstable();
            folds.push(Fold { train, test });
        }
        Ok(folds)
    }
}

/// Split `total` across groups proportionally to `sizes` (largest remainder).
fn apportion(sizes: &[usize], total: usize) -> Vec<usize> {
    let sum: usize = sizes.iter().sum();
    if sum == 0 {
        return vec![0; sizes.len()];
    }
    let exact: Vec<f64> = sizes
        .iter()
        .map(|&s| s as f64 * total as f64 / sum as f64)
        .collect();
    let mut quotas: Vec<usize> = exact.iter().map(|&x| math::floor(x) as usize).collect();
    let mut short = total.saturating_sub(quotas.iter().sum());
    let mut order: Vec<usize> = (0..sizes.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - math::floor(exact[a]);
        let rb = exact[b] - math::floor(exact[b]);
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &g in order.iter().cycle().take(sizes.len() * 2) {
        if short == 0 {
            break;
        }
        if quotas[g] < sizes[g] {
            quotas[g] += 1;
            short -= 1;
        }
    }
    quotas
}

/// How labeled nodes are divided into training and test sets.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SplitSpec {
    pub train_ratio: f64,
    pub fold_count: usize,
    pub seed: u64,
    pub stratified: bool,
}

impl SplitSpec {
    pub fn validate(&self) -> Result<(), GraphError> {
        if !(self.train_ratio > 0.0 && self.train_ratio < 1.0) {
            return Err(GraphError::InvalidSplit(format!(
                "train_ratio {} not in (0, 1)",
                self.train_ratio
            )));
        }
        if self.fold_count == 0 {
            return Err(GraphError::InvalidSplit("fold_count must be positive".into()));
        }
        Ok(())
    }
}

/// Node indices of one train/test split, each sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> WeightedGraph {
        // a=0, b=1, c=2
        WeightedGraph::from_edges(3, [(0, 1, 0.7), (1, 2, 0.9), (0, 2, 0.65)], (0.6, 1.0)).unwrap()
    }

    fn labeled(pos: usize, neg: usize) -> WeightedGraph {
        let n = pos + neg;
        let labels = (0..n)
            .map(|i| if i < pos { Label::Positive } else { Label::Negative })
            .collect();
        WeightedGraph::new(n, (0.0, 1.0)).unwrap().with_labels(labels).unwrap()
    }

    #[test]
    fn construction_and_symmetry() {
        let g = triangle();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edge_count(), 3);
        assert_eq!(g.weight(0, 1), Some(0.7));
        assert_eq!(g.weight(1, 0), Some(0.7));
        assert_eq!(g.weight(2, 0), Some(0.65));
    }

    #[test]
    fn structural_errors() {
        let mut g = WeightedGraph::new(3, (0.6, 1.0)).unwrap();
        assert_eq!(g.add_edge(0, 0, 0.8), Err(GraphError::SelfLoop { node: 0 }));
        g.add_edge(0, 1, 0.8).unwrap();
        assert_eq!(g.add_edge(1, 0, 0.9), Err(GraphError::DuplicateEdge { i: 1, j: 0 }));
        assert!(matches!(g.add_edge(1, 2, 0.5), Err(GraphError::WeightOutOfRange { .. })));
        assert!(matches!(g.add_edge(1, 3, 0.7), Err(GraphError::NodeOutOfRange { .. })));
    }

    #[test]
    fn degrees() {
        let g = WeightedGraph::from_edges(2, [(0, 1, 0.5)], (0.0, 1.0)).unwrap();
        assert_eq!(g.degrees(), vec![0.5, 0.5]);
        let t = triangle();
        assert!((t.degrees()[1] - 1.6).abs() < 1e-15);
        let isolated = WeightedGraph::from_edges(3, [(0, 1, 0.5)], (0.0, 1.0)).unwrap();
        assert_eq!(isolated.degrees()[2], 0.0);
    }

    #[test]
    fn weight_variance() {
        // node 0 has incident weights 0.6 and 1.0
        let g = WeightedGraph::from_edges(3, [(0, 1, 0.6), (0, 2, 1.0)], (0.0, 1.0)).unwrap();
        let v = g.per_node_weight_variance();
        assert!((v[0] - 0.04).abs() < 1e-15);
        assert_eq!(v[1], 0.0);
        let flat = WeightedGraph::from_edges(3, [(0, 1, 0.7), (0, 2, 0.7)], (0.0, 1.0)).unwrap();
        assert_eq!(flat.per_node_weight_variance()[0], 0.0);
    }

    #[test]
    fn flattening() {
        let g = triangle();
        let all: BTreeSet<usize> = (0..3).collect();
        let f = g.flatten_weights(&all, 0.5);
        assert!(f.edges().iter().all(|e| e.weight == 0.5));
        assert_eq!(f.weight_range(), (0.5, 1.0));
        assert_eq!(g.weight(0, 1), Some(0.7));
        assert_eq!(g.flatten_weights(&BTreeSet::new(), 0.5).edges(), g.edges());

        let star =
            WeightedGraph::from_edges(4, [(0, 1, 0.2), (0, 2, 0.9), (0, 3, 0.4)], (0.0, 1.0)).unwrap();
        let s = star.flatten_weights(&[0].into_iter().collect(), 0.5);
        assert!(s.edges().iter().all(|e| e.weight == 0.5));
    }

    #[test]
    fn negative_sampling() {
        let full = triangle();
        assert!(matches!(
            full.sample_negative_edges(1, 1, &BTreeSet::new()),
            Err(GraphError::NegativeSamplingCapacity { requested: 1, available: 0 })
        ));

        let g = WeightedGraph::from_edges(4, [(0, 1, 1.0), (2, 3, 1.0)], (0.0, 1.0)).unwrap();
        let mut s = g.sample_negative_edges(4, 9, &BTreeSet::new()).unwrap();
        s.sort_unstable();
        assert_eq!(s, vec![(0, 2), (0, 3), (1, 2), (1, 3)]);
        assert_eq!(
            g.sample_negative_edges(3, 5, &BTreeSet::new()).unwrap(),
            g.sample_negative_edges(3, 5, &BTreeSet::new()).unwrap()
        );

        let exclusion: BTreeSet<_> = [(2, 0)].into_iter().collect();
        let mut s = g.sample_negative_edges(3, 5, &exclusion).unwrap();
        s.sort_unstable();
        assert_eq!(s, vec![(0, 3), (1, 2), (1, 3)]);
    }

    #[test]
    fn stratified_folds() {
        let g = labeled(5, 5);
        let spec = SplitSpec {
            train_ratio: 0.8,
            fold_count: 5,
            seed: 3,
            stratified: true,
        };
        let folds = g.make_splits(&spec).unwrap();
        assert_eq!(folds.len(), 5);
        let mut seen = Vec::new();
        for f in &folds {
            let pos = f.test.iter().filter(|&&i| i < 5).count();
            assert_eq!((pos, f.test.len()), (1, 2));
            assert_eq!(f.train.len(), 8);
            assert!(f.train.iter().all(|i| !f.test.contains(i)));
            seen.extend_from_slice(&f.test);
        }
        seen.sort_unstable();
        assert_eq!(seen, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn ratio_split_and_errors() {
        let g = labeled(50, 50);
        let spec = SplitSpec {
            train_ratio: 0.2,
            fold_count: 1,
            seed: 1,
            stratified: true,
        };
        let folds = g.make_splits(&spec).unwrap();
        assert_eq!(folds[0].train.len(), 20);
        assert_eq!(folds[0].test.len(), 80);

        let few = labeled(3, 20);
        let spec = SplitSpec {
            train_ratio: 0.8,
            fold_count: 5,
            seed: 1,
            stratified: true,
        };
        assert!(matches!(few.make_splits(&spec), Err(GraphError::Stratification { .. })));
        assert_eq!(
            triangle().make_splits(&spec),
            Err(GraphError::MissingLabels)
        );
    }

    #[test]
    fn unlabeled_nodes_excluded() {
        let mut labels = vec![Label::Positive; 4];
        labels.extend(vec![Label::Negative; 4]);
        labels.push(Label::Unlabeled);
        let g = WeightedGraph::new(9, (0.0, 1.0)).unwrap().with_labels(labels).unwrap();
        let spec = SplitSpec {
            train_ratio: 0.5,
            fold_count: 2,
            seed: 4,
            stratified: true,
        };
        for f in g.make_splits(&spec).unwrap() {
            assert!(!f.train.contains(&8) && !f.test.contains(&8));
        }
    }

    #[test]
    fn apportion_exact_total() {
        assert_eq!(apportion(&[33, 67], 20).iter().sum::<usize>(), 20);
        assert_eq!(apportion(&[5, 5], 3).iter().sum::<usize>(), 3);
        assert_eq!(apportion(&[0, 0], 3), vec![0, 0]);
    }
}
