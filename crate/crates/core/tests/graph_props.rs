use std::collections::BTreeSet;

use hipgnn_core::graph::pair_key;
use hipgnn_core::synth::{
    assign_gaussian_weights, generate_ba, generate_er, plant_anomalies, uniform_signal, PlantSpec, WeightScheme,
};
use hipgnn_core::{Label, SplitSpec, WeightedGraph};
use proptest::prelude::*;

fn random_graph(n: usize, p: f64, seed: u64) -> WeightedGraph {
    let topo = generate_er(n, p, seed).unwrap();
    if topo.edge_count() == 0 {
        return topo;
    }
    assign_gaussian_weights(&topo, &WeightScheme::new(1.0, 0.1, seed ^ 7)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn degrees_sum_to_twice_total_weight(n in 2usize..40, p in 0.0f64..1.0, seed in any::<u64>()) {
        let g = random_graph(n, p, seed);
        let total: f64 = g.edges().iter().map(|e| e.weight).sum();
        let deg: f64 = g.degrees().iter().sum();
        prop_assert!((deg - 2.0 * total).abs() <= 1e-9 * (1.0 + total));
    }

    #[test]
    fn weights_are_symmetric_and_in_range(n in 2usize..30, p in 0.0f64..1.0, seed in any::<u64>()) {
        let g = random_graph(n, p, seed);
        let (lo, hi) = g.weight_range();
        for e in g.edges() {
            prop_assert_eq!(g.weight(e.source, e.target), g.weight(e.target, e.source));
            prop_assert!(e.weight >= lo && e.weight <= hi);
            prop_assert!(e.source != e.target);
        }
    }

    #[test]
    fn negatives_avoid_the_exclusion_set(n in 6usize..40, p in 0.05f64..0.5, seed in any::<u64>(), extra in 0usize..10) {
        let g = random_graph(n, p, seed);
        let mut exclusion = g.edge_keys();
        // a few extra excluded non-edges
        let mut added = 0;
        'outer: for i in 0..n {
            for j in (i + 1)..n {
                if added == extra {
                    break 'outer;
                }
                if !g.has_edge(i, j) {
                    exclusion.insert((i, j));
                    added += 1;
                }
            }
        }
        let capacity = n * (n - 1) / 2 - exclusion.len();
        let count = capacity.min(g.edge_count().max(1));
        let sample = g.sample_negative_edges(count, seed, &exclusion).unwrap();
        prop_assert_eq!(sample.len(), count);
        let distinct: BTreeSet<_> = sample.iter().map(|&(i, j)| pair_key(i, j)).collect();
        prop_assert_eq!(distinct.len(), count);
        for &(i, j) in &sample {
            prop_assert!(i != j);
            prop_assert!(!exclusion.contains(&pair_key(i, j)));
        }
    }

    #[test]
    fn flattened_nodes_have_zero_variance(n in 4usize..30, p in 0.1f64..0.8, seed in any::<u64>()) {
        let g = random_graph(n, p, seed);
        let nodes: BTreeSet<usize> = (0..n).filter(|i| i % 3 == 0).collect();
        let flat = g.flatten_weights(&nodes, 0.5);
        let var = flat.per_node_weight_variance();
        for &i in &nodes {
            prop_assert_eq!(var[i], 0.0);
        }
        for e in flat.edges() {
            let touched = nodes.contains(&e.source) || nodes.contains(&e.target);
            let original = g.weight(e.source, e.target).unwrap();
            prop_assert_eq!(e.weight, if touched { 0.5 } else { original });
        }
    }

    #[test]
    fn splits_partition_labeled_nodes(n in 20usize..80, folds in 2usize..6, seed in any::<u64>()) {
        let labels: Vec<Label> = (0..n)
            .map(|i| match i % 7 {
                0 | 1 => Label::Positive,
                6 => Label::Unlabeled,
                _ => Label::Negative,
            })
            .collect();
        let g = WeightedGraph::new(n, (0.0, 1.0)).unwrap().with_labels(labels.clone()).unwrap();
        let spec = SplitSpec { train_ratio: 0.8, fold_count: folds, seed, stratified: true };
        let splits = g.make_splits(&spec).unwrap();
        prop_assert_eq!(splits.len(), folds);
        let mut seen = vec![0usize; n];
        let pos_total = labels.iter().filter(|l| **l == Label::Positive).count() as f64;
        let labeled = labels.iter().filter(|l| **l != Label::Unlabeled).count() as f64;
        for f in &splits {
            for &i in &f.test {
                seen[i] += 1;
                prop_assert!(labels[i] != Label::Unlabeled);
            }
            for &i in &f.train {
                prop_assert!(labels[i] != Label::Unlabeled);
                prop_assert!(!f.test.contains(&i));
            }
            let pos = f.test.iter().filter(|&&i| labels[i] == Label::Positive).count() as f64;
            let expected = pos_total / labeled * f.test.len() as f64;
            prop_assert!((pos - expected).abs() <= 1.0 + 1e-9);
        }
        for i in 0..n {
            prop_assert_eq!(seen[i], usize::from(labels[i] != Label::Unlabeled));
        }
    }

    #[test]
    fn ba_edge_count_is_closed_form(n in 3usize..120, m in 1usize..6, seed in any::<u64>()) {
        prop_assume!(m < n);
        let g = generate_ba(n, m, seed).unwrap();
        prop_assert_eq!(g.edge_count(), m * (m + 1) / 2 + m * (n - m - 1));
    }

    #[test]
    fn weighting_preserves_topology(n in 2usize..40, p in 0.0f64..1.0, seed in any::<u64>(), s2 in 0.0f64..0.2) {
        let topo = generate_er(n, p, seed).unwrap();
        prop_assume!(topo.edge_count() > 0);
        let g = assign_gaussian_weights(&topo, &WeightScheme::new(0.5, s2, seed)).unwrap();
        prop_assert_eq!(g.edge_keys(), topo.edge_keys());
    }
}

#[test]
fn er_edge_count_is_near_binomial_mean() {
    let g = generate_er(500, 0.02, 42).unwrap();
    let pairs = 500.0 * 499.0 / 2.0;
    let (mean, sd) = (0.02 * pairs, (pairs * 0.02 * 0.98f64).sqrt());
    assert!((g.edge_count() as f64 - mean).abs() <= 4.0 * sd);
}

#[test]
fn gaussian_weights_match_their_moments() {
    let topo = generate_er(200, 0.5, 1).unwrap();
    assert!(topo.edge_count() > 9_000);
    let g = assign_gaussian_weights(&topo, &WeightScheme::unclamped(0.5, 0.09, 2)).unwrap();
    let w: Vec<f64> = g.edges().iter().map(|e| e.weight).collect();
    let mean = w.iter().sum::<f64>() / w.len() as f64;
    let var = w.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (w.len() - 1) as f64;
    assert!((mean - 0.5).abs() <= 0.02);
    assert!((var - 0.09).abs() <= 0.15 * 0.09);
}

#[test]
fn planted_positives_are_more_heterogeneous() {
    let topo = generate_er(500, 0.04, 42).unwrap();
    let g = plant_anomalies(&topo, &PlantSpec::default()).unwrap();
    let labels = g.labels().unwrap();
    assert_eq!(labels.iter().filter(|l| **l == Label::Positive).count(), 100);
    let var = g.per_node_weight_variance();
    let mean_of = |want: Label| {
        let xs: Vec<f64> = (0..500).filter(|&i| labels[i] == want).map(|i| var[i]).collect();
        xs.iter().sum::<f64>() / xs.len() as f64
    };
    assert!(mean_of(Label::Positive) > mean_of(Label::Negative));
    for e in g.edges() {
        if labels[e.source] == Label::Negative && labels[e.target] == Label::Negative {
            assert_eq!(e.weight, 0.5);
        }
    }
}

#[test]
fn uniform_signal_mean() {
    let x = uniform_signal(100_000, 3);
    assert!(x.iter().all(|v| (0.0..=1.0).contains(v)));
    assert!((x.iter().sum::<f64>() / 1e5 - 0.5).abs() <= 0.01);
    assert_eq!(uniform_signal(10, 3), uniform_signal(10, 3));
}
