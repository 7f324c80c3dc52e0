use std::fs;
use std::path::Path;

use hipgnn_core::synth::{generate_er, plant_anomalies, PlantSpec};
use hipgnn_core::{Label, WeightedGraph};
use hipgnn_lab::io::{self, GraphPaths};
use hipgnn_lab::LabError;
use proptest::prelude::*;

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn edges_only(dir: &Path, text: &str) -> GraphPaths {
    GraphPaths {
        edges: write(dir, "edges.tsv", text),
        ..GraphPaths::default()
    }
}

#[test]
fn three_row_file() {
    let dir = tempfile::tempdir().unwrap();
    let paths = edges_only(dir.path(), "# comment\na\tb\t0.7\nb\tc\t0.9\n\na\tc\t0.65\n");
    let g = io::load_graph(&paths, (0.6, 1.0)).unwrap();
    assert_eq!(g.node_count(), 3);
    assert_eq!(g.edge_count(), 3);
    assert_eq!(g.node_names().unwrap(), ["a", "b", "c"]);
    assert_eq!(g.weight(0, 2), Some(0.65));
}

#[test]
fn structural_errors_are_data_errors() {
    let dir = tempfile::tempdir().unwrap();
    for text in ["a\ta\t0.8\n", "a\tb\t0.7\nb\ta\t0.8\n", "a\tb\t0.5\n"] {
        let paths = edges_only(dir.path(), text);
        let err = io::load_graph(&paths, (0.6, 1.0)).unwrap_err();
        assert!(matches!(err, LabError::Data(_)), "{text:?}: {err}");
        assert_eq!(err.exit_code(), 5);
    }
}

#[test]
fn malformed_rows_report_their_line() {
    let dir = tempfile::tempdir().unwrap();
    for (text, line) in [("a\tb\t0.7\n# c\nb\tc\n", 3), ("a\tb\tx\n", 1), ("a\tb\t0.7\n\nb\tc\tNaN\n", 3)] {
        let paths = edges_only(dir.path(), text);
        match io::load_graph(&paths, (0.0, 1.0)) {
            Err(LabError::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
            other => panic!("{text:?}: {other:?}"),
        }
    }
}

#[test]
fn feature_and_label_files() {
    let dir = tempfile::tempdir().unwrap();
    let mut paths = edges_only(dir.path(), "a\tb\t0.7\nb\tc\t0.9\n");
    paths.features = Some(write(dir.path(), "f.tsv", "c\t3\t30\na\t1\t10\nb\t2\t20\n"));
    paths.labels = Some(write(dir.path(), "l.tsv", "a\t1\nc\t0\n"));
    let g = io::load_graph(&paths, (0.0, 1.0)).unwrap();
    let f = g.features().unwrap();
    assert_eq!(f.row(0), [1.0, 10.0]);
    assert_eq!(f.row(2), [3.0, 30.0]);
    assert_eq!(g.labels().unwrap(), [Label::Positive, Label::Unlabeled, Label::Negative]);

    paths.labels = Some(write(dir.path(), "l.tsv", "a\t1\nzz\t0\n"));
    let err = io::load_graph(&paths, (0.0, 1.0)).unwrap_err();
    assert!(matches!(err, LabError::Data(ref m) if m.contains("zz")), "{err}");

    paths.labels = Some(write(dir.path(), "l.tsv", "a\t2\n"));
    assert!(matches!(io::load_graph(&paths, (0.0, 1.0)), Err(LabError::Parse { line: 1, .. })));

    paths.labels = None;
    paths.features = Some(write(dir.path(), "f.tsv", "a\t1\nb\t2\t3\n"));
    assert!(matches!(io::load_graph(&paths, (0.0, 1.0)), Err(LabError::Parse { line: 2, .. })));
    paths.features = Some(write(dir.path(), "f.tsv", "a\t1\nb\t2\n"));
    assert!(matches!(io::load_graph(&paths, (0.0, 1.0)), Err(LabError::Data(_))));
}

fn assert_same_graph(a: &WeightedGraph, b: &WeightedGraph) {
    assert_eq!(a.node_count(), b.node_count());
    assert_eq!(a.edge_count(), b.edge_count());
    for (x, y) in a.edges().iter().zip(b.edges()) {
        assert_eq!((x.source, x.target), (y.source, y.target));
        assert_eq!(x.weight.to_bits(), y.weight.to_bits());
    }
    assert_eq!(a.labels(), b.labels());
    match (a.features(), b.features()) {
        (Some(f), Some(g)) => assert!(f.as_slice().iter().zip(g.as_slice()).all(|(p, q)| p.to_bits() == q.to_bits())),
        (None, None) => {}
        _ => panic!("feature presence differs"),
    }
}

#[test]
fn planted_graph_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let topo = generate_er(80, 0.1, 3).unwrap();
    let g = plant_anomalies(&topo, &PlantSpec { feature_dim: 3, ..PlantSpec::default() }).unwrap();
    let paths = io::write_graph(dir.path(), &g).unwrap();
    let back = io::load_graph(&paths, g.weight_range()).unwrap();
    // isolated nodes vanish from an edge list, so compare on the relabeled graph
    let order: Vec<usize> = back
        .node_names()
        .unwrap()
        .iter()
        .map(|s| s.parse().unwrap())
        .collect();
    let sub = g.induced_subgraph(&order).unwrap();
    assert_same_graph(&sub, &back);
    assert_eq!(io::edges_tsv(&back), io::edges_tsv(&g));
}

#[test]
fn exclusion_pairs_map_to_indices() {
    let dir = tempfile::tempdir().unwrap();
    let g = io::load_graph(&edges_only(dir.path(), "a\tb\t1\nb\tc\t1\nc\td\t1\n"), (0.0, 1.0)).unwrap();
    let p = write(dir.path(), "x.tsv", "d\ta\t0.9\nq\ta\n# note\nc\ta\n");
    let ex = io::read_exclusion(&p, &g).unwrap();
    assert_eq!(ex.into_iter().collect::<Vec<_>>(), vec![(0, 2), (0, 3)]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn weights_survive_a_write_read_cycle(weights in prop::collection::vec(-1e6f64..1e6, 1..40)) {
        let edges: Vec<(usize, usize, f64)> = weights.iter().enumerate().map(|(k, &w)| (k, k + 1, w)).collect();
        let g = WeightedGraph::from_edges(weights.len() + 1, edges, (-1e6, 1e6)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let paths = io::write_graph(dir.path(), &g).unwrap();
        let back = io::load_graph(&paths, (-1e6, 1e6)).unwrap();
        assert_same_graph(&g, &back);
    }
}

#[test]
fn isolated_nodes_are_dropped_on_write() {
    let labels = vec![Label::Positive, Label::Negative, Label::Negative];
    let g = WeightedGraph::from_edges(3, [(0, 1, 0.5)], (0.0, 1.0)).unwrap().with_labels(labels).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let back = io::load_graph(&io::write_graph(dir.path(), &g).unwrap(), (0.0, 1.0)).unwrap();
    assert_eq!(back.node_count(), 2);
    assert_eq!(back.labels().unwrap(), [Label::Positive, Label::Negative]);
}
