//! Tab-separated graph files.
//!
//! Edges are `idA<TAB>idB<TAB>confidence`, features `id<TAB>f1 … fF`, labels
//! `id<TAB>{0,1}`. Blank lines and lines starting with `#` are skipped. Node
//! ids become dense indices in order of first appearance in the edge file.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use hipgnn_core::graph::pair_key;
use hipgnn_core::{Label, Matrix, WeightedGraph};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

pub const EDGES_FILE: &str = "edges.tsv";
pub const FEATURES_FILE: &str = "features.tsv";
pub const LABELS_FILE: &str = "labels.tsv";
pub const META_FILE: &str = "meta.json";

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| LabError::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))?;
        }
    }
    fs::write(path, text).map_err(|e| LabError::io(path, e))
}

/// Non-comment rows as `(1-based line number, fields)`.
fn rows(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, line)| {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            None
        } else {
            Some((i + 1, line.split('\t').collect()))
        }
    })
}

fn parse_error(path: &Path, line: usize, message: impl Into<String>) -> LabError {
    LabError::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn parse_real(path: &Path, line: usize, field: &str) -> Result<f64> {
    let v: f64 = field
        .trim()
        .parse()
        .map_err(|_| parse_error(path, line, format!("`{field}` is not a number")))?;
    if !v.is_finite() {
        return Err(parse_error(path, line, format!("`{field}` is not finite")));
    }
    Ok(v)
}

/// Where to find the files of one graph.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GraphPaths {
    pub edges: PathBuf,
    pub features: Option<PathBuf>,
    pub labels: Option<PathBuf>,
}

impl GraphPaths {
    /// The three files written by [`write_graph`] into `dir`; optional ones
    /// are kept only if present.
    pub fn in_dir(dir: &Path) -> Self {
        let opt = |name: &str| Some(dir.join(name)).filter(|p| p.exists());
        Self {
            edges: dir.join(EDGES_FILE),
            features: opt(FEATURES_FILE),
            labels: opt(LABELS_FILE),
        }
    }
}

pub fn load_graph(paths: &GraphPaths, weight_range: (f64, f64)) -> Result<WeightedGraph> {
    let path = paths.edges.as_path();
    let text = read_text(path)?;
    let mut ids: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut edges = Vec::new();
    for (line, fields) in rows(&text) {
        if fields.len() != 3 {
            return Err(parse_error(path, line, format!("expected 3 tab-separated fields, found {}", fields.len())));
        }
        let mut ends = [0usize; 2];
        for (slot, raw) in ends.iter_mut().zip(&fields[..2]) {
            let id = raw.trim();
            if id.is_empty() {
                return Err(parse_error(path, line, "empty node id"));
            }
            *slot = *index.entry(id.to_string()).or_insert_with(|| {
                ids.push(id.to_string());
                ids.len() - 1
            });
        }
        let w = parse_real(path, line, fields[2])?;
        edges.push((line, ends[0], ends[1], w));
    }
    let mut g = WeightedGraph::new(ids.len(), weight_range)?;
    for (line, i, j, w) in edges {
        g.add_edge(i, j, w)
            .map_err(|e| LabError::Data(format!("{}:{line}: {e}", path.display())))?;
    }
    if let Some(fp) = &paths.features {
        g = g.with_features(read_features(fp, &index)?)?;
    }
    if let Some(lp) = &paths.labels {
        g = g.with_labels(read_labels(lp, &index)?)?;
    }
    Ok(g.with_node_names(ids))
}

fn lookup(index: &HashMap<String, usize>, path: &Path, line: usize, id: &str) -> Result<usize> {
    index.get(id).copied().ok_or_else(|| {
        LabError::Data(format!(
            "{}:{line}: node `{id}` does not appear in the edge file",
            path.display()
        ))
    })
}

fn read_features(path: &Path, index: &HashMap<String, usize>) -> Result<Matrix> {
    let text = read_text(path)?;
    let n = index.len();
    let mut width = None;
    let mut rows_by_node: Vec<Option<Vec<f64>>> = vec![None; n];
    for (line, fields) in rows(&text) {
        if fields.len() < 2 {
            return Err(parse_error(path, line, "expected an id and at least one feature"));
        }
        let values = fields[1..]
            .iter()
            .map(|f| parse_real(path, line, f))
            .collect::<Result<Vec<f64>>>()?;
        match width {
            None => width = Some(values.len()),
            Some(w) if w != values.len() => {
                return Err(parse_error(path, line, format!("expected {w} features, found {}", values.len())));
            }
            Some(_) => {}
        }
        let node = lookup(index, path, line, fields[0].trim())?;
        if rows_by_node[node].replace(values).is_some() {
            return Err(parse_error(path, line, format!("duplicate feature row for `{}`", fields[0].trim())));
        }
    }
    let width = width.ok_or_else(|| LabError::Data(format!("{}: no feature rows", path.display())))?;
    let mut m = Matrix::zeros(n, width);
    for (node, row) in rows_by_node.into_iter().enumerate() {
        let row = row.ok_or_else(|| LabError::Data(format!("{}: node {node} has no feature row", path.display())))?;
        for (c, v) in row.into_iter().enumerate() {
            m[(node, c)] = v;
        }
    }
    Ok(m)
}

/// Nodes without a label row are unlabeled.
fn read_labels(path: &Path, index: &HashMap<String, usize>) -> Result<Vec<Label>> {
    let text = read_text(path)?;
    let mut labels = vec![Label::Unlabeled; index.len()];
    let mut seen = BTreeSet::new();
    for (line, fields) in rows(&text) {
        if fields.len() != 2 {
            return Err(parse_error(path, line, format!("expected 2 tab-separated fields, found {}", fields.len())));
        }
        let label = match fields[1].trim() {
            "1" => Label::Positive,
            "0" => Label::Negative,
            other => return Err(parse_error(path, line, format!("label `{other}` is not 0 or 1"))),
        };
        let node = lookup(index, path, line, fields[0].trim())?;
        if !seen.insert(node) {
            return Err(parse_error(path, line, format!("duplicate label row for `{}`", fields[0].trim())));
        }
        labels[node] = label;
    }
    Ok(labels)
}

/// Known interactions to keep out of negative sampling, one `idA<TAB>idB`
/// pair per row (a third column is ignored). Pairs naming nodes outside the
/// graph cannot be sampled anyway and are dropped.
pub fn read_exclusion(path: &Path, g: &WeightedGraph) -> Result<BTreeSet<(usize, usize)>> {
    let text = read_text(path)?;
    let index: HashMap<String, usize> = (0..g.node_count()).map(|i| (g.node_name(i), i)).collect();
    let mut out = BTreeSet::new();
    for (line, fields) in rows(&text) {
        if fields.len() < 2 {
            return Err(parse_error(path, line, "expected at least 2 tab-separated fields"));
        }
        if let (Some(&i), Some(&j)) = (index.get(fields[0].trim()), index.get(fields[1].trim())) {
            if i != j {
                out.insert(pair_key(i, j));
            }
        }
    }
    Ok(out)
}

pub fn edges_tsv(g: &WeightedGraph) -> String {
    let mut s = String::new();
    for e in g.edges() {
        let _ = writeln!(s, "{}\t{}\t{}", g.node_name(e.source), g.node_name(e.target), e.weight);
    }
    s
}

pub fn features_tsv(g: &WeightedGraph) -> Option<String> {
    let f = g.features()?;
    let mut s = String::new();
    for i in (0..f.rows()).filter(|&i| g.degree_count(i) > 0) {
        s.push_str(&g.node_name(i));
        for c in 0..f.cols() {
            let _ = write!(s, "\t{}", f[(i, c)]);
        }
        s.push('\n');
    }
    Some(s)
}

pub fn labels_tsv(g: &WeightedGraph) -> Option<String> {
    let labels = g.labels()?;
    let mut s = String::new();
    for (i, l) in labels.iter().enumerate() {
        if g.degree_count(i) == 0 {
            continue;
        }
        if let Some(t) = l.as_target() {
            let _ = writeln!(s, "{}\t{}", g.node_name(i), t as u8);
        }
    }
    Some(s)
}

/// Write `edges.tsv` plus `features.tsv` and `labels.tsv` when the graph has
/// them. Weights and features use shortest round-trip formatting, so reading
/// the files back reproduces the graph exactly, minus isolated nodes, which
/// an edge list cannot carry.
pub fn write_graph(dir: &Path, g: &WeightedGraph) -> Result<GraphPaths> {
    let mut paths = GraphPaths {
        edges: dir.join(EDGES_FILE),
        ..GraphPaths::default()
    };
    let isolated = (0..g.node_count()).filter(|&i| g.degree_count(i) == 0).count();
    if isolated > 0 {
        log::warn!("{isolated} isolated nodes are left out of {}", dir.display());
    }
    write_text(&paths.edges, &edges_tsv(g))?;
    if let Some(s) = features_tsv(g) {
        let p = dir.join(FEATURES_FILE);
        write_text(&p, &s)?;
        paths.features = Some(p);
    }
    if let Some(s) = labels_tsv(g) {
        let p = dir.join(LABELS_FILE);
        write_text(&p, &s)?;
        paths.labels = Some(p);
    }
    Ok(paths)
}

/// Sidecar describing how a synthetic graph was generated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthMeta {
    pub generator: String,
    pub params: BTreeMap<String, serde_json::Value>,
    pub seed: u64,
    pub rng: String,
    pub node_count: usize,
    pub edge_count: usize,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| LabError::Compute(e.to_string()))?;
    text.push('\n');
    write_text(path, &text)
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| parse_error(path, e.line(), e.to_string()))
}

/// One signal value per row, optionally prefixed by a node id column. Ids,
/// when present, must cover every node.
pub fn read_signal(path: &Path, g: &WeightedGraph) -> Result<Vec<f64>> {
    let text = read_text(path)?;
    let index: HashMap<String, usize> = (0..g.node_count()).map(|i| (g.node_name(i), i)).collect();
    let mut by_id: Vec<Option<f64>> = vec![None; g.node_count()];
    let mut plain = Vec::new();
    for (line, fields) in rows(&text) {
        match fields.as_slice() {
            [v] => plain.push(parse_real(path, line, v)?),
            [id, v] => {
                let node = lookup(&index, path, line, id.trim())?;
                by_id[node] = Some(parse_real(path, line, v)?);
            }
            _ => return Err(parse_error(path, line, "expected `value` or `id<TAB>value`")),
        }
    }
    if !plain.is_empty() {
        if plain.len() != g.node_count() {
            return Err(LabError::Data(format!(
                "{}: {} values for {} nodes",
                path.display(),
                plain.len(),
                g.node_count()
            )));
        }
        return Ok(plain);
    }
    by_id
        .into_iter()
        .enumerate()
        .map(|(i, v)| v.ok_or_else(|| LabError::Data(format!("{}: no value for node `{}`", path.display(), g.node_name(i)))))
        .collect()
}
