//! Plain-text parameter checkpoints.
//!
//! ```text
//! hipgnn-checkpoint v1
//! meta {"node_count":…}
//! param head.node.w1 2 64 1
//! 0.123 -0.5 …
//! ```
//!
//! A `param` line gives the name, rank and dimensions; the next line holds
//! the row-major values. Values use shortest round-trip formatting, so a
//! save/load cycle is bit-exact.

use std::fmt::Write as _;
use std::path::Path;

use hipgnn_core::autodiff::{ParamStore, Tensor};
use hipgnn_core::model::HipgnnConfig;
use hipgnn_core::LaplacianKind;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::io;

pub const MAGIC: &str = "hipgnn-checkpoint v1";

/// Everything besides the weights needed to rebuild the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub node_count: usize,
    pub feature_dim: usize,
    pub laplacian: LaplacianKind,
    pub model: HipgnnConfig,
    pub epoch: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub meta: CheckpointMeta,
    pub params: ParamStore,
}

impl Checkpoint {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str(MAGIC);
        s.push('\n');
        let meta = serde_json::to_string(&self.meta).expect("checkpoint metadata serializes");
        let _ = writeln!(s, "meta {meta}");
        for (name, t) in self.params.iter() {
            let _ = write!(s, "param {name} {}", t.rank());
            for d in t.shape() {
                let _ = write!(s, " {d}");
            }
            s.push('\n');
            let mut first = true;
            for v in t.data() {
                if !first {
                    s.push(' ');
                }
                first = false;
                let _ = write!(s, "{v}");
            }
            s.push('\n');
        }
        s
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let err = |line: usize, message: String| LabError::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        match lines.next() {
            Some((_, l)) if l == MAGIC => {}
            _ => return Err(err(1, format!("missing `{MAGIC}` header"))),
        }
        let (ln, meta_line) = lines.next().ok_or_else(|| err(2, "missing meta line".into()))?;
        let meta_json = meta_line
            .strip_prefix("meta ")
            .ok_or_else(|| err(ln, "expected `meta {…}`".into()))?;
        let meta: CheckpointMeta = serde_json::from_str(meta_json).map_err(|e| err(ln, e.to_string()))?;

        let mut params = ParamStore::new();
        while let Some((ln, header)) = lines.next() {
            if header.is_empty() {
                continue;
            }
            let mut parts = header.split(' ');
            if parts.next() != Some("param") {
                return Err(err(ln, "expected `param <name> <rank> <dims…>`".into()));
            }
            let name = parts.next().ok_or_else(|| err(ln, "missing parameter name".into()))?;
            let nums = parts
                .map(|p| p.parse::<usize>().map_err(|_| err(ln, format!("bad dimension `{p}`"))))
                .collect::<Result<Vec<usize>>>()?;
            let (rank, shape) = nums.split_first().ok_or_else(|| err(ln, "missing rank".into()))?;
            if *rank != shape.len() {
                return Err(err(ln, format!("rank {rank} but {} dimensions", shape.len())));
            }
            let (vln, body) = lines.next().ok_or_else(|| err(ln + 1, format!("missing values for `{name}`")))?;
            let data = body
                .split(' ')
                .filter(|t| !t.is_empty())
                .map(|t| t.parse::<f64>().map_err(|_| err(vln, format!("bad value `{t}`"))))
                .collect::<Result<Vec<f64>>>()?;
            let tensor = Tensor::new(shape.to_vec(), data).map_err(|e| err(vln, e.to_string()))?;
            if params.contains(name) {
                return Err(err(ln, format!("duplicate parameter `{name}`")));
            }
            params.insert(name, tensor);
        }
        Ok(Self { meta, params })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        io::write_text(path, &self.to_text())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&io::read_text(path)?, path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip_is_bit_exact() {
        let mut params = ParamStore::new();
        params.insert("a.w", Tensor::new(vec![2, 2], vec![0.1, -1e-300, 1.0 / 3.0, 7.0]).unwrap());
        params.insert("b", Tensor::scalar(f64::MIN_POSITIVE));
        let ck = Checkpoint {
            meta: CheckpointMeta {
                node_count: 5,
                feature_dim: 1,
                laplacian: LaplacianKind::Normalized,
                model: HipgnnConfig::default(),
                epoch: 3,
            },
            params,
        };
        let back = Checkpoint::parse(&ck.to_text(), Path::new("x")).unwrap();
        assert_eq!(back, ck);
        for (name, t) in ck.params.iter() {
            let u = back.params.get(name).unwrap();
            assert!(t.data().iter().zip(u.data()).all(|(a, b)| a.to_bits() == b.to_bits()));
        }
    }

    #[test]
    fn rejects_bad_header() {
        assert!(matches!(
            Checkpoint::parse("nope\n", Path::new("x")),
            Err(LabError::Parse { line: 1, .. })
        ));
    }
}
