use std::collections::BTreeMap;

use hipgnn_core::rng::RNG_ALGORITHM;
use hipgnn_core::synth::{assign_gaussian_weights, generate_ba, generate_er, plant_anomalies, PlantSpec, WeightScheme};
use hipgnn_core::WeightedGraph;
use serde_json::json;

use crate::cli::{GraphModel, SynthArgs};
use crate::error::Result;
use crate::io::{self, SynthMeta, META_FILE};

/// Build the graph described by `args` together with its sidecar.
///
/// The planted model draws an ER topology and plants on it with the same
/// seed; the two use disjoint random streams.
pub fn generate(args: &SynthArgs) -> Result<(WeightedGraph, SynthMeta)> {
    let mut params = BTreeMap::new();
    params.insert("n".to_string(), json!(args.n));
    let (generator, g) = match args.model {
        GraphModel::Er | GraphModel::Ba => {
            let (name, topo) = if args.model == GraphModel::Er {
                params.insert("p".into(), json!(args.p));
                ("er", generate_er(args.n, args.p, args.seed)?)
            } else {
                params.insert("m".into(), json!(args.m));
                ("ba", generate_ba(args.n, args.m, args.seed)?)
            };
            let g = match args.sigma2 {
                Some(s2) => {
                    params.insert("mu".into(), json!(args.mu));
                    params.insert("sigma2".into(), json!(s2));
                    params.insert("clamp".into(), json!([args.clamp_min, args.clamp_max]));
                    let scheme = WeightScheme {
                        clamp: Some((args.clamp_min, args.clamp_max)),
                        ..WeightScheme::new(args.mu, s2, args.seed)
                    };
                    assign_gaussian_weights(&topo, &scheme)?
                }
                None => topo,
            };
            (name, g)
        }
        GraphModel::Planted => {
            let spec = PlantSpec {
                anomaly_fraction: args.anomaly_fraction,
                sigma2_anom: args.sigma2_anom,
                sigma2_norm: args.sigma2_norm,
                mu: args.mu,
                clamp: (args.clamp_min, args.clamp_max),
                feature_dim: args.feature_dim,
                seed: args.seed,
            };
            params.insert("p".into(), json!(args.p));
            params.insert("anomaly_fraction".into(), json!(spec.anomaly_fraction));
            params.insert("sigma2_anom".into(), json!(spec.sigma2_anom));
            params.insert("sigma2_norm".into(), json!(spec.sigma2_norm));
            params.insert("mu".into(), json!(spec.mu));
            params.insert("clamp".into(), json!([spec.clamp.0, spec.clamp.1]));
            params.insert("feature_dim".into(), json!(spec.feature_dim));
            let topo = generate_er(args.n, args.p, args.seed)?;
            ("planted-er", plant_anomalies(&topo, &spec)?)
        }
    };
    let meta = SynthMeta {
        generator: generator.into(),
        params,
        seed: args.seed,
        rng: RNG_ALGORITHM.into(),
        node_count: g.node_count(),
        edge_count: g.edge_count(),
    };
    Ok((g, meta))
}

pub fn run(args: &SynthArgs) -> Result<()> {
    let (g, meta) = generate(args)?;
    io::write_graph(&args.out, &g)?;
    io::write_json(&args.out.join(META_FILE), &meta)?;
    println!(
        "{}: {} nodes, {} edges -> {}",
        meta.generator,
        meta.node_count,
        meta.edge_count,
        args.out.display()
    );
    Ok(())
}
