use hipgnn_core::spectral::{decompose_graph, energy_kde, energy_profile, rayleigh_quotient, KdeOptions};
use hipgnn_core::synth::uniform_signal;
use hipgnn_core::theory::{class_variance_means, flatten_experiment, node_variance_table, FlattenSpec, TopologySpec};
use serde_json::json;

use crate::cli::{FlattenArgs, NodeVarianceArgs, SpectraArgs, Topology, TopologyArgs};
use crate::error::Result;
use crate::io;
use crate::run::{csv_string, RunDir};

pub fn run_spectra(args: &SpectraArgs) -> Result<()> {
    let cfg = args.data.resolve()?;
    let g = cfg.data.load()?;
    let kind = cfg.spectral.laplacian;
    let mut run = RunDir::create(&args.out)?;
    run.snapshot(&cfg)?;
    let signal = match &args.signal {
        Some(p) => io::read_signal(p, &g)?,
        None => uniform_signal(g.node_count(), args.signal_seed),
    };
    let d = decompose_graph(&g, kind, None)?;
    let profile = energy_profile(&d, &signal)?;
    let kde = energy_kde(
        &profile,
        d.eigenvalues(),
        args.grid,
        KdeOptions {
            bandwidth: args.bandwidth,
            exclude_first: args.exclude_first,
        },
    )?;
    let rq = rayleigh_quotient(&g, &signal, kind)?;
    run.write("energy.csv", &energy_csv(&profile.eigenvalues, &profile.energies, &profile.cumulative)?)?;
    run.write("kde.csv", &csv_string(&["grid", "density"], kde.grid.iter().zip(&kde.density).map(|(x, y)| [x.to_string(), y.to_string()]))?)?;
    io::write_json(
        &run.path("summary.json"),
        &json!({
            "node_count": g.node_count(),
            "edge_count": g.edge_count(),
            "laplacian": kind,
            "signal": args.signal.as_ref().map(|p| p.display().to_string()),
            "signal_seed": args.signal.is_none().then_some(args.signal_seed),
            "expectation": profile.expectation,
            "variance": profile.variance,
            "rayleigh_quotient": rq,
            "bandwidth": kde.bandwidth,
        }),
    )?;
    run.note(&format!("expectation {} rayleigh {} variance {}", profile.expectation, rq, profile.variance));
    println!("E[lambda] = {}  x'Lx/x'x = {}  Var[lambda] = {}", profile.expectation, rq, profile.variance);
    Ok(())
}

fn energy_csv(lambda: &[f64], f: &[f64], eta: &[f64]) -> Result<String> {
    csv_string(
        &["lambda", "f", "eta"],
        lambda.iter().zip(f).zip(eta).map(|((l, f), e)| [l.to_string(), f.to_string(), e.to_string()]),
    )
}

pub fn topology_spec(t: &TopologyArgs) -> TopologySpec {
    match t.topology {
        Topology::Er => TopologySpec::Er { n: t.n, p: t.p },
        Topology::Ba => TopologySpec::Ba { n: t.n, m: t.m },
    }
}

pub fn flatten_spec(args: &FlattenArgs) -> FlattenSpec {
    FlattenSpec {
        topology_seed: args.topology.topology_seed,
        mu: args.mu,
        clamp: (args.clamp_min, args.clamp_max),
        weight_seed: args.weight_seed,
        signal_seed: args.signal_seed,
        kind: args.laplacian,
        kde_grid_points: args.grid,
        low_percentile: args.low_percentile,
        high_percentile: args.high_percentile,
        ..FlattenSpec::new(topology_spec(&args.topology), args.sigma2.clone())
    }
}

pub fn run_flatten(args: &FlattenArgs) -> Result<()> {
    let spec = flatten_spec(args);
    let mut run = RunDir::create(&args.out)?;
    let report = flatten_experiment(&spec)?;
    let mut energy = Vec::new();
    let mut kde = Vec::new();
    for level in &report.levels {
        let p = &level.profile;
        for k in 0..p.eigenvalues.len() {
            energy.push([level.sigma2, p.eigenvalues[k], p.energies[k], p.cumulative[k]].map(|v| v.to_string()));
        }
        for (x, y) in level.kde.grid.iter().zip(&level.kde.density) {
            kde.push([level.sigma2, *x, *y].map(|v| v.to_string()));
        }
    }
    run.write("energy.csv", &csv_string(&["sigma2", "lambda", "f", "eta"], energy)?)?;
    run.write("kde.csv", &csv_string(&["sigma2", "grid", "density"], kde)?)?;
    io::write_json(
        &run.path("report.json"),
        &json!({
            "spec": report.spec,
            "topology": report.topology,
            "rng": report.rng,
            "low_index": report.low_index,
            "high_index": report.high_index,
            "low_cumulative": report.low_cumulative,
            "high_tail": report.high_tail,
            "low_increasing": report.low_increasing,
            "high_increasing": report.high_increasing,
            "passed": report.passed(),
        }),
    )?;
    let line = format!(
        "{}: low-end cumulative {:?} ({}), high-end tail {:?} ({})",
        report.topology.description,
        report.low_cumulative,
        if report.low_increasing { "increasing" } else { "not increasing" },
        report.high_tail,
        if report.high_increasing { "increasing" } else { "not increasing" },
    );
    run.note(&line);
    println!("{line}");
    Ok(())
}

pub fn run_node_variance(args: &NodeVarianceArgs) -> Result<()> {
    let cfg = args.data.resolve()?;
    let g = cfg.data.load()?;
    let mut run = RunDir::create(&args.out)?;
    run.snapshot(&cfg)?;
    let rows = node_variance_table(&g).into_iter().map(|(i, var, label)| {
        [
            g.node_name(i),
            var.to_string(),
            label.map(|t| (t as u8).to_string()).unwrap_or_default(),
        ]
    });
    run.write("node_variance.csv", &csv_string(&["node", "variance", "label"], rows)?)?;
    if let Some((pos, neg)) = class_variance_means(&g) {
        let line = format!("mean incident weight variance: positive {pos}, negative {neg}");
        run.note(&line);
        println!("{line}");
    }
    Ok(())
}
