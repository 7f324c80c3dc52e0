use std::path::Path;

use hipgnn_core::synth::uniform_signal;
use hipgnn_core::theory::{monte_carlo_variance, verify_encoding, verify_rayleigh, MonteCarloReport, TopologySpec};
use serde::Serialize;

use crate::cli::{EncodingArgs, RayleighArgs, Topology, VarianceArgs, VerifyArgs, VerifyCheck};
use crate::error::{LabError, Result};
use crate::io;

#[derive(Debug, Serialize)]
struct Verdict<T> {
    check: &'static str,
    passed: bool,
    report: T,
}

fn finish<T: Serialize>(check: &'static str, passed: bool, report: T, out: Option<&Path>, summary: String) -> Result<()> {
    let verdict = Verdict { check, passed, report };
    if let Some(dir) = out {
        io::write_json(&dir.join("report.json"), &verdict)?;
    }
    println!("{check}: {} ({summary})", if passed { "PASS" } else { "FAIL" });
    if passed {
        Ok(())
    } else {
        Err(LabError::Verification(format!("{check} check failed: {summary}")))
    }
}

pub fn run(args: &VerifyArgs) -> Result<()> {
    match &args.check {
        VerifyCheck::Rayleigh(a) => rayleigh(a),
        VerifyCheck::Variance(a) => variance(a),
        VerifyCheck::Encoding(a) => encoding(a),
    }
}

fn rayleigh(a: &RayleighArgs) -> Result<()> {
    let r = verify_rayleigh(a.trials, (a.n_min, a.n_max), a.seed)?;
    let worst = r.max_discrepancy.max(r.max_form_discrepancy);
    let summary = format!("max discrepancy {:e} over {} trials, tolerance {:e}", worst, r.trials, a.tolerance);
    finish("rayleigh", worst <= a.tolerance, r, a.out.as_deref(), summary)
}

pub fn variance_report(a: &VarianceArgs) -> Result<MonteCarloReport> {
    let spec = match a.topology {
        Topology::Er => TopologySpec::Er { n: a.n, p: a.p },
        Topology::Ba => TopologySpec::Ba { n: a.n, m: a.m },
    };
    let topo = spec.generate(a.topology_seed)?;
    let signal = uniform_signal(a.n, a.signal_seed);
    Ok(monte_carlo_variance(
        &topo,
        &spec.describe(),
        a.mu,
        &a.sigma2,
        a.draws,
        &signal,
        Some(a.signal_seed),
        a.laplacian,
        a.seed,
    )?)
}

fn variance(a: &VarianceArgs) -> Result<()> {
    let r = variance_report(a)?;
    let margins = r.separation_margins(a.stderr_multiple);
    let passed = r.is_increasing_with_margin(a.stderr_multiple);
    let summary = format!(
        "means {:?}, stderr {:?}, margins at {} stderr {:?}",
        r.mean_variance, r.stderr, a.stderr_multiple, margins
    );
    finish("variance", passed, r, a.out.as_deref(), summary)
}

fn encoding(a: &EncodingArgs) -> Result<()> {
    let r = verify_encoding(a.pairs, a.dim, a.seed)?;
    let summary = format!(
        "closed form {:e}, asymmetry {:e}, shift {:e}, tolerance {:e}",
        r.max_closed_form_error, r.max_asymmetry, r.max_shift_error, a.tolerance
    );
    finish("encoding", r.passed(a.tolerance), r, a.out.as_deref(), summary)
}
