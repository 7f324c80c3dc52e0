use std::time::Instant;

use hipgnn_core::metrics::EvalReport;
use serde_json::json;

use crate::checkpoint::Checkpoint;
use crate::cli::{CvArgs, EvaluateArgs, ExportFilterArgs, TrainArgs};
use crate::error::{LabError, Result};
use crate::io;
use crate::pipeline::{history_csv, scores_csv, Prepared};
use crate::run::{csv_string, RunDir};

pub const CHECKPOINT_FILE: &str = "checkpoint.txt";

pub fn run_train(args: &TrainArgs) -> Result<()> {
    let cfg = args.resolve()?;
    let mut run = RunDir::create(&args.out)?;
    run.snapshot(&cfg)?;
    let t0 = Instant::now();
    let prepared = Prepared::load(&cfg)?;
    run.note(&format!(
        "graph: {} nodes, {} edges, {} features; {} eigenpairs kept; block {:?}",
        prepared.graph.node_count(),
        prepared.graph.edge_count(),
        prepared.features.cols(),
        prepared.inputs.decomposition.len(),
        prepared.model.block_kind(),
    ));
    let fold = prepared.single_split(&cfg)?;
    run.note(&format!("split: {} train, {} test", fold.train.len(), fold.test.len()));
    let outcome = prepared.train(&fold, &cfg.train)?;
    run.note(&format!("trained {} epochs in {:.1?}", outcome.history.len(), t0.elapsed()));

    run.write("history.csv", &history_csv(&outcome.history)?)?;
    let ck = prepared.checkpoint(&cfg, &outcome);
    ck.save(&run.path(CHECKPOINT_FILE))?;
    let scores = prepared.predict(&ck)?;
    run.write("scores.csv", &scores_csv(&prepared.graph, &scores, Some(&fold))?)?;
    let best = &outcome.best;
    io::write_json(
        &run.path("best.json"),
        &json!({
            "epoch": best.epoch,
            "best_metric": cfg.train.best_metric.name(),
            "train": best.train,
            "test": best.test,
            "link_pairs": outcome.link_pairs,
        }),
    )?;
    let line = format!(
        "best epoch {}: test auc {:.4} f1 {:.4} ap {:.4}",
        best.epoch, best.test.auc, best.test.f1_macro, best.test.ap
    );
    run.note(&line);
    println!("{line}");
    Ok(())
}

pub fn run_evaluate(args: &EvaluateArgs) -> Result<()> {
    let mut cfg = args.data.resolve()?;
    args.split.apply(&mut cfg);
    if let Some(t) = args.threshold {
        cfg.train.threshold = t;
    }
    let ck = Checkpoint::load(&args.checkpoint)?;
    let graph = cfg.data.load()?;
    let mut run = RunDir::create(&args.out)?;
    cfg.spectral.laplacian = ck.meta.laplacian;
    cfg.model = ck.meta.model.clone();
    run.snapshot(&cfg)?;
    let prepared = Prepared::from_checkpoint(&ck, graph)?;
    let scores = prepared.predict(&ck)?;
    let mut reports: Vec<EvalReport> = Vec::new();
    let mut fold = None;
    if prepared.graph.labels().is_some() {
        let f = prepared.single_split(&cfg)?;
        let labeled: Vec<usize> = {
            let mut all: Vec<usize> = f.train.iter().chain(&f.test).copied().collect();
            all.sort_unstable();
            all
        };
        for (name, nodes) in [("train", &f.train), ("test", &f.test), ("labeled", &labeled)] {
            let mut r = prepared.report(&scores, nodes, cfg.train.threshold, name)?;
            r.epoch = Some(ck.meta.epoch);
            reports.push(r);
        }
        fold = Some(f);
    }
    run.write("scores.csv", &scores_csv(&prepared.graph, &scores, fold.as_ref())?)?;
    io::write_json(&run.path("metrics.json"), &reports)?;
    for r in &reports {
        let line = format!("{}: auc {:.4} f1 {:.4} ap {:.4}", r.split, r.auc, r.f1_macro, r.ap);
        run.note(&line);
        println!("{line}");
    }
    Ok(())
}

pub fn run_cv(args: &CvArgs) -> Result<()> {
    let mut cfg = args.train.resolve()?;
    if let Some(k) = args.folds {
        cfg.split.folds = k;
    }
    cfg.validate()?;
    if args.jobs == 0 {
        return Err(LabError::Usage("--jobs must be at least 1".into()));
    }
    let mut run = RunDir::create(&args.train.out)?;
    run.snapshot(&cfg)?;
    let prepared = Prepared::load(&cfg)?;
    let folds = prepared.graph.make_splits(&cfg.split.spec(cfg.split.folds))?;
    let t0 = Instant::now();
    let (summary, runs) = crate::pipeline::cross_validate(&prepared, &folds, &cfg.train, args.jobs)?;
    run.note(&format!("{} folds with {} jobs in {:.1?}", folds.len(), args.jobs, t0.elapsed()));
    for r in &runs {
        run.write(&format!("fold-{}/history.csv", r.fold), &history_csv(&r.outcome.history)?)?;
    }
    let rows = runs.iter().map(|r| {
        let t = &r.outcome.best.test;
        [r.fold.to_string(), r.outcome.best.epoch.to_string(), t.auc.to_string(), t.f1_macro.to_string(), t.ap.to_string()]
    });
    run.write("cv.csv", &csv_string(&["fold", "best_epoch", "auc", "f1_macro", "ap"], rows)?)?;
    io::write_json(&run.path("summary.json"), &summary)?;
    let line = format!(
        "{} folds: auc {:.4} ± {:.4}, f1 {:.4} ± {:.4}, ap {:.4} ± {:.4}",
        folds.len(),
        summary.mean.auc,
        summary.std.auc,
        summary.mean.f1_macro,
        summary.std.f1_macro,
        summary.mean.ap,
        summary.std.ap
    );
    run.note(&line);
    println!("{line}");
    Ok(())
}

pub fn run_export_filter(args: &ExportFilterArgs) -> Result<()> {
    let cfg = args.data.resolve()?;
    let ck = Checkpoint::load(&args.checkpoint)?;
    let prepared = Prepared::from_checkpoint(&ck, cfg.data.load()?)?;
    let heads = prepared.model.filter_response(&ck.params, &prepared.inputs)?;
    let lambdas = prepared.inputs.decomposition.eigenvalues();
    let mut rows = Vec::new();
    for (h, values) in heads.iter().enumerate() {
        for (k, (l, lp)) in lambdas.iter().zip(values).enumerate() {
            rows.push([h.to_string(), k.to_string(), l.to_string(), lp.to_string()]);
        }
    }
    let path = args.out.join("filter.csv");
    io::write_text(&path, &csv_string(&["head", "k", "lambda", "lambda_prime"], rows)?)?;
    println!("{} heads x {} eigenvalues -> {}", heads.len(), lambdas.len(), path.display());
    Ok(())
}
