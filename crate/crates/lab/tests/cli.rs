use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hipgnn_lab::config::RunConfig;

fn hipgnn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hipgnn"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = hipgnn(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const HELP_PAGES: &[&[&str]] = &[
    &[],
    &["synth"],
    &["spectra"],
    &["flatten-experiment"],
    &["verify"],
    &["verify", "rayleigh"],
    &["verify", "variance"],
    &["verify", "encoding"],
    &["train"],
    &["evaluate"],
    &["cv"],
    &["export-filter"],
    &["node-variance"],
];

fn help_text(page: &[&str]) -> String {
    let mut args = page.to_vec();
    args.push("--help");
    ok(&args)
}

fn golden_path(page: &[&str]) -> PathBuf {
    let name = if page.is_empty() { "hipgnn".to_string() } else { page.join("-") };
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(format!("{name}.txt"))
}

/// Set `UPDATE_GOLDEN=1` to rewrite the files after an intended change.
#[test]
fn help_matches_golden_files() {
    let update = std::env::var_os("UPDATE_GOLDEN").is_some();
    for page in HELP_PAGES {
        let text = help_text(page);
        let path = golden_path(page);
        if update {
            fs::write(&path, &text).unwrap();
            continue;
        }
        let golden = fs::read_to_string(&path).unwrap_or_else(|_| panic!("missing {}", path.display()));
        assert_eq!(text, golden, "help for {page:?} changed; rerun with UPDATE_GOLDEN=1 if intended");
    }
}

/// Every `[config: key, default: value]` note agrees with the built-in
/// configuration.
#[test]
fn help_defaults_match_config_defaults() {
    let defaults: toml::Table = toml::from_str(&RunConfig::default().to_toml().unwrap()).unwrap();
    let mut checked = 0;
    for page in HELP_PAGES {
        let text = help_text(page);
        for note in text.split("[config: ").skip(1) {
            let note = &note[..note.find(']').unwrap()];
            let Some((key, default)) = note.split_once(", default: ") else {
                continue;
            };
            let (section, field) = key.split_once('.').unwrap();
            match defaults[section].get(field) {
                Some(toml::Value::String(v)) => assert_eq!(v, default, "{key}"),
                Some(v) => assert_eq!(v.to_string(), default, "{key}"),
                None => assert!(
                    matches!((key, default), ("data.weight_min", "0") | ("data.weight_max", "unbounded")),
                    "{key} has no default in the config"
                ),
            }
            checked += 1;
        }
    }
    assert!(checked >= 20, "only {checked} documented defaults found");
}

#[test]
fn every_flag_shows_a_default_or_is_required() {
    for page in HELP_PAGES {
        let text = help_text(page);
        let mut lines = text.lines().peekable();
        while let Some(line) = lines.next() {
            let flag = line.trim_start();
            if !flag.starts_with("--") || flag.starts_with("--help") || flag.starts_with("--version") {
                continue;
            }
            // the description may continue on following indented lines
            let mut entry = line.to_string();
            while let Some(next) = lines.peek() {
                if next.trim_start().starts_with('-') || next.trim().is_empty() {
                    break;
                }
                entry.push_str(lines.next().unwrap());
            }
            let documented = entry.contains("[default: ")
                || entry.contains(", default: ")
                || entry.contains("[config: data.")
                || ["--out", "--config", "--checkpoint", "--model", "--sigma2 ", "--signal ", "--bandwidth", "--exclude-first", "--standardize-features"]
                    .iter()
                    .any(|f| flag.starts_with(f));
            assert!(documented, "{page:?}: {line}");
        }
    }
}

#[test]
fn complete_er_graph_has_45_edges() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("g");
    ok(&["synth", "--model", "er", "--n", "10", "--p", "1.0", "--out", s(&out)]);
    let edges = fs::read_to_string(out.join("edges.tsv")).unwrap();
    assert_eq!(edges.lines().count(), 45);
    assert!(edges.lines().all(|l| l.ends_with("\t1")));
    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("meta.json")).unwrap()).unwrap();
    assert_eq!(meta["edge_count"], 45);
    assert_eq!(meta["generator"], "er");
}

#[test]
fn failures_carry_a_category_and_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let cases: Vec<(Vec<String>, i32, &str)> = {
        let bad = dir.path().join("bad.tsv");
        fs::write(&bad, "a\tb\n").unwrap();
        let cfg = dir.path().join("c.toml");
        fs::write(&cfg, "[train]\nepochz = 3\n").unwrap();
        let out = dir.path().join("o");
        vec![
            (vec!["train".into(), "--edges".into(), "/nonexistent/e.tsv".into(), "--out".into(), s(&out).into()], 3, "io"),
            (vec!["node-variance".into(), "--edges".into(), s(&bad).into(), "--out".into(), s(&out).into()], 4, "parse"),
            (vec!["train".into(), "--config".into(), s(&cfg).into(), "--out".into(), s(&out).into()], 6, "config"),
            (vec!["verify".into(), "rayleigh".into(), "--trials".into(), "3".into(), "--tolerance=-1".into()], 8, "verification"),
            (vec!["synth".into(), "--model".into(), "ba".into(), "--n".into(), "3".into(), "--m".into(), "5".into(), "--out".into(), s(&out).into()], 2, "usage"),
        ]
    };
    for (args, code, category) in cases {
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let out = hipgnn(&args);
        let stderr = String::from_utf8_lossy(&out.stderr);
        assert_eq!(out.status.code(), Some(code), "{args:?}: {stderr}");
        assert!(stderr.starts_with(&format!("error[{category}]: ")), "{stderr}");
    }
    assert_eq!(hipgnn(&["no-such-command"]).status.code(), Some(2));
}

#[test]
fn verify_commands_pass_with_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(&["verify", "rayleigh", "--out", s(dir.path())]);
    assert!(out.starts_with("rayleigh: PASS"), "{out}");
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert!(report["report"]["max_discrepancy"].as_f64().unwrap() <= 1e-9);
    assert!(ok(&["verify", "encoding"]).starts_with("encoding: PASS"));
}

fn planted(dir: &Path) -> PathBuf {
    let g = dir.join("graph");
    ok(&["synth", "--model", "planted", "--n", "60", "--p", "0.15", "--feature-dim", "2", "--out", s(&g)]);
    g
}

fn small_train(graph: &Path, out: &Path, extra: &[&str]) -> String {
    let mut args = vec!["train", "--graph-dir", s(graph), "--epochs", "4", "--hidden", "8", "--repr", "8", "--out", s(out)];
    args.extend_from_slice(extra);
    ok(&args)
}

#[test]
fn training_outputs_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let g = planted(dir.path());
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    small_train(&g, &a, &[]);
    small_train(&g, &b, &[]);
    for f in ["history.csv", "scores.csv", "best.json", "checkpoint.txt", "config.toml"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let history = fs::read_to_string(a.join("history.csv")).unwrap();
    assert!(history.starts_with("epoch,L_n,L_l,L_w,total,train_auc,train_f1,train_ap,test_auc,test_f1,test_ap\n"));
    assert_eq!(history.lines().count(), 5);

    // the snapshot alone reproduces the run
    let c = dir.path().join("c");
    ok(&["train", "--config", s(&a.join("config.toml")), "--out", s(&c)]);
    assert_eq!(fs::read(a.join("history.csv")).unwrap(), fs::read(c.join("history.csv")).unwrap());

    let other = dir.path().join("d");
    small_train(&g, &other, &["--seed", "7"]);
    assert_ne!(fs::read(a.join("history.csv")).unwrap(), fs::read(other.join("history.csv")).unwrap());
}

#[test]
fn evaluate_reproduces_training_scores() {
    let dir = tempfile::tempdir().unwrap();
    let g = planted(dir.path());
    let run = dir.path().join("run");
    small_train(&g, &run, &[]);
    let ev = dir.path().join("ev");
    ok(&["evaluate", "--graph-dir", s(&g), "--checkpoint", s(&run.join("checkpoint.txt")), "--out", s(&ev)]);
    assert_eq!(fs::read(run.join("scores.csv")).unwrap(), fs::read(ev.join("scores.csv")).unwrap());
    let best: serde_json::Value = serde_json::from_str(&fs::read_to_string(run.join("best.json")).unwrap()).unwrap();
    let metrics: serde_json::Value = serde_json::from_str(&fs::read_to_string(ev.join("metrics.json")).unwrap()).unwrap();
    assert_eq!(metrics[1]["split"], "test");
    assert_eq!(metrics[1]["ap"], best["test"]["ap"]);
    assert_eq!(metrics[1]["auc"], best["test"]["auc"]);

    let ef = dir.path().join("ef");
    ok(&["export-filter", "--graph-dir", s(&g), "--checkpoint", s(&run.join("checkpoint.txt")), "--out", s(&ef)]);
    let filter = fs::read_to_string(ef.join("filter.csv")).unwrap();
    assert!(filter.starts_with("head,k,lambda,lambda_prime\n"));
    assert_eq!(filter.lines().count(), 1 + 4 * 60);
}

#[test]
fn cv_results_do_not_depend_on_jobs() {
    let dir = tempfile::tempdir().unwrap();
    let g = planted(dir.path());
    let run = |jobs: &str, name: &str| {
        let out = dir.path().join(name);
        ok(&[
            "cv", "--graph-dir", s(&g), "--epochs", "3", "--hidden", "8", "--repr", "8", "--folds", "3", "--jobs", jobs, "--out", s(&out),
        ]);
        out
    };
    let (a, b) = (run("1", "a"), run("3", "b"));
    for f in ["cv.csv", "summary.json", "fold-0/history.csv", "fold-2/history.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    assert_eq!(fs::read_to_string(a.join("cv.csv")).unwrap().lines().count(), 4);
}

#[test]
fn analysis_commands_write_their_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let g = planted(dir.path());
    let sp = dir.path().join("sp");
    let line = ok(&["spectra", "--graph-dir", s(&g), "--laplacian", "regular", "--grid", "64", "--out", s(&sp)]);
    assert!(line.contains("E[lambda]"));
    let energy = fs::read_to_string(sp.join("energy.csv")).unwrap();
    assert!(energy.starts_with("lambda,f,eta\n"));
    assert_eq!(energy.lines().count(), 61);
    let last_eta: f64 = energy.lines().last().unwrap().split(',').nth(2).unwrap().parse().unwrap();
    assert!((last_eta - 1.0).abs() < 1e-12);
    assert_eq!(fs::read_to_string(sp.join("kde.csv")).unwrap().lines().count(), 65);
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(sp.join("summary.json")).unwrap()).unwrap();
    let (e, r) = (summary["expectation"].as_f64().unwrap(), summary["rayleigh_quotient"].as_f64().unwrap());
    assert!((e - r).abs() <= 1e-9 * r.abs().max(1.0));

    let nv = dir.path().join("nv");
    ok(&["node-variance", "--graph-dir", s(&g), "--out", s(&nv)]);
    let table = fs::read_to_string(nv.join("node_variance.csv")).unwrap();
    assert!(table.starts_with("node,variance,label\n"));

    let fl = dir.path().join("fl");
    let line = ok(&["flatten-experiment", "--n", "80", "--p", "0.1", "--grid", "32", "--out", s(&fl)]);
    assert!(line.starts_with("ER(n=80, p=0.1)"), "{line}");
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(fl.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["low_cumulative"].as_array().unwrap().len(), 3);
    assert!(fs::read_to_string(fl.join("energy.csv")).unwrap().starts_with("sigma2,lambda,f,eta\n"));
}
