use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use musobench::corpus::Corpus;
use musobench::report::{load_scored, SUMMARY_FILE};

fn musobench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_musobench"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn ok(args: &[&str]) -> String {
    let out = musobench(args);
    assert_eq!(code(&out), 0, "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn small_corpus(dir: &Path) -> PathBuf {
    let path = dir.join("corpus.json");
    ok(&[
        "--seed",
        "3",
        "gen",
        "--task",
        "subsetsum",
        "--quota",
        "2",
        "--out",
        s(&path),
    ]);
    path
}

#[test]
fn gen_then_brute_force_check_finds_no_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("c.json");
    ok(&["gen", "--task", "subsetsum", "--out", s(&corpus)]);
    let stdout = ok(&["solve", "--corpus", s(&corpus), "--check-brute-force"]);
    assert!(stdout.contains("mismatches: 0"), "{stdout}");
    assert!(stdout.contains("skipped above scan bound: 0"), "{stdout}");
    let loaded = Corpus::load(&corpus).unwrap();
    assert_eq!(loaded.items.len(), 7 * 10);
}

#[test]
fn gen_is_reproducible_and_seed_sensitive() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    let c = dir.path().join("c.json");
    ok(&[
        "--seed",
        "9",
        "gen",
        "--task",
        "timetabling",
        "--quota",
        "1",
        "--out",
        s(&a),
    ]);
    ok(&[
        "--seed",
        "9",
        "gen",
        "--task",
        "timetabling",
        "--quota",
        "1",
        "--out",
        s(&b),
    ]);
    ok(&[
        "--seed",
        "10",
        "gen",
        "--task",
        "timetabling",
        "--quota",
        "1",
        "--out",
        s(&c),
    ]);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_ne!(std::fs::read(&a).unwrap(), std::fs::read(&c).unwrap());
}

#[test]
fn config_file_with_flag_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("pipeline.json");
    let root = dir.path().join("out");
    std::fs::write(
        &cfg,
        serde_json::json!({
            "seed": 4,
            "output_root": root,
            "gen": {
                "params": {"task": "subsetsum"},
                "strata": {"bands": [{"min": 1, "max": 2}, {"min": 3, "max": 5}]},
                "quota": 2
            }
        })
        .to_string(),
    )
    .unwrap();
    ok(&["gen", "--config", s(&cfg)]);
    let from_config = Corpus::load(&root.join("corpus.json")).unwrap();
    assert_eq!((from_config.seed, from_config.items.len()), (4, 4));

    let other = dir.path().join("o.json");
    ok(&[
        "--seed",
        "5",
        "gen",
        "--config",
        s(&cfg),
        "--quota",
        "3",
        "--out",
        s(&other),
    ]);
    let overridden = Corpus::load(&other).unwrap();
    assert_eq!((overridden.seed, overridden.items.len()), (5, 6));

    let clash = musobench(&["gen", "--config", s(&cfg), "--task", "timetabling"]);
    assert_eq!(code(&clash), 1);
}

#[test]
fn mock_run_then_score_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = small_corpus(dir.path());
    let before = std::fs::read(&corpus).unwrap();
    let mut outputs = Vec::new();
    for name in ["a", "b"] {
        let run = dir.path().join(format!("run-{name}"));
        let scored = dir.path().join(format!("scored-{name}"));
        ok(&[
            "--mock",
            "explorer",
            "--parallelism",
            "3",
            "run",
            "--corpus",
            s(&corpus),
            "--out",
            s(&run),
            "--recheck",
        ]);
        ok(&["score", "--run", s(&run), "--corpus", s(&corpus), "--out", s(&scored)]);
        let summary = load_scored(&scored).unwrap().summary;
        assert_eq!(summary.scored, summary.corpus_items);
        assert!(summary.behavior.is_some());
        outputs.push((
            std::fs::read(run.join("transcripts.jsonl")).unwrap(),
            std::fs::read(scored.join(SUMMARY_FILE)).unwrap(),
        ));
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(std::fs::read(&corpus).unwrap(), before);

    // a finished run resumes without querying
    let again = ok(&[
        "--mock",
        "explorer",
        "run",
        "--corpus",
        s(&corpus),
        "--out",
        s(&dir.path().join("run-a")),
        "--recheck",
    ]);
    assert!(again.contains("queried 0"), "{again}");
    let changed = musobench(&[
        "--mock",
        "explorer",
        "run",
        "--corpus",
        s(&corpus),
        "--out",
        s(&dir.path().join("run-a")),
    ]);
    assert_eq!(code(&changed), 2);
}

#[test]
fn strategies_and_temperature_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = small_corpus(dir.path());
    for (name, extra) in [
        ("explore", vec!["--strategy", "explore"]),
        ("vote", vec!["--strategy", "sc-vote", "--n", "4"]),
        ("median", vec!["--strategy", "sc-median", "--n", "4"]),
        ("reflect", vec!["--strategy", "reflect", "--checkpoints", "1,2"]),
    ] {
        let run = dir.path().join(name);
        let mut args = vec!["--mock", "reflective", "run", "--corpus", s(&corpus), "--out", s(&run)];
        args.extend(extra);
        ok(&args);
        let scored = dir.path().join(format!("{name}-scored"));
        ok(&["score", "--run", s(&run), "--corpus", s(&corpus), "--out", s(&scored)]);
        assert!(scored.join(SUMMARY_FILE).is_file(), "{name}");
    }

    let sweep = dir.path().join("sweep");
    let scored = dir.path().join("sweep-scored");
    ok(&[
        "--mock",
        "calibrated",
        "run",
        "--corpus",
        s(&corpus),
        "--out",
        s(&sweep),
        "--temperatures",
        "0.2,0.6",
    ]);
    ok(&["score", "--run", s(&sweep), "--corpus", s(&corpus), "--out", s(&scored)]);
    let a = scored.join("temp-0.20");
    let b = scored.join("temp-0.60");
    let report = dir.path().join("report");
    ok(&["report", "--runs", &format!("{},{}", s(&a), s(&b)), "--out", s(&report)]);
    let temps = std::fs::read_to_string(report.join("temperature.csv")).unwrap();
    assert_eq!(temps.lines().count(), 3, "{temps}");
}

#[test]
fn paired_report_from_raw_runs() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = small_corpus(dir.path());
    let short = dir.path().join("short");
    let long = dir.path().join("long");
    ok(&[
        "--mock",
        "overconfident",
        "run",
        "--corpus",
        s(&corpus),
        "--out",
        s(&short),
    ]);
    ok(&["--mock", "calibrated", "run", "--corpus", s(&corpus), "--out", s(&long)]);
    let runs = format!("{},{}", s(&short), s(&long));
    let out = dir.path().join("report");

    let no_corpus = musobench(&["report", "--runs", &runs, "--paired", "--out", s(&out)]);
    assert_eq!(code(&no_corpus), 1);

    ok(&[
        "report",
        "--runs",
        &runs,
        "--paired",
        "--corpus",
        s(&corpus),
        "--out",
        s(&out),
    ]);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("movement_summary.json")).unwrap()).unwrap();
    assert_eq!(summary["up_left_share"], 1.0);

    let three = format!("{runs},{}", s(&long));
    assert_eq!(
        code(&musobench(&[
            "report",
            "--runs",
            &three,
            "--paired",
            "--corpus",
            s(&corpus),
            "--out",
            s(&out)
        ])),
        1
    );
}

#[test]
fn selftest_prints_the_worked_example() {
    let stdout = ok(&["selftest", "--subsetsum", "50", "--timetabling", "20"]);
    assert!(
        stdout.contains("[8, 14, 18, 22], [8, 14, 40], [8, 16, 38], [14, 48], [22, 40]"),
        "{stdout}"
    );
    assert_eq!(stdout.lines().filter(|l| l.starts_with("PASS")).count(), 4, "{stdout}");
}

#[test]
fn exit_codes() {
    assert_eq!(code(&musobench(&["frobnicate"])), 1);
    assert_eq!(code(&musobench(&["gen", "--task", "subsetsum", "--bogus"])), 1);
    assert_eq!(code(&musobench(&["--help"])), 0);
    assert_eq!(code(&musobench(&["solve", "--corpus", "/definitely/missing.json"])), 1);

    let dir = tempfile::tempdir().unwrap();
    let corpus = small_corpus(dir.path());

    // tampered ground truth
    let mut doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&corpus).unwrap()).unwrap();
    let truth = &mut doc["items"][0]["ground_truth"]["solutions"][0];
    *truth = serde_json::json!([1000]);
    let tampered = dir.path().join("tampered.json");
    std::fs::write(&tampered, doc.to_string()).unwrap();
    assert_eq!(code(&musobench(&["solve", "--corpus", s(&tampered)])), 2);

    // nothing listens on the discard port
    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        serde_json::json!({
            "run": {
                "endpoint": {"url": "http://127.0.0.1:9/v1/chat/completions", "timeout_secs": 2},
                "retry": {"max_retries": 0, "backoff_ms": 0, "max_backoff_ms": 0}
            }
        })
        .to_string(),
    )
    .unwrap();
    let run = dir.path().join("dead");
    let out = musobench(&["run", "--corpus", s(&corpus), "--config", s(&cfg), "--out", s(&run)]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(run.join("run.json")).unwrap()).unwrap();
    assert_eq!(meta["status"], "complete");
    assert!(meta["counts"]["endpoint_failed"].as_u64().unwrap() > 0);

    // reflection over an endpoint without continuation support
    let reflect = musobench(&[
        "run",
        "--corpus",
        s(&corpus),
        "--config",
        s(&cfg),
        "--out",
        s(&dir.path().join("r")),
        "--strategy",
        "reflect",
    ]);
    assert_eq!(code(&reflect), 3);

    let bad_config = dir.path().join("bad.json");
    std::fs::write(&bad_config, r#"{"run": {"temperature": -1}}"#).unwrap();
    assert_eq!(
        code(&musobench(&[
            "run",
            "--corpus",
            s(&corpus),
            "--config",
            s(&bad_config),
            "--out",
            s(&run)
        ])),
        1
    );
}
