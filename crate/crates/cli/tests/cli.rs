mod common;

use std::collections::{BTreeMap, BTreeSet};

use biascase_core::dataset::load_testset;
use biascase_core::{AnnotationRecord, AnnotationVerdict, RejectReason, Stage};
use common::*;
use serde_json::Value;

fn read_json(path: &std::path::Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn generate_twice_is_byte_identical_and_matches_golden() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    for name in ["a.jsonl", "b.jsonl"] {
        let stdout = ok(d, None, &strs(&generate_args(name)));
        let line: Value = serde_json::from_str(stdout.trim()).unwrap();
        assert_eq!(line["cases"], 65);
        assert_eq!(line["active"], 62);
    }
    let a = std::fs::read(d.join("a.jsonl")).unwrap();
    assert_eq!(a, std::fs::read(d.join("b.jsonl")).unwrap());
    assert_eq!(a, std::fs::read(golden()).unwrap());
    let meta_a = std::fs::read_to_string(d.join("a.meta.json")).unwrap();
    let meta_b = std::fs::read_to_string(d.join("b.meta.json")).unwrap();
    assert_eq!(meta_a, meta_b);
    let meta: Value = serde_json::from_str(&meta_a).unwrap();
    assert_eq!(meta["completed"], true);
    assert_eq!(meta["calls"]["cassette_hits"], 96);
}

#[test]
fn metadata_flag_and_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::copy(gender_cassette(), d.join("tape.jsonl")).unwrap();
    std::fs::write(
        d.join("run.toml"),
        "[provider]\nsource = \"playback:tape.jsonl\"\n\n[generation]\nbias_type = \"gender\"\nidentity_terms = [\"he\", \"she\"]\n",
    )
    .unwrap();
    ok(d, None, &["generate", "--config", "run.toml", "--out", "s.jsonl", "--metadata", "m.json"]);
    assert_eq!(std::fs::read(d.join("s.jsonl")).unwrap(), std::fs::read(golden()).unwrap());
    assert!(d.join("m.json").exists());
    assert!(!d.join("s.meta.json").exists());
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("run.toml"), "[provider]\ntemperature = 0.3\n").unwrap();
    let mut args = generate_args("s.jsonl");
    args.extend(["--config".into(), "run.toml".into(), "--temperature".into(), "1.0".into()]);
    ok(d, None, &strs(&args));
    assert_eq!(std::fs::read(d.join("s.jsonl")).unwrap(), std::fs::read(golden()).unwrap());
    // without the flag the file's temperature changes every prompt key
    let mut args = generate_args("t.jsonl");
    args.extend(["--config".into(), "run.toml".into()]);
    let out = biascase(d, None, &strs(&args));
    assert_eq!(out.status.code(), Some(1));
    let meta = read_json(&d.join("t.meta.json"));
    assert_eq!(meta["completed"], false);
    assert_eq!(meta["provider"]["temperature"], 0.3);
}

#[test]
fn exit_codes_and_error_json() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cases: [(&[&str], i32, &str); 5] = [
        (&["no-such-command"], 2, "usage"),
        (&["generate", "--out", "x.jsonl", "--bogus"], 2, "usage"),
        (&["generate", "--bias", "gender", "--terms", "he", "--provider", "live", "--out", "x.jsonl"], 2, "invalid-spec"),
        (&["diversity", "--testset", "missing.jsonl"], 2, "usage"),
        (&["evaluate", "--testset", "missing.jsonl", "--scorers", "s.toml", "--out", "v.json"], 2, "usage"),
    ];
    for (args, code, kind) in cases {
        let out = biascase(d, None, args);
        assert_eq!(out.status.code(), Some(code), "{args:?}");
        let err: Value = serde_json::from_str(String::from_utf8_lossy(&out.stderr).trim().lines().last().unwrap()).unwrap();
        assert_eq!(err["error"], kind, "{args:?}");
    }
    // an empty cassette is a runtime failure, and still leaves metadata
    std::fs::write(d.join("empty.jsonl"), "").unwrap();
    let out = biascase(
        d,
        None,
        &["generate", "--bias", "gender", "--terms", "he,she", "--provider", "playback:empty.jsonl", "--out", "e.jsonl"],
    );
    assert_eq!(out.status.code(), Some(1));
    let meta = read_json(&d.join("e.meta.json"));
    assert_eq!(meta["completed"], false);
    assert!(!d.join("e.jsonl").exists());
}

#[test]
fn help_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = biascase(dir.path(), None, &["--help"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for sub in ["generate", "bts", "etsg", "augment", "counterfactual", "filter", "import", "evaluate", "diversity", "report", "review-serve", "record-fixtures"] {
        assert!(text.contains(sub), "help lists {sub}");
    }
}

#[test]
fn staged_commands_rebuild_the_golden_prefix() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let playback = format!("playback:{}", gender_cassette().display());
    ok(d, None, &["bts", "--bias", "gender", "--terms", "he,she", "--provider", &playback, "--out", "t.json"]);
    let triplets = read_json(&d.join("t.json"));
    assert_eq!(triplets["triplets"].as_array().unwrap().len(), 10);
    ok(d, None, &["etsg", "--triplets", "t.json", "--provider", &playback, "--out", "s.json"]);
    ok(d, None, &["counterfactual", "--sentences", "s.json", "--provider", &playback, "--out", "c.jsonl"]);
    for f in ["t.meta.json", "s.meta.json", "c.meta.json"] {
        assert_eq!(read_json(&d.join(f))["completed"], true, "{f}");
    }

    let golden = load_testset(&golden()).unwrap();
    let staged = load_testset(&d.join("c.jsonl")).unwrap();
    let etsg: Vec<_> = golden.cases.iter().filter(|c| c.stage() == Stage::Etsg).cloned().collect();
    assert_eq!(staged.cases, etsg);

    // lexical augmentation is per tuple, so it replays from the same cassette
    ok(d, None, &["augment", "--testset", "c.jsonl", "--provider", &playback, "--no-syda", "--no-seda", "--out", "a.jsonl"]);
    let augmented = load_testset(&d.join("a.jsonl")).unwrap();
    let expected: Vec<_> = golden
        .cases
        .iter()
        .filter(|c| matches!(c.stage(), Stage::Etsg | Stage::LdaSynonym | Stage::LdaNegated))
        .cloned()
        .collect();
    assert_eq!(augmented.cases, expected);
}

/// Percent of failing active cases per (bias type, model), counted by
/// brute force over the fixture outputs.
fn expected_failures(set_path: &std::path::Path, theta: f64) -> BTreeMap<String, f64> {
    let set = load_testset(set_path).unwrap();
    let mut counts: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for case in set.active() {
        let outs: Vec<_> = case.variants.iter().map(|v| picky_output(&v.text)).collect();
        let mut failed = false;
        for i in 0..outs.len() {
            for j in i + 1..outs.len() {
                failed |= outs[i].0 != outs[j].0 || (outs[i].1 - outs[j].1).abs() > theta;
            }
        }
        let e = counts.entry(case.bias_type.clone()).or_default();
        e.0 += usize::from(failed);
        e.1 += 1;
    }
    counts.into_iter().map(|(b, (f, n))| (b, 100.0 * f as f64 / n as f64)).collect()
}

#[test]
fn evaluate_with_fixture_scorers() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let scorers = write_scorers(d, &golden());
    let stdout = ok(
        d,
        None,
        &[
            "evaluate", "--testset", golden().to_str().unwrap(), "--scorers", scorers.to_str().unwrap(),
            "--theta", "0.2,0.05", "--out", "v.json", "--dataset", "gender-run",
        ],
    );
    let verdicts = read_json(&d.join("v.json"));
    assert_eq!(verdicts["matrix"]["config"]["threshold"], 0.05);
    assert_eq!(verdicts["matrix"]["verdicts"].as_array().unwrap().len(), 62 * 2);
    assert_eq!(verdicts["matrix"]["excluded_inactive"], 3);

    let expected = expected_failures(&golden(), 0.2)["gender"];
    let row = stdout
        .lines()
        .filter(|l| l.starts_with("| gender-run | gender |"))
        .last()
        .expect("table row");
    assert_eq!(row, format!("| gender-run | gender | 0.0 | {expected:.1} |"));
    assert!(stdout.contains("threshold > 0.05"));
    assert!(stdout.contains("threshold > 0.2"));

    let report = ok(d, None, &["report", "--verdicts", "v.json", "--theta", "0.2", "--format", "csv"]);
    let p = expected / 100.0 / 2.0; // flat never fails, so the mean over both models halves it
    let line = report.lines().find(|l| l.starts_with("gender,")).unwrap();
    assert_eq!(line, format!("gender,{}", biascase_core::report::format_probability(p)));
    let meta = read_json(&d.join("biascase-report.meta.json"));
    assert_eq!(meta["completed"], true);
}

#[test]
fn evaluate_reports_a_missing_fixture_row() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("t.tsv"), "nothing here\tPOSITIVE\t0.5\n").unwrap();
    std::fs::write(d.join("s.toml"), "[[scorer]]\nmodel_id = \"m\"\nendpoint = \"t.tsv\"\nkind = \"fixture\"\n").unwrap();
    let out = biascase(d, None, &["evaluate", "--testset", golden().to_str().unwrap(), "--scorers", "s.toml", "--out", "v.json"]);
    assert_eq!(out.status.code(), Some(1));
    let v = read_json(&d.join("v.json"));
    assert_eq!(v["matrix"]["skipped"].as_array().unwrap().len(), 62);
    assert_eq!(read_json(&d.join("v.meta.json"))["error"]["kind"], "incomplete-matrix");
}

fn record(case_id: &str, who: &str, valid: bool) -> AnnotationRecord {
    AnnotationRecord {
        case_id: case_id.into(),
        annotator: who.into(),
        verdict: if valid { AnnotationVerdict::Valid } else { AnnotationVerdict::Invalid },
        reason: (!valid).then_some(RejectReason::InducedBias),
        note: None,
        timestamp: "2024-03-01T12:00:00Z".parse().unwrap(),
    }
}

#[test]
fn filter_applies_annotations() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let set = load_testset(&golden()).unwrap();
    let active: Vec<_> = set.active().map(|c| c.id.clone()).collect();
    let mut log = String::new();
    for (i, id) in active.iter().enumerate().take(10) {
        log.push_str(&serde_json::to_string(&record(id, "a", true)).unwrap());
        log.push('\n');
        log.push_str(&serde_json::to_string(&record(id, "b", i >= 4)).unwrap());
        log.push('\n');
    }
    std::fs::write(d.join("ann.jsonl"), &log).unwrap();
    for (policy, kept) in [("any_reject", 62 - 4), ("all_reject", 62)] {
        let out = format!("{policy}.jsonl");
        ok(d, None, &["filter", "--testset", golden().to_str().unwrap(), "--annotations", "ann.jsonl", "--policy", policy, "--out", &out]);
        let curated = load_testset(&d.join(&out)).unwrap();
        assert_eq!(curated.len(), kept, "{policy}");
        assert!(curated.cases.iter().all(|c| c.is_active()));
        let report = read_json(&d.join(format!("{policy}.report.json")));
        let total: u64 = report["reasons"].as_array().unwrap().iter().map(|r| r["count"].as_u64().unwrap()).sum();
        assert_eq!(total as usize, 65 - kept);
    }
}

#[test]
fn import_toy_files_and_column_maps() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(
        d.join("crows.csv"),
        "sent_more,sent_less,bias_type\nA man cried.,A woman cried.,gender\nOld folks nap.,Young folks nap.,age\nA Sikh ran.,A Jew ran.,religion\n",
    )
    .unwrap();
    ok(d, None, &["import", "crows", "--input", "crows.csv", "--out", "c.jsonl"]);
    let set = load_testset(&d.join("c.jsonl")).unwrap();
    assert_eq!(set.len(), 3);
    assert!(set.cases.iter().all(|c| c.variants.iter().all(|v| !v.is_source)));

    std::fs::write(d.join("renamed.csv"), "more,less,kind\nA man cried.,A woman cried.,gender\n").unwrap();
    std::fs::write(d.join("cols.toml"), "sent_more = \"more\"\nsent_less = \"less\"\nbias_type = \"kind\"\n").unwrap();
    ok(d, None, &["import", "crows", "--input", "renamed.csv", "--columns", "cols.toml", "--out", "r.jsonl"]);
    assert_eq!(load_testset(&d.join("r.jsonl")).unwrap().len(), 1);
    let out = biascase(d, None, &["import", "crows", "--input", "renamed.csv", "--out", "x.jsonl"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("\"schema\""));

    let meta = read_json(&d.join("c.meta.json"));
    assert_eq!(meta["counts"]["cases_produced"], 3);
    assert_eq!(meta["inputs"]["source"]["sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn eec_diversity_column() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let eec = repo_root().join("fixtures/eec/Equity-Evaluation-Corpus.csv");
    ok(d, None, &["import", "eec", "--input", eec.to_str().unwrap(), "--out", "eec.jsonl"]);
    let table = ok(d, None, &["diversity", "--testset", "eec.jsonl", "--no-syntax", "--out", "div.json"]);
    assert!(table.contains("| unique test cases | 4320 |"), "{table}");
    assert!(table.contains("| sentences | 8640 |"));
    let reports = read_json(&d.join("div.json"));
    assert_eq!(reports["eec"]["total_sentences"], 8640);
}

#[test]
fn record_fixtures_reproduces_the_shipped_cassette() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let script = repo_root().join("fixtures/cassettes/gender.script.json");
    ok(d, None, &["record-fixtures", "--script", script.to_str().unwrap(), "--out", "tape.jsonl"]);
    assert_eq!(std::fs::read(d.join("tape.jsonl")).unwrap(), std::fs::read(gender_cassette()).unwrap());
    let again = biascase(d, None, &["record-fixtures", "--script", script.to_str().unwrap(), "--out", "tape.jsonl"]);
    assert_eq!(again.status.code(), Some(2));
}

#[test]
fn playback_and_fixture_runs_make_no_connections() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let guard = NetGuard::new();
    ok(d, Some(&guard), &strs(&generate_args("g.jsonl")));
    let scorers = write_scorers(d, &d.join("g.jsonl"));
    ok(d, Some(&guard), &["evaluate", "--testset", "g.jsonl", "--scorers", scorers.to_str().unwrap(), "--out", "v.json"]);
    ok(d, Some(&guard), &["report", "--verdicts", "v.json", "--out", "tables.md"]);
    ok(d, Some(&guard), &["diversity", "--testset", "g.jsonl"]);
    ok(d, Some(&guard), &["filter", "--testset", "g.jsonl", "--out", "f.jsonl"]);
    assert_eq!(guard.connections(), 0);

    // the guard does see a live run
    std::fs::write(d.join("fast.toml"), "[provider]\nrequest_timeout = 1\nmax_retries = 1\nretry_backoff_ms = 10\n").unwrap();
    let out = biascase(
        d,
        Some(&guard),
        &[
            "bts", "--config", "fast.toml", "--bias", "gender", "--terms", "he,she", "--provider", "live",
            "--api-key-env", "PATH", "--out", "t.json",
        ],
    );
    assert!(!out.status.success());
    assert!(guard.connections() > 0);
}

#[test]
fn review_serve_round_trip() {
    use std::time::{Duration, Instant};

    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let port = std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let bind = format!("127.0.0.1:{port}");
    let mut child = std::process::Command::new(env!("CARGO_BIN_EXE_biascase"))
        .current_dir(d)
        .args(["review-serve", "--testset", golden().to_str().unwrap(), "--annotations", "ann.jsonl", "--bind", &bind])
        .stderr(std::process::Stdio::null())
        .spawn()
        .unwrap();

    let rt = tokio::runtime::Builder::new_current_thread().enable_all().build().unwrap();
    let base = format!("http://{bind}");
    let status = rt.block_on(async {
        let http = reqwest::Client::builder().no_proxy().build().unwrap();
        let start = Instant::now();
        let pending: Vec<Value> = loop {
            match http.get(format!("{base}/api/cases?status=pending&annotator=a")).send().await {
                Ok(r) => break r.json().await.unwrap(),
                Err(_) if start.elapsed() < Duration::from_secs(20) => tokio::time::sleep(Duration::from_millis(50)).await,
                Err(e) => panic!("service never came up: {e}"),
            }
        };
        assert_eq!(pending.len(), 62);
        let id = pending[0]["id"].as_str().unwrap().to_string();
        let body = serde_json::json!({"annotator": "a", "verdict": "VALID"});
        let r = http.post(format!("{base}/api/cases/{id}/annotation")).json(&body).send().await.unwrap();
        r.status().as_u16()
    });
    assert_eq!(status, 201);
    let _ = std::process::Command::new("kill").args(["-INT", &child.id().to_string()]).status();
    let exit = child.wait().unwrap();
    assert!(exit.success(), "{exit}");
    assert_eq!(std::fs::read_to_string(d.join("ann.jsonl")).unwrap().lines().count(), 1);
    let meta = read_json(&d.join("ann.meta.json"));
    assert_eq!(meta["counts"]["annotations"], 1);
    let ids: BTreeSet<_> = meta["inputs"].as_object().unwrap().keys().cloned().collect();
    assert!(ids.contains("testset"));
}
