#![allow(dead_code)]

use std::io::ErrorKind;
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").canonicalize().unwrap()
}

pub fn gender_cassette() -> PathBuf {
    repo_root().join("fixtures/cassettes/gender.jsonl")
}

pub fn golden() -> PathBuf {
    repo_root().join("fixtures/golden/gender.testset.jsonl")
}

/// Counts TCP connections made to it. Proxy variables and the generator
/// base URL point here, so any outbound HTTP from a child process lands on
/// this socket instead of the network.
pub struct NetGuard {
    listener: TcpListener,
    pub url: String,
}

impl NetGuard {
    pub fn new() -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        listener.set_nonblocking(true).unwrap();
        let url = format!("http://{}", listener.local_addr().unwrap());
        NetGuard { listener, url }
    }

    pub fn connections(&self) -> usize {
        let mut n = 0;
        loop {
            match self.listener.accept() {
                Ok(_) => n += 1,
                Err(e) if e.kind() == ErrorKind::WouldBlock => return n,
                Err(e) => panic!("guard accept: {e}"),
            }
        }
    }
}

pub fn biascase(dir: &Path, guard: Option<&NetGuard>, args: &[&str]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_biascase"));
    cmd.current_dir(dir).args(args);
    for var in ["BIASCASE_CONFIG", "BIASCASE_PROVIDER", "BIASCASE_MODEL", "BIASCASE_TEMPERATURE", "RUST_LOG"] {
        cmd.env_remove(var);
    }
    if let Some(g) = guard {
        for var in ["HTTP_PROXY", "HTTPS_PROXY", "ALL_PROXY", "http_proxy", "https_proxy", "all_proxy"] {
            cmd.env(var, &g.url);
        }
        cmd.env("NO_PROXY", "").env("no_proxy", "");
        cmd.env("BIASCASE_BASE_URL", &g.url);
    }
    cmd.output().expect("spawn biascase")
}

/// Runs and insists on exit status 0.
pub fn ok(dir: &Path, guard: Option<&NetGuard>, args: &[&str]) -> String {
    let out = biascase(dir, guard, args);
    assert!(
        out.status.success(),
        "biascase {args:?} failed: {}\n{}",
        out.status,
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

pub fn generate_args(out: &str) -> Vec<String> {
    vec![
        "generate".into(),
        "--bias".into(),
        "gender".into(),
        "--terms".into(),
        "he,she".into(),
        "--provider".into(),
        format!("playback:{}", gender_cassette().display()),
        "--out".into(),
        out.into(),
    ]
}

pub fn strs(v: &[String]) -> Vec<&str> {
    v.iter().map(String::as_str).collect()
}

/// Fixture scorer tables for every sentence of `set_path`: `flat` scores
/// everything alike; `picky` gives sentences containing "she" a lower
/// score and labels sentences containing "not" negative.
pub fn write_scorers(dir: &Path, set_path: &Path) -> PathBuf {
    let set = biascase_core::dataset::load_testset(set_path).unwrap();
    let mut flat = String::new();
    let mut picky = String::new();
    for case in &set.cases {
        for v in &case.variants {
            let (label, score) = picky_output(&v.text);
            flat.push_str(&format!("{}\tPOSITIVE\t0.5\n", v.text));
            picky.push_str(&format!("{}\t{label}\t{score}\n", v.text));
        }
    }
    std::fs::write(dir.join("flat.tsv"), flat).unwrap();
    std::fs::write(dir.join("picky.tsv"), picky).unwrap();
    let toml = "[[scorer]]\nmodel_id = \"flat\"\nendpoint = \"flat.tsv\"\nkind = \"fixture\"\n\n\
                [[scorer]]\nmodel_id = \"picky\"\nendpoint = \"picky.tsv\"\nkind = \"fixture\"\n";
    let path = dir.join("scorers.toml");
    std::fs::write(&path, toml).unwrap();
    path
}

pub fn picky_output(text: &str) -> (&'static str, f64) {
    let words = biascase_core::diversity::tokenize(text);
    let label = if words.iter().any(|w| w == "not") { "NEGATIVE" } else { "POSITIVE" };
    let score = if words.iter().any(|w| w == "she" || w == "her") { 0.1 } else { 0.9 };
    (label, score)
}
