// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use prefixsyn::dataio::parse_jsonl;
use prefixsyn::graph::render_epr;
use prefixsyn::PrefixGraph;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_prefixsyn"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn synthesize_then_verify() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        &["synthesize", "--bits", "16", "--target", "10", "--out", "o"],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for f in [
        "graph.epr",
        "adder.v",
        "trace.txt",
        "trace.json",
        "report.csv",
        "profile.txt",
        "backbone.txt",
    ] {
        assert!(dir.path().join("o").join(f).exists(), "missing {f}");
    }
    let v = run(dir.path(), &["verify", "o/graph.epr"]);
    assert_eq!(code(&v), 0);
    assert!(stdout(&v).contains("100000 vectors"));
}

#[test]
fn artifacts_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    for out in ["a", "b"] {
        let o = run(
            dir.path(),
            &[
                "synthesize",
                "--bits",
                "12",
                "--profile",
                "random",
                "--seed",
                "7",
                "--out",
                out,
            ],
        );
        assert_eq!(code(&o), 0);
    }
    for f in ["graph.epr", "adder.v", "trace.txt", "report.csv"] {
        let a = fs::read(dir.path().join("a").join(f)).unwrap();
        let b = fs::read(dir.path().join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f} differs");
    }
}

#[test]
fn invalid_width_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["synthesize", "--bits", "1"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("out of range"));
}

#[test]
fn illegal_script_exits_two_with_partial_trace() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("s.txt"),
        "regroup 7 7 6 6\nregroup 3 3 1 1\n",
    )
    .unwrap();
    let o = run(
        dir.path(),
        &[
            "synthesize",
            "--bits",
            "8",
            "--policy",
            "scripted:s.txt",
            "--out",
            "o",
        ],
    );
    assert_eq!(code(&o), 2);
    let trace = fs::read_to_string(dir.path().join("o/trace.txt")).unwrap();
    assert_eq!(trace, "regroup 7 7 6 6\n");
}

#[test]
fn config_file_supplies_defaults() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("run.toml"),
        "bits = 8\nprofile = \"lsb-first\"\nout = \"cfg\"\n\n[model]\nbeta = 0.0\n",
    )
    .unwrap();
    let o = run(dir.path(), &["synthesize", "--config", "run.toml"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let profile = fs::read_to_string(dir.path().join("cfg/profile.txt")).unwrap();
    let profile = prefixsyn::ArrivalProfile::parse(&profile).unwrap();
    assert_eq!(profile.at(0), 0.0);
    assert!((profile.at(7) - 0.14).abs() < 1e-12);

    fs::write(dir.path().join("bad.toml"), "bitz = 8\n").unwrap();
    assert_eq!(
        code(&run(dir.path(), &["synthesize", "--config", "bad.toml"])),
        1
    );
}

#[test]
fn verify_rejects_corrupted_graph() {
    let dir = tempfile::tempdir().unwrap();
    let text = render_epr(&PrefixGraph::serial(8).unwrap());
    fs::write(dir.path().join("ok.epr"), &text).unwrap();
    assert_eq!(code(&run(dir.path(), &["verify", "ok.epr"])), 0);

    let bad = text.replace(
        "(5,0),lvl:5,up:(5,5),lp:(4,0)",
        "(5,0),lvl:5,up:(5,5),lp:(3,0)",
    );
    assert_ne!(bad, text);
    fs::write(dir.path().join("bad.epr"), bad).unwrap();
    let o = run(dir.path(), &["verify", "bad.epr"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("(5,0)"));
}

#[test]
fn verify_wide_design() {
    let dir = tempfile::tempdir().unwrap();
    let g = prefixsyn::graph::sklansky(32).unwrap();
    fs::write(dir.path().join("g.epr"), render_epr(&g)).unwrap();
    assert_eq!(code(&run(dir.path(), &["verify", "g.epr"])), 0);
}

#[test]
fn datagen_counts_and_records() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        &[
            "datagen",
            "--bits",
            "8",
            "--profile",
            "random",
            "--seed",
            "4",
            "--samples",
            "50",
            "--out",
            "d",
        ],
    );
    assert_eq!(code(&o), 0);
    let line = stdout(&o);
    assert!(line.starts_with("generated "), "{line}");
    let samples =
        parse_jsonl(&fs::read_to_string(dir.path().join("d/samples.jsonl")).unwrap()).unwrap();
    assert!(line
        .trim_end()
        .ends_with(&format!("kept {}", samples.len())));
    for s in &samples {
        let b = s.replay().unwrap();
        assert_eq!(b.complete().graph.depth(), b.level());
    }
}

#[test]
fn datagen_zero_noise_and_zero_count() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        &[
            "datagen",
            "--bits",
            "8",
            "--samples",
            "30",
            "--eps-scale",
            "0",
            "--threshold",
            "8",
            "--out",
            "z",
        ],
    );
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).trim(), "generated 1 filtered 0 kept 1");

    let o = run(
        dir.path(),
        &["datagen", "--bits", "8", "--samples", "0", "--out", "e"],
    );
    assert_eq!(code(&o), 0);
    assert_eq!(
        fs::read_to_string(dir.path().join("e/samples.jsonl")).unwrap(),
        ""
    );
}

#[test]
fn eval_writes_six_rows() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["eval", "--bits", "16", "--out", "r"]);
    assert_eq!(code(&o), 0);
    let csv = fs::read_to_string(dir.path().join("r/report.csv")).unwrap();
    assert_eq!(csv.lines().count(), 7);
    assert!(csv.starts_with("target,area,delay,slack,size,level,deficiency\n"));
}

#[test]
fn export_both_styles() {
    let dir = tempfile::tempdir().unwrap();
    let g = prefixsyn::graph::kogge_stone(8).unwrap();
    fs::write(dir.path().join("g.epr"), render_epr(&g)).unwrap();
    let plain = run(dir.path(), &["export", "g.epr"]);
    assert_eq!(code(&plain), 0);
    assert!(stdout(&plain).contains("module prefix_adder_8 (a, b, s, cout);"));
    let inv = run(
        dir.path(),
        &["export", "g.epr", "--style", "inverting", "--out", "g.v"],
    );
    assert_eq!(code(&inv), 0);
    let text = fs::read_to_string(dir.path().join("g.v")).unwrap();
    let net = prefixsyn::dataio::Netlist::parse(&text).unwrap();
    assert_eq!(net.width(), 8);
    assert_eq!(
        code(&run(dir.path(), &["export", "g.epr", "--style", "fancy"])),
        1
    );
}
