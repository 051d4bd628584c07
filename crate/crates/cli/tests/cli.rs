use std::path::Path;
use std::process::{Command, Output};

fn dyncover(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dyncover"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn gen(dir: &Path, name: &str, args: &[&str]) -> std::path::PathBuf {
    let out = dir.join(name);
    let mut full = vec!["gen"];
    full.extend_from_slice(args);
    full.extend_from_slice(&["--out", path(&out)]);
    let o = dyncover(&full);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    out
}

#[test]
fn gen_run_writes_metrics_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let trace = gen(
        dir.path(),
        "hvc.jsonl",
        &["--kind", "hvc", "--n", "8", "--ops", "30", "--seed", "3"],
    );
    let metrics = dir.path().join("m.csv");
    let o = dyncover(&[
        "run",
        "--trace",
        path(&trace),
        "--mode",
        "unit",
        "--oracle",
        "brute",
        "--audit",
        "all",
        "--out",
        path(&metrics),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );

    let csv = std::fs::read_to_string(&metrics).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("t,event,"));
    assert_eq!(lines.count(), 30);

    let summary: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(metrics.with_extension("summary.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(summary["passed"], true);
    assert_eq!(summary["competitive_violations"], 0);
    assert_eq!(summary["recourse_ok"], true);
}

#[test]
fn same_seed_same_trace() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "--kind",
        "coverage",
        "--n",
        "6",
        "--ops",
        "20",
        "--seed",
        "9",
        "--cost-spread",
        "10",
    ];
    let a = gen(dir.path(), "a.jsonl", &args);
    let b = gen(dir.path(), "b.jsonl", &args);
    assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
}

#[test]
fn tree_and_combiner_modes_run() {
    let dir = tempfile::tempdir().unwrap();
    let steiner = gen(
        dir.path(),
        "s.jsonl",
        &[
            "--kind",
            "metric-steiner",
            "--n",
            "7",
            "--ops",
            "12",
            "--seed",
            "1",
        ],
    );
    let o = dyncover(&[
        "run",
        "--trace",
        path(&steiner),
        "--mode",
        "steiner",
        "--oracle",
        "brute",
        "--summary",
        path(&dir.path().join("s.json")),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );

    let junta = gen(
        dir.path(),
        "j.jsonl",
        &["--kind", "junta", "--n", "10", "--ops", "25", "--seed", "2"],
    );
    for mode in ["rjunta", "combiner"] {
        let o = dyncover(&[
            "run",
            "--trace",
            path(&junta),
            "--mode",
            mode,
            "--summary",
            path(&dir.path().join("j.json")),
        ]);
        assert_eq!(
            o.status.code(),
            Some(0),
            "{mode}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
}

#[test]
fn bad_trace_line_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let trace = gen(
        dir.path(),
        "t.jsonl",
        &["--kind", "hvc", "--n", "6", "--ops", "5"],
    );
    let mut text = std::fs::read_to_string(&trace).unwrap();
    text.push_str("{\"op\":\"insert\",\"t\":5}\n");
    std::fs::write(&trace, text).unwrap();
    let o = dyncover(&["run", "--trace", path(&trace), "--mode", "unit"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(
        String::from_utf8_lossy(&o.stderr).contains("line 7"),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
}

#[test]
fn unit_mode_rejects_costs() {
    let dir = tempfile::tempdir().unwrap();
    let trace = gen(
        dir.path(),
        "c.jsonl",
        &[
            "--kind",
            "coverage",
            "--n",
            "6",
            "--ops",
            "5",
            "--cost-spread",
            "10",
        ],
    );
    let o = dyncover(&["run", "--trace", path(&trace), "--mode", "unit"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn plot_data_from_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let trace = gen(
        dir.path(),
        "c.jsonl",
        &[
            "--kind", "coverage", "--n", "6", "--ops", "15", "--seed", "4",
        ],
    );
    let metrics = dir.path().join("m.csv");
    let o = dyncover(&[
        "run",
        "--trace",
        path(&trace),
        "--mode",
        "cost",
        "--oracle",
        "brute",
        "--out",
        path(&metrics),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let o = dyncover(&["plot-data", "--metrics", path(&metrics)]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.lines().any(|l| l.starts_with("recourse_vs_sum_g,")));
    assert!(text.lines().any(|l| l.starts_with("ratio_vs_t,")));
}

#[test]
fn verify_reports_structure() {
    let dir = tempfile::tempdir().unwrap();
    let cover = dir.path().join("cover.json");
    std::fs::write(
        &cover,
        r#"{"ground_size":3,"function":{"kind":"coverage","sets":[[0,1],[1],[2]]}}"#,
    )
    .unwrap();
    let o = dyncover(&["verify", "--function", path(&cover)]);
    assert_eq!(o.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["monotone_submodular"], true);
    assert_eq!(report["three_increasing"], true);

    let bad = dir.path().join("bad.json");
    std::fs::write(
        &bad,
        r#"{"ground_size":2,"function":{"kind":"junta","support":[0,1],"table":[0,0,0,2]}}"#,
    )
    .unwrap();
    let o = dyncover(&["verify", "--function", path(&bad)]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn sweep_prints_one_line_per_seed() {
    let o = dyncover(&[
        "sweep", "--kind", "hvc", "--n", "6", "--ops", "15", "--mode", "unit", "--seeds", "4",
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().count(), 4);
}
