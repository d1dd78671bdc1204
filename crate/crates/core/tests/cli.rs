//! End-to-end runs of the `sta` binary.

use std::path::Path;
use std::process::{Command, Output};

fn sta(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sta"))
        .args(args)
        .env_remove("STA_THREADS")
        .output()
        .expect("binary runs")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn moons(dir: &Path) -> std::path::PathBuf {
    let data = dir.join("moons.csv");
    let out = sta(&[
        "generate",
        "--kind",
        "moons",
        "--rows",
        "120",
        "--seed",
        "3",
        "--out",
        p(&data),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    data
}

#[test]
fn train_then_attack_a_saved_model() {
    let dir = tempfile::tempdir().unwrap();
    let data = moons(dir.path());
    let model = dir.path().join("model.json");
    let out = sta(&[
        "train",
        "--data",
        p(&data),
        "--trees",
        "10",
        "--depth",
        "3",
        "--out",
        p(&model),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let json = std::fs::read_to_string(&model).unwrap();
    assert!(json.contains("\"u\"") && json.contains("\"v\""));

    let report = dir.path().join("r.md");
    let out = sta(&[
        "attack",
        "--model",
        p(&model),
        "--data",
        p(&data),
        "--attack",
        "sta-exhaustive,random",
        "--epsilon",
        "0.2,0.5",
        "--iters",
        "10",
        "--report",
        p(&report),
        "--format",
        "md",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let md = std::fs::read_to_string(&report).unwrap();
    assert!(
        md.contains("| dataset | ε | sta-exhaustive | random |"),
        "{md}"
    );
}

#[test]
fn sweep_and_surface() {
    let dir = tempfile::tempdir().unwrap();
    let data = moons(dir.path());
    let out = sta(&[
        "sweep-tau",
        "--data",
        p(&data),
        "--grid",
        "0.01,0.1",
        "--attack",
        "sta-sampled",
        "--epsilon",
        "0.3",
        "--iters",
        "10",
        "--trees",
        "10",
        "--format",
        "md",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let md = String::from_utf8(out.stdout).unwrap();
    assert!(md.contains("Recommended τ:"), "{md}");

    let model = dir.path().join("model.json");
    assert!(sta(&[
        "train",
        "--data",
        p(&data),
        "--trees",
        "5",
        "--out",
        p(&model)
    ])
    .status
    .success());
    let grid = dir.path().join("grid.csv");
    let out = sta(&[
        "surface",
        "--model",
        p(&model),
        "--fx",
        "0",
        "--fy",
        "1",
        "--anchor",
        "2,2",
        "--res",
        "7",
        "--tau",
        "0.1",
        "--data",
        p(&data),
        "--out",
        p(&grid),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = std::fs::read_to_string(&grid).unwrap();
    assert_eq!(csv.lines().count(), 1 + 49);
    assert!(csv.starts_with("x_i,x_j,score_0,score_1,decision"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let data = moons(dir.path());
    let code = |out: Output| out.status.code().unwrap();

    // usage errors
    assert_eq!(code(sta(&["attack"])), 2);
    assert_eq!(
        code(sta(&["attack", "--data", p(&data), "--attack", "bogus"])),
        2
    );
    assert_eq!(
        code(sta(&["attack", "--data", p(&data), "--epsilon", "1.5"])),
        2
    );
    assert_eq!(code(sta(&["attack", "--data", p(&data), "--tau", "0"])), 2);

    // data errors
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "a,label\n1,0\nred,1\n").unwrap();
    let out = sta(&[
        "train",
        "--data",
        p(&bad),
        "--out",
        p(&dir.path().join("m.json")),
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
    assert_eq!(
        code(sta(&[
            "train",
            "--data",
            "/nonexistent.csv",
            "--out",
            "/tmp/x.json"
        ])),
        3
    );
    let broken = dir.path().join("broken.json");
    std::fs::write(&broken, "{\"format\": \"sta-model/1\"}").unwrap();
    assert_eq!(
        code(sta(&[
            "surface",
            "--model",
            p(&broken),
            "--fx",
            "0",
            "--fy",
            "1",
            "--anchor",
            "0,0"
        ])),
        3
    );

    // help is not an error
    assert_eq!(code(sta(&["--help"])), 0);
}
