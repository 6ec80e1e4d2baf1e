use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_biphoton"))
        .args(args)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn out_arg(p: &Path) -> String {
    p.display().to_string()
}

#[test]
fn source_stage_only() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "--out",
        &out_arg(dir.path()),
        "pipeline",
        "--preset",
        "straight",
        "--stages",
        "source",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let mut names: Vec<String> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(names, ["manifest.json", "source_jsa.csv", "source_jsa.json"]);
}

#[test]
fn taper1_report_on_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "--out",
        &out_arg(dir.path()),
        "pipeline",
        "--preset",
        "taper1",
        "--stages",
        "source,couple,hom",
    ]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    let end = text.find("\n}").unwrap() + 2;
    let report: serde_json::Value = serde_json::from_str(&text[..end]).unwrap();
    let shift = report["hom"]["dip_shift_s"].as_f64().unwrap();
    assert!((shift - 0.52e-12).abs() < 0.02e-12, "{shift}");
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(&cfg, r#"{"preset": "taper3", "grid_points": 2048, "seed": 3}"#).unwrap();
    let out = dir.path().join("o");
    let o = run(&[
        "--config",
        &out_arg(&cfg),
        "--out",
        &out_arg(&out),
        "--grid-points",
        "2500",
        "pipeline",
        "--stages",
        "source",
        "--preset",
        "taper1",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["config"]["preset"], "taper1");
    assert_eq!(m["config"]["grid_points"], 2500);
    assert_eq!(m["config"]["seed"], 3);
}

#[test]
fn counts_sweep_is_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let c = dir.path().join("c");
    for (p, seed) in [(&a, "11"), (&b, "11"), (&c, "12")] {
        let o = run(&[
            "--out",
            &out_arg(p),
            "--seed",
            seed,
            "counts-sweep",
            "--powers",
            "1,2,5",
        ]);
        assert_eq!(code(&o), 0);
    }
    let read = |p: &Path| fs::read(p.join("counts.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_ne!(read(&a), read(&c));
    let text = String::from_utf8(read(&a)).unwrap();
    assert_eq!(text.lines().next(), Some("power_mw,pgr_per_s,car,car_sigma"));
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn scenario_file_is_read() {
    let dir = tempfile::tempdir().unwrap();
    let scn = dir.path().join("s.json");
    fs::write(&scn, r#"{"dark_rate_s": 0.0, "dark_rate_i": 0.0, "rng_seed": 5}"#).unwrap();
    let out = dir.path().join("o");
    let o = run(&["--out", &out_arg(&out), "counts-sweep", "--scenario", &out_arg(&scn)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let s: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("scenario.json")).unwrap()).unwrap();
    assert_eq!(s["rng_seed"], 5);
    assert_eq!(s["dark_rate_s"], 0.0);
}

#[test]
fn sweep_taper_writes_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["--out", &out_arg(dir.path()), "sweep-taper", "--lengths-um", "400,800"]);
    assert_eq!(code(&o), 0);
    let text = fs::read_to_string(dir.path().join("length_sweep.csv")).unwrap();
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn fig_writes_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["--out", &out_arg(dir.path()), "fig", "fig1c"]);
    assert_eq!(code(&o), 0);
    assert!(dir.path().join("manifest.json").is_file());
    assert!(dir.path().join("fig1c_counts.csv").is_file());
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(&cfg, r#"{"preset": "taper7"}"#).unwrap();
    let o = run(&["--config", &out_arg(&cfg), "--out", &out_arg(dir.path()), "pipeline"]);
    assert_eq!(code(&o), 2);
    let o = run(&["--out", &out_arg(dir.path()), "--grid-points", "10", "pipeline"]);
    assert_eq!(code(&o), 2);
    let o = run(&["--out", &out_arg(dir.path()), "pipeline", "--stages", "source,hom"]);
    assert_eq!(code(&o), 2);
    let o = run(&["--out", &out_arg(dir.path()), "fig", "fig9"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn numerical_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "--out",
        &out_arg(dir.path()),
        "scaling",
        "--preset",
        "taper2",
        "--visibilities",
        "0.5,0.8",
    ]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unreachable"));
    // The manifest written before the failure is rolled back.
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn io_errors_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let o = run(&[
        "--out",
        &out_arg(&blocker.join("sub")),
        "pipeline",
        "--stages",
        "source",
    ]);
    assert_eq!(code(&o), 4, "{}", String::from_utf8_lossy(&o.stderr));
}
