use std::path::Path;
use std::process::{Command, Output};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ymtg::evolution::State;
use ymtg::grid::sampling::{random_vector, with_sobolev_norm};
use ymtg::grid::TorusGrid;
use ymtg::projections::project_df;

fn ymtg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ymtg"))
        .args(args)
        .env_remove("YMTG_THREADS")
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn assert_error(o: &Output, code: i32, tag: &str) {
    assert_eq!(o.status.code(), Some(code), "{}", stderr(o));
    let err = stderr(o);
    let line = err.lines().last().unwrap_or_default();
    assert!(line.starts_with(&format!("error[{tag}]: ")), "{err}");
}

#[test]
fn missing_command_is_a_config_error() {
    assert_error(&ymtg(&[]), 2, "CONFIG");
    assert_error(&ymtg(&["frobnicate"]), 2, "CONFIG");
    assert_eq!(ymtg(&["--help"]).status.code(), Some(0));
}

#[test]
fn low_regularity_is_rejected_with_the_threshold() {
    let o = ymtg(&["simulate", "--s", "0.7", "--n", "8"]);
    assert_error(&o, 2, "CONFIG");
    assert!(stderr(&o).contains("s > 3/4"));
}

#[test]
fn simulate_writes_deterministic_diagnostics_and_checkpoints() {
    let dir = tempfile::tempdir().unwrap();
    let (d1, d2, ck) = (dir.path().join("a.csv"), dir.path().join("b.csv"), dir.path().join("s.ymtg"));
    let base = ["simulate", "--n", "8", "--dt", "0.01", "--t-end", "0.05", "--diag-stride", "1", "--seed", "5"];
    let o = ymtg(&[&base[..], &["--out", p(&d1), "--checkpoint", p(&ck)]].concat());
    assert!(o.status.success(), "{}", stderr(&o));
    let o = ymtg(&[&base[..], &["--out", p(&d2)]].concat());
    assert!(o.status.success(), "{}", stderr(&o));
    let (a, b) = (std::fs::read(&d1).unwrap(), std::fs::read(&d2).unwrap());
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("t,gauss_residual"));
    assert_eq!(lines.len(), 1 + 6);

    let state = ymtg::io::read_state(&ck, Some((8, 3))).unwrap();
    assert!((state.t - 0.05).abs() < 1e-12);
    let o = ymtg(&["norms", "--input", p(&ck), "--s", "0.8,0"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["components"], 9);
    assert_eq!(v["norms"].as_array().unwrap().len(), 6);
}

#[test]
fn flags_override_config_and_unknown_keys_fail() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    let ck = dir.path().join("s.ymtg");
    std::fs::write(
        &cfg,
        r#"{"command": "simulate", "seed": 2, "simulate": {"evolve": {"n": 32, "dt": 0.01, "t_end": 0.02}}}"#,
    )
    .unwrap();
    let o = ymtg(&["simulate", "--config", p(&cfg), "--n", "8", "--checkpoint", p(&ck)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (h, _) = ymtg::io::read_fields(&ck).unwrap();
    assert_eq!(h.grid.n(), 8);

    std::fs::write(&cfg, r#"{"simulate": {"evolve": {"n": 8, "bogus": 1}}}"#).unwrap();
    assert_error(&ymtg(&["simulate", "--config", p(&cfg)]), 2, "CONFIG");
    std::fs::write(&cfg, r#"{"command": "norms"}"#).unwrap();
    assert_error(&ymtg(&["simulate", "--config", p(&cfg)]), 2, "CONFIG");
    assert_error(&ymtg(&["simulate", "--config", p(&dir.path().join("none.json"))]), 4, "IO");
}

#[test]
fn blow_up_exits_with_code_three_and_keeps_the_last_state() {
    let dir = tempfile::tempdir().unwrap();
    let (data, cfg, ck) = (dir.path().join("d.ymtg"), dir.path().join("c.json"), dir.path().join("last.ymtg"));
    let g = TorusGrid::standard(8).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let a = with_sobolev_norm(&project_df(&random_vector(&g, 1, 2, &mut rng)), 0.8, 5e-3);
    let at = with_sobolev_norm(&project_df(&random_vector(&g, 1, 2, &mut rng)), -0.2, 1.0);
    let zero = a.scale(0.0);
    ymtg::io::write_state(&data, &State::new(0.0, a, at, zero)).unwrap();
    std::fs::write(
        &cfg,
        r#"{"simulate": {"algebra": "abelian:1", "evolve": {"n": 8, "dt": 0.01, "t_end": 1.0, "blowup_factor": 2.0}}}"#,
    )
    .unwrap();
    let o = ymtg(&["simulate", "--config", p(&cfg), "--data", p(&data), "--checkpoint", p(&ck)]);
    assert_error(&o, 3, "BLOWUP");
    assert!(ymtg::io::read_state(&ck, Some((8, 1))).is_ok());
}

#[test]
fn gauge_fix_reports_history() {
    let o = ymtg(&["gauge-fix", "--n", "8", "--algebra", "abelian:2", "--seed", "4"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "iter,residual,x_norm_of_V");
    assert_eq!(lines.len(), 3);
    let last: f64 = lines[2].split(',').nth(1).unwrap().parse().unwrap();
    assert!(last <= 1e-12);

    let dir = tempfile::tempdir().unwrap();
    let (out, ck) = (dir.path().join("g.csv"), dir.path().join("g.ymtg"));
    let o = ymtg(&["gauge-fix", "--n", "8", "--seed", "4", "--out", p(&out), "--checkpoint", p(&ck)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(std::fs::read_to_string(&out).unwrap().lines().count() >= 2);
    let v = ymtg::io::read_vector(&ck, Some((8, 3))).unwrap();
    assert!(v.divergence().l2_norm() <= 1e-9 * v.l2_norm().max(1e-300));
}

#[test]
fn estimate_reports_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    let args = |out: &Path| {
        ymtg(&[
            "verify-estimates",
            "--cases",
            "energy,bilinear_strichartz(0.2),ddd",
            "--grids",
            "8",
            "--samples",
            "2",
            "--seed",
            "3",
            "--out",
            p(out),
        ])
    };
    assert!(args(&a).status.success());
    assert!(args(&b).status.success());
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(&a).unwrap()).unwrap();
    assert_eq!(v["records"].as_array().unwrap().len(), 6);
    assert_eq!(v["records"][2]["case"], "bilinear_strichartz(0.2)");
    assert!(v["summary"].as_array().unwrap().iter().all(|s| s["all_finite"] == true));

    let o = ymtg(&["verify-estimates", "--grids", "8", "--samples", "0"]);
    assert_error(&o, 2, "CONFIG");
    let o = ymtg(&["verify-estimates", "--cases", "nope", "--grids", "8"]);
    assert_error(&o, 2, "CONFIG");
}

#[test]
fn corrupt_checkpoints_are_io_errors() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("bad.ymtg");
    std::fs::write(&f, b"YMTG1\x08\x00").unwrap();
    assert_error(&ymtg(&["norms", "--input", p(&f)]), 4, "IO");
    std::fs::write(&f, b"YMTG0 old file").unwrap();
    let o = ymtg(&["norms", "--input", p(&f)]);
    assert_error(&o, 4, "IO");
    assert!(stderr(&o).contains("unsupported"));
    assert_error(&ymtg(&["norms"]), 2, "CONFIG");
}

#[test]
fn thread_variable_is_validated() {
    let o = Command::new(env!("CARGO_BIN_EXE_ymtg"))
        .args(["gauge-fix", "--n", "8"])
        .env("YMTG_THREADS", "zero")
        .output()
        .unwrap();
    assert_error(&o, 2, "CONFIG");
    let o = Command::new(env!("CARGO_BIN_EXE_ymtg"))
        .args(["gauge-fix", "--n", "8", "--algebra", "abelian:1"])
        .env("YMTG_THREADS", "1")
        .output()
        .unwrap();
    assert!(o.status.success());
}
