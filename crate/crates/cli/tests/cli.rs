use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_corrbound"))
}

fn model(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("models").join(name)
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn csv_column(text: &str, name: &str) -> Vec<String> {
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let i = header.iter().position(|h| *h == name).unwrap();
    lines.map(|l| l.split(',').nth(i).unwrap().to_string()).collect()
}

#[test]
fn check_passes_on_decay_model() {
    let out = run(bin()
        .args(["check", "--model"])
        .arg(model("fig2.json"))
        .args(["--bounds", "ZERO_T_EQ6,ETA_EQ8,DERIV_EQ7", "--tgrid", "0:10:21:lin"]));
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    // 21 + 20 + 21 rows plus header
    assert_eq!(text.lines().count(), 63);
    assert!(text.starts_with("bound_id,t1,t2,lhs,rhs,ratio,in_domain,cmax_mode\n"));
}

#[test]
fn check_default_bounds_and_tight_mode() {
    for mode in ["standard", "tight"] {
        let out = run(bin().args(["check", "--cmax", mode, "--model"]).arg(model("fig3.json")));
        assert_eq!(code(&out), 0, "{mode}");
    }
}

#[test]
fn corrupted_rhs_is_a_violation() {
    let out = run(bin()
        .args(["check", "--model"])
        .arg(model("fig2.json"))
        .args(["--bounds", "ETA_EQ8", "--rhs-scale", "0.5"]));
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("violation: ETA_EQ8"));
}

#[test]
fn input_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"n\": 2, \"rates\": [[0, 1]").unwrap();
    assert_eq!(code(&run(bin().args(["check", "--model"]).arg(&bad))), 2);
    let neg = dir.path().join("neg.json");
    std::fs::write(&neg, r#"{"n":2,"rates":[[0,-1],[1,0]],"p0":[1,0],"S":[1,-1]}"#).unwrap();
    assert_eq!(code(&run(bin().args(["check", "--model"]).arg(&neg))), 2);
    assert_eq!(code(&run(bin().args(["check", "--model"]).arg(dir.path().join("missing.json")))), 2);
    let fig2 = model("fig2.json");
    assert_eq!(code(&run(bin().args(["check", "--tgrid", "0:1:5:log", "--model"]).arg(&fig2))), 2);
    assert_eq!(code(&run(bin().args(["check", "--bounds", "NOPE", "--model"]).arg(&fig2))), 2);
    assert_eq!(code(&run(bin().args(["stress", "--states", "1"]))), 2);
    assert_eq!(code(&run(bin().args(["frobnicate"]))), 2);
    let out = run(bin().env("CORRBOUND_THREADS", "zero").args(["stress", "--models", "1"]));
    assert_eq!(code(&out), 2);
}

#[test]
fn stress_is_byte_identical_across_runs_and_thread_counts() {
    let args = ["stress", "--models", "30", "--seed", "7"];
    let a = run(bin().env("CORRBOUND_THREADS", "1").args(args));
    let b = run(bin().env("CORRBOUND_THREADS", "4").args(args));
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let tally: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    let obj = tally.as_object().unwrap();
    assert_eq!(obj.len(), 12);
    assert_eq!(obj["ETA_EQ8"]["evaluations"], 30 * 20);
    assert_eq!(obj["MAIN_EQ5"]["evaluations"], 30 * 19);
}

#[test]
fn stress_with_no_models_is_empty() {
    let out = run(bin().args(["stress", "--models", "0"]));
    assert_eq!(code(&out), 0);
    assert_eq!(String::from_utf8(out.stdout).unwrap().trim(), "{}");
}

#[test]
fn figure2_writes_tables_and_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(bin().args(["figure2", "--models", "9", "--seed", "5", "--out"]).arg(dir.path()));
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for name in ["fig2a", "fig2b", "fig2c", "fig2d"] {
        assert!(dir.path().join(format!("{name}.csv")).exists());
        assert!(dir.path().join(format!("{name}.csv.meta.json")).exists());
    }
    let a = std::fs::read_to_string(dir.path().join("fig2a.csv")).unwrap();
    let t = csv_column(&a, "t");
    let lhs = csv_column(&a, "lhs");
    let i = t.iter().position(|x| x.parse::<f64>().unwrap() == 1.0).unwrap();
    let v: f64 = lhs[i].parse().unwrap();
    assert!((v - 2.0 * (1.0 - (-1.0_f64).exp())).abs() < 1e-12);
    assert_eq!(lhs[0].parse::<f64>().unwrap(), 0.0);

    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("fig2c.csv.meta.json")).unwrap())
            .unwrap();
    assert_eq!(meta["seed"], 5);
    assert_eq!(meta["random_models"].as_array().unwrap().len(), 9);
    assert_eq!(meta["random_models"][3]["seed"], 8);
    assert!(meta["generator"].as_str().unwrap().contains("ChaCha8"));
}

#[test]
fn figure3_marks_domain_edge() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(bin().args(["figure3", "--out"]).arg(dir.path()));
    assert_eq!(code(&out), 0);
    let b = std::fs::read_to_string(dir.path().join("fig3b.csv")).unwrap();
    let t: Vec<f64> = csv_column(&b, "t").iter().map(|x| x.parse().unwrap()).collect();
    let rhs = csv_column(&b, "bound_rhs");
    let flag = csv_column(&b, "in_domain");
    let edge = std::f64::consts::PI.powi(2) / 4.0;
    let j = t.iter().position(|&x| x == edge).unwrap();
    assert!((rhs[j].parse::<f64>().unwrap() - 0.02).abs() < 1e-15);
    assert_eq!(flag[j + 1], "false");
    assert_eq!(rhs[j + 1].parse::<f64>().unwrap(), 0.02);
}

#[test]
fn response_json_output() {
    let out = run(bin().args(["response", "--kind", "pulse", "--format", "json", "--tgrid", "1:2:2:lin"]));
    assert_eq!(code(&out), 0);
    let rows: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let ratio = rows[0]["ratio"].as_f64().unwrap();
    assert!((ratio - 2.0 * (-2.0_f64).exp()).abs() < 1e-12);
    let out = run(bin().args(["response", "--model"]).arg(model("fig2.json")));
    // the decay model has a unique (absorbing) steady state with zero activity
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
}
