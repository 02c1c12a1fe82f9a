use serde_json::Value;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn gkaw(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_gkaw"));
    cmd.args(args);
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("gkaw runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn run_ok(scenario: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        scenario,
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    let output = gkaw(&args, &[]);
    assert!(
        output.status.success(),
        "{scenario} failed: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    output
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn assert_schema(schema: &str, doc: &Value) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../docs/schemas")
        .join(schema);
    let schema = read_json(&path);
    let validator = jsonschema::validator_for(&schema).unwrap();
    let errors: Vec<String> = validator.iter_errors(doc).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{}: {errors:?}", path.display());
}

fn csv_rows(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

const SMALL: &str = r#"
[grid]
n_points = 256
period = 60.0

[run]
dt = 0.01
t_end = 1.0
observer_stride = 25
"#;

#[test]
fn evolve_zero_data_gives_zero_checkpoints() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", SMALL);
    let out = dir.path().join("out");
    run_ok("evolve", &cfg, &out, &["--set", "initial.amplitude=0"]);
    let summary = read_json(&out.join("summary.json"));
    assert_schema("evolve-summary.schema.json", &summary);
    assert_eq!(summary["max_mass_drift"], 0.0);
    assert_eq!(summary["max_l2_drift"], 0.0);
    let names = summary["checkpoints"].as_array().unwrap();
    assert_eq!(names.len(), 5);
    for name in names {
        let ck = gkaw::checkpoint::load(&out.join(name.as_str().unwrap())).unwrap();
        assert!(ck.field.coeffs().iter().all(|c| c.re == 0.0 && c.im == 0.0));
    }
    let (header, rows) = csv_rows(&out.join("conservation.csv"));
    assert_eq!(
        header,
        ["t", "mass", "l2_norm_sq", "mass_drift", "l2_drift"]
    );
    assert_eq!(rows.len(), 5);
}

#[test]
fn outputs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", SMALL);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        run_ok(
            "evolve",
            &cfg,
            out,
            &["--seed", "42", "--set", "initial.noise=1e-3"],
        );
    }
    let c = dir.path().join("c");
    run_ok(
        "evolve",
        &cfg,
        &c,
        &["--seed", "43", "--set", "initial.noise=1e-3"],
    );
    for name in [
        "summary.json",
        "conservation.csv",
        "checkpoints/checkpoint_000004.gkaw",
    ] {
        assert_eq!(
            fs::read(a.join(name)).unwrap(),
            fs::read(b.join(name)).unwrap(),
            "{name}"
        );
    }
    assert_ne!(
        fs::read(a.join("checkpoints/checkpoint_000004.gkaw")).unwrap(),
        fs::read(c.join("checkpoints/checkpoint_000004.gkaw")).unwrap()
    );
    let log = fs::read_to_string(a.join("run.log")).unwrap();
    assert!(log.contains("start evolve") && log.contains("end ok"));
}

#[test]
fn checkpoint_restart_continues_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", SMALL);
    let first = dir.path().join("first");
    run_ok("evolve", &cfg, &first, &[]);
    let ck = first.join("checkpoints/checkpoint_000004.gkaw");
    let second = dir.path().join("second");
    run_ok(
        "evolve",
        &cfg,
        &second,
        &[
            "--set",
            "initial.profile=from_checkpoint",
            "--set",
            &format!("initial.path={}", ck.display()),
        ],
    );
    let end = gkaw::checkpoint::load(&second.join("checkpoints/checkpoint_000004.gkaw")).unwrap();
    assert!((end.field.time() - 2.0).abs() < 1e-12);
}

#[test]
fn linear_radius_track_is_constant() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.toml",
        "[grid]\nn_points = 512\nperiod = 100.0\n[initial]\nprofile = \"sech\"\n[run]\ndt = 0.05\nt_end = 10.0\nobserver_stride = 20\nnonlinear = false\n",
    );
    let out = dir.path().join("out");
    run_ok("radius-track", &cfg, &out, &[]);
    assert_schema(
        "radius-track-summary.schema.json",
        &read_json(&out.join("summary.json")),
    );
    let (header, rows) = csv_rows(&out.join("radius.csv"));
    assert_eq!(
        header,
        ["t", "sigma_hat", "fit_residual", "sigma_hat_times_max1t"]
    );
    let s0 = rows[0][1];
    assert!(rows.iter().all(|r| (r[1] - s0).abs() <= 1e-9 * s0));
    assert!(rows
        .iter()
        .all(|r| (r[3] - r[1] * r[0].max(1.0)).abs() <= 1e-12 * r[3]));
}

#[test]
fn acl_audit_reports_ratio() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.toml",
        "[grid]\nn_points = 512\nperiod = 100.0\n[initial]\nprofile = \"sech2\"\namplitude = -1.0\nwidth = 2.0\n[run]\ndt = 2e-3\nt_end = 2.0\nobserver_stride = 100\n",
    );
    let out = dir.path().join("out");
    run_ok("acl-audit", &cfg, &out, &[]);
    let summary = read_json(&out.join("summary.json"));
    assert_schema("acl-audit-summary.schema.json", &summary);
    let ratio = summary["increment_ratio"].as_f64().unwrap();
    assert!((0.35..=0.65).contains(&ratio), "{ratio}");
    let (header, rows) = csv_rows(&out.join("audit.csv"));
    assert_eq!(header, ["sigma", "t", "gnorm_sq", "increment", "bound_rhs"]);
    assert_eq!(
        rows.len(),
        2 * summary["snapshots"].as_u64().unwrap() as usize
    );
}

#[test]
fn soliton_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.toml",
        "[grid]\nn_points = 256\nperiod = 160.0\n[initial]\nprofile = \"sech4\"\n[run]\ndt = 0.05\n[soliton]\ntransits = 0.25\n",
    );
    let out = dir.path().join("out");
    run_ok("soliton", &cfg, &out, &[]);
    let report = read_json(&out.join("soliton.json"));
    assert_schema("soliton.schema.json", &report);
    assert!(report["residual"].as_f64().unwrap() < 1e-9);
    assert!(report["shape_error"].as_f64().unwrap() < 1e-6);

    let bad = write_config(
        dir.path(),
        "bad.toml",
        "[initial]\nprofile = \"gaussian\"\n",
    );
    let o = gkaw(
        &[
            "soliton",
            "--config",
            bad.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn multiplier_check_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.toml",
        "[equation]\nalpha = 0.0\nbeta = 1.0\n[multiplier]\nblocks = [[3, 3, 0], [3, 0, 0]]\nsamples = 500\ns_values = [-1.0]\n",
    );
    let out = dir.path().join("out");
    run_ok("multiplier-check", &cfg, &out, &[]);
    let doc = read_json(&out.join("multiplier.json"));
    assert_schema("multiplier-check.schema.json", &doc);
    assert_eq!(doc["blocks"][0]["samples"], 500);
    assert!(doc["blocks"][1]["infeasible"].is_string());
    assert_eq!(doc["feasibility"][0]["feasible"], true);
}

#[test]
fn budget_sweep_halves_sigma() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.toml",
        "[budget]\nsigma0 = 5.0\ndelta = 0.1\nc_measured = 0.5\nnorm_u0 = 2.0\nt_sweep = [10.0, 20.0, 40.0]\n",
    );
    let out = dir.path().join("out");
    run_ok("budget", &cfg, &out, &[]);
    let doc = read_json(&out.join("budget.json"));
    assert_schema("budget.schema.json", &doc);
    assert_eq!(doc["growth_condition_holds"], true);
    let sweep = doc["sweep"].as_array().unwrap();
    for w in sweep.windows(2) {
        let (a, b) = (
            w[0]["sigma_T"].as_f64().unwrap(),
            w[1]["sigma_T"].as_f64().unwrap(),
        );
        assert!((a / b - 2.0).abs() < 1e-12);
    }
}

#[test]
fn sweep_fans_out() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.toml",
        &format!("{SMALL}\n[sweep]\nscenario = \"evolve\"\nparameter = \"initial.amplitude\"\nvalues = [0.0, 0.5, 1.0]\n"),
    );
    let out = dir.path().join("out");
    let o = gkaw(
        &[
            "sweep",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ],
        &[("GKAW_THREADS", "2")],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let index = read_json(&out.join("sweep.json"));
    assert_schema("sweep.schema.json", &index);
    for i in 0..3 {
        let summary = read_json(&out.join(format!("run-{i:03}/summary.json")));
        assert_eq!(summary["scenario"], "evolve");
    }
    let o = gkaw(
        &[
            "sweep",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ],
        &[("GKAW_THREADS", "zero")],
    );
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let out_s = out.to_str().unwrap();

    let bad = write_config(dir.path(), "bad.toml", "[grid]\nn_point = 64\n");
    let o = gkaw(
        &["evolve", "--config", bad.to_str().unwrap(), "--out", out_s],
        &[],
    );
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("n_point") && err.contains("line 2"), "{err}");

    let ok = write_config(dir.path(), "ok.toml", SMALL);
    let o = gkaw(
        &[
            "evolve",
            "--config",
            ok.to_str().unwrap(),
            "--out",
            out_s,
            "--set",
            "equation.beta=0",
        ],
        &[],
    );
    assert_eq!(o.status.code(), Some(1));

    let o = gkaw(
        &["evolve", "--config", "/nonexistent/c.toml", "--out", out_s],
        &[],
    );
    assert_eq!(o.status.code(), Some(3));

    let corrupt = dir.path().join("corrupt.gkaw");
    fs::write(&corrupt, b"NOPE0000").unwrap();
    let o = gkaw(
        &[
            "evolve",
            "--config",
            ok.to_str().unwrap(),
            "--out",
            out_s,
            "--set",
            "initial.profile=from_checkpoint",
            "--set",
            &format!("initial.path={}", corrupt.display()),
        ],
        &[],
    );
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("magic"));

    // steep data, huge step and no dealiasing: the run must blow up
    let blow = write_config(
        dir.path(),
        "blow.toml",
        "[grid]\nn_points = 128\nperiod = 40.0\n[initial]\nprofile = \"gaussian\"\namplitude = 200.0\n[run]\ndt = 0.5\nt_end = 50.0\nobserver_stride = 1\ndealias = false\n",
    );
    let o = gkaw(
        &["evolve", "--config", blow.to_str().unwrap(), "--out", out_s],
        &[],
    );
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(
        err.contains("last good checkpoint") && err.contains(".gkaw"),
        "{err}"
    );
}
