use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn stepbound(args: &[&str], out: &Path) -> Output {
    stepbound_with(args, out, &[])
}

fn stepbound_with(args: &[&str], out: &Path, env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_stepbound"));
    cmd.args(args).arg("--out").arg(out);
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn ok(out: Output) -> Output {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn error_record(out: &Output) -> Value {
    let stderr = String::from_utf8(out.stderr.clone()).unwrap();
    let lines: Vec<&str> = stderr.lines().collect();
    assert_eq!(lines.len(), 1, "{stderr}");
    serde_json::from_str(lines[0]).unwrap()
}

/// Largest eigenvalue of the lumped 1D P1 Dirichlet system on n uniform cells.
fn lumped_interval_lambda(n: usize) -> f64 {
    let h = 1.0 / n as f64;
    4.0 / (h * h) * ((n - 1) as f64 * std::f64::consts::PI * h / 2.0).sin().powi(2)
}

fn column(csv: &str, name: &str) -> Vec<String> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let idx = header.iter().position(|h| *h == name).unwrap();
    lines.map(|l| l.split(',').nth(idx).unwrap().to_string()).collect()
}

#[test]
fn bounds_uniform_interval() {
    let dir = TempDir::new().unwrap();
    ok(stepbound(&["bounds", "--mesh", "uniform_interval:n=20"], dir.path()));
    let report = json(&dir.path().join("bounds.json"));
    assert_eq!(report["sandwich_satisfied"], true);
    assert_eq!(report["geometric_satisfied"], true);
    assert_eq!(report["n_dofs"], 19);
    assert_eq!(report["eta"], 2);
    let exact = report["lambda_max_exact"].as_f64().unwrap();
    let expected = lumped_interval_lambda(20);
    assert!((exact - expected).abs() / expected < 1e-10, "{exact} vs {expected}");
    for key in [
        "kappa_surrogate",
        "c_h1",
        "upper_diag_ratio",
        "upper_geometric",
        "upper_zhudu",
    ] {
        assert!(report[key].as_f64().unwrap() > 0.0, "{key}");
    }
    let csv = fs::read_to_string(dir.path().join("bounds.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
    let lam: f64 = column(&csv, "lambda_max_exact")[0].parse().unwrap();
    assert_eq!(lam, exact);
}

#[test]
fn unknown_scheme_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let out = stepbound(
        &["integrate", "--mesh", "uniform_interval:n=8", "--scheme", "rk5"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    let rec = error_record(&out);
    assert_eq!(rec["error"]["kind"], "config");
    assert_eq!(rec["error"]["code"], 2);
    assert!(rec["error"]["message"].as_str().unwrap().contains("rk5"));
    assert!(!dir.path().join("summary.json").exists());
}

#[test]
fn malformed_inputs_exit_2() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, r#"{"mesh": "uniform_interval:n=8", "ordr": 2}"#).unwrap();
    for args in [
        vec!["bounds", "--config", cfg.to_str().unwrap()],
        vec!["bounds", "--mesh", "structured:nx=4"],
        vec!["bounds", "--mesh", "uniform_interval:n=8", "--policy", "lumped"],
        vec!["bounds", "--mesh", "uniform_interval:n=8", "--order", "abc"],
        vec![
            "bounds",
            "--mesh",
            "structured:nx=2,ny=2",
            "--order",
            "2",
            "--policy",
            "node_quadrature",
        ],
        vec![
            "sweep",
            "--mesh",
            "uniform_interval:n=8",
            "--axis",
            "size",
            "--values",
            "1",
        ],
        vec!["frobnicate"],
    ] {
        let out = stepbound(&args, &dir.path().join("o"));
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert_eq!(error_record(&out)["error"]["code"], 2, "{args:?}");
    }
}

#[test]
fn bounds_are_byte_identical_across_runs_and_threads() {
    let dir = TempDir::new().unwrap();
    let args = [
        "bounds",
        "--mesh",
        "random_perturbed:nx=6,ny=6,amplitude=0.03,seed=5",
        "--order",
        "2",
        "--diffusion",
        "rotated_anisotropic:angle=0.5235987755982988,eigenvalues=1/100",
        "--seed",
        "42",
    ];
    let mut outputs = Vec::new();
    for (i, threads) in ["1", "1", "4"].iter().enumerate() {
        let out = dir.path().join(format!("run{i}"));
        ok(stepbound_with(&args, &out, &[("RAYON_NUM_THREADS", threads)]));
        outputs.push((
            fs::read(out.join("bounds.csv")).unwrap(),
            fs::read(out.join("bounds.json")).unwrap(),
        ));
    }
    assert!(outputs.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn stable_integration() {
    let dir = TempDir::new().unwrap();
    for scheme in ["explicit_euler", "heun2", "kutta3", "classic_rk4"] {
        let out = dir.path().join(scheme);
        ok(stepbound(
            &[
                "integrate",
                "--mesh",
                "structured:nx=6,ny=6",
                "--scheme",
                scheme,
                "--steps",
                "300",
            ],
            &out,
        ));
        let s = json(&out.join("summary.json"));
        assert_eq!(s["status"], "stable", "{scheme}");
        assert!(s["max_energy_ratio"].as_f64().unwrap() <= 1.0, "{scheme}");
        assert_eq!(s["certificate"]["passed"], true);
        assert_eq!(s["steps_taken"], 300);
        let trace = fs::read_to_string(out.join("trace.csv")).unwrap();
        assert_eq!(trace.lines().count(), 302);
    }
}

#[test]
fn override_above_critical_is_unstable() {
    let dir = TempDir::new().unwrap();
    let mesh = ["--mesh", "uniform_interval:n=16"];
    ok(stepbound(&["bounds", mesh[0], mesh[1]], dir.path()));
    let lam = json(&dir.path().join("bounds.json"))["lambda_max_exact"]
        .as_f64()
        .unwrap();
    let tau = format!("{:e}", 1.05 * 2.0 / lam);
    let out = dir.path().join("int");
    let run = ok(stepbound(
        &["integrate", mesh[0], mesh[1], "--tau", &tau, "--steps", "5000"],
        &out,
    ));
    assert!(run.stderr.is_empty());
    let s = json(&out.join("summary.json"));
    assert_eq!(s["status"], "unstable");
    assert_eq!(s["tau_source"], "override");
    let step = s["blow_up_step"].as_u64().unwrap();
    assert!(step < 5000);
    let trace = fs::read_to_string(out.join("trace.csv")).unwrap();
    assert_eq!(trace.lines().count() as u64, step + 2);
}

#[test]
fn zero_steps_is_a_no_op() {
    let dir = TempDir::new().unwrap();
    ok(stepbound(
        &["integrate", "--mesh", "uniform_interval:n=8", "--steps", "0"],
        dir.path(),
    ));
    let s = json(&dir.path().join("summary.json"));
    assert_eq!(s["status"], "no-op");
    assert_eq!(s["steps_taken"], 0);
    assert_eq!(
        fs::read_to_string(dir.path().join("trace.csv")).unwrap(),
        "step,t,l2_norm,energy_norm\n"
    );
}

#[test]
fn smallest_tau_wins() {
    let dir = TempDir::new().unwrap();
    ok(stepbound(
        &[
            "integrate",
            "--mesh",
            "stretched:nx=4,ny=4,ratio=10",
            "--bounds",
            "exact,diag_ratio,geometric",
            "--initial",
            "random",
            "--steps",
            "20",
        ],
        dir.path(),
    ));
    let s = json(&dir.path().join("summary.json"));
    let c = s["tau_candidates"].as_object().unwrap();
    assert_eq!(c.len(), 3);
    let min = c.values().map(|v| v.as_f64().unwrap()).fold(f64::INFINITY, f64::min);
    assert_eq!(s["tau"].as_f64().unwrap(), min);
    assert!(c["exact"].as_f64().unwrap() >= min);
    assert_eq!(s["status"], "stable");
}

#[test]
fn single_point_sweep_matches_bounds() {
    let dir = TempDir::new().unwrap();
    let base = [
        "--mesh",
        "structured:nx=5,ny=5",
        "--order",
        "2",
        "--policy",
        "consistent",
    ];
    ok(stepbound(&[&["bounds"][..], &base].concat(), &dir.path().join("b")));
    ok(stepbound(
        &[&["sweep"][..], &base, &["--axis", "order", "--values", "2"]].concat(),
        &dir.path().join("s"),
    ));
    let bounds = fs::read_to_string(dir.path().join("b/bounds.csv")).unwrap();
    let sweep = fs::read_to_string(dir.path().join("s/sweep.csv")).unwrap();
    let b: Vec<&str> = bounds.lines().collect();
    let s: Vec<&str> = sweep.lines().collect();
    assert_eq!(s.len(), 2);
    assert_eq!(s[0], format!("axis,value,{}", b[0]));
    assert_eq!(s[1], format!("order,2,{}", b[1]));
}

#[test]
fn n_sweep_scaling() {
    let dir = TempDir::new().unwrap();
    ok(stepbound(
        &[
            "sweep",
            "--mesh",
            "structured:nx=4,ny=4",
            "--policy",
            "consistent",
            "--axis",
            "n",
            "--values",
            "4,8,16,32",
        ],
        dir.path(),
    ));
    let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let lam: Vec<f64> = column(&csv, "lambda_max_exact")
        .iter()
        .map(|v| v.parse().unwrap())
        .collect();
    assert_eq!(lam.len(), 4);
    for w in lam.windows(2).skip(1) {
        let r = w[1] / w[0];
        assert!((3.6..=4.4).contains(&r), "{r}");
    }
}

#[test]
fn anisotropy_sweep_gap() {
    let dir = TempDir::new().unwrap();
    ok(stepbound(
        &[
            "sweep",
            "--mesh",
            "structured:nx=6,ny=6",
            "--axis",
            "anisotropy",
            "--values",
            "10,100",
        ],
        dir.path(),
    ));
    let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let gap: Vec<f64> = column(&csv, "zhudu_over_geometric")
        .iter()
        .map(|v| v.parse().unwrap())
        .collect();
    let growth = gap[1] / gap[0];
    // a² would be 100
    assert!((50.0..=200.0).contains(&growth), "{growth}");
}

#[test]
fn sweep_is_thread_independent() {
    let dir = TempDir::new().unwrap();
    let args = [
        "sweep",
        "--mesh",
        "uniform_interval:n=8",
        "--axis",
        "policy",
        "--values",
        "consistent,hrz_diagonal,node_quadrature",
    ];
    ok(stepbound_with(
        &args,
        &dir.path().join("a"),
        &[("RAYON_NUM_THREADS", "1")],
    ));
    ok(stepbound_with(
        &args,
        &dir.path().join("b"),
        &[("RAYON_NUM_THREADS", "3")],
    ));
    let a = fs::read(dir.path().join("a/sweep.csv")).unwrap();
    assert_eq!(a, fs::read(dir.path().join("b/sweep.csv")).unwrap());
    assert_eq!(String::from_utf8(a).unwrap().lines().count(), 4);
}

#[test]
fn config_file_with_flag_override() {
    let dir = TempDir::new().unwrap();
    ok(stepbound(
        &["mesh-gen", "--mesh", "stretched:nx=3,ny=3,ratio=4"],
        dir.path(),
    ));
    let cfg = dir.path().join("run.json");
    fs::write(
        &cfg,
        r#"{"mesh": "mesh.txt", "order": 2, "diffusion": {"kind": "isotropic", "value": 3.0}, "policy": "consistent"}"#,
    )
    .unwrap();
    let cfg = cfg.to_str().unwrap();
    ok(stepbound(
        &["bounds", "--config", cfg, "--policy", "hrz_diagonal"],
        &dir.path().join("file"),
    ));
    ok(stepbound(
        &[
            "bounds",
            "--mesh",
            "stretched:nx=3,ny=3,ratio=4",
            "--order",
            "2",
            "--diffusion",
            "isotropic:value=3",
        ],
        &dir.path().join("gen"),
    ));
    let a = json(&dir.path().join("file/bounds.json"));
    let b = json(&dir.path().join("gen/bounds.json"));
    assert_eq!(a["policy"], "hrz_diagonal");
    assert_eq!(a["order"], 2);
    // the mesh round trip is exact, so every number agrees
    assert_eq!(
        fs::read(dir.path().join("file/bounds.csv")).unwrap(),
        fs::read(dir.path().join("gen/bounds.csv")).unwrap()
    );
    assert_eq!(a["upper_geometric"], b["upper_geometric"]);
}

#[test]
fn validate_reports_checks() {
    let dir = TempDir::new().unwrap();
    let out = ok(stepbound(
        &[
            "validate",
            "--mesh",
            "random_perturbed:nx=4,ny=4,amplitude=0.04,seed=2",
            "--order",
            "2",
        ],
        dir.path(),
    ));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let checks = v["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 8);
    assert!(checks.iter().all(|c| c["passed"] == true));
}

#[test]
fn dof_cap_skips_exact() {
    let dir = TempDir::new().unwrap();
    ok(stepbound(
        &["bounds", "--mesh", "uniform_interval:n=40", "--dof-cap", "10"],
        dir.path(),
    ));
    let r = json(&dir.path().join("bounds.json"));
    assert!(r["lambda_max_exact"].is_null());
    let out = stepbound(
        &[
            "integrate",
            "--mesh",
            "uniform_interval:n=40",
            "--dof-cap",
            "10",
            "--bounds",
            "exact",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
}
