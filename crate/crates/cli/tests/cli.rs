//! Black-box tests of the `eddikit` binary: exit codes, artifact layout,
//! and byte-level determinism. Heavier numerical fidelity checks live in
//! `acceptance.rs`; these runs use short records to stay fast.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_eddikit"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

/// Small three-term benchmark: fast enough to simulate repeatedly.
const SMALL_CONFIG: &str = r#"
schema = 1

[model]
mass = 0.1
damping = [
  { kind = "vel_power", power = 1, coefficient = 0.08 },
  { kind = "mixed_disp_sq_vel", coefficient = 2000.0 },
  { kind = "vel_gate_two_sided", clearance = 0.005, coefficient = 0.2 },
]
stiffness = [
  { kind = "disp_power", power = 1, coefficient = 40.0 },
  { kind = "disp_power", power = 3, coefficient = 5000.0 },
  { kind = "clearance_spring_two_sided", clearance = 0.005, coefficient = 200.0 },
]

[sim]
t_end = 3.0
output_rate = 5000.0
ic = [0.0, 1.0]

[identify]
damping_library = [
  { kind = "vel_power", power = 1 },
  { kind = "mixed_disp_sq_vel" },
  { kind = "vel_gate_two_sided", clearance = 0.005 },
]
stiffness_library = [
  { kind = "disp_power", power = 1 },
  { kind = "disp_power", power = 3 },
  { kind = "clearance_spring_two_sided", clearance = 0.005 },
]

[validation]
ics = [[0.0, 1.0], [0.0, 0.8]]
"#;

struct Workspace {
    _dir: tempfile::TempDir,
    root: PathBuf,
    config: PathBuf,
}

impl Workspace {
    fn new(config_text: &str) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().to_path_buf();
        let config = root.join("run.toml");
        fs::write(&config, config_text).unwrap();
        Workspace { _dir: dir, root, config }
    }

    fn path(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    fn arg(&self, rel: &str) -> String {
        self.path(rel).to_string_lossy().into_owned()
    }

    fn config_arg(&self) -> String {
        self.config.to_string_lossy().into_owned()
    }

    fn simulate(&self, out_rel: &str) -> Output {
        run(&["simulate", "--config", &self.config_arg(), "--out", &self.arg(out_rel), "--quiet"])
    }

    fn identify(&self, input_rel: &str, out_rel: &str, extra: &[&str]) -> Output {
        let mut args = vec![
            "identify".to_string(),
            "--config".to_string(),
            self.config_arg(),
            "--input".to_string(),
            self.arg(input_rel),
            "--out".to_string(),
            self.arg(out_rel),
            "--quiet".to_string(),
        ];
        args.extend(extra.iter().map(|s| s.to_string()));
        bin().args(&args).output().unwrap()
    }
}

fn assert_ok(out: &Output) {
    assert!(out.status.success(), "stderr:\n{}", stderr(out));
}

#[test]
fn simulate_writes_deterministic_trajectory() {
    let ws = Workspace::new(SMALL_CONFIG);
    assert_ok(&ws.simulate("a"));
    assert_ok(&ws.simulate("b"));

    let a = fs::read(ws.path("a/trajectory.csv")).unwrap();
    let b = fs::read(ws.path("b/trajectory.csv")).unwrap();
    assert_eq!(a, b, "reruns must be byte-identical");

    let text = String::from_utf8(a).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,x,v,a,f_ext"));
    assert_eq!(text.lines().count(), 15001 + 1, "3 s at 5 kHz plus header");
    assert!(ws.path("a/trajectory.svg").exists());
}

#[test]
fn identify_emits_reports_and_phase_artifacts() {
    let ws = Workspace::new(SMALL_CONFIG);
    assert_ok(&ws.simulate("sim"));
    assert_ok(&ws.identify("sim/trajectory.csv", "id", &[]));

    for artifact in
        ["id/report_eddi.json", "id/report_sindy.json", "id/dissipated_energy.csv", "id/restoring_force.csv"]
    {
        assert!(ws.path(artifact).exists(), "{artifact} missing");
    }

    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(ws.path("id/report_eddi.json")).unwrap()).unwrap();
    assert_eq!(report["method"], "eddi");
    assert_eq!(report["schema"], 1);
    let b1 = report["damping"][0]["value"].as_f64().unwrap();
    assert!((b1 - 0.08).abs() < 0.08 * 0.05, "linear damping off: {b1}");
    let k1 = report["stiffness"][0]["value"].as_f64().unwrap();
    assert!((k1 - 40.0).abs() < 40.0 * 0.05, "linear stiffness off: {k1}");
    // First validation IC is the training IC, second is held out; both must
    // track the exact model closely.
    let validation = report["validation"].as_array().unwrap();
    assert_eq!(validation.len(), 2);
    for entry in validation {
        let nrmse = entry["nrmse_x"].as_f64().unwrap();
        assert!(nrmse < 0.02, "validation NRMSE too high: {nrmse}");
    }
    assert_eq!(report["provenance"]["config_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn identify_reports_are_byte_identical_across_runs() {
    let ws = Workspace::new(SMALL_CONFIG);
    assert_ok(&ws.simulate("sim"));
    assert_ok(&ws.identify("sim/trajectory.csv", "r1", &[]));
    assert_ok(&ws.identify("sim/trajectory.csv", "r2", &[]));
    for name in ["report_eddi.json", "report_sindy.json", "dissipated_energy.csv", "restoring_force.csv"]
    {
        let a = fs::read(ws.path("r1").join(name)).unwrap();
        let b = fs::read(ws.path("r2").join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between reruns");
    }
}

#[test]
fn sindy_only_leaves_no_phase_artifacts() {
    let ws = Workspace::new(SMALL_CONFIG);
    assert_ok(&ws.simulate("sim"));
    assert_ok(&ws.identify("sim/trajectory.csv", "id", &["--method", "sindy"]));

    assert!(ws.path("id/report_sindy.json").exists());
    assert!(!ws.path("id/report_eddi.json").exists());
    assert!(!ws.path("id/dissipated_energy.csv").exists());
    assert!(!ws.path("id/restoring_force.csv").exists());
}

#[test]
fn config_errors_exit_2() {
    // Unknown key.
    let ws = Workspace::new("schema = 1\nbogus = true\n");
    let out = ws.simulate("out");
    assert_eq!(code(&out), 2, "stderr:\n{}", stderr(&out));
    assert!(stderr(&out).contains("configuration error"));

    // Wrong schema version.
    let ws = Workspace::new("schema = 7\n");
    assert_eq!(code(&ws.simulate("out")), 2);

    // Valid TOML but no [model] for simulate.
    let ws = Workspace::new("schema = 1\n[sim]\nt_end = 1.0\noutput_rate = 100.0\nic = [0.0, 1.0]\n");
    let out = ws.simulate("out");
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("[model]"));

    // Zero-length time span.
    let ws = Workspace::new(
        "schema = 1\n[model]\nmass = 1.0\nstiffness = [ { kind = \"disp_power\", power = 1, coefficient = 1.0 } ]\n[sim]\nt_end = 0.0\noutput_rate = 100.0\nic = [0.0, 1.0]\n",
    );
    assert_eq!(code(&ws.simulate("out")), 2);
}

#[test]
fn missing_input_exits_4() {
    let ws = Workspace::new(SMALL_CONFIG);
    let out = ws.identify("nope.csv", "id", &[]);
    assert_eq!(code(&out), 4, "stderr:\n{}", stderr(&out));
    assert!(stderr(&out).contains("I/O error"));
}

#[test]
fn no_crossings_exits_3_with_hint() {
    let ws = Workspace::new(SMALL_CONFIG);
    // Displacement never crosses zero: identification is impossible.
    let mut csv = String::from("t,x,v,a,f_ext\n");
    for k in 0..200 {
        let t = k as f64 * 0.01;
        let x = 1.0 + 0.1 * (5.0 * t).sin();
        let v = 0.5 * (5.0 * t).cos();
        let a = -2.5 * (5.0 * t).sin();
        csv.push_str(&format!("{t:.16e},{x:.16e},{v:.16e},{a:.16e},{:.16e}\n", 0.0));
    }
    fs::write(ws.path("flat.csv"), csv).unwrap();

    let out = ws.identify("flat.csv", "id", &[]);
    assert_eq!(code(&out), 3, "stderr:\n{}", stderr(&out));
    let msg = stderr(&out);
    assert!(msg.contains("zero crossings"), "missing diagnosis: {msg}");
    assert!(msg.contains("high-pass"), "missing remediation hint: {msg}");
}

#[test]
fn validate_scores_identical_model_at_zero() {
    let ws = Workspace::new(SMALL_CONFIG);
    // Report carrying exactly the configured model.
    let report = r#"{
  "schema": 1,
  "method": "eddi",
  "mass": 0.1,
  "damping": [
    { "term": { "kind": "vel_power", "power": 1 }, "expr": "v", "value": 0.08, "unit": "N*s/m" },
    { "term": { "kind": "mixed_disp_sq_vel" }, "expr": "x^2*v", "value": 2000.0, "unit": "N*s/m^3" },
    { "term": { "kind": "vel_gate_two_sided", "clearance": 0.005 }, "expr": "v*H(|x|-e)", "value": 0.2, "unit": "N*s/m" }
  ],
  "stiffness": [
    { "term": { "kind": "disp_power", "power": 1 }, "expr": "x", "value": 40.0, "unit": "N/m" },
    { "term": { "kind": "disp_power", "power": 3 }, "expr": "x^3", "value": 5000.0, "unit": "N/m^3" },
    { "term": { "kind": "clearance_spring_two_sided", "clearance": 0.005 }, "expr": "(|x|-e)*sgn(x)*H(|x|-e)", "value": 200.0, "unit": "N/m" }
  ],
  "validation": [],
  "provenance": { "tool": "test", "config_sha256": "", "input_sha256": "" }
}"#;
    fs::write(ws.path("report.json"), report).unwrap();

    let out = run(&[
        "validate",
        "--config",
        &ws.config_arg(),
        "--input",
        &ws.arg("report.json"),
        "--out",
        &ws.arg("val"),
        "--quiet",
    ]);
    assert_ok(&out);

    let metrics: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(ws.path("val/validation.json")).unwrap()).unwrap();
    let nrmse = metrics["metrics"][0]["nrmse_x"].as_f64().unwrap();
    assert_eq!(nrmse, 0.0, "identical model must score exactly zero");

    let csv = fs::read_to_string(ws.path("val/validation_ic_0.csv")).unwrap();
    assert!(csv.starts_with("t,x_ref,x_id\n"));
}

#[test]
fn spectra_emits_normalized_scalogram() {
    let ws = Workspace::new(SMALL_CONFIG);
    assert_ok(&ws.simulate("sim"));
    let out = run(&[
        "spectra",
        "--input",
        &ws.arg("sim/trajectory.csv"),
        "--out",
        &ws.arg("spec"),
        "--quiet",
    ]);
    assert_ok(&out);

    let spectrum = fs::read_to_string(ws.path("spec/spectrum.csv")).unwrap();
    assert!(spectrum.starts_with("f_hz,amplitude\n"));

    let scalogram = fs::read_to_string(ws.path("spec/scalogram.csv")).unwrap();
    let mut rows = scalogram.lines();
    assert!(rows.next().unwrap().starts_with("t,"));
    let mut peak = 0.0_f64;
    for row in rows {
        for cell in row.split(',').skip(1) {
            peak = peak.max(cell.parse::<f64>().unwrap());
        }
    }
    assert_eq!(peak, 1.0, "scalogram global max must be exactly 1");

    assert!(ws.path("spec/coi.csv").exists());
    assert!(ws.path("spec/scalogram.svg").exists());
}

#[test]
fn report_verb_renders_coefficients() {
    let ws = Workspace::new(SMALL_CONFIG);
    assert_ok(&ws.simulate("sim"));
    assert_ok(&ws.identify("sim/trajectory.csv", "id", &["--method", "eddi"]));

    let out = run(&["report", "--input", &ws.arg("id/report_eddi.json")]);
    assert_ok(&out);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("damping coefficients"));
    assert!(text.contains("x^3"));
    assert!(text.contains("N*s/m"));
    assert!(text.contains("validation"));
}

#[test]
fn threads_env_var_is_validated() {
    let ws = Workspace::new(SMALL_CONFIG);
    let out = bin()
        .args(["simulate", "--config", &ws.config_arg(), "--out", &ws.arg("t1"), "--quiet"])
        .env("EDDIKIT_THREADS", "1")
        .output()
        .unwrap();
    assert_ok(&out);

    let out = bin()
        .args(["simulate", "--config", &ws.config_arg(), "--out", &ws.arg("t0"), "--quiet"])
        .env("EDDIKIT_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("EDDIKIT_THREADS"));
}

#[test]
fn quiet_flag_silences_progress() {
    let ws = Workspace::new(SMALL_CONFIG);
    let loud = run(&["simulate", "--config", &ws.config_arg(), "--out", &ws.arg("loud")]);
    assert_ok(&loud);
    assert!(stderr(&loud).contains("wrote"));
    let quiet = ws.simulate("quiet");
    assert_ok(&quiet);
    assert!(stderr(&quiet).is_empty());
}

#[test]
fn bundled_benchmark_config_parses() {
    // The canonical config shipped in configs/ must stay loadable.
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/benchmark.toml");
    let text = fs::read_to_string(path).unwrap();
    let ws = Workspace::new(&text);
    // Identify sections must reference a parseable six-term damping library.
    let out = ws.identify("missing.csv", "id", &[]);
    // Input doesn't exist: the config itself parsed (I/O failure, not config).
    assert_eq!(code(&out), 4);
}
