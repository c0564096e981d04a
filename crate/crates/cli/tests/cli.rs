use std::path::Path;
use std::process::Command;

use elastowave::solver::{DiagnosticsRecord, DiagnosticsRow};
use elastowave_cli::checkpoint::{self, CheckpointError};
use elastowave_cli::run::{self, CHECKPOINT_DIR, STEPPER_TABLE};
use elastowave_cli::tables;
use elastowave_cli::RunFile;

fn config(data: &str, backend: &str, extra: &str) -> String {
    format!(
        r#"
[solver]
s = 1.6
theta = 0.6
epsilon = 0.1
existence_time = 0.25
backend = "{backend}"
c1 = 1.0
c2 = 1.0
seed = 3

[solver.grid]
dim = 2
points_per_axis = 16
period = 6.283185307179586

[solver.mode]
mode = "small_data"
eta = 0.1

[solver.picard]
max_iters = 30
contraction_tol = 1e-10
time_samples = 256
window = 8.0
pressure_tol = 1e-12
duhamel = "spectral"

[solver.stepper]
dt = 0.03125
steps = 12
pressure_tol = 1e-12
implicit_tol = 1e-14
det_budget = 1e-2
record_every = 2

[solver.data]
{data}

[output]
checkpoint_every = 4
{extra}
"#
    )
}

const SMALL: &str = "kind = \"periodic\"\namplitude = 0.05\nvelocity = 0.05\nmodes = 2";

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let p = dir.join("run.toml");
    std::fs::write(&p, text).unwrap();
    p
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_elastowave"))
}

fn parse(text: &str) -> RunFile {
    toml::from_str(text).unwrap()
}

#[test]
fn zero_data_gives_zero_diagnostics() {
    let tmp = tempfile::tempdir().unwrap();
    let text = config("kind = \"zero\"", "both", "").replace("record_every = 2", "record_every = 1");
    let cfg = write_config(tmp.path(), &text);
    let out = tmp.path().join("out");
    let st = bin().args(["run", "--config"]).arg(&cfg).arg("--out").arg(&out).status().unwrap();
    assert!(st.success());
    for name in [run::STEPPER_TABLE, run::PICARD_TABLE] {
        let rows = tables::parse_diagnostics(&std::fs::read_to_string(out.join(name)).unwrap()).unwrap();
        assert!(!rows.is_empty());
        for r in rows {
            assert!(r[1..].iter().all(|&v| v == 0.0), "{name}: {r:?}");
        }
    }
}

#[test]
fn rough_regime_below_threshold_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let text = config(SMALL, "stepper", "")
        .replace("dim = 2", "dim = 3")
        .replace("s = 1.6", "s = 1.2")
        .replace("mode = \"small_data\"\neta = 0.1", "mode = \"rough\"");
    let cfg = write_config(tmp.path(), &text);
    let out = bin().args(["run", "--config"]).arg(&cfg).arg("--out").arg(tmp.path().join("o")).output().unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("2 < s"), "{err}");
}

#[test]
fn checkpoint_interval_must_align_with_records() {
    let file = parse(&config(SMALL, "stepper", "").replace("checkpoint_every = 4", "checkpoint_every = 3"));
    let err = file.validate().unwrap_err().to_string();
    assert!(err.contains("record_every"), "{err}");
}

#[test]
fn unknown_keys_are_rejected() {
    let text = config(SMALL, "stepper", "").replace("c2 = 1.0", "c2 = 1.0\ntolerance = 1.0");
    assert!(toml::from_str::<RunFile>(&text).is_err());
}

#[test]
fn rerun_from_manifest_is_bit_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &config(SMALL, "stepper", ""));
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert!(bin().args(["run", "--seed", "11", "--config"]).arg(&cfg).arg("--out").arg(&a).status().unwrap().success());
    let st = bin().args(["run", "--config"]).arg(a.join("manifest.json")).env("ELASTOWAVE_OUT", &b).status().unwrap();
    assert!(st.success());
    let read = |d: &Path| std::fs::read(d.join(STEPPER_TABLE)).unwrap();
    assert_eq!(read(&a), read(&b));
    let m: serde_json::Value = serde_json::from_slice(&std::fs::read(b.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["seed"], 11);
}

#[test]
fn resume_reproduces_the_uninterrupted_run() {
    let tmp = tempfile::tempdir().unwrap();
    let file = parse(&config(SMALL, "stepper", ""));
    let dir = tmp.path().join("run");
    run::run(&file, &dir).unwrap();
    let full = std::fs::read(dir.join(STEPPER_TABLE)).unwrap();
    let last = std::fs::read(dir.join(CHECKPOINT_DIR).join("step_0000000012.nhck")).unwrap();
    run::resume(&dir, Some(&dir.join(CHECKPOINT_DIR).join("step_0000000004.nhck"))).unwrap();
    assert_eq!(std::fs::read(dir.join(STEPPER_TABLE)).unwrap(), full);
    assert_eq!(std::fs::read(dir.join(CHECKPOINT_DIR).join("step_0000000012.nhck")).unwrap(), last);
    let report = run::report(&dir).unwrap();
    assert!(report.contains("7 rows"), "{report}");
}

#[test]
fn checkpoint_round_trip_is_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("run");
    run::run(&parse(&config(SMALL, "stepper", "")), &dir).unwrap();
    let path = dir.join(CHECKPOINT_DIR).join("step_0000000008.nhck");
    let bytes = std::fs::read(&path).unwrap();
    let ck = checkpoint::read(&path).unwrap();
    assert_eq!(ck.state.step, 8);
    assert_eq!(ck.record.rows.len(), 5);
    let again = tmp.path().join("again.nhck");
    checkpoint::write(&again, &ck).unwrap();
    assert_eq!(std::fs::read(&again).unwrap(), bytes);
}

#[test]
fn restore_refuses_foreign_and_damaged_files() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("run");
    run::run(&parse(&config(SMALL, "stepper", "")), &dir).unwrap();
    let bytes = std::fs::read(dir.join(CHECKPOINT_DIR).join("step_0000000004.nhck")).unwrap();
    let mut v2 = bytes.clone();
    v2[4..8].copy_from_slice(&2u32.to_le_bytes());
    assert!(matches!(checkpoint::decode(&v2), Err(CheckpointError::Version { found: 2, expected: 1 })));
    let mut bad = bytes.clone();
    bad[0] = b'X';
    assert!(matches!(checkpoint::decode(&bad), Err(CheckpointError::Magic)));
    assert!(matches!(checkpoint::decode(&bytes[..bytes.len() - 3]), Err(CheckpointError::Format(_))));
    let mut long = bytes;
    long.push(0);
    assert!(matches!(checkpoint::decode(&long), Err(CheckpointError::Format(_))));
}

#[test]
fn tables_have_the_declared_columns() {
    let empty = DiagnosticsRecord::new(2, 1.6);
    let text = tables::diagnostics_table(&empty);
    assert_eq!(text, format!("{}\n", DiagnosticsRow::COLUMNS.join(",")));
    assert!(tables::parse_diagnostics(&text).unwrap().is_empty());

    let mut rec = DiagnosticsRecord::new(2, 1.6);
    let mut vals = [0.1f64; 13];
    for (k, t) in [0.0, 0.5].into_iter().enumerate() {
        vals[0] = t;
        vals[3] = 1.0 / 3.0 + k as f64;
        rec.push(DiagnosticsRow::from_values(&vals)).unwrap();
    }
    let text = tables::diagnostics_table(&rec);
    for line in text.lines() {
        assert_eq!(line.split(',').count(), DiagnosticsRow::COLUMNS.len());
    }
    // 17 significant digits round-trip every f64
    let back = tables::parse_diagnostics(&text).unwrap();
    assert_eq!(back[1][3], 1.0 / 3.0 + 1.0);
}

#[test]
fn aborts_name_the_checkpoints() {
    let tmp = tempfile::tempdir().unwrap();
    let text = config(SMALL, "stepper", "").replace("det_budget = 1e-2", "det_budget = 1e-9");
    let dir = tmp.path().join("run");
    let err = format!("{:#}", run::run(&parse(&text), &dir).unwrap_err());
    assert!(err.contains("last good state in"), "{err}");
    let m: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.join("manifest.json")).unwrap()).unwrap();
    assert!(m["abort"].as_str().unwrap().contains("det"), "{m}");
    let abort = std::fs::read_dir(dir.join(CHECKPOINT_DIR))
        .unwrap()
        .map(|e| e.unwrap().path())
        .find(|p| p.file_name().unwrap().to_string_lossy().starts_with("abort"))
        .expect("abort checkpoint");
    let ck = checkpoint::read(&abort).unwrap();
    assert!(ck.state.is_finite());
}

#[test]
fn probe_suites_run_standalone() {
    let tmp = tempfile::tempdir().unwrap();
    let extra = r#"
[probes.bilinear]
scales = [2]
samples = 1
ensemble = "packet"

[probes.ld4]
s = 0.5
fields = 3
"#;
    let cfg = write_config(tmp.path(), &config(SMALL, "stepper", extra));
    let out = tmp.path().join("p");
    let st = bin().args(["probe", "--suite", "ld4", "--config"]).arg(&cfg).arg("--out").arg(&out).status().unwrap();
    assert!(st.success());
    let p: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join(run::PROBES_FILE)).unwrap()).unwrap();
    assert_eq!(p["ld4"].as_array().unwrap().len(), 3);
    assert!(p["bilinear"].as_array().unwrap().is_empty());
    assert!(p["ld4_max_ratio"].as_f64().unwrap() < 2.0);
}

#[test]
fn invalid_probe_parameters_are_rejected() {
    let extra = "\n[probes.ld4]\ns = 1.5\nfields = 3\n";
    let err = parse(&config(SMALL, "stepper", extra)).validate().unwrap_err().to_string();
    assert!(err.contains("0 < s < 1"), "{err}");
}
