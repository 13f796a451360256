use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const SMALL: &str = r#"
name = "small"
dataset = "synthetic"
synthetic_features = 3
train_size = 60
validation_size = 30
test_size = 30
bandwidths = [0.1, 1.0]
initial_bandwidth = 1.0
update_interval = 2
lookahead = 2
alpha = 2.0
max_epochs = 6
hidden_dims = [16]
learning_rate = 0.01
batch_size = 16
noise_magnitude = 2.0
seeds = [0, 1]
"#;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_rcmixup"));
    cmd.env_remove("RCMIXUP_OUTPUT_ROOT").env_remove("RCMIXUP_DATA_DIR");
    cmd
}

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("exp.toml");
    fs::write(&path, body).unwrap();
    path
}

fn run(args: &[&str], dir: &TempDir) -> Output {
    let out = dir.path().join("out");
    bin().args(args).arg("--output-root").arg(&out).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn strip_timing(v: &mut Value) {
    match v {
        Value::Object(map) => {
            map.retain(|k, _| k != "wall_ms");
            map.values_mut().for_each(strip_timing);
        }
        Value::Array(items) => items.iter_mut().for_each(strip_timing),
        _ => {}
    }
}

#[test]
fn unknown_key_fails_and_is_named() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), &format!("{SMALL}\nbandwith = 2.0\n"));
    let o = run(&["run", cfg.to_str().unwrap()], &dir);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("bandwith"), "{}", stderr(&o));
}

#[test]
fn missing_data_file_names_the_path() {
    let dir = TempDir::new().unwrap();
    let body = SMALL
        .replace(
            "dataset = \"synthetic\"",
            "dataset = \"csv\"\ndata_path = \"nowhere.csv\"",
        )
        .replace("synthetic_features = 3\n", "");
    let cfg = write_config(dir.path(), &body);
    let o = run(&["run", cfg.to_str().unwrap()], &dir);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("nowhere.csv"), "{}", stderr(&o));
}

#[test]
fn numeric_problems_are_listed_together() {
    let dir = TempDir::new().unwrap();
    let body = SMALL
        .replace("alpha = 2.0", "alpha = -1.0")
        .replace("batch_size = 16", "batch_size = 0");
    let cfg = write_config(dir.path(), &body);
    let o = run(&["run", cfg.to_str().unwrap()], &dir);
    assert!(!o.status.success());
    let err = stderr(&o);
    assert!(err.contains("alpha") && err.contains("batch"), "{err}");
}

#[test]
fn run_writes_reports_and_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let o = run(&["run", cfg.to_str().unwrap()], &dir);
    assert!(o.status.success(), "{}", stderr(&o));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("RMSE") && stdout.contains('±'), "{stdout}");
    let exp = dir.path().join("out/small");
    for f in ["seed_0.json", "seed_1.json", "aggregate.json"] {
        assert!(exp.join(f).is_file(), "missing {f}");
    }
    let first: Value = serde_json::from_str(&fs::read_to_string(exp.join("seed_1.json")).unwrap()).unwrap();

    let o = run(&["run", cfg.to_str().unwrap(), "--seed", "1"], &dir);
    assert!(o.status.success(), "{}", stderr(&o));
    let second: Value = serde_json::from_str(&fs::read_to_string(exp.join("seed_1.json")).unwrap()).unwrap();
    let (mut a, mut b) = (first, second);
    strip_timing(&mut a);
    strip_timing(&mut b);
    // The override narrows the echoed seed list; everything else must match.
    a["config"]["seeds"] = Value::Null;
    b["config"]["seeds"] = Value::Null;
    assert_eq!(a, b);
}

#[test]
fn env_var_sets_output_root_and_seed_override_limits_runs() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let root = dir.path().join("elsewhere");
    let o = bin()
        .args(["run", cfg.to_str().unwrap(), "--seed", "7"])
        .env("RCMIXUP_OUTPUT_ROOT", &root)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let names: Vec<String> = fs::read_dir(root.join("small"))
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    assert!(names.contains(&"seed_7.json".to_string()));
    assert!(!names.contains(&"seed_0.json".to_string()));
}

#[test]
fn diverging_runs_exit_nonzero() {
    let dir = TempDir::new().unwrap();
    let body = SMALL.replace("learning_rate = 0.01", "learning_rate = 1e300");
    let cfg = write_config(dir.path(), &body);
    let o = run(&["run", cfg.to_str().unwrap()], &dir);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("failed"), "{}", stderr(&o));
}

#[test]
fn report_builds_table_and_skips_bad_files() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    assert!(run(&["run", cfg.to_str().unwrap()], &dir).status.success());
    let robust = write_config(
        dir.path(),
        &format!("{SMALL}\nmode = \"robust_only\"\n").replace("\"small\"", "\"small_rt\""),
    );
    assert!(run(&["run", robust.to_str().unwrap()], &dir).status.success());
    let out = dir.path().join("out");
    fs::write(out.join("small/broken.json"), "{\"version\": 1}").unwrap();

    let o = bin().args(["report", out.to_str().unwrap()]).output().unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let table = String::from_utf8_lossy(&o.stdout);
    assert!(
        table.contains("RC-Mixup") && table.contains("Robust training"),
        "{table}"
    );
    assert!(stderr(&o).contains("broken.json"));
    let csv = fs::read_to_string(out.join("comparison.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3, "{csv}");
}

#[test]
fn report_on_empty_directory_fails() {
    let dir = TempDir::new().unwrap();
    let o = bin().args(["report", dir.path().to_str().unwrap()]).output().unwrap();
    assert!(!o.status.success());
}

#[test]
fn inject_noise_materializes_data_and_record() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let o = run(&["inject-noise", cfg.to_str().unwrap(), "--seed", "3"], &dir);
    assert!(o.status.success(), "{}", stderr(&o));
    let exp = dir.path().join("out/small");
    let data = rcmixup::data::load_csv(exp.join("noisy_train_seed_3.csv"), 1).unwrap();
    assert_eq!(data.len(), 60);
    let record =
        rcmixup::data::NoiseRecord::from_json(&fs::read_to_string(exp.join("noise_record_seed_3.json")).unwrap())
            .unwrap();
    assert_eq!(record.indices.len(), 18);
    // Undoing the record must change exactly the corrupted rows.
    let clean = record.restore(&data).unwrap();
    let changed = (0..60).filter(|&i| clean.y.row(i) != data.y.row(i)).count();
    assert_eq!(changed, 18);
}

#[test]
fn tune_reports_the_grid() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let o = run(&["tune", cfg.to_str().unwrap(), "--seed", "0"], &dir);
    assert!(o.status.success(), "{}", stderr(&o));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("chosen"), "{stdout}");
    assert!(dir.path().join("out/small/tune_seed_0.json").is_file());
}

fn shipped_configs() -> Vec<std::path::PathBuf> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut paths: Vec<_> = fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    paths.sort();
    paths
}

#[test]
fn shipped_configs_load() {
    let paths = shipped_configs();
    assert!(paths.len() >= 5);
    for path in paths {
        if let Err(e) = rcmixup::experiment::ExperimentConfig::from_file(&path) {
            panic!("{}: {e}", path.display());
        }
    }
}

#[test]
fn quick_example_runs() {
    let dir = TempDir::new().unwrap();
    let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/quick_synthetic.toml");
    let out = run(&["--seed", "0", "run", config.to_str().unwrap()], &dir);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("out/quick/seed_0.json").is_file());
}
