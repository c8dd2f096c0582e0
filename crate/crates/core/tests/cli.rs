use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use tempfile::TempDir;

use dffc_core::runner::{read_comparison, read_metrics};

fn dffc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dffc"))
        .args(args)
        .env("DFFC_LOG", "warn")
        .output()
        .expect("spawn dffc")
}

fn ok(args: &[&str]) -> String {
    let out = dffc(args);
    assert!(
        out.status.success(),
        "dffc {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn small_config() -> Value {
    json!({
        "total_epochs": 6,
        "hidden": 8,
        "dataset": { "n_train": 200, "n_test": 100 },
        "schedule": { "milestones": [2, 4], "easy_pool_size": 50 },
    })
}

fn write_config(dir: &Path, name: &str, value: &Value) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string_pretty(value).unwrap()).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn sha(path: &Path) -> Vec<u8> {
    Sha256::digest(std::fs::read(path).unwrap()).to_vec()
}

#[test]
fn gen_data_is_deterministic_and_sized() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.json", &small_config());
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let stdout = ok(&["gen-data", "-c", s(&cfg), "-o", s(&a)]);
    assert!(stdout.contains("train"), "{stdout}");
    ok(&["gen-data", "-c", s(&cfg), "-o", s(&b)]);
    for f in [
        "train.json",
        "train.bin",
        "train.pristine.bin",
        "test.json",
        "test.bin",
    ] {
        assert_eq!(sha(&a.join(f)), sha(&b.join(f)), "{f}");
    }
    let manifest: Value =
        serde_json::from_str(&std::fs::read_to_string(a.join("train.json")).unwrap()).unwrap();
    assert_eq!(manifest["n"], 200);
    let test_manifest: Value =
        serde_json::from_str(&std::fs::read_to_string(a.join("test.json")).unwrap()).unwrap();
    assert_eq!(test_manifest["n"], 100);
}

#[test]
fn gen_data_rejects_odd_sizes() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.json", &small_config());
    let out = dffc(&[
        "gen-data",
        "-c",
        s(&cfg),
        "-o",
        s(&tmp.path().join("d")),
        "--override",
        "dataset.n_train=201",
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}

#[test]
fn train_pool_sizes_follow_mode() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.json", &small_config());

    let van = tmp.path().join("vanilla");
    ok(&[
        "train",
        "-c",
        s(&cfg),
        "-o",
        s(&van),
        "--override",
        "mode=vanilla",
    ]);
    let rows = read_metrics(&van.join("metrics.csv")).unwrap();
    assert_eq!(rows.len(), 6);
    assert!(rows.iter().all(|r| r.pool_size == 200));

    // pool_size is k_n: N through warm-up, reduced at the milestone at 4.
    let dffc_dir = tmp.path().join("dffc");
    ok(&["train", "-c", s(&cfg), "-o", s(&dffc_dir)]);
    let sizes: Vec<usize> = read_metrics(&dffc_dir.join("metrics.csv"))
        .unwrap()
        .iter()
        .map(|r| r.pool_size)
        .collect();
    assert_eq!(sizes, vec![200, 200, 200, 180, 180, 180]);

    for f in [
        "pool_log.csv",
        "dfh_trace.json",
        "extremes.json",
        "hardness.json",
        "resolved_config.json",
        "model.json",
        "model.bin",
    ] {
        assert!(dffc_dir.join(f).is_file(), "{f} missing");
    }
}

#[test]
fn easy_pool_flag_overrides_config() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.json", &small_config());
    let dir = tmp.path().join("r");
    ok(&[
        "train",
        "-c",
        s(&cfg),
        "-o",
        s(&dir),
        "--easy-pool-size",
        "10",
    ]);
    let log = std::fs::read_to_string(dir.join("pool_log.csv")).unwrap();
    let mut lines = log.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == "easy_size").unwrap();
    let easy: Vec<&str> = lines.map(|l| l.split(',').nth(col).unwrap()).collect();
    // Warm-up epochs train on the full set with no easy pool.
    assert_eq!(easy, ["0", "0", "10", "10", "10", "10"]);
}

#[test]
fn missing_config_is_a_usage_error() {
    let out = dffc(&["train"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn non_empty_output_requires_force() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.json", &small_config());
    let dir = tmp.path().join("r");
    std::fs::create_dir(&dir).unwrap();
    std::fs::write(dir.join("keep.txt"), "x").unwrap();
    let out = dffc(&["train", "-c", s(&cfg), "-o", s(&dir)]);
    assert!(!out.status.success());
    ok(&["train", "-c", s(&cfg), "-o", s(&dir), "--force"]);
    assert!(dir.join("metrics.csv").is_file());
}

#[test]
fn dih_mode_rejects_alpha_f() {
    let tmp = TempDir::new().unwrap();
    let mut cfg = small_config();
    cfg["mode"] = json!("dih");
    cfg["hardness"] = json!({ "alpha_f": 0.5 });
    let cfg = write_config(tmp.path(), "c.json", &cfg);
    let out = dffc(&["train", "-c", s(&cfg), "-o", s(&tmp.path().join("r"))]);
    assert!(!out.status.success());
}

#[test]
fn unknown_config_keys_are_rejected() {
    let tmp = TempDir::new().unwrap();
    let mut cfg = small_config();
    cfg["learning_rate"] = json!(0.1);
    let cfg = write_config(tmp.path(), "c.json", &cfg);
    let out = dffc(&["train", "-c", s(&cfg), "-o", s(&tmp.path().join("r"))]);
    assert!(!out.status.success());
}

#[test]
fn compare_writes_table_and_runs() {
    let tmp = TempDir::new().unwrap();
    let cfg = json!({
        "base": small_config(),
        "modes": ["vanilla", "dffc"],
        "augment_all": [false],
        "seeds": [0, 1],
    });
    let cfg = write_config(tmp.path(), "cmp.json", &cfg);
    let dir = tmp.path().join("cmp");
    let stdout = ok(&[
        "compare",
        "-c",
        s(&cfg),
        "-o",
        s(&dir),
        "--override",
        "base.total_epochs=4",
    ]);
    assert!(
        stdout.contains("vanilla") && stdout.contains("dffc"),
        "{stdout}"
    );
    let table = read_comparison(&dir.join("comparison.csv")).unwrap();
    assert_eq!(table.rows.len(), 4);
    for name in [
        "vanilla_aug0_seed0",
        "vanilla_aug0_seed1",
        "dffc_aug0_seed0",
        "dffc_aug0_seed1",
    ] {
        let rows = read_metrics(&dir.join("runs").join(name).join("metrics.csv")).unwrap();
        assert_eq!(rows.len(), 4, "{name}");
    }
    let report = ok(&["report", s(&dir)]);
    assert!(report.contains("dffc"), "{report}");
}

#[test]
fn inspect_dfh_orders_and_clamps() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.json", &small_config());
    let run = tmp.path().join("r");
    ok(&["train", "-c", s(&cfg), "-o", s(&run)]);

    ok(&["inspect-dfh", s(&run), "--top", "5", "--bottom", "3"]);
    let inspect = run.join("inspect");
    let report: Value =
        serde_json::from_str(&std::fs::read_to_string(inspect.join("inspect.json")).unwrap())
            .unwrap();
    let top = report["top"].as_array().unwrap();
    let bottom = report["bottom"].as_array().unwrap();
    assert_eq!((top.len(), bottom.len()), (5, 3));
    let dfh = |v: &Value| v["dfh"].as_f64().unwrap();
    assert!(top.windows(2).all(|w| dfh(&w[0]) >= dfh(&w[1])));
    assert!(bottom.windows(2).all(|w| dfh(&w[0]) <= dfh(&w[1])));
    assert!(dfh(&top[4]) >= dfh(&bottom[2]));
    for e in top.iter().chain(bottom) {
        assert!(inspect.join(e["image"].as_str().unwrap()).is_file());
    }

    let clamped = tmp.path().join("all");
    ok(&[
        "inspect-dfh",
        s(&run),
        "--top",
        "1000",
        "--bottom",
        "0",
        "--out",
        s(&clamped),
    ]);
    let report: Value =
        serde_json::from_str(&std::fs::read_to_string(clamped.join("inspect.json")).unwrap())
            .unwrap();
    assert_eq!(report["top"].as_array().unwrap().len(), 200);
    assert!(report["bottom"].as_array().unwrap().is_empty());
    assert!(report["bottom_fake_mean_amplitude"].is_null());
}

#[test]
fn report_summarises_a_run() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.json", &small_config());
    let run = tmp.path().join("r");
    ok(&["train", "-c", s(&cfg), "-o", s(&run)]);
    let text = ok(&["report", s(&run)]);
    assert!(text.contains("final: acc"), "{text}");
    assert_eq!(
        text.lines()
            .filter(|l| l.trim_start().starts_with(char::is_numeric))
            .count(),
        6
    );
}

#[test]
fn train_from_generated_data_dir_matches_in_memory() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.json", &small_config());
    let data = tmp.path().join("data");
    ok(&["gen-data", "-c", s(&cfg), "-o", s(&data)]);
    let (mem, disk) = (tmp.path().join("mem"), tmp.path().join("disk"));
    ok(&["train", "-c", s(&cfg), "-o", s(&mem)]);
    let data_override = format!("data_dir=\"{}\"", s(&data));
    ok(&[
        "train",
        "-c",
        s(&cfg),
        "-o",
        s(&disk),
        "--override",
        &data_override,
    ]);
    assert_eq!(
        sha(&mem.join("metrics.csv")),
        sha(&disk.join("metrics.csv"))
    );
    assert_eq!(sha(&mem.join("model.bin")), sha(&disk.join("model.bin")));
}

#[test]
fn inspect_dfh_surfaces_subtle_fakes_on_a_default_run() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.json", &json!({}));
    let run = tmp.path().join("r");
    ok(&["train", "-c", s(&cfg), "-o", s(&run)]);
    ok(&["inspect-dfh", s(&run), "--top", "50", "--bottom", "50"]);
    let report: Value =
        serde_json::from_str(&std::fs::read_to_string(run.join("inspect/inspect.json")).unwrap())
            .unwrap();
    let top = report["top_fake_mean_amplitude"].as_f64().unwrap();
    let bottom = report["bottom_fake_mean_amplitude"].as_f64().unwrap();
    assert!(top < bottom, "top {top} bottom {bottom}");
}
