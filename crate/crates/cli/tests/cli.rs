use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn samples() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../samples")
}

fn geotypica(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_geotypica")).args(args).output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn all_on_grid_sample_then_evaluate() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let config = samples().join("grid3x3/config.toml");
    let run = geotypica(&["all", "--config", s(&config), "--out", s(&out)]);
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    let stdout = String::from_utf8(run.stdout).unwrap();
    for stage in ["generate", "render", "tile"] {
        assert!(stdout.lines().any(|l| l.starts_with(stage)), "{stdout}");
    }

    let labels: Vec<PathBuf> = std::fs::read_dir(out.join("views"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.to_string_lossy().ends_with(".label.png"))
        .collect();
    assert_eq!(labels.len(), 3);
    let building: usize = labels.iter().map(|p| image::open(p).unwrap().to_luma8().pixels().filter(|px| px.0[0] == 1).count()).sum();
    assert!(building > 0);

    let dataset = out.join("dataset");
    let text = std::fs::read_to_string(dataset.join("manifest.jsonl")).unwrap();
    let expected: BTreeSet<&str> = ["path_rgb", "path_label", "split", "view_id", "x", "y", "seed"].into();
    let mut lines = 0;
    for line in text.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        let keys: BTreeSet<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
        assert_eq!(keys, expected);
        assert!(["train", "val"].contains(&v["split"].as_str().unwrap()));
        assert!(dataset.join(v["path_rgb"].as_str().unwrap()).is_file());
        assert!(dataset.join(v["path_label"].as_str().unwrap()).is_file());
        lines += 1;
    }
    assert!(lines >= 1);

    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["command"], "all");
    assert!(report["artifacts"].as_object().unwrap().contains_key("dataset/manifest.jsonl"));

    let views = out.join("views");
    let eval = geotypica(&["evaluate", "--out", s(&out), "--pred", s(&views), "--gt", s(&views)]);
    assert_eq!(eval.status.code(), Some(0), "{}", String::from_utf8_lossy(&eval.stderr));
    let metrics: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("evaluate.json")).unwrap()).unwrap();
    assert_eq!(metrics["iou"], 1.0);
    assert_eq!(metrics["oa"], 1.0);
    assert_eq!(metrics["f1"], 1.0);
    assert_eq!(metrics["confusion"]["fp"], 0);
    assert_eq!(metrics["confusion"]["fn"], 0);
}

#[test]
fn config_errors_exit_2_and_list_every_violation() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("bad.toml");
    std::fs::write(&config, "[land_use.commercial]\ngar = 1.5\n[render]\ngsd = -1.0\n[dataset]\noverlap = 1.0\n").unwrap();
    let run = geotypica(&["all", "--config", s(&config)]);
    assert_eq!(run.status.code(), Some(2));
    let err = String::from_utf8(run.stderr).unwrap();
    for needle in ["commercial", "gsd", "overlap", "inputs.network"] {
        assert!(err.contains(needle), "missing {needle} in {err}");
    }
}

#[test]
fn unknown_key_and_bad_jobs_are_config_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("typo.toml");
    std::fs::write(&config, "[render]\nwidht = 10\n").unwrap();
    assert_eq!(geotypica(&["render", "--config", s(&config)]).status.code(), Some(2));
    let ok = tmp.path().join("ok.toml");
    std::fs::write(&ok, "").unwrap();
    assert_eq!(geotypica(&["tile", "--config", s(&ok), "--jobs", "0"]).status.code(), Some(2));
    assert_eq!(geotypica(&["evaluate", "--config", s(&ok)]).status.code(), Some(2));
}

#[test]
fn stage_failures_exit_3() {
    let tmp = tempfile::tempdir().unwrap();
    let empty = tmp.path().join("empty");
    std::fs::create_dir(&empty).unwrap();
    let run = geotypica(&["render", "--out", s(&empty)]);
    assert_eq!(run.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&run.stderr).contains("render"));

    let net = tmp.path().join("net.jsonl");
    std::fs::write(&net, "this is not a geodata document\n").unwrap();
    let config = tmp.path().join("c.toml");
    std::fs::write(&config, format!("[inputs]\nnetwork = {:?}\n", s(&net))).unwrap();
    let run = geotypica(&["generate", "--config", s(&config), "--out", s(&tmp.path().join("o"))]);
    assert_eq!(run.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&run.stderr).contains("generate"));
}
