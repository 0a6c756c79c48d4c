use std::path::PathBuf;
use std::process::Command;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/fixtures")
        .join(name)
}

fn forge(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_forge"))
        .args(args)
        .env_remove("FORGE_SERVER")
        .output()
        .unwrap()
}

fn stdout(out: &std::process::Output) -> String {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn validate_reports_status() {
    let text = stdout(&forge(&["validate", fixture("fish.fold").to_str().unwrap()]));
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["status"], "valid");
}

#[test]
fn render_writes_png() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("kite.png");
    let fold = fixture("kite.fold");
    stdout(&forge(&[
        "render",
        fold.to_str().unwrap(),
        "--view",
        "cp",
        "--size",
        "48",
        "-o",
        out.to_str().unwrap(),
    ]));
    let png = std::fs::read(&out).unwrap();
    assert_eq!(&png[1..4], b"PNG");
}

#[test]
fn fold_replays_script() {
    let blank = fixture("blank.fold");
    let script = fixture("waterbomb.jsonl");
    let text = stdout(&forge(&[
        "fold",
        blank.to_str().unwrap(),
        "--script",
        script.to_str().unwrap(),
    ]));
    let golden = std::fs::read_to_string(fixture("waterbomb.fold")).unwrap();
    let golden = forge_core::fold::parse_fold(&golden).unwrap().without_extras();
    assert_eq!(text, forge_core::fold::serialize_fold(&golden));
}

#[test]
fn scripted_episode_reconstructs_target() {
    let dir = tempfile::tempdir().unwrap();
    let record = dir.path().join("record.json");
    let target = fixture("letter.fold");
    let text = stdout(&forge(&[
        "episode",
        "--target",
        target.to_str().unwrap(),
        "--agent",
        "scripted",
        "-o",
        record.to_str().unwrap(),
    ]));
    let score: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(score["gs"], 1.0);
    assert_eq!(score["qe"], 1.0);
    assert!(record.is_file());
}

#[test]
fn tasks_write_a_bundle() {
    let dir = tempfile::tempdir().unwrap();
    let designs = fixture("");
    let text = stdout(&forge(&[
        "tasks",
        "--designs",
        designs.to_str().unwrap(),
        "--count",
        "4",
        "--size",
        "24",
        "-o",
        dir.path().to_str().unwrap(),
    ]));
    let index: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(text.trim()).unwrap()).unwrap();
    assert_eq!(index["count"], 4);
    let first = index["instances"][0]["manifest"].as_str().unwrap();
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join(first)).unwrap()).unwrap();
    assert_eq!(manifest["options"].as_array().unwrap().len(), 4);
}

#[test]
fn unknown_view_is_a_usage_error() {
    let out = forge(&["render", "x.fold", "--view", "side"]);
    assert!(!out.status.success());
}
