use std::path::Path;
use std::process::{Command, Output};

use cinemeta_cli::demo::write_demo;
use cinemeta_core::formats::read_catalog;
use cinemeta_core::metadata::CameraMove;

const BIN: &str = env!("CARGO_BIN_EXE_cinemeta");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env_remove("CINEMETA_SEED").output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn edit_config(path: &Path, f: impl FnOnce(&mut serde_json::Value)) {
    let mut v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    f(&mut v);
    std::fs::write(path, serde_json::to_string_pretty(&v).unwrap()).unwrap();
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn demo_ingest_scores_perfectly() {
    let dir = tempfile::tempdir().unwrap();
    let ws = write_demo(dir.path()).unwrap();
    let o = run(&["ingest", "--config", s(&ws.config)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = dir.path().join("out");
    for f in ["catalog.jsonl", "export.ale", "run.log"] {
        assert!(out.join(f).is_file(), "{f}");
    }
    let records = read_catalog(&out.join("catalog.jsonl")).unwrap();
    let ids: Vec<_> = records.iter().map(|r| r.clip_id.as_str()).collect();
    assert_eq!(ids, ["A001C001", "A001C002", "A001C003"]);
    assert_eq!(records[0].semantic.camera_move.as_ref().map(|a| *a.value()), Some(CameraMove::Pan));
    // manifest scene 11 loses to the slate and is kept as a note
    assert_eq!(records[1].notes.as_deref(), Some("scene_num=11(manifest,1.000)"));

    let report = dir.path().join("report.json");
    let o = run(&["eval", "--pred", s(&out.join("catalog.jsonl")), "--truth", s(&ws.truth), "--report", s(&report)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(
        stdout(&o),
        "\tSceneNum\tShotNum\tTakeNum\tTime\nAccuracy\t1.000\t1.000\t1.000\t1.000\n\
         \tPID\tShotScale\tCameraMove\tSceneType\nAccuracy\t1.000\t1.000\t1.000\t1.000\n"
    );
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(report).unwrap()).unwrap();
    assert_eq!(json["clips"], 3);
}

#[test]
fn seed_override_reaches_the_run_log() {
    let dir = tempfile::tempdir().unwrap();
    let ws = write_demo(dir.path()).unwrap();
    let o = Command::new(BIN).args(["ingest", "--config", s(&ws.config)]).env("CINEMETA_SEED", "42").output().unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let log = std::fs::read_to_string(dir.path().join("out/run.log")).unwrap();
    assert!(log.starts_with("seed 42\n"), "{log}");
    let o = Command::new(BIN).args(["ingest", "--config", s(&ws.config)]).env("CINEMETA_SEED", "x").output().unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn missing_frames_dir_names_the_clip() {
    let dir = tempfile::tempdir().unwrap();
    let ws = write_demo(dir.path()).unwrap();
    std::fs::remove_dir_all(dir.path().join("frames/A001C002")).unwrap();
    let o = run(&["ingest", "--config", s(&ws.config)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("A001C002"), "{}", stderr(&o));
}

#[test]
fn bad_config_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"profile": "p.json", "clips": "clips", "colour": 1}"#).unwrap();
    assert_eq!(run(&["ingest", "--config", s(&cfg)]).status.code(), Some(1));
    assert_eq!(run(&["ingest", "--config", s(&dir.path().join("absent.json"))]).status.code(), Some(1));
}

#[test]
fn missing_detector_answers_leave_fields_absent() {
    let dir = tempfile::tempdir().unwrap();
    let ws = write_demo(dir.path()).unwrap();
    std::fs::remove_dir_all(dir.path().join("fixtures/A001C001")).unwrap();
    let o = run(&["ingest", "--config", s(&ws.config)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let records = read_catalog(&dir.path().join("out/catalog.jsonl")).unwrap();
    let first = &records[0].semantic;
    assert!(first.scene_num.is_none() && first.scene_type.is_none() && first.actors.is_empty() && first.shot_type.is_none());
    // pixel-only annotators still answer
    assert!(first.camera_move.is_some() && first.time.is_some());
    assert!(records[1].semantic.scene_type.is_some());
}

#[test]
fn process_backend_matches_fixture_backend() {
    let dir = tempfile::tempdir().unwrap();
    let ws = write_demo(dir.path()).unwrap();
    assert!(run(&["ingest", "--config", s(&ws.config)]).status.success());
    let direct = std::fs::read_to_string(dir.path().join("out/catalog.jsonl")).unwrap();

    let fixtures = dir.path().join("fixtures");
    edit_config(&ws.config, |v| {
        v["detectors"] = serde_json::json!({"command": [BIN, "fixture-backend", "--root", s(&fixtures)]});
        v["output"] = "out_proc".into();
        v["workers"] = 2.into();
    });
    let o = run(&["ingest", "--config", s(&ws.config)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(std::fs::read_to_string(dir.path().join("out_proc/catalog.jsonl")).unwrap(), direct);
}

#[test]
fn dead_detector_process_degrades() {
    let dir = tempfile::tempdir().unwrap();
    let ws = write_demo(dir.path()).unwrap();
    edit_config(&ws.config, |v| {
        v["detectors"] = serde_json::json!({"command": ["/nonexistent/detector"]});
    });
    let o = run(&["ingest", "--config", s(&ws.config)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let records = read_catalog(&dir.path().join("out/catalog.jsonl")).unwrap();
    assert_eq!(records.len(), 3);
    assert!(records.iter().all(|r| r.semantic.scene_type.is_none() && r.semantic.camera_move.is_some()));
}

#[test]
fn query_and_export() {
    let dir = tempfile::tempdir().unwrap();
    let ws = write_demo(dir.path()).unwrap();
    assert!(run(&["ingest", "--config", s(&ws.config)]).status.success());
    let catalog = dir.path().join("out/catalog.jsonl");

    let o = run(&["query", "--catalog", s(&catalog), "--where", "SceneType=Outside"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o), "A001C001\nA001C003\n");
    let o = run(&["query", "--catalog", s(&catalog)]);
    assert_eq!(stdout(&o).lines().count(), 3);
    assert_eq!(run(&["query", "--catalog", s(&catalog), "--where", "nonsense"]).status.code(), Some(1));
    assert_eq!(run(&["query", "--catalog", s(&dir.path().join("none.jsonl"))]).status.code(), Some(1));

    let profile = dir.path().join("csv.json");
    std::fs::write(&profile, r#"{"selected_labels": ["SceneNum", "CameraMove"], "output_format": "csv"}"#).unwrap();
    let out = dir.path().join("x.csv");
    let o = run(&["export", "--catalog", s(&catalog), "--profile", s(&profile), "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(out).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert!(text.lines().nth(1).unwrap().contains("pan"));
}

#[test]
fn eval_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let ws = write_demo(dir.path()).unwrap();
    let empty = dir.path().join("empty.jsonl");
    std::fs::write(&empty, "").unwrap();
    let o = run(&["eval", "--pred", s(&empty), "--truth", s(&ws.truth)]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["eval", "--pred", s(&dir.path().join("none.jsonl")), "--truth", s(&ws.truth)]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn scrambled_frames_change_only_their_record() {
    use cinemeta_core::formats::{read_raster, write_raster, RasterFile};
    let dir = tempfile::tempdir().unwrap();
    let ws = write_demo(dir.path()).unwrap();
    assert!(run(&["ingest", "--config", s(&ws.config)]).status.success());
    let before = read_catalog(&dir.path().join("out/catalog.jsonl")).unwrap();

    // reverse the sample order of every frame of the second clip
    let frames = dir.path().join("frames/A001C002");
    for entry in std::fs::read_dir(&frames).unwrap() {
        let path = entry.unwrap().path();
        let raster = read_raster(&path).unwrap();
        let mut samples = raster.samples().to_vec();
        samples.reverse();
        let scrambled = RasterFile::new(raster.width(), raster.height(), raster.channels(), raster.max_value(), samples).unwrap();
        write_raster(&scrambled, &path).unwrap();
    }
    assert!(run(&["ingest", "--config", s(&ws.config)]).status.success());
    let after = read_catalog(&dir.path().join("out/catalog.jsonl")).unwrap();
    assert_eq!(after[0], before[0]);
    assert_eq!(after[2], before[2]);
    assert_ne!(after[1], before[1]);
}
