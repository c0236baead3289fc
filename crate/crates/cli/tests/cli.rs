use std::path::Path;
use std::process::{Command, Output};

use roomtopo::segmentation::load_masks;
use roomtopo::TopoMap;

fn roomtopo(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_roomtopo"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = roomtopo(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn synthetic_scene_through_segmentation_and_eval() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["synth", "--seed", "7", "--rooms", "2x2", "--train-rooms", "0"]);
    let raster = ok(d, &["rasterize"]);
    assert!(raster.starts_with("rasterize:"), "{raster}");
    assert_eq!(raster.lines().count(), 1);
    ok(d, &["segment"]);
    let gt = d.join("gt_masks.json");
    let report = ok(d, &["eval", "--gt", gt.to_str().unwrap()]);
    assert!(report.contains("room"), "{report}");
    assert!(report.contains("transition"));
    assert!(report.lines().last().unwrap().contains("mAP 1.000"), "{report}");
    assert!(d.join("report.json").exists());
    assert!(d.join("grid/doorway.png").exists());
    let seg = load_masks(d.join("masks.json")).unwrap();
    assert_eq!(seg.rooms().count(), 4);
    assert_eq!(seg.transitions().count(), 3);
}

#[test]
fn full_pipeline_builds_a_queryable_map() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["synth", "--seed", "3", "--rooms", "2x3", "--train-rooms", "120"]);
    for stage in [&["rasterize"][..], &["segment"], &["associate"]] {
        ok(d, stage);
    }
    let trained = ok(d, &["train-labeler", "--profile", "toy", "--epochs", "15"]);
    assert!(trained.contains("training accuracy"), "{trained}");
    ok(d, &["label"]);
    let built = ok(d, &["build-map"]);
    assert!(built.contains("6 rooms, 5 edges"), "{built}");
    let map = TopoMap::load(d.join("map.json")).unwrap();
    assert!(map.nodes.iter().all(|n| n.embedding.is_some()));

    let png = d.join("heat.png");
    let out = ok(
        d,
        &["query", "--embedding", d.join("queries/place_to_sleep.vec").to_str().unwrap(), "-k", "2", "--png", png.to_str().unwrap()],
    );
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 3, "{out}");
    let first: Vec<&str> = lines[0].split('\t').collect();
    assert_eq!(first[0], "1");
    assert!(map.node(first[1].parse().unwrap()).is_some());
    assert!(png.exists());

    let by_phrase = ok(d, &["query", "--phrase", "place to sleep", "-k", "2"]);
    assert_eq!(by_phrase.lines().next(), lines.first().copied());

    let gt = d.join("gt_masks.json");
    let labels = d.join("labels.json");
    let report = ok(d, &["eval", "--gt", gt.to_str().unwrap(), "--labels", labels.to_str().unwrap()]);
    assert!(report.contains("Complete pipeline"), "{report}");
    let labeling = ok(d, &["eval", "--rooms", d.join("rooms.json").to_str().unwrap()]);
    assert!(labeling.contains("Averaged object embeddings"), "{labeling}");
}

#[test]
fn one_room_map_returns_one_result() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["synth", "--seed", "1", "--rooms", "1x1", "--train-rooms", "40"]);
    ok(d, &["rasterize"]);
    ok(d, &["segment"]);
    ok(d, &["associate"]);
    ok(d, &["train-labeler", "--profile", "toy", "--epochs", "2"]);
    ok(d, &["label"]);
    ok(d, &["build-map"]);
    let q = d.join("q.vec");
    std::fs::write(&q, vec!["0.1"; 32].join(" ")).unwrap();
    let out = ok(d, &["query", "--map", d.join("map.json").to_str().unwrap(), "--embedding", q.to_str().unwrap(), "-k", "3"]);
    assert_eq!(out.lines().count(), 2, "{out}");
    assert!(out.lines().next().unwrap().starts_with("1\t0\t"));
}

#[test]
fn stages_are_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["synth", "--seed", "5", "--train-rooms", "0"]);
    ok(d, &["rasterize"]);
    ok(d, &["segment"]);
    let first = std::fs::read(d.join("masks.json")).unwrap();
    ok(d, &["rasterize"]);
    ok(d, &["segment"]);
    assert_eq!(first, std::fs::read(d.join("masks.json")).unwrap());

    let other = tempfile::tempdir().unwrap();
    ok(other.path(), &["synth", "--seed", "5", "--train-rooms", "0"]);
    assert_eq!(
        std::fs::read(d.join("cloud.ply")).unwrap(),
        std::fs::read(other.path().join("cloud.ply")).unwrap()
    );
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["synth", "--seed", "2", "--train-rooms", "0"]);
    let cfg = d.join("pipeline.toml");
    std::fs::write(&cfg, "tile_size = 0.1\n").unwrap();
    let coarse = ok(d, &["rasterize", "--config", cfg.to_str().unwrap()]);
    assert!(coarse.contains("at 0.1 m"), "{coarse}");
    let fine = ok(d, &["rasterize", "--config", cfg.to_str().unwrap(), "--tile-size", "0.05"]);
    assert!(fine.contains("at 0.05 m"), "{fine}");
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = roomtopo(d, &["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    assert_eq!(roomtopo(d, &["rasterize", "--beta-floor", "0.1"]).status.code(), Some(2));
    assert_eq!(roomtopo(d, &["synth", "--rooms", "two"]).status.code(), Some(2));
}

#[test]
fn domain_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = roomtopo(d, &["segment"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.starts_with("error:") && err.contains("grid.json"), "{err}");

    std::fs::write(d.join("grid.json"), "{\"format\": \"nope\"}").unwrap();
    assert_eq!(roomtopo(d, &["segment"]).status.code(), Some(1));
    assert_eq!(roomtopo(d, &["rasterize", "--beta-ceiling", "0.9", "0.7"]).status.code(), Some(1));

    ok(d, &["synth", "--seed", "1", "--rooms", "1x1", "--train-rooms", "10"]);
    // default profile is the full-size encoder, which does not fit 32-d phrases
    let out = roomtopo(d, &["train-labeler"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("dims"));
}
