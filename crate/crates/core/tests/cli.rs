use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sparse_explore::geometry::AffinePlane;
use sparse_explore::io::{format_cloud, format_plane, parse_episode, read_cloud};
use sparse_explore::sim::{planted_outlier_cloud, ring_cloud, Tag};

fn manifest() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn fixture(name: &str) -> PathBuf {
    manifest().join("tests/fixtures").join(name)
}

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sparse-explore"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn fixtures_match_generators() {
    let (planted, _) = planted_outlier_cloud(0, 200, 20);
    let on_disk = std::fs::read_to_string(fixture("planted_outliers.csv")).unwrap();
    assert_eq!(on_disk, format_cloud(&planted, None));
    // trig results may differ in the last ulp between build profiles
    let ring = read_cloud(&fixture("ring_300.csv")).unwrap().cloud;
    let expected = ring_cloud(300.0, 4, 5.0);
    assert_eq!(ring.len(), expected.len());
    for (a, b) in ring.iter().zip(expected.iter()) {
        assert!(a.distance(b) <= 1e-12);
    }
    let plane = std::fs::read_to_string(fixture("horizontal.plane")).unwrap();
    assert_eq!(plane, format_plane(&AffinePlane::horizontal(0.0)));
}

#[test]
fn clean_tags_planted_outliers() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("tagged.csv");
    let config = manifest().join("configs/calibrated.json");
    let o = bin(&["clean", "--input", s(&fixture("planted_outliers.csv")), "--output", s(&out), "--config", s(&config)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let tagged = read_cloud(&out).unwrap();
    let tags = tagged.tags.unwrap();
    let flagged: Vec<usize> = (0..tags.len()).filter(|&i| tags[i] == Tag::Outlier).collect();
    assert_eq!(flagged, (200..220).collect::<Vec<_>>());
}

#[test]
fn exit_on_ring_fixture() {
    let o = bin(&[
        "exit",
        "--input",
        s(&fixture("ring_300.csv")),
        "--plane",
        s(&fixture("horizontal.plane")),
        "--pose",
        "0,0,0",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8(o.stdout).unwrap();
    let angle: f64 = stdout
        .lines()
        .find_map(|l| l.strip_prefix("angle_deg="))
        .unwrap()
        .parse()
        .unwrap();
    assert!((angle - 330.0).abs() <= 1.0, "angle {angle}");

    let tri = bin(&[
        "exit", "--input", s(&fixture("ring_300.csv")), "--tri", "0,0,0", "1,0,0", "0,1,0", "--pose", "0,0,0",
    ]);
    assert_eq!(tri.stdout, stdout.as_bytes());
}

#[test]
fn usage_errors() {
    assert_eq!(bin(&[]).status.code(), Some(2));
    assert_eq!(bin(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(bin(&["plan", "--input", "x.csv", "--pose", "0,0,0", "--path", "p.csv"]).status.code(), Some(2));
}

#[test]
fn bad_input_is_pipeline_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "x,y,z\na,b,c\n").unwrap();
    let o = bin(&["clean", "--input", s(&bad), "--output", s(&dir.path().join("o.csv"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
}

#[test]
fn unknown_config_key_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"outliers": {"lambda": 0.5, "k": 4, "beta": 1.0, "gamma": 2}}"#).unwrap();
    let o = bin(&["clean", "--input", s(&fixture("ring_300.csv")), "--output", s(&dir.path().join("o.csv")), "--config", s(&cfg)]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn explore_and_render_episode() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("episode.jsonl");
    let svg = dir.path().join("episode.svg");
    let spec = manifest().join("configs/two_rooms.json");
    let config = manifest().join("configs/calibrated.json");
    let o = bin(&["explore", "--spec", s(&spec), "--seed", "7", "--log", s(&log), "--svg", s(&svg), "--config", s(&config)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("termination=exit-reached"));
    let episode = parse_episode(&std::fs::read_to_string(&log).unwrap(), "log").unwrap();
    let rendered = std::fs::read_to_string(&svg).unwrap();
    assert_eq!(rendered.matches("<polyline").count(), episode.log.iterations.len());

    let again = dir.path().join("again.svg");
    let r = bin(&["render", "--episode", s(&log), "--out", s(&again)]);
    assert!(r.status.success());
    assert_eq!(std::fs::read(&again).unwrap(), std::fs::read(&svg).unwrap());
}
