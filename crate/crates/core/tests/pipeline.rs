use std::path::{Path, PathBuf};

use pedsynth::capture::read_annotations;
use pedsynth::cli::run_args;
use pedsynth::optics::load_cameras;
use pedsynth::persona::read_population;
use pedsynth::wardrobe::{load_catalog, Slot};
use pedsynth::world::load_scenes;

fn assets() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("assets")
}

fn run(args: &[&str]) -> pedsynth::Result<String> {
    run_args(std::iter::once("pedsynth").chain(args.iter().copied()))
}

#[test]
fn bundled_assets_are_consistent() {
    let scenes = load_scenes(&assets().join("scenes")).unwrap();
    assert_eq!(scenes.len(), 11);
    let rigs = load_cameras(&assets().join("cameras.txt")).unwrap();
    assert_eq!(rigs.len(), 19);
    for s in &scenes {
        assert!(!s.cameras.is_empty(), "{} has no camera", s.name);
        for c in &s.cameras {
            assert!(rigs.iter().any(|r| r.id == *c), "{} uses camera {c}", s.name);
        }
        s.legs().unwrap();
    }
    let catalog = load_catalog(&assets().join("catalog.tsv")).unwrap();
    assert!(catalog.len() >= 20);
    for slot in Slot::ALL {
        assert!(catalog.models().iter().any(|m| m.slot == *slot), "no model for {slot:?}");
    }
}

#[test]
fn gen_textures_writes_every_map_once() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let args = ["--out", out, "gen-textures", "--colors", "3", "--patterns", "2", "--size", "64"];
    assert_eq!(run(&args).unwrap(), "textures 6 written 6");
    assert_eq!(run(&args).unwrap(), "textures 6 written 0");
    let manifest = std::fs::read_to_string(dir.path().join("textures/manifest.csv")).unwrap();
    assert_eq!(manifest.lines().filter(|l| !l.starts_with('#')).count(), 7);
    let pngs = std::fs::read_dir(dir.path().join("textures"))
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "png"))
        .count();
    assert_eq!(pngs, 6);
}

#[test]
fn simulate_is_repeatable() {
    let config = assets().join("configs/demo.toml");
    let config = config.to_str().unwrap();
    let mut logs = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().to_str().unwrap();
        run(&["--config", config, "--out", out, "gen-characters"]).unwrap();
        let summary = run(&["--config", config, "--out", out, "simulate", "--scene", "demo", "--duration", "60", "--seed", "7"]).unwrap();
        assert!(summary.starts_with("scene demo agents 10"), "{summary}");
        let scene = dir.path().join("scenes/s01_demo");
        let events = std::fs::read_to_string(scene.join("events.log")).unwrap();
        let ann = std::fs::read(scene.join("c01/annotations.txt")).unwrap();
        let (fps, frames) = read_annotations(&scene.join("c01/annotations.txt")).unwrap();
        assert_eq!(fps, 24.0);
        assert_eq!(frames.len(), 60 * 24 + 1);
        logs.push((events, ann));
    }
    assert_eq!(logs[0], logs[1]);
}

#[test]
fn characters_written_by_cli_read_back() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let text = run(&["--out", out, "--seed", "3", "gen-characters", "--total", "12"]).unwrap();
    assert_eq!(text, "characters 12 original 0 web_image 0 random 12");
    let catalog = load_catalog(&assets().join("catalog.tsv")).unwrap();
    let pop = read_population(&dir.path().join("characters"), &catalog).unwrap();
    assert_eq!(pop.iter().map(|c| c.id).collect::<Vec<_>>(), (1..=12).collect::<Vec<_>>());
}

#[test]
fn eval_reads_files() {
    let dir = tempfile::tempdir().unwrap();
    let p = |n: &str| dir.path().join(n);
    let d = pedsynth::evalkit::DistanceMatrix::new(1, 3, vec![0.1, 0.2, 0.3]).unwrap();
    pedsynth::evalkit::write_distmat(&p("d.bin"), &d).unwrap();
    std::fs::write(p("q.csv"), "id,cam\n1,0\n").unwrap();
    std::fs::write(p("g.csv"), "id,cam\n2,1\n1,1\n1,1\n").unwrap();
    let s = |n: &str| p(n).to_str().unwrap().to_string();
    let out = run(&["eval", "--distmat", &s("d.bin"), "--query", &s("q.csv"), "--gallery", &s("g.csv")]).unwrap();
    assert_eq!(out, "rank-1 0.0 rank-5 100.0 rank-10 100.0 mAP 58.3");
}

#[test]
fn errors_carry_a_kind() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let e = run(&["--out", out, "simulate"]).unwrap_err();
    assert_eq!(e.kind(), "config");
    let e = run(&["stats", "--manifest", out]).unwrap_err();
    assert!(matches!(e.kind(), "io" | "config"), "{}", e.kind());
    let bad = dir.path().join("bad.bin");
    std::fs::write(&bad, [1u8, 2, 3]).unwrap();
    let b = bad.to_str().unwrap();
    let e = run(&["eval", "--distmat", b, "--query", b, "--gallery", b]).unwrap_err();
    assert!(!e.to_string().is_empty());
}
