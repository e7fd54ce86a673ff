//! End-to-end tests of the binary: exit codes, report formats, deformation
//! subcommands, moduli, and the self-test entry point.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_phasebound"))
}

fn goldens_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../goldens")
}

fn weak_config() -> String {
    goldens_dir()
        .join("weak-radical.config.json")
        .display()
        .to_string()
}

fn strong_config() -> String {
    goldens_dir()
        .join("strong-variant.config.json")
        .display()
        .to_string()
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn analyze_json_matches_golden_fields() {
    let out = run(&["analyze", &weak_config(), "--json"]);
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let golden: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(goldens_dir().join("weak-radical.report.json")).unwrap(),
    )
    .unwrap();
    for field in [
        "defect_rank",
        "boundary_depth",
        "weak_extension_depth",
        "admissibility",
        "strata",
        "island",
        "detectors",
        "deformations",
    ] {
        assert_eq!(report[field], golden[field], "field {field}");
    }
}

#[test]
fn analyze_is_byte_deterministic() {
    let a = run(&["analyze", &weak_config(), "--seed", "7"]);
    let b = run(&["analyze", &weak_config(), "--seed", "7"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn analyze_text_has_anatomy_sections() {
    let out = run(&["analyze", &weak_config(), "--text"]);
    assert!(out.status.success());
    let text = stdout(&out);
    for section in [
        "[defect generation]",
        "[rigid extension]",
        "[boundary]",
        "[obstruction regime]",
        "[rigidity island]",
        "[detector]",
        "[deformations]",
    ] {
        assert!(text.contains(section), "missing {section} in:\n{text}");
    }
}

#[test]
fn malformed_modulus_exits_2_naming_the_field() {
    let dir = std::env::temp_dir().join(format!("pb-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("bad-p.json");
    let mut config: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(goldens_dir().join("weak-radical.config.json")).unwrap(),
    )
    .unwrap();
    config["ring"]["p"] = serde_json::json!(4);
    std::fs::write(&path, serde_json::to_string(&config).unwrap()).unwrap();
    let out = run(&["analyze", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr).into_owned();
    assert!(err.contains("ring.p"), "stderr: {err}");
}

#[test]
fn size_cap_exits_3() {
    let dir = std::env::temp_dir().join(format!("pb-cli-cap-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("too-big.json");
    let config = serde_json::json!({
        "schema": "phasebound-config/1",
        "ring": {"p": 2, "m": 16},
        "rank": 2,
        "character": {"weights": vec![0u8; 16]},
        "generators": []
    });
    std::fs::write(&path, serde_json::to_string(&config).unwrap()).unwrap();
    let out = run(&["analyze", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn missing_file_exits_2() {
    let out = run(&["analyze", "/nonexistent/config.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn deform_enumerate_lists_four_patterns() {
    let out = run(&["deform", &weak_config(), "--enumerate"]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["count"], 4);
    let patterns: Vec<&str> = doc["deformations"]
        .as_array()
        .unwrap()
        .iter()
        .map(|d| d["pattern"].as_str().unwrap())
        .collect();
    assert_eq!(patterns, vec!["00", "01", "10", "11"]);
}

#[test]
fn trivial_deformation_report_matches_base_analysis() {
    let base = run(&["analyze", &weak_config()]);
    let deformed = run(&["deform", &weak_config(), "--apply", "00"]);
    assert!(deformed.status.success());
    assert_eq!(base.stdout, deformed.stdout);
}

#[test]
fn single_stratum_deformation_changes_only_depth_3() {
    let base: serde_json::Value =
        serde_json::from_str(&stdout(&run(&["analyze", &weak_config()]))).unwrap();
    let out = run(&["deform", &weak_config(), "--apply", "10"]);
    assert!(out.status.success());
    let deformed: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    // island section byte-identical
    assert_eq!(
        serde_json::to_string(&base["island"]).unwrap(),
        serde_json::to_string(&deformed["island"]).unwrap()
    );
    // strata: depth 3 content differs, depth 4 content identical
    let (b3, d3) = (&base["strata"][0], &deformed["strata"][0]);
    let (b4, d4) = (&base["strata"][1], &deformed["strata"][1]);
    assert_eq!(b3["depth"], d3["depth"]);
    assert_ne!(
        b3["classes"], d3["classes"],
        "depth-3 quotient classes must change"
    );
    assert_eq!(b4, d4, "depth-4 stratum must be unchanged");
}

#[test]
fn pattern_length_mismatch_exits_2() {
    let out = run(&["deform", &weak_config(), "--apply", "101"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn moduli_distinguishes_weak_and_strong() {
    let out = run(&["moduli", &weak_config(), &strong_config()]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["objects"].as_array().unwrap().len(), 2);
    assert_eq!(doc["class_count"], 2);
}

#[test]
fn selftest_passes_and_filters() {
    let out = run(&["selftest"]);
    assert!(out.status.success(), "{}", stdout(&out));
    assert!(stdout(&out).contains("checks passed"));

    let out = run(&["selftest", "--filter", "ring"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("invisible-threshold-oracle"));
    assert!(!text.contains("island-kernel"));

    let out = run(&["selftest", "--filter", "island-kernel"]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("island-kernel"));

    let out = run(&["selftest", "--filter", "no-such-module"]);
    assert_eq!(out.status.code(), Some(2));
}
