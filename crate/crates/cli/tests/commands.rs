use std::path::PathBuf;
use std::process::Command;

use bgi_cli::{
    check_profile, embed_psych, show_hierarchy, solve, validate, TypeSpaceSource, EXIT_INPUT,
    EXIT_NEGATIVE, EXIT_OK,
};
use bgi_core::equilibrium::{DeviationSpec, DEFAULT_SEARCH_CAP};
use serde_json::{json, Value};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

fn profile(name: &str) -> PathBuf {
    fixture(&format!("profiles/{name}.json"))
}

fn write(dir: &tempfile::TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn bgi(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_bgi"))
        .args(args)
        .output()
        .unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
    )
}

#[test]
fn validate_reports_fixtures_and_broken_files() {
    let r = validate(&fixture("sp2.json"));
    assert_eq!(r.exit, EXIT_OK);
    assert_eq!(r.body["valid"], json!(true));

    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(fixture("sp2.json")).unwrap();
    let broken = text.replacen(r#""x|y": "1""#, r#""x|y": "9/10""#, 1);
    assert_ne!(broken, text);
    let r = validate(&write(&dir, "broken.json", &broken));
    assert_eq!(r.exit, EXIT_INPUT);
    assert_eq!(r.body["valid"], json!(false));
    let codes: Vec<&str> = r.body["violations"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v["code"].as_str().unwrap())
        .collect();
    assert!(codes.contains(&"distribution-not-normalized"), "{codes:?}");

    let r = validate(&dir.path().join("missing.json"));
    assert_eq!(r.exit, EXIT_INPUT);
    assert_eq!(r.body["error"], json!("io"));

    let r = validate(&write(&dir, "bad.json", "{\"kind\": "));
    assert_eq!(r.exit, EXIT_INPUT);
    assert_eq!(r.body["error"], json!("json"));
}

#[test]
fn check_surprise_profiles() {
    let r = check_profile(&fixture("sp2.json"), &profile("sp2-a-b"), None);
    assert_eq!(r.exit, EXIT_OK);
    assert_eq!(r.body["is_equilibrium"], json!(true));

    let r = check_profile(&fixture("sp2.json"), &profile("sp2-a-a"), None);
    assert_eq!(r.exit, EXIT_NEGATIVE);
    assert_eq!(
        r.body["witnesses"][0],
        json!({"player": "1", "type": "x", "deviation": "b", "gain": "1"})
    );
}

#[test]
fn check_bravery_psych() {
    let r = check_profile(
        &fixture("bravery-psych.json"),
        &profile("psych-timid"),
        None,
    );
    assert_eq!(r.exit, EXIT_OK);
    assert_eq!(r.body["deviations"], json!("grid:4"));
    assert_eq!(r.body["values"][0]["utility"], json!("3"));
    let r = check_profile(
        &fixture("bravery-psych.json"),
        &profile("psych-bold"),
        Some(DeviationSpec::Pure),
    );
    assert_eq!(r.exit, EXIT_OK);
    assert_eq!(r.body["values"][0]["utility"], json!("1"));
}

#[test]
fn check_rejects_profiles_for_the_wrong_game() {
    let r = check_profile(&fixture("sp2.json"), &profile("bravery-timid"), None);
    assert_eq!(r.exit, EXIT_INPUT);
    assert!(r.body["error"].is_string());
}

#[test]
fn solve_reports() {
    let r = solve(
        &fixture("nonexistence-pure.json"),
        None,
        None,
        DEFAULT_SEARCH_CAP,
    );
    assert_eq!(r.exit, EXIT_NEGATIVE);
    assert_eq!(r.body["exhaustive"], json!(true));
    assert_eq!(r.body["candidates"], json!(4));
    assert_eq!(r.body["equilibria"], json!([]));

    let r = solve(&fixture("sp2.json"), None, None, DEFAULT_SEARCH_CAP);
    assert_eq!(r.exit, EXIT_OK);
    let eqs = r.body["equilibria"].as_array().unwrap();
    assert_eq!(eqs.len(), 2);
    assert_eq!(eqs[0]["1"], json!({"x": "a", "x'": "b"}));
    assert_eq!(eqs[1]["1"], json!({"x": "b", "x'": "a"}));

    let r = solve(
        &fixture("nonexistence-mixed.json"),
        None,
        Some(10),
        DEFAULT_SEARCH_CAP,
    );
    assert_eq!(r.exit, EXIT_NEGATIVE);
    assert_eq!(r.body["coverage"], json!("exhaustive-at-resolution-10"));
    assert_eq!(r.body["search_space"], json!("grid:10"));

    let r = solve(&fixture("auction.json"), None, None, 1000);
    assert_eq!(r.exit, EXIT_INPUT);
    assert_eq!(r.body["error"], json!("search-space-too-large"));

    let r = solve(
        &fixture("bravery-psych.json"),
        None,
        None,
        DEFAULT_SEARCH_CAP,
    );
    assert_eq!(r.exit, EXIT_OK);
    assert_eq!(
        r.body["equilibria"],
        json!([{"1": "bold", "2": "*"}, {"1": "timid", "2": "*"}])
    );
}

#[test]
fn hierarchy_display() {
    let r = show_hierarchy(&fixture("sp2.json"), Some(&profile("sp2-a-b")), "2", "y", 1);
    assert_eq!(r.exit, EXIT_OK);
    assert_eq!(
        r.body["levels"],
        json!([[{"probability": "1", "strategies": {"1": "b"}}]])
    );

    let r = show_hierarchy(
        &fixture("sp2.json"),
        Some(&profile("sp2-a-a")),
        "2",
        "y'",
        2,
    );
    assert_eq!(r.body["coherent"], json!(true));
    let level2 = &r.body["levels"][1];
    assert_eq!(level2.as_array().unwrap().len(), 1);
    assert_eq!(
        level2[0]["beliefs"]["1"],
        json!([[{"probability": "1", "strategies": {"2": "*"}}]])
    );

    let r = show_hierarchy(&fixture("sp2.json"), Some(&profile("sp2-a-b")), "2", "y", 0);
    assert_eq!(r.exit, EXIT_INPUT);
    assert_eq!(r.body["error"], json!("depth-out-of-range"));

    let r = show_hierarchy(&fixture("sp2.json"), None, "2", "y", 1);
    assert_eq!(r.body["error"], json!("intentions-missing"));
    let r = show_hierarchy(&fixture("sp2-bgii.json"), None, "2", "y", 1);
    assert_eq!(r.exit, EXIT_OK);
}

#[test]
fn embed_writes_a_valid_equivalent_game() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bravery-bgi.json");
    let r = embed_psych(
        &fixture("bravery-psych.json"),
        &TypeSpaceSource::Default,
        &out,
        None,
    );
    assert_eq!(r.exit, EXIT_OK);
    assert_eq!(r.body["preference_equivalent"], json!(true));
    assert_eq!(validate(&out).exit, EXIT_OK);
    let s = solve(&out, None, None, DEFAULT_SEARCH_CAP);
    assert_eq!(
        s.body["equilibria"],
        json!([{"1": {"t": "bold"}, "2": {"t": "*"}}, {"1": {"t": "timid"}, "2": {"t": "*"}}])
    );

    let two = TypeSpaceSource::File(fixture("typespace-2x2.json"));
    let r = embed_psych(&fixture("bravery-psych-plus.json"), &two, &out, Some(2));
    assert_eq!(r.exit, EXIT_OK);
    assert_eq!(r.body["intention_samples"], json!(4));
}

#[test]
fn embed_rejects_deep_and_unrooted_games() {
    let dir = tempfile::tempdir().unwrap();
    let deep = (0..4).fold("prob(2, intends(1, a))".to_string(), |e, _| {
        format!("expect(1, expect(2, {e}))")
    });
    let game = json!({
        "kind": "psych",
        "players": ["1", "2"],
        "actions": {"1": ["a"], "2": ["b"]},
        "utilities": {"1": deep, "2": "0"}
    });
    let path = write(&dir, "deep.json", &game.to_string());
    let r = embed_psych(
        &path,
        &TypeSpaceSource::Default,
        &dir.path().join("o.json"),
        None,
    );
    assert_eq!(r.exit, EXIT_INPUT);
    assert_eq!(r.body["error"], json!("depth-exceeds-cap"));

    let text = std::fs::read_to_string(fixture("bravery-psych.json"))
        .unwrap()
        .replace(
            "expect(1, prob(2, intends(1, bold)))",
            "prob(2, intends(1, bold))",
        );
    let path = write(&dir, "uprime.json", &text);
    let r = embed_psych(
        &path,
        &TypeSpaceSource::Default,
        &dir.path().join("o.json"),
        None,
    );
    assert_eq!(r.exit, EXIT_NEGATIVE);
    assert_eq!(r.body["preference_equivalent"], json!(false));
    assert_eq!(
        r.body["violations"][0]["code"],
        json!("belief-outside-hierarchy")
    );
}

#[test]
fn binary_output_is_byte_stable() {
    let game = fixture("sp2.json");
    let args = ["solve", game.to_str().unwrap()];
    let (code, first) = bgi(&args);
    assert_eq!(code, EXIT_OK);
    let (_, second) = bgi(&args);
    assert_eq!(first, second);
    let parsed: Value = serde_json::from_str(&first).unwrap();
    assert_eq!(parsed["candidates"], json!(4));
}

#[test]
fn binary_exit_codes() {
    let sp2 = fixture("sp2.json");
    let aa = profile("sp2-a-a");
    let (code, out) = bgi(&[
        "check",
        sp2.to_str().unwrap(),
        "--profile",
        aa.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_NEGATIVE);
    assert!(out.contains("\"is_equilibrium\": false"));
    let (code, _) = bgi(&["validate", "/nonexistent/file.json"]);
    assert_eq!(code, EXIT_INPUT);
    let (code, _) = bgi(&["solve", sp2.to_str().unwrap(), "--deviations", "grid:0"]);
    assert_eq!(code, EXIT_INPUT);
    let (code, _) = bgi(&["frobnicate"]);
    assert_eq!(code, EXIT_INPUT);
    let (code, out) = bgi(&[
        "hierarchy",
        sp2.to_str().unwrap(),
        "--intentions",
        profile("sp2-a-b").to_str().unwrap(),
        "--player",
        "2",
        "--type",
        "y",
        "--depth",
        "0",
    ]);
    assert_eq!(code, EXIT_INPUT);
    assert!(out.contains("depth-out-of-range"));
}
