use std::path::Path;
use std::process::{Command, Output};

use perctri_core::io::{load_config, RunManifest};

fn perctri(args: &[&str], workers: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_perctri"));
    cmd.args(args);
    if let Some(w) = workers {
        cmd.env("PERCTRI_WORKERS", w);
    }
    cmd.output().expect("spawn perctri")
}

fn ok(args: &[&str]) -> Output {
    let out = perctri(args, None);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn p(dir: &Path, name: &str) -> String {
    dir.join(name).to_string_lossy().into_owned()
}

#[test]
fn sample_is_deterministic_and_writes_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (p(dir.path(), "a.bin"), p(dir.path(), "b.bin"));
    ok(&["sample", "--n", "8", "--seed", "42", "--trial", "3", "--out", &a]);
    ok(&["sample", "--n", "8", "--seed", "42", "--trial", "3", "--out", &b]);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let c = load_config(Path::new(&a)).unwrap();
    assert_eq!((c.n(), c.master_seed, c.trial_id), (8, 42, 3));
    let m = RunManifest::load(&RunManifest::path_for(Path::new(&a))).unwrap();
    assert_eq!(m.command, "sample");
    assert_eq!(m.master_seed, Some(42));
    assert_eq!(m.outputs.len(), 1);
}

#[test]
fn estimates_do_not_depend_on_worker_count() {
    let args = ["features", "--n", "4,8", "--trials", "300", "--seed", "9", "--tau", "1,2"];
    let one = perctri(&args, Some("1"));
    let four = perctri(&args, Some("4"));
    assert!(one.status.success() && four.status.success());
    assert_eq!(one.stdout, four.stdout);
    let text = String::from_utf8(one.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("n,quantity,tau,trials,mean,stderr,seed"));
    assert_eq!(text.lines().count(), 1 + 2 * 3 * 2);

    let arms = ["arms", "--variant", "annulus", "--kappa", "3", "--ladder", "4,8", "--trials", "500", "--seed", "2"];
    assert_eq!(perctri(&arms, Some("1")).stdout, perctri(&arms, Some("3")).stdout);
}

#[test]
fn bad_input_exits_2() {
    assert_eq!(perctri(&["sample", "--n", "0", "--seed", "1", "--out", "/dev/null"], None).status.code(), Some(2));
    assert_eq!(perctri(&["nonsense"], None).status.code(), Some(2));
    assert_eq!(perctri(&["arms", "--variant", "annulus", "--kappa", "7", "--ladder", "4", "--trials", "1", "--seed", "1"], None).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let junk = p(dir.path(), "junk.bin");
    std::fs::write(&junk, b"not a configuration").unwrap();
    let out = perctri(&["render", "--config", &junk, "--overlays", "L", "--out", &p(dir.path(), "x.svg")], None);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn render_writes_svg() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = p(dir.path(), "c.bin");
    let svg = p(dir.path(), "c.svg");
    ok(&["sample", "--n", "6", "--seed", "1", "--out", &cfg]);
    ok(&["render", "--config", &cfg, "--overlays", "LFQG", "--out", &svg]);
    let text = std::fs::read_to_string(&svg).unwrap();
    assert!(text.starts_with("<svg") || text.starts_with("<?xml"));
    assert_eq!(text.matches("<polygon").count(), 13 * 13);
}

#[test]
fn oracle_writes_exact_fractions() {
    let out = ok(&["oracle", "--n", "1", "--tau", "2"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let l1 = v["moments"].as_array().unwrap().iter().find(|m| m["quantity"] == "L" && m["tau"] == 1).unwrap();
    assert_eq!(l1["value"], "819/512");
}

#[test]
fn replay_matches_and_detects_tampering() {
    let dir = tempfile::tempdir().unwrap();
    let csv = p(dir.path(), "m.csv");
    ok(&["features", "--n", "4", "--trials", "200", "--seed", "5", "--out", &csv]);
    let manifest = RunManifest::path_for(Path::new(&csv));
    let replay = |w: &str| perctri(&["replay", "--manifest", manifest.to_str().unwrap()], Some(w));
    assert!(replay("1").status.success());
    assert!(replay("4").status.success());

    let mut m = RunManifest::load(&manifest).unwrap();
    m.outputs[0].sha256 = "0".repeat(64);
    m.save(&manifest).unwrap();
    assert_eq!(replay("1").status.code(), Some(3));
}
