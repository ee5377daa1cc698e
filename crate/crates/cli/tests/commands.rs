use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn lrpx(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lrp-transfer"))
        .args(args)
        .current_dir(dir)
        .env_remove("LRPX_DATA_DIR")
        .output()
        .unwrap()
}

fn error_of(out: &Output) -> serde_json::Value {
    assert!(!out.status.success());
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().rev().find(|l| l.starts_with('{')).unwrap_or_else(|| panic!("no JSON on stderr: {text}"));
    serde_json::from_str::<serde_json::Value>(line).unwrap()["error"].clone()
}

#[test]
fn missing_cache_is_reported_as_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = lrpx(&["onsets", "nope.lrpc", "--out", "o.csv"], dir.path());
    let err = error_of(&out);
    assert_eq!(err["kind"], "ingest");
    assert_eq!(err["path"], "nope.lrpc");
    assert!(err["message"].as_str().unwrap().contains("nope.lrpc"));
}

#[test]
fn unknown_config_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.toml"), "colour = 3\n").unwrap();
    let err = error_of(&lrpx(&["run-study", "--config", "c.toml", "--out", "o"], dir.path()));
    assert_eq!(err["kind"], "config");
    assert!(err["message"].as_str().unwrap().contains("colour"));
}

#[test]
fn bilateral_model_scores_unilateral_sessions() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let gen = lrpx(&["synth", "--seed", "5", "--set", "trials_per_set=12", "--out", "data"], d);
    assert!(gen.status.success(), "{}", String::from_utf8_lossy(&gen.stderr));
    let caches: Vec<String> = {
        let mut v: Vec<String> = fs::read_dir(d.join("data"))
            .unwrap()
            .map(|e| e.unwrap().path())
            .filter(|p| p.extension().is_some_and(|e| e == "lrpc"))
            .map(|p| p.to_string_lossy().into_owned())
            .collect();
        v.sort();
        v
    };
    assert_eq!(caches.len(), 6);
    let mut args = vec!["train", "--condition", "bilateral", "--channel-set", "custom-16", "--sets", "0,1", "--out", "m.lrpm"];
    args.extend(caches.iter().map(String::as_str));
    let train = lrpx(&args, d);
    assert!(train.status.success(), "{}", String::from_utf8_lossy(&train.stderr));

    let mut args = vec!["evaluate", "--model", "m.lrpm", "--test-condition", "unilateral", "--sets", "2", "--out", "r.csv"];
    args.extend(caches.iter().map(String::as_str));
    let eval = lrpx(&args, d);
    assert!(eval.status.success(), "{}", String::from_utf8_lossy(&eval.stderr));
    let rows = lrp_transfer::eval::read_csv(fs::File::open(d.join("r.csv")).unwrap()).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].condition, lrp_transfer::ConditionId::C);
    assert!(rows[0].ba > 0.5, "{:?}", rows[0]);

    // Testing on a training set of the same task is refused.
    let mut args = vec!["evaluate", "--model", "m.lrpm", "--test-condition", "bilateral", "--sets", "1", "--out", "x.csv"];
    args.extend(caches.iter().map(String::as_str));
    let err = error_of(&lrpx(&args, d));
    assert!(err["message"].as_str().unwrap().contains("overlap"), "{err}");
}
