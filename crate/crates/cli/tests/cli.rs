use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn safepath(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_safepath"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = safepath(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn gen_small(dir: &Path, seed: &str) {
    ok(&[
        "gen-data", "--subjects", "8", "--samples", "400", "--events", "4", "--train-fraction", "0.75", "--seed", seed,
        "--out", s(dir),
    ]);
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

fn manifest_outputs_exist(manifest: &Path) -> Vec<PathBuf> {
    let m = read_json(manifest);
    let outputs: Vec<PathBuf> = m["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| PathBuf::from(v.as_str().unwrap()))
        .collect();
    assert!(!outputs.is_empty());
    for p in &outputs {
        assert!(p.exists(), "{} listed in {} is missing", p.display(), manifest.display());
    }
    outputs
}

fn files_under(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p);
            }
        }
    }
    out.sort();
    out
}

#[test]
fn gen_data_writes_split_truth_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("data");
    let stdout = ok(&[
        "gen-data", "--subjects", "8", "--samples", "400", "--events", "4", "--train-fraction", "0.75", "--seed", "3",
        "--out", s(&dir),
    ]);
    assert!(stdout.contains("6 train and 2 test sequences"), "{stdout}");
    let csvs = |sub: &str| {
        fs::read_dir(dir.join(sub))
            .unwrap()
            .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "csv"))
            .count()
    };
    assert_eq!(csvs("train"), 6);
    assert_eq!(csvs("test"), 2);
    assert_eq!(csvs("truth"), 8);
    assert!(dir.join("truth/theta_true.json").exists());
    let m = read_json(&dir.join("manifest.json"));
    assert_eq!(m["command"], "gen-data");
    assert_eq!(m["seed"], 3);
    manifest_outputs_exist(&dir.join("manifest.json"));
}

#[test]
fn fit_eval_compare_pipeline() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("data");
    gen_small(&dir, "5");
    let hmm = tmp.path().join("models/hmm.json");
    let mse = tmp.path().join("models/mse.json");
    ok(&["fit", "--train", s(&dir.join("train")), "--k", "2", "--seed", "1", "--out", s(&hmm)]);
    ok(&["fit-mse", "--train", s(&dir.join("train")), "--out", s(&mse)]);
    manifest_outputs_exist(&tmp.path().join("models/hmm.manifest.json"));
    manifest_outputs_exist(&tmp.path().join("models/mse.manifest.json"));

    let model = read_json(&hmm);
    assert_eq!(model["kind"], "hmm");
    let trace: Vec<f64> = model["ll_trace"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    assert!(trace.windows(2).all(|w| w[1] >= w[0] - 1e-8 * w[0].abs()));

    let eval_p = tmp.path().join("eval_hmm.csv");
    let eval_b = tmp.path().join("eval_mse.csv");
    let line_p = ok(&["eval", "--model", s(&hmm), "--test", s(&dir.join("test")), "--out", s(&eval_p)]);
    let line_b = ok(&["eval", "--model", s(&mse), "--test", s(&dir.join("test")), "--out", s(&eval_b)]);
    let parse = |l: &str| l.trim().strip_prefix("test_log_likelihood ").unwrap().parse::<f64>().unwrap();
    let (ll_p, ll_b) = (parse(&line_p), parse(&line_b));
    assert!(ll_p > ll_b, "{ll_p} vs {ll_b}");
    let csv = fs::read_to_string(&eval_b).unwrap();
    assert!(csv.starts_with("model,K,test_log_likelihood\nmse,0,"), "{csv}");

    let cmp = tmp.path().join("compare.json");
    ok(&[
        "compare", "--proposed", s(&hmm), "--baseline", s(&mse), "--test", s(&dir.join("test")), "--out", s(&cmp),
    ]);
    let report = read_json(&cmp);
    assert!((report["proposed_test_log_likelihood"].as_f64().unwrap() - ll_p).abs() < 1e-5);
    assert!((report["lambda"].as_f64().unwrap() - 2.0 * (ll_p - ll_b)).abs() < 1e-4);
    assert_eq!(report["reject_null"], true);

    let plots = tmp.path().join("plots");
    ok(&["plot-data", "--model", s(&hmm), "--data", s(&dir.join("test")), "--out", s(&plots)]);
    let outputs = manifest_outputs_exist(&plots.join("manifest.json"));
    assert_eq!(outputs.len(), 3);
    let series = fs::read_to_string(&outputs[0]).unwrap();
    assert!(series.starts_with("t,d,arousal,prediction,p_attentive\n"));
}

fn write_scenario(dir: &Path) -> PathBuf {
    let p = dir.join("scenario.json");
    fs::write(
        &p,
        r#"{"human_position":[0,0,1.2],"start":[-20,3],"goal":[20,3],"v_max":5,"a_max":3,
            "obstacles":[{"center":[0,3.5],"radius":1.5}],"gamma":20}"#,
    )
    .unwrap();
    p
}

fn fitted_model(tmp: &Path) -> PathBuf {
    let dir = tmp.join("data");
    gen_small(&dir, "9");
    let m = tmp.join("mse.json");
    ok(&["fit-mse", "--train", s(&dir.join("train")), "--out", s(&m)]);
    m
}

#[test]
fn plan_and_sweep() {
    let tmp = tempfile::tempdir().unwrap();
    let model = fitted_model(tmp.path());
    let sc = write_scenario(tmp.path());
    let out = tmp.path().join("plan");
    ok(&[
        "plan", "--scenario", s(&sc), "--model", s(&model), "--b-a", "0.3", "--starts", "2", "--out", s(&out),
    ]);
    manifest_outputs_exist(&out.join("manifest.json"));
    let plan = read_json(&out.join("plan.json"));
    assert!(plan["constraints"]["collision"].as_f64().unwrap() <= 0.0);
    let path = fs::read_to_string(out.join("path.csv")).unwrap();
    assert!(path.starts_with("t,x,y,z,speed\n"));
    assert_eq!(path.lines().count(), 1 + 1001);

    let sweep = tmp.path().join("sweep");
    ok(&[
        "--threads", "2", "sweep-ba", "--scenario", s(&sc), "--model", s(&model), "--b-a", "0.4,0.2", "--starts", "2",
        "--out", s(&sweep),
    ]);
    let outputs = manifest_outputs_exist(&sweep.join("manifest.json"));
    assert_eq!(outputs.len(), 3);
    let table = fs::read_to_string(sweep.join("sweep.csv")).unwrap();
    assert_eq!(table.lines().count(), 3);
}

#[test]
fn malformed_scenario_is_a_domain_error() {
    let tmp = tempfile::tempdir().unwrap();
    let model = fitted_model(tmp.path());
    let sc = tmp.path().join("bad.json");
    fs::write(&sc, r#"{"human_position":[0,0,1.2],"start":[-5,0],"goal":[5,0],"v_max":2}"#).unwrap();
    let out = safepath(&["plan", "--scenario", s(&sc), "--model", s(&model), "--out", s(&tmp.path().join("p"))]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("a_max"), "{err}");
    assert!(!tmp.path().join("p/manifest.json").exists());
}

#[test]
fn missing_input_is_a_domain_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = safepath(&["fit-mse", "--train", s(&tmp.path().join("nowhere")), "--out", s(&tmp.path().join("m.json"))]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_with_two() {
    for args in [
        &["fit", "--bogus"][..],
        &["gen-data"][..],
        &["--threads", "0", "gen-data", "--out", "x"][..],
        &["fit", "--train", "x", "--out", "y", "--k", "two"][..],
        &["frobnicate"][..],
    ] {
        assert_eq!(safepath(args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn outputs_are_reproducible() {
    let run = |root: &Path| {
        let dir = root.join("data");
        gen_small(&dir, "11");
        ok(&[
            "--threads", "2", "fit", "--train", s(&dir.join("train")), "--seed", "4", "--out", s(&root.join("hmm.json")),
        ]);
    };
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run(a.path());
    run(b.path());
    let fa = files_under(a.path());
    let fb = files_under(b.path());
    assert_eq!(fa.len(), fb.len());
    let mut compared = 0;
    for (x, y) in fa.iter().zip(&fb) {
        assert_eq!(x.strip_prefix(a.path()).unwrap(), y.strip_prefix(b.path()).unwrap());
        if x.to_string_lossy().contains("manifest") {
            continue;
        }
        assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap(), "{} differs", x.display());
        compared += 1;
    }
    assert!(compared > 10);
}
