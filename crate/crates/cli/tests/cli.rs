use std::path::Path;
use std::process::{Command, Output};

const POLY: &str = r#"{"terms": [
    {"coefficient": 2.0, "feature": 0, "transform": "identity"},
    {"coefficient": -1.0, "feature": 1, "transform": "identity"}]}"#;

fn blamebench(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_blamebench"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = blamebench(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(dir: &Path, args: &[&str]) -> i32 {
    blamebench(dir, args).status.code().expect("exit code")
}

/// Writes a Seneca dataset and a logistic model fitted on it.
fn prepare(dir: &Path) {
    std::fs::write(dir.join("poly.json"), POLY).unwrap();
    ok(dir, &["generate", "--generator", "seneca-rc", "--n", "150", "--noise", "0.3", "--spec", "poly.json", "--seed", "4", "--out", "d.csv"]);
    ok(dir, &["train", "--model", "logistic", "--data", "d.csv", "--seed", "4", "--out", "m.json"]);
}

#[test]
fn explain_groundtruth_score_pipeline() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    prepare(dir);
    ok(dir, &["explain", "--model", "m.json", "--data", "d.csv", "--explainer", "kernel_shap", "--max-instances", "20", "--out", "a.csv"]);
    ok(dir, &["groundtruth", "--method", "mias", "--model", "m.json", "--data", "d.csv", "--max-instances", "20", "--out", "g.csv"]);
    let attributions = std::fs::read_to_string(dir.join("a.csv")).unwrap();
    assert!(attributions.starts_with("instance,explainer,base_value,phi_1,phi_2\n"));
    assert_eq!(attributions.lines().count(), 21);

    let report = ok(dir, &["score", "--attributions", "a.csv", "--gt", "g.csv", "--metrics", "spearman,cosine", "--json", "s.json"]);
    let lines: Vec<&str> = report.lines().collect();
    assert_eq!(lines[0], "dataset,model,explainer,instance,measure,value,flags");
    // 20 instances plus mean and median, per metric
    assert_eq!(lines.len(), 1 + 2 * 22);
    assert!(lines.iter().any(|l| l.contains("kernel_shap,mean,gt:mias_logistic/spearman")));
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.join("s.json")).unwrap()).unwrap();
    assert_eq!(json.as_array().unwrap().len(), 44);
}

#[test]
fn seneca_ground_truth_of_a_linear_polynomial_is_constant() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    prepare(dir);
    let out = ok(dir, &["groundtruth", "--method", "seneca", "--model", "m.json", "--data", "d.csv", "--polynomial", "poly.json", "--max-instances", "4", "--normalize"]);
    for line in out.lines().skip(1) {
        assert!(line.ends_with(",,1.0,-0.5,seneca_rc"), "{line}");
    }
}

#[test]
fn run_is_byte_identical_and_summarizes() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let cfg = format!(
        r#"{{"version": 1, "seed": 5,
            "dataset": {{"generate": {{"generator": "seneca_rc", "n": 80, "noise": 0.3, "polynomial": {POLY}}}}},
            "model": {{"kind": "logistic"}},
            "explainers": [{{"kind": "gradient_input"}}, {{"kind": "random"}}],
            "evaluation": {{"ground_truth": ["mias"], "metrics": ["spearman"],
                           "robustness": {{"measures": ["deletion"]}}}}}}"#
    );
    std::fs::write(dir.join("cfg.json"), cfg).unwrap();
    ok(dir, &["run", "--config", "cfg.json", "--out-dir", "r1"]);
    ok(dir, &["run", "--config", "cfg.json", "--out-dir", "r2"]);
    for f in ["report.csv", "report.meta.json"] {
        assert_eq!(std::fs::read(dir.join("r1").join(f)).unwrap(), std::fs::read(dir.join("r2").join(f)).unwrap());
    }
    let summary = ok(dir, &["summarize", "--report", "r1/report.csv", "--by", "explainer"]);
    assert!(summary.starts_with("explainer,n,mean,median,std\n"));
    assert_eq!(summary.lines().count(), 3);
    let ranking = ok(dir, &["summarize", "--report", "r1/report.csv", "--rank-metric", "spearman", "--provenance", "mias_logistic"]);
    let first = ranking.lines().nth(1).unwrap();
    assert!(first.starts_with("1,gradient_input,"), "{ranking}");
}

#[test]
fn figure4_writes_four_aligned_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let out = ok(tmp.path(), &["figure4", "--seed", "2"]);
    assert_eq!(out.lines().count(), 4001);
    for method in ["seneca_rc", "model_weights", "robustness", "mias"] {
        assert_eq!(out.lines().filter(|l| l.contains(&format!(",{method},"))).count(), 1000);
    }
}

#[test]
fn robustness_and_sanity_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    prepare(dir);
    let rob = ok(dir, &["robustness", "--model", "m.json", "--data", "d.csv", "--explainer", "occlusion", "--measure", "deletion,preservation", "--k", "1", "--max-instances", "10"]);
    assert!(rob.contains("deletion:dataset_mean:k=1"));
    assert!(rob.contains("preservation:dataset_mean:k=1"));

    let sanity = ok(dir, &["sanity", "--model", "m.json", "--data", "d.csv", "--explainer", "gradient_input", "--metric", "spearman", "--max-instances", "10"]);
    let header = sanity.lines().next().unwrap();
    assert_eq!(header, "seed,stage,label,instance,similarity,retained_accuracy,verdict");
    assert_eq!(sanity.lines().count(), 11);
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    prepare(dir);
    // config errors
    assert_eq!(code(dir, &["explain", "--model", "m.json", "--data", "d.csv", "--explainer", "saliency"]), 2);
    std::fs::write(dir.join("bad.json"), r#"{"version": 1, "seed": 1, "typo": 0}"#).unwrap();
    assert_eq!(code(dir, &["run", "--config", "bad.json"]), 2);
    assert_eq!(code(dir, &["generate", "--generator", "seneca-rc", "--n", "10", "--out", "x.csv"]), 2);
    // data errors
    assert_eq!(code(dir, &["train", "--model", "logistic", "--data", "missing.csv", "--out", "x.json"]), 3);
    std::fs::write(dir.join("broken.csv"), "x0,x1,label\n1.0,abc,1\n").unwrap();
    assert_eq!(code(dir, &["train", "--model", "logistic", "--data", "broken.csv", "--out", "x.json"]), 3);
    // numeric: every row is predicted positive, so no boundary exists
    std::fs::write(dir.join("sure.json"), r#"{"kind": "logistic", "weights": [0.0, 0.0], "bias": 50.0}"#).unwrap();
    assert_eq!(code(dir, &["groundtruth", "--method", "seneca", "--model", "sure.json", "--data", "d.csv", "--polynomial", "poly.json"]), 4);
    // a model-independent explainer fails the sanity check
    assert_eq!(code(dir, &["sanity", "--model", "m.json", "--data", "d.csv", "--explainer", "random", "--metric", "spearman", "--mode", "full_reinit", "--seeds", "3", "--strict"]), 5);
}
