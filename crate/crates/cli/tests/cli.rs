use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn pilab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pilab"))
        .args(args)
        .output()
        .expect("spawn pilab")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn stdout_json(o: &Output) -> Value {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).unwrap()
}

fn interval(report: &Value, slug: &str) -> (f64, f64) {
    let pi = report["prediction_intervals"]
        .as_array()
        .unwrap()
        .iter()
        .find(|p| p["method"] == slug)
        .unwrap_or_else(|| panic!("{slug} missing"));
    (pi["lower"].as_f64().unwrap(), pi["upper"].as_f64().unwrap())
}

#[test]
fn fit_toy_example() {
    let tmp = tempfile::tempdir().unwrap();
    let input = write(
        tmp.path(),
        "toy.csv",
        "study_id,effect,se\nA,0,1\nB,2,1\nC,4,1\n",
    );
    let r = stdout_json(&pilab(&[
        "fit",
        "--input",
        &input,
        "--seed",
        "7",
        "--bootstrap-b",
        "500",
    ]));
    let h = &r["heterogeneity"];
    assert_eq!(h["q"].as_f64().unwrap(), 8.0);
    assert!((h["i2"].as_f64().unwrap() - 0.75).abs() < 1e-12);
    assert!((h["tau2_dl"].as_f64().unwrap() - 3.0).abs() < 1e-12);
    assert!((h["tau2_reml"].as_f64().unwrap() - 3.0).abs() < 1e-8);
    assert!((r["pooled"]["mu_hat"].as_f64().unwrap() - 2.0).abs() < 1e-12);
    let (lo, hi) = interval(&r, "hts-dl-z");
    assert!((lo + 2.0800).abs() < 1e-4 && (hi - 6.0800).abs() < 1e-4);
    let (lo, hi) = interval(&r, "hts-dl-tk1");
    assert!((lo + 6.9567).abs() < 1e-4 && (hi - 10.9567).abs() < 1e-4);
    let (lo, hi) = interval(&r, "hts-dl-tk2");
    assert!((lo + 24.4501).abs() < 1e-4 && (hi - 28.4501).abs() < 1e-4);
    assert_eq!(r["run"]["seed_source"], "user");
    assert_eq!(r["prediction_intervals"].as_array().unwrap().len(), 7);
}

#[test]
fn homogeneous_ensemble_is_degenerate_with_warning() {
    let tmp = tempfile::tempdir().unwrap();
    let input = write(
        tmp.path(),
        "h.csv",
        "study_id,effect,var\na,1,1\nb,1,1\nc,1,1\nd,1,1\n",
    );
    let r = stdout_json(&pilab(&["fit", "--input", &input, "--methods", "ensemble"]));
    assert_eq!(interval(&r, "ensemble"), (1.0, 1.0));
    let pi = &r["prediction_intervals"][0];
    assert_eq!(pi["degenerate"], true);
    assert!(pi["warning"].as_str().unwrap().contains("degenerate"));
}

#[test]
fn fit_output_is_byte_identical_for_a_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let input = write(
        tmp.path(),
        "d.csv",
        "study_id,effect,var\n1,0.1,0.04\n2,0.5,0.09\n3,-0.2,0.05\n4,0.8,0.1\n5,0.3,0.02\n",
    );
    for format in ["json", "csv"] {
        let args = [
            "fit",
            "--input",
            &input,
            "--seed",
            "11",
            "--bootstrap-b",
            "400",
            "--format",
            format,
        ];
        let a = pilab(&args);
        let b = pilab(&args);
        assert!(a.status.success());
        assert_eq!(a.stdout, b.stdout, "{format}");
    }
    let out = tmp.path().join("r.json");
    let o = pilab(&[
        "fit",
        "--input",
        &input,
        "--seed",
        "11",
        "--bootstrap-b",
        "400",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success() && o.stdout.is_empty());
    let a = pilab(&[
        "fit",
        "--input",
        &input,
        "--seed",
        "11",
        "--bootstrap-b",
        "400",
    ]);
    assert_eq!(fs::read(&out).unwrap(), a.stdout);
}

#[test]
fn fit_rejects_bad_input() {
    let tmp = tempfile::tempdir().unwrap();
    let one = write(tmp.path(), "one.csv", "study_id,effect,se\nA,0,1\n");
    let o = pilab(&["fit", "--input", &one]);
    assert!(!o.status.success());
    let neg = write(tmp.path(), "neg.csv", "study_id,effect,se\nA,0,1\nB,1,-1\n");
    let o = pilab(&["fit", "--input", &neg]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("row 3"));
    let ok = write(tmp.path(), "ok.csv", "study_id,effect,se\nA,0,1\nB,1,1\n");
    let o = pilab(&["fit", "--input", &ok, "--methods", "no-such-method"]);
    assert!(!o.status.success());
}

const SMALL: &str = r#"{"K":[5],"N":[50],"tau2":[0.5],"dist":["normal","bimodal"],"reps":10,"bootstrap_reps":4,"B":200,"records":true,"seed":3}"#;

#[test]
fn simulate_writes_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.json", SMALL);
    let out = tmp.path().join("out");
    let o = pilab(&[
        "simulate",
        "--config",
        &cfg,
        "--out-dir",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!out.join("INCOMPLETE").exists());
    let manifest: Value =
        serde_json::from_slice(&fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["complete"], true);
    assert_eq!(manifest["master_seed"], 3);
    assert_eq!(manifest["config_sha256"].as_str().unwrap().len(), 64);
    let scenarios = manifest["scenarios"].as_array().unwrap();
    assert_eq!(scenarios.len(), 2);
    for s in scenarios {
        let dir = out.join(s["dir"].as_str().unwrap());
        let hist = fs::read_to_string(dir.join("hist_hts-dl-tk2.csv")).unwrap();
        let total: u64 = hist
            .lines()
            .skip(1)
            .map(|l| l.rsplit(',').next().unwrap().parse::<u64>().unwrap())
            .sum();
        assert_eq!(total, 10);
        let summary = fs::read_to_string(dir.join("summary.csv")).unwrap();
        assert_eq!(summary.lines().count(), 8);
        assert!(dir.join("records.csv.gz").exists());
    }
}

#[test]
fn simulate_is_independent_of_job_count() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.json", SMALL);
    let mut dirs = Vec::new();
    for jobs in ["1", "8"] {
        let out = tmp.path().join(format!("j{jobs}"));
        let o = pilab(&[
            "simulate",
            "--config",
            &cfg,
            "--out-dir",
            out.to_str().unwrap(),
            "--jobs",
            jobs,
        ]);
        assert!(o.status.success());
        dirs.push(out);
    }
    let manifest: Value =
        serde_json::from_slice(&fs::read(dirs[0].join("manifest.json")).unwrap()).unwrap();
    for s in manifest["scenarios"].as_array().unwrap() {
        let d = s["dir"].as_str().unwrap();
        for f in ["summary.csv", "hist_bootstrap.csv", "hist_ensemble.csv"] {
            assert_eq!(
                fs::read(dirs[0].join(d).join(f)).unwrap(),
                fs::read(dirs[1].join(d).join(f)).unwrap(),
                "{d}/{f}"
            );
        }
    }
}

#[test]
fn seed_override_changes_results() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "c.json",
        r#"{"K":[4],"N":[50],"tau2":[0.5],"dist":["normal"],"reps":10,"methods":["hts-dl-z"]}"#,
    );
    let read = |seed: &str| {
        let out = tmp.path().join(format!("s{seed}"));
        let o = pilab(&[
            "simulate",
            "--config",
            &cfg,
            "--out-dir",
            out.to_str().unwrap(),
            "--seed",
            seed,
        ]);
        assert!(o.status.success());
        fs::read(out.join("s0_K4_N50_t20.5_normal").join("summary.csv")).unwrap()
    };
    assert_ne!(read("1"), read("2"));
}

#[test]
fn config_errors_list_every_problem() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "bad.json",
        r#"{"K":[2],"N":[31],"alpha":1.5,"colour":"red"}"#,
    );
    let out = tmp.path().join("out");
    let o = pilab(&[
        "simulate",
        "--config",
        &cfg,
        "--out-dir",
        out.to_str().unwrap(),
    ]);
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("colour"), "{err}");
    assert!(!out.exists());
    let o = pilab(&["grid", "--config", &cfg]);
    assert!(!o.status.success());
}

#[test]
fn grid_print_lists_default_scenarios() {
    let o = pilab(&["grid", "--print"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 1 + 3024);
    assert_eq!(lines[0], "index,K,N,tau2,mu,dist,dir");
    assert!(lines[1].starts_with("0,"));
    assert!(lines[3024].starts_with("3023,"));
    let o = pilab(&["grid"]);
    assert_eq!(
        String::from_utf8(o.stdout).unwrap().trim(),
        "3024 scenarios"
    );
}
