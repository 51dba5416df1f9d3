use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const HEISENBERG_SPEC: &str = "\
name heisenberg-file
dim 3
rank 2
beta 1 1 = 1
beta 2 2 = 1
beta 1 3 = -x2/2
beta 2 3 = x1/2
beta 3 3 = (x1^2 + x2^2)/4
g 1 1 = 1 + x2^2/4
g 1 2 = -x1*x2/4
g 1 3 = x2/2
g 2 2 = 1 + x1^2/4
g 2 3 = -x1/2
g 3 3 = 1
sample 0 0 0
sample 1 2 5
";

/// Heisenberg cometric with an identity metric: not compatible off the z-axis.
const BROKEN_SPEC: &str = "\
name broken
dim 3
rank 2
beta 1 1 = 1
beta 2 2 = 1
beta 1 3 = -x2/2
beta 2 3 = x1/2
beta 3 3 = (x1^2 + x2^2)/4
g 1 1 = 1
g 2 2 = 1
g 3 3 = 1
sample 0.5 1 0
";

fn subwalk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_subwalk"))
        .args(args)
        .output()
        .expect("run subwalk")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn assert_exit(o: &Output, code: i32) {
    assert_eq!(
        o.status.code(),
        Some(code),
        "stdout:\n{}\nstderr:\n{}",
        stdout(o),
        String::from_utf8_lossy(&o.stderr)
    );
}

/// Data rows of a CSV output as maps from column name to cell.
fn csv_rows(text: &str) -> Vec<std::collections::HashMap<String, String>> {
    let body: String = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| format!("{l}\n"))
        .collect();
    let mut r = csv::Reader::from_reader(body.as_bytes());
    let headers = r.headers().unwrap().clone();
    r.records()
        .map(|rec| {
            let rec = rec.unwrap();
            headers
                .iter()
                .zip(rec.iter())
                .map(|(h, v)| (h.to_string(), v.to_string()))
                .collect()
        })
        .collect()
}

fn f(row: &std::collections::HashMap<String, String>, key: &str) -> f64 {
    row[key]
        .parse()
        .unwrap_or_else(|_| panic!("{key} = {:?}", row[key]))
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p
}

fn schema() -> jsonschema::Validator {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schemas/output.schema.json");
    let schema: Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    jsonschema::validator_for(&schema).expect("valid schema")
}

fn assert_valid(doc: &Value) {
    let v = schema();
    let errors: Vec<String> = v
        .iter_errors(doc)
        .map(|e| format!("{} at {}", e, e.instance_path))
        .collect();
    assert!(errors.is_empty(), "{errors:#?}");
}

#[test]
fn verify_builtin_models_pass() {
    let o = subwalk(&[
        "verify",
        "--model",
        "heisenberg",
        "--lambda",
        "1",
        "--points",
        "3",
        "--samples",
        "20000",
    ]);
    assert_exit(&o, 0);
    let rows = csv_rows(&stdout(&o));
    assert!(rows.iter().all(|r| r["pass"] == "true"));
    for check in [
        "compatibility",
        "gbg-diagonal",
        "christoffel-horizontal",
        "lambda-independence",
        "sphere-moments",
    ] {
        assert!(rows.iter().any(|r| r["check"] == check), "missing {check}");
    }
    let o = subwalk(&[
        "verify",
        "--model",
        "euclidean",
        "--dim",
        "3",
        "--points",
        "3",
        "--samples",
        "20000",
    ]);
    assert_exit(&o, 0);
}

#[test]
fn verify_broken_spec_fails_on_compatibility() {
    let dir = TempDir::new().unwrap();
    let spec = write(&dir, "broken.spec", BROKEN_SPEC);
    let o = subwalk(&[
        "verify",
        "--model-file",
        spec.to_str().unwrap(),
        "--samples",
        "5000",
        "--format",
        "json",
    ]);
    assert_exit(&o, 1);
    let doc: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_valid(&doc);
    let compat = doc["result"]["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["check"] == "compatibility")
        .unwrap();
    assert_eq!(compat["pass"], false);
    assert!(String::from_utf8_lossy(&o.stderr).contains("compatibility"));
}

#[test]
fn verify_accepts_a_compatible_spec_file() {
    let dir = TempDir::new().unwrap();
    let spec = write(&dir, "h.spec", HEISENBERG_SPEC);
    let o = subwalk(&[
        "verify",
        "--model-file",
        spec.to_str().unwrap(),
        "--samples",
        "20000",
    ]);
    assert_exit(&o, 0);
}

#[test]
fn laplacian_examples() {
    let o = subwalk(&[
        "laplacian",
        "--f",
        "xsq",
        "--point",
        "0.3,-1.2,7",
        "--samples",
        "50000",
    ]);
    assert_exit(&o, 0);
    let row = &csv_rows(&stdout(&o))[0];
    assert_eq!(f(row, "local"), 1.0);
    assert!((f(row, "sphere_mean") - 1.0).abs() <= 4.0 * f(row, "sphere_stderr"));

    let o = subwalk(&[
        "laplacian",
        "--f",
        "z",
        "--point",
        "0.4,-0.7,2",
        "--point",
        "-1,1,0",
        "--samples",
        "20000",
    ]);
    assert_exit(&o, 0);
    for row in csv_rows(&stdout(&o)) {
        assert!(f(&row, "local").abs() < 1e-12);
        assert!(f(&row, "sphere_mean").abs() <= 4.0 * f(&row, "sphere_stderr") + 1e-12);
    }

    let o = subwalk(&[
        "laplacian",
        "--model",
        "euclidean",
        "--dim",
        "3",
        "--f",
        "normsq",
        "--point",
        "1,2,3",
    ]);
    assert_exit(&o, 0);
    let row = &csv_rows(&stdout(&o))[0];
    assert!((f(row, "local") - 2.0).abs() < 1e-12);
    assert!((f(row, "sphere_mean") - 2.0).abs() < 1e-12);

    let o = subwalk(&[
        "laplacian",
        "--f-expr",
        "x1^2 + sin(x3)",
        "--point",
        "0,0,0",
        "--samples",
        "1000",
    ]);
    assert_exit(&o, 0);
}

#[test]
fn flow_traces() {
    let o = subwalk(&[
        "flow",
        "--model",
        "euclidean",
        "--dim",
        "2",
        "--point",
        "1,-1",
        "--momentum",
        "0.5,2",
        "--t",
        "1",
        "--step",
        "0.25",
    ]);
    assert_exit(&o, 0);
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 5);
    for r in &rows {
        let t = f(r, "t");
        assert!((f(r, "q1") - (1.0 + 0.5 * t)).abs() < 1e-14);
        assert!((f(r, "q2") - (-1.0 + 2.0 * t)).abs() < 1e-14);
    }

    let o = subwalk(&[
        "flow",
        "--point",
        "0.2,0.1,-0.3",
        "--momentum",
        "1,-0.5,1.7",
        "--t",
        "2",
        "--step",
        "1e-3",
    ]);
    assert_exit(&o, 0);
    let rows = csv_rows(&stdout(&o));
    let h0 = f(&rows[0], "H");
    assert!(rows.iter().all(|r| (f(r, "H") - h0).abs() <= 1e-9));

    let o = subwalk(&[
        "flow",
        "--point",
        "0.2,0.1,-0.3",
        "--momentum",
        "1,-0.5,1.7",
        "--t",
        "2",
        "--step",
        "1e-4",
        "--compare-exact",
    ]);
    assert_exit(&o, 0);
    assert!(csv_rows(&stdout(&o))
        .iter()
        .all(|r| f(r, "exact_diff") <= 1e-6));

    // A tolerance no integrator meets is reported as a verification failure.
    let o = subwalk(&[
        "flow",
        "--point",
        "0,0,0",
        "--momentum",
        "1,0,0.5",
        "--t",
        "2",
        "--step",
        "0.1",
        "--compare-exact",
        "--tolerance",
        "1e-12",
    ]);
    assert_exit(&o, 1);
}

#[test]
fn flow_compare_exact_needs_a_closed_form() {
    let dir = TempDir::new().unwrap();
    let spec = write(&dir, "h.spec", HEISENBERG_SPEC);
    let o = subwalk(&[
        "flow",
        "--model-file",
        spec.to_str().unwrap(),
        "--point",
        "0,0,0",
        "--momentum",
        "1,0,0",
        "--compare-exact",
    ]);
    assert_exit(&o, 2);
}

#[test]
fn walk_outputs() {
    let args = [
        "walk",
        "--epsilon",
        "0.3",
        "--t",
        "1",
        "--n-paths",
        "3",
        "--seed",
        "11",
    ];
    let a = subwalk(&args);
    let b = subwalk(&args);
    assert_exit(&a, 0);
    assert_eq!(a.stdout, b.stdout);
    let rows = csv_rows(&stdout(&a));
    // Every leg starts on the unit cosphere: H = ½ pᵀBp = ½, so legs run at speed ε.
    for r in &rows {
        let (x, y) = (f(r, "q1"), f(r, "q2"));
        let (p1, p2, p3) = (f(r, "p1"), f(r, "p2"), f(r, "p3"));
        let (a, b) = (p1 - y * p3 / 2.0, p2 + x * p3 / 2.0);
        assert!((a * a + b * b - 1.0).abs() < 1e-12, "{r:?}");
    }
    assert_eq!(rows.iter().filter(|r| r["kind"] == "end").count(), 3);

    let o = subwalk(&[
        "walk",
        "--epsilon",
        "0.2",
        "--t",
        "1",
        "--n-paths",
        "2000",
        "--seed",
        "5",
    ]);
    assert_exit(&o, 0);
    let rows = csv_rows(&stdout(&o));
    let starts = rows.iter().filter(|r| r["kind"] == "start").count() as f64;
    // Legs per walk: 1 + Poisson(horizon) with horizon = t/ε² = 25.
    let mean = starts / 2000.0;
    assert!(
        (mean - 26.0).abs() <= 4.0 * (25.0f64 / 2000.0).sqrt(),
        "{mean}"
    );
}

#[test]
fn converge_references() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("e.csv");
    let o = subwalk(&[
        "converge",
        "--model",
        "euclidean",
        "--dim",
        "3",
        "--f",
        "x1sq",
        "--eps-list",
        "0.5,0.25",
        "--n-paths",
        "2000",
        "--out",
        out.to_str().unwrap(),
    ]);
    // `x1sq` is not a built-in name.
    assert_exit(&o, 2);

    let o = subwalk(&[
        "converge",
        "--model",
        "euclidean",
        "--dim",
        "3",
        "--f",
        "xsq",
        "--eps-list",
        "0.5,0.25",
        "--n-paths",
        "4000",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_exit(&o, 0);
    let rows = csv_rows(&fs::read_to_string(&out).unwrap());
    assert_eq!(rows.len(), 2);
    for r in &rows {
        assert_eq!(r["provenance"], "analytic");
        assert!((f(r, "reference") - 2.0 / 3.0).abs() < 1e-15);
        // At finite ε the walk has mean (2ε²/d)(N - 1 + e^{-N}) with N = t/ε².
        let eps = f(r, "epsilon");
        let n = 1.0 / (eps * eps);
        let exact = 2.0 * eps * eps / 3.0 * (n - 1.0 + (-n).exp());
        assert!(
            (f(r, "estimate") - exact).abs() <= 4.0 * f(r, "stderr"),
            "{r:?}"
        );
    }
    let summary: Value =
        serde_json::from_str(&fs::read_to_string(out.with_extension("json")).unwrap()).unwrap();
    assert_valid(&summary);
    assert_eq!(summary["result"]["rows"].as_array().unwrap().len(), 2);

    let o = subwalk(&[
        "converge",
        "--f",
        "xsq",
        "--eps-list",
        "0.4,0.2",
        "--n-paths",
        "2000",
        "--oracle-paths",
        "5000",
        "--oracle-dt",
        "1e-2",
    ]);
    assert_exit(&o, 0);
    let rows = csv_rows(&stdout(&o));
    assert!(rows.iter().all(|r| r["provenance"] == "sde-oracle"));
    assert!((f(&rows[0], "reference") - 1.0).abs() < 0.1);
}

#[test]
fn converge_usage_errors() {
    assert_exit(&subwalk(&["converge", "--eps-list", ""]), 2);
    assert_exit(&subwalk(&["converge", "--eps-list", "0.1,0.2"]), 2);
    assert_exit(&subwalk(&["converge", "--eps-list", "0.1,-0.05"]), 2);
    assert_exit(
        &subwalk(&["converge", "--epsilon", "0.1", "--eps-list", "0.2"]),
        2,
    );
    assert_exit(&subwalk(&["converge", "--n-paths", "1"]), 2);
}

#[test]
fn converge_uses_a_given_oracle_report() {
    let dir = TempDir::new().unwrap();
    let oracle = dir.path().join("oracle.json");
    let o = subwalk(&[
        "oracle",
        "--n-paths",
        "4000",
        "--step",
        "1e-2",
        "--out",
        oracle.to_str().unwrap(),
    ]);
    assert_exit(&o, 0);
    let report: Value = serde_json::from_str(&fs::read_to_string(&oracle).unwrap()).unwrap();
    let o = subwalk(&[
        "converge",
        "--f",
        "ysq",
        "--eps-list",
        "0.5",
        "--n-paths",
        "500",
        "--reference",
        oracle.to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert_exit(&o, 0);
    let doc: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_valid(&doc);
    assert_eq!(
        doc["result"]["reference"]["value"],
        report["result"]["y_sq"]["mean"]
    );

    let o = subwalk(&[
        "converge",
        "--f",
        "quartic",
        "--reference",
        oracle.to_str().unwrap(),
    ]);
    assert_exit(&o, 2);
}

#[test]
fn oracle_moments() {
    let o = subwalk(&[
        "oracle",
        "--n-paths",
        "20000",
        "--step",
        "1e-3",
        "--seed",
        "3",
    ]);
    assert_exit(&o, 0);
    let doc: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_valid(&doc);
    let r = &doc["result"];
    let get = |k: &str, field: &str| r[k][field].as_f64().unwrap();
    assert!((get("x_sq", "mean") - 1.0).abs() <= 4.0 * get("x_sq", "stderr"));
    assert!(get("z_mean", "mean").abs() <= 4.0 * get("z_mean", "stderr"));
    assert!((get("z_var", "value") - 0.25).abs() <= 4.0 * get("z_var", "stderr") + 0.25e-3);
    assert_eq!(doc["seed"], 3);
}

#[test]
fn every_json_output_matches_the_schema() {
    let runs: [&[&str]; 5] = [
        &[
            "verify",
            "--model",
            "euclidean",
            "--dim",
            "2",
            "--points",
            "2",
            "--samples",
            "1000",
            "--format",
            "json",
        ],
        &[
            "laplacian",
            "--point",
            "1,2,3",
            "--samples",
            "1000",
            "--format",
            "json",
        ],
        &[
            "flow",
            "--point",
            "0,0,0",
            "--momentum",
            "1,0,1",
            "--t",
            "0.1",
            "--step",
            "0.05",
            "--compare-exact",
            "--format",
            "json",
        ],
        &[
            "walk",
            "--epsilon",
            "0.5",
            "--n-paths",
            "2",
            "--format",
            "json",
        ],
        &[
            "converge",
            "--eps-list",
            "0.5",
            "--n-paths",
            "100",
            "--no-reference",
            "--leg-mode",
            "rk4",
            "--format",
            "json",
        ],
    ];
    for args in runs {
        let o = subwalk(args);
        assert_exit(&o, 0);
        let doc: Value = serde_json::from_str(&stdout(&o)).unwrap();
        assert_valid(&doc);
        assert_eq!(doc["tool"], "subwalk");
        assert_eq!(doc["version"], env!("CARGO_PKG_VERSION"));
        assert_eq!(doc["config"]["command"], args[0]);
    }
}

#[test]
fn schema_rejects_malformed_documents() {
    let o = subwalk(&["walk", "--n-paths", "1", "--format", "json"]);
    let doc: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let v = schema();
    assert!(v.is_valid(&doc));
    let mut extra = doc.clone();
    extra["result"]["surprise"] = Value::Bool(true);
    assert!(!v.is_valid(&extra));
    let mut wrong = doc.clone();
    wrong["command"] = Value::String("flow".into());
    assert!(!v.is_valid(&wrong));
    let mut missing = doc;
    missing.as_object_mut().unwrap().remove("seed");
    assert!(!v.is_valid(&missing));
}

#[test]
fn replay_reproduces_payloads() {
    let dir = TempDir::new().unwrap();
    let runs: [(&str, &[&str]); 4] = [
        (
            "c.csv",
            &[
                "converge",
                "--eps-list",
                "0.3,0.2",
                "--n-paths",
                "500",
                "--oracle-paths",
                "500",
                "--oracle-dt",
                "0.01",
                "--seed",
                "4",
            ],
        ),
        (
            "w.json",
            &[
                "walk",
                "--epsilon",
                "0.4",
                "--n-paths",
                "3",
                "--format",
                "json",
                "--seed",
                "8",
            ],
        ),
        (
            "l.csv",
            &[
                "laplacian",
                "--point",
                "0.1,0.2,0.3",
                "--f",
                "quartic",
                "--samples",
                "2000",
            ],
        ),
        (
            "o.json",
            &[
                "oracle",
                "--n-paths",
                "1000",
                "--step",
                "0.01",
                "--workers",
                "2",
            ],
        ),
    ];
    for (name, args) in runs {
        let path = dir.path().join(name);
        let mut full: Vec<&str> = args.to_vec();
        full.extend(["--out", path.to_str().unwrap()]);
        assert_exit(&subwalk(&full), 0);
        for workers in ["1", "2", "8"] {
            let again = dir.path().join(format!("again-{workers}-{name}"));
            let o = subwalk(&[
                "replay",
                path.to_str().unwrap(),
                "--workers",
                workers,
                "--out",
                again.to_str().unwrap(),
            ]);
            assert_exit(&o, 0);
            if name.ends_with(".csv") {
                let strip = |p: &Path| -> String {
                    fs::read_to_string(p)
                        .unwrap()
                        .lines()
                        .filter(|l| !l.starts_with("# config"))
                        .collect::<Vec<_>>()
                        .join("\n")
                };
                assert_eq!(strip(&path), strip(&again));
            }
        }
    }

    // A tampered payload no longer replays.
    let path = dir.path().join("l.csv");
    let text = fs::read_to_string(&path).unwrap();
    let last = text.trim_end().rsplit_once(',').unwrap().0.to_string() + ",0.5\n";
    let tampered = write(&dir, "tampered.csv", &last);
    assert_exit(&subwalk(&["replay", tampered.to_str().unwrap()]), 1);
    let junk = write(&dir, "junk.csv", "a,b\n1,2\n");
    assert_exit(&subwalk(&["replay", junk.to_str().unwrap()]), 2);
}

#[test]
fn usage_and_model_errors() {
    assert_exit(
        &subwalk(&["laplacian", "--f", "nope", "--point", "0,0,0"]),
        2,
    );
    assert_exit(
        &subwalk(&["laplacian", "--f-expr", "x1 +", "--point", "0,0,0"]),
        2,
    );
    assert_exit(
        &subwalk(&["laplacian", "--f-expr", "x4", "--point", "0,0,0"]),
        2,
    );
    assert_exit(&subwalk(&["laplacian", "--point", "0,zero,0"]), 2);
    assert_exit(&subwalk(&["laplacian"]), 2);
    assert_exit(&subwalk(&["walk", "--epsilon", "0"]), 2);
    assert_exit(&subwalk(&["walk", "--lambda", "-1"]), 2);
    assert_exit(&subwalk(&["frobnicate"]), 2);
    assert_exit(
        &subwalk(&["verify", "--model-file", "/nonexistent/model.spec"]),
        3,
    );

    let dir = TempDir::new().unwrap();
    let bad = write(&dir, "bad.spec", "dim 3\nrank 2\nbeta 1 1 = (\n");
    assert_exit(
        &subwalk(&["verify", "--model-file", bad.to_str().unwrap()]),
        3,
    );
    let broken = write(&dir, "broken.spec", BROKEN_SPEC);
    assert_exit(
        &subwalk(&["walk", "--model-file", broken.to_str().unwrap()]),
        3,
    );
    assert_exit(&subwalk(&["--version"]), 0);
}
