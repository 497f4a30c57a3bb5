use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_neutral-decorr"));
    c.env_remove("NEUTRAL_DECORR_THREADS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_csv(p: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = fs::read_to_string(p).unwrap();
    let mut lines = text.lines();
    let header = lines
        .next()
        .unwrap()
        .split(',')
        .map(str::to_string)
        .collect();
    let rows = lines
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect();
    (header, rows)
}

fn numbers(rows: &[Vec<String>]) -> Vec<Vec<f64>> {
    rows.iter()
        .map(|r| r.iter().map(|v| v.parse().unwrap()).collect())
        .collect()
}

fn generate(dir: &TempDir, name: &str, args: &[&str]) -> PathBuf {
    let out = dir.path().join(name);
    let mut full = vec!["generate"];
    full.extend_from_slice(args);
    full.extend_from_slice(&["--out", path_str(&out)]);
    let o = run(&full);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    out
}

fn transform(dir: &TempDir, input: &Path, method: &str) -> PathBuf {
    let out = dir.path().join(format!("{method}.csv"));
    let o = run(&[
        "transform",
        "--input",
        path_str(input),
        "--method",
        method,
        "--out",
        path_str(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    out
}

#[test]
fn generate_dirichlet_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let a = generate(
        &dir,
        "a.csv",
        &["--alpha", "2,5,6,3,7", "--n", "800", "--seed", "7"],
    );
    let b = generate(
        &dir,
        "b.csv",
        &["--alpha", "2,5,6,3,7", "--n", "800", "--seed", "7"],
    );
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let (header, rows) = read_csv(&a);
    assert_eq!(header, vec!["x1", "x2", "x3", "x4", "x5"]);
    assert_eq!(rows.len(), 800);
    for r in numbers(&rows) {
        assert!((r.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
    let c = generate(
        &dir,
        "c.csv",
        &["--alpha", "2,5,6,3,7", "--n", "800", "--seed", "8"],
    );
    assert_ne!(fs::read(&a).unwrap(), fs::read(&c).unwrap());
}

#[test]
fn generate_mixture_adds_labels() {
    let dir = TempDir::new().unwrap();
    let p = generate(
        &dir,
        "m.csv",
        &[
            "--mixture",
            "0.3:2,5,6,3,7;0.7:10,2,8,2,18",
            "--n",
            "800",
            "--seed",
            "3",
        ],
    );
    let (header, rows) = read_csv(&p);
    assert_eq!(header.last().unwrap(), "label");
    let ones = rows.iter().filter(|r| r[5] == "1").count();
    let twos = rows.iter().filter(|r| r[5] == "2").count();
    assert_eq!(ones + twos, 800);
    // binomial(800, 0.3): mean 240, sd ~13
    assert!((180..300).contains(&ones), "{ones}");
}

#[test]
fn pnt_round_trip_and_fpnt_agreement() {
    let dir = TempDir::new().unwrap();
    let x = generate(
        &dir,
        "x.csv",
        &["--alpha", "2,5,6,3,7", "--n", "200", "--seed", "1"],
    );
    let u = transform(&dir, &x, "pnt");
    let (uh, urows) = read_csv(&u);
    assert_eq!(uh, vec!["u1", "u2", "u3", "u4"]);
    assert_eq!(urows[0].len(), 4);

    // the final PNT coordinate is a node mass, FPNT's is a ratio: equal up to rounding
    let f = transform(&dir, &x, "fpnt");
    let (fh, frows) = read_csv(&f);
    assert_eq!(fh, uh);
    for (a, b) in numbers(&urows).iter().zip(numbers(&frows)) {
        for (p, q) in a.iter().zip(&b) {
            assert!((p - q).abs() <= 1e-15);
        }
    }

    let back = transform(&dir, &u, "pnt-inv");
    let (bh, brows) = read_csv(&back);
    assert_eq!(bh.len(), 5);
    let (_, xrows) = read_csv(&x);
    for (a, b) in numbers(&xrows).iter().zip(numbers(&brows)) {
        for (p, q) in a.iter().zip(&b) {
            assert!((p - q).abs() < 1e-9);
        }
    }
}

#[test]
fn snt_round_trip_keeps_labels() {
    let dir = TempDir::new().unwrap();
    let x = generate(
        &dir,
        "x.csv",
        &[
            "--mixture",
            "0.5:1,2,3;0.5:3,2,1",
            "--n",
            "50",
            "--seed",
            "2",
        ],
    );
    let u = transform(&dir, &x, "snt");
    let back = transform(&dir, &u, "snt-inv");
    let (xh, xrows) = read_csv(&x);
    let (bh, brows) = read_csv(&back);
    assert_eq!(xh, bh);
    for (a, b) in xrows.iter().zip(&brows) {
        assert_eq!(a[3], b[3]);
        for k in 0..3 {
            let (p, q): (f64, f64) = (a[k].parse().unwrap(), b[k].parse().unwrap());
            assert!((p - q).abs() < 1e-12);
        }
    }
}

#[test]
fn unnormalized_rows_warn_and_bad_rows_fail() {
    let dir = TempDir::new().unwrap();
    let p = dir.path().join("raw.csv");
    fs::write(&p, "a,b,c\n1,2,1\n0.25,0.25,0.5\n").unwrap();
    let out = dir.path().join("u.csv");
    let o = run(&[
        "transform",
        "--input",
        path_str(&p),
        "--method",
        "snt",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(code(&o), 0);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("row 2") && !err.contains("row 3"), "{err}");
    let (_, rows) = read_csv(&out);
    assert_eq!(numbers(&rows)[0], vec![0.25, 2.0 / 3.0]);

    fs::write(&p, "a,b,c\n1,-2,1\n").unwrap();
    let o = run(&[
        "transform",
        "--input",
        path_str(&p),
        "--method",
        "pnt",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(code(&o), 2);

    // inverse of a 3-column file needs values in (0, 1)
    fs::write(&p, "u1,u2\n0.5,1.5\n").unwrap();
    let o = run(&[
        "transform",
        "--input",
        path_str(&p),
        "--method",
        "pnt-inv",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(code(&o), 2);
}

#[test]
fn dctest_report_schema_and_duplicate_column() {
    let dir = TempDir::new().unwrap();
    let p = dir.path().join("dup.csv");
    let mut text = String::from("a,b,c\n");
    for i in 0..60 {
        let v = ((i * 37) % 61) as f64 / 61.0;
        let w = ((i * 13) % 59) as f64 / 59.0;
        text.push_str(&format!("{v},{v},{w}\n"));
    }
    fs::write(&p, text).unwrap();
    let json = dir.path().join("r.json");
    let o = run(&[
        "dctest",
        "--input",
        path_str(&p),
        "--n-perm",
        "200",
        "--seed",
        "4",
        "--json-out",
        path_str(&json),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_slice(&fs::read(&json).unwrap()).unwrap();
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["n_perm"], 200);
    assert_eq!(v["seed"], 4);
    assert_eq!(v["alpha_level"], 0.05);
    assert_eq!(v["n_samples"], 60);
    assert_eq!(v["columns"], serde_json::json!(["a", "b", "c"]));
    assert_eq!(v["dcor"][0][1], 1.0);
    assert_eq!(v["pvalue"][0][1], 0.0);
    let ic = v["independence_coefficient"].as_f64().unwrap();
    assert!((0.0..=2.0 / 3.0).contains(&ic));
}

#[test]
fn dctest_rejects_tiny_inputs() {
    let dir = TempDir::new().unwrap();
    let p = dir.path().join("tiny.csv");
    fs::write(&p, "a,b\n0.1,0.2\n0.3,0.1\n0.5,0.9\n").unwrap();
    let o = run(&["dctest", "--input", path_str(&p)]);
    assert_eq!(code(&o), 2);
}

#[test]
fn pnt_coordinates_are_mostly_independent() {
    let dir = TempDir::new().unwrap();
    let mut full = 0;
    for seed in 0..5 {
        let x = generate(
            &dir,
            "x.csv",
            &[
                "--alpha",
                "2,5,6,3,7",
                "--n",
                "800",
                "--seed",
                &seed.to_string(),
            ],
        );
        let u = transform(&dir, &x, "pnt");
        let o = run(&[
            "dctest",
            "--input",
            path_str(&u),
            "--n-perm",
            "500",
            "--seed",
            &seed.to_string(),
        ]);
        assert_eq!(code(&o), 0);
        let v: Value = serde_json::from_slice(&o.stdout).unwrap();
        if v["independence_coefficient"] == 1.0 {
            full += 1;
        }
    }
    assert!(full >= 3, "IC = 1 in {full}/5 seeds");
}

#[test]
fn thread_count_does_not_change_results() {
    let dir = TempDir::new().unwrap();
    let x = generate(
        &dir,
        "x.csv",
        &["--alpha", "1,2,3,4", "--n", "100", "--seed", "5"],
    );
    let args = [
        "dctest",
        "--input",
        path_str(&x),
        "--n-perm",
        "200",
        "--seed",
        "9",
    ];
    let one = bin()
        .args(args)
        .env("NEUTRAL_DECORR_THREADS", "1")
        .output()
        .unwrap();
    let auto = bin()
        .args(args)
        .env("NEUTRAL_DECORR_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(code(&one), 0);
    assert_eq!(one.stdout, auto.stdout);
    let bad = bin()
        .args(args)
        .env("NEUTRAL_DECORR_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(code(&bad), 1);
}

#[test]
fn experiment_table1_report() {
    let dir = TempDir::new().unwrap();
    let json = dir.path().join("t1.json");
    let o = run(&[
        "experiment",
        "table1",
        "--rounds",
        "4",
        "--n",
        "200",
        "--n-perm",
        "200",
        "--seed",
        "1",
        "--json-out",
        path_str(&json),
    ]);
    let v: Value = serde_json::from_slice(&fs::read(&json).unwrap()).unwrap();
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["scenario"], "table1");
    let conditions = v["conditions"].as_array().unwrap();
    assert_eq!(conditions.len(), 3);
    assert_eq!(
        conditions[0]["per_round_pvalue"].as_array().unwrap().len(),
        4
    );
    let passed = v["passed"].as_bool().unwrap();
    assert_eq!(code(&o), if passed { 0 } else { 3 });
    assert_eq!(v["flags"].as_array().unwrap().len(), 3);
}

#[test]
fn experiment_table2_flags() {
    let o = run(&[
        "experiment",
        "table2",
        "--n",
        "800",
        "--rounds",
        "20",
        "--n-perm",
        "300",
    ]);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let flags = v["flags"].as_array().unwrap();
    let flag = |name: &str| {
        flags.iter().find(|f| f["name"] == name).unwrap()["passed"]
            .as_bool()
            .unwrap()
    };
    assert!(flag("whole_pnt_all_dependent"));
    assert!(flags
        .iter()
        .any(|f| f["name"] == "cluster1_pnt_all_independent"));
    assert_eq!(v["conditions"].as_array().unwrap().len(), 4);
}

#[test]
fn experiment_fig4_box_statistics() {
    let o = run(&[
        "experiment",
        "fig4",
        "--rounds",
        "5",
        "--dofs",
        "4,5",
        "--n-mc",
        "10000",
        "--entropy-unit",
        "nats",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let rows = v["fig4"]["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    for row in rows {
        assert_eq!(row["gains"].as_array().unwrap().len(), 5);
        assert!(row["stats"]["q1"].as_f64().unwrap() <= row["stats"]["median"].as_f64().unwrap());
        assert!(row["stats"]["mean"].as_f64().unwrap() > 1.0);
    }
}

#[test]
fn usage_and_data_exit_codes() {
    assert_eq!(code(&run(&["--help"])), 0);
    assert_eq!(code(&run(&["--version"])), 0);
    assert_eq!(code(&run(&["frobnicate"])), 1);
    assert_eq!(code(&run(&["generate", "--n", "5"])), 1);
    assert_eq!(code(&run(&["generate", "--alpha", "2,x", "--n", "5"])), 1);
    assert_eq!(
        code(&run(&[
            "generate",
            "--alpha",
            "2,3",
            "--mixture",
            "1:2,3",
            "--n",
            "5"
        ])),
        1
    );
    assert_eq!(
        code(&run(&[
            "transform",
            "--input",
            "/nonexistent.csv",
            "--method",
            "pnt"
        ])),
        2
    );
    assert_eq!(code(&run(&["experiment", "table1", "--rounds", "0"])), 1);
    let dir = TempDir::new().unwrap();
    let x = generate(&dir, "x.csv", &["--alpha", "1,1,1", "--n", "10"]);
    assert_eq!(
        code(&run(&["dctest", "--input", path_str(&x), "--n-perm", "10"])),
        1
    );
}
