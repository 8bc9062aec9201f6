//! End-to-end command line checks: exit codes, report determinism, and the
//! construct → verify round trip through real files.

use conformal_cli::{execute, EXIT_INPUT_ERROR, EXIT_OK, EXIT_VERDICT_FAILED};
use std::fs;
use std::path::PathBuf;

fn run(args: &[&str]) -> i32 {
    let mut argv = vec!["conformal"];
    argv.extend_from_slice(args);
    execute(argv)
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("conformal-cli-test-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn construct_and_curvature_round_trip() {
    let metric = tmp("s3.json");
    let report = tmp("curv.json");
    assert_eq!(
        run(&[
            "construct",
            "--kind",
            "space-form",
            "--dim",
            "3",
            "--kappa",
            "1",
            "--out",
            metric.to_str().unwrap()
        ]),
        EXIT_OK
    );
    assert_eq!(
        run(&[
            "curvature",
            "--metric",
            metric.to_str().unwrap(),
            "--samples",
            "10",
            "--out",
            report.to_str().unwrap()
        ]),
        EXIT_OK
    );
    let doc: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(doc["kind"], "curvature");
    let scal = doc["aggregates"]["scal_max"].as_f64().unwrap();
    assert!((scal - 6.0).abs() < 1e-6);
}

#[test]
fn twistor_verdicts_and_exit_codes() {
    let s2 = tmp("s2.json");
    let h2 = tmp("h2.json");
    let h2_fast = tmp("h2f.json");
    let good = tmp("prod.json");
    let bad = tmp("prod_bad.json");
    let form = tmp("vol.json");
    for (kappa, out) in [("1", &s2), ("-1", &h2), ("-2", &h2_fast)] {
        assert_eq!(
            run(&[
                "construct",
                "--kind",
                "space-form",
                "--dim",
                "2",
                "--kappa",
                kappa,
                "--out",
                out.to_str().unwrap()
            ]),
            EXIT_OK
        );
    }
    for (right, out) in [(&h2, &good), (&h2_fast, &bad)] {
        assert_eq!(
            run(&[
                "construct",
                "--kind",
                "product",
                "--left",
                s2.to_str().unwrap(),
                "--right",
                right.to_str().unwrap(),
                "--out",
                out.to_str().unwrap()
            ]),
            EXIT_OK
        );
    }
    fs::write(
        &form,
        r#"{ "degree": 2, "coefficients": { "1,2": "(1/(1 + (x1^2 + x2^2)/4))^2" } }"#,
    )
    .unwrap();

    let rep = tmp("tw.json");
    assert_eq!(
        run(&[
            "twistor-check",
            "--metric",
            good.to_str().unwrap(),
            "--form",
            form.to_str().unwrap(),
            "--samples",
            "15",
            "--out",
            rep.to_str().unwrap()
        ]),
        EXIT_OK
    );
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(&rep).unwrap()).unwrap();
    assert_eq!(doc["verdict"], "normal");

    // wrong scaling: verification fails with exit code 2
    assert_eq!(
        run(&[
            "twistor-check",
            "--metric",
            bad.to_str().unwrap(),
            "--form",
            form.to_str().unwrap(),
            "--samples",
            "15",
            "--out",
            rep.to_str().unwrap()
        ]),
        EXIT_VERDICT_FAILED
    );
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(&rep).unwrap()).unwrap();
    assert_eq!(doc["verdict"], "conformal-only");

    // unreadable input: exit code 1
    assert_eq!(
        run(&[
            "twistor-check",
            "--metric",
            "/nonexistent.json",
            "--form",
            form.to_str().unwrap()
        ]),
        EXIT_INPUT_ERROR
    );
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let metric = tmp("pp.json");
    assert_eq!(
        run(&[
            "construct",
            "--kind",
            "pp-wave",
            "--profile",
            "x1^3",
            "--out",
            metric.to_str().unwrap()
        ]),
        EXIT_OK
    );
    let rep1 = tmp("hol1.json");
    let rep2 = tmp("hol2.json");
    for rep in [&rep1, &rep2] {
        assert_eq!(
            run(&[
                "holonomy",
                "--metric",
                metric.to_str().unwrap(),
                "--samples",
                "8",
                "--loops",
                "6",
                "--steps",
                "24",
                "--seed",
                "3",
                "--out",
                rep.to_str().unwrap()
            ]),
            EXIT_OK
        );
    }
    let a = fs::read(&rep1).unwrap();
    let b = fs::read(&rep2).unwrap();
    assert_eq!(a, b, "identical configs must produce byte-identical reports");
}

#[test]
fn ncfunction_and_ambient_pipelines() {
    let s3 = tmp("s3b.json");
    assert_eq!(
        run(&[
            "construct",
            "--kind",
            "space-form",
            "--dim",
            "3",
            "--kappa",
            "1",
            "--out",
            s3.to_str().unwrap()
        ]),
        EXIT_OK
    );
    // constants are nc-Killing on an Einstein chart
    assert_eq!(
        run(&[
            "ncfunction-check",
            "--metric",
            s3.to_str().unwrap(),
            "--function",
            "1",
            "--samples",
            "10",
            "--out",
            tmp("ncf.json").to_str().unwrap()
        ]),
        EXIT_OK
    );
    // a generic function is not
    assert_eq!(
        run(&[
            "ncfunction-check",
            "--metric",
            s3.to_str().unwrap(),
            "--function",
            "x1^2*x2",
            "--samples",
            "10",
            "--out",
            tmp("ncf2.json").to_str().unwrap()
        ]),
        EXIT_VERDICT_FAILED
    );
    assert_eq!(
        run(&[
            "ambient-compare",
            "--metric",
            s3.to_str().unwrap(),
            "--samples",
            "8",
            "--out",
            tmp("amb.json").to_str().unwrap()
        ]),
        EXIT_OK
    );
}

#[test]
fn lift_cone_pipeline() {
    let s2 = tmp("s2c.json");
    assert_eq!(
        run(&[
            "construct",
            "--kind",
            "space-form",
            "--dim",
            "2",
            "--kappa",
            "1",
            "--out",
            s2.to_str().unwrap()
        ]),
        EXIT_OK
    );
    let form = tmp("killing.json");
    fs::write(
        &form,
        r#"{ "degree": 1, "coefficients": {
            "1": "-(1/(1 + (x1^2 + x2^2)/4))^2*x2",
            "2": "(1/(1 + (x1^2 + x2^2)/4))^2*x1"
        } }"#,
    )
    .unwrap();
    let lifted = tmp("lifted.json");
    assert_eq!(
        run(&[
            "lift-cone",
            "--metric",
            s2.to_str().unwrap(),
            "--form",
            form.to_str().unwrap(),
            "--b",
            "1",
            "--samples",
            "12",
            "--lifted-out",
            lifted.to_str().unwrap(),
            "--out",
            tmp("lift.json").to_str().unwrap()
        ]),
        EXIT_OK
    );
    let doc: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&lifted).unwrap()).unwrap();
    assert_eq!(doc["degree"], 2);

    // mismatched scaling is a precondition error, not a verdict failure
    assert_eq!(
        run(&[
            "lift-cone",
            "--metric",
            s2.to_str().unwrap(),
            "--form",
            form.to_str().unwrap(),
            "--b",
            "2"
        ]),
        EXIT_INPUT_ERROR
    );
}
