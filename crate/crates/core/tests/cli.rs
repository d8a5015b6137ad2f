#![cfg(feature = "cli")]

use std::fs;
use std::path::Path;

use pmor::cli::{run, EXIT_NUMERICAL, EXIT_OK, EXIT_PARSE, EXIT_USAGE};

fn pmor(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("pmor").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn toy1_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("toy1");
    let data = model.join("data.txt");
    let out = dir.path().join("rom");
    assert_eq!(pmor(&["example", "export", "toy1", s(&model)]).0, EXIT_OK);

    let (code, stdout, stderr) = pmor(&["reduce", "--model", s(&model), "--data", s(&data), "--tol", "1e-12", "--out", s(&out)]);
    assert_eq!(code, EXIT_OK, "{stderr}");
    assert!(stdout.contains("ExactTermination at degree 2"), "{stdout}");
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["v"]["stop_reason"], "ExactTermination");
    assert_eq!(report["v"]["degrees_computed"], 2);
    assert_eq!(report["w"]["degrees_computed"], 1);
    assert!(report["wall_time_s"].as_f64().unwrap() >= 0.0);
    assert!(out.join("basis/V.mseries").exists() && out.join("basis/W.mseries").exists());

    let (code, stdout, _) = pmor(&[
        "verify", "--bundle", s(&out), "--model", s(&model), "--data", s(&data), "--p", "lin:0:1:4", "--max-residual", "1e-12",
    ]);
    assert_eq!(code, EXIT_OK);
    let report: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(report["records"].as_array().unwrap().len(), 16);

    let (code, stdout, _) = pmor(&["eval", "--bundle", s(&out), "--model", s(&model), "--fix-s", "0", "--fix-p", "0"]);
    assert_eq!(code, EXIT_OK);
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0], "s_real,s_imag,p_1,abs_err,rel_err");
}

#[test]
fn huge_tolerance_gives_constant_rom() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("toy2");
    pmor(&["example", "export", "toy2", s(&model)]);
    let out = dir.path().join("rom");
    let (code, _, _) = pmor(&["reduce", "--model", s(&model), "--data", s(&model.join("data.txt")), "--tol", "1e300", "--out", s(&out)]);
    assert_eq!(code, EXIT_OK);
    let bundle = pmor::io::read_bundle(&out).unwrap();
    // A(p) has a linear term, so Â keeps degree 1 even with a constant V
    assert!(bundle.ahat.iter().all(|(i, _)| i.degree() <= 1));
    assert!(bundle.bhat.iter().all(|(i, _)| i.degree() == 0));
    let basis = pmor::io::read_basis(&out.join("basis")).unwrap();
    assert_eq!(basis.v.len(), 1);
}

#[test]
fn eval_writes_magnitudes_and_errors_files() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("toy2");
    let data = model.join("data.txt");
    pmor(&["example", "export", "toy2", s(&model)]);
    let out = dir.path().join("rom");
    pmor(&["reduce", "--model", s(&model), "--data", s(&data), "--tol", "1e-5", "--out", s(&out)]);
    let errs = dir.path().join("errors.csv");
    let (code, _, stderr) = pmor(&[
        "eval", "--bundle", s(&out), "--model", s(&model), "--s", "log:1e-2:1e1:7", "--p", "lin:0:1:3", "--out", s(&errs),
    ]);
    assert_eq!(code, EXIT_OK, "{stderr}");
    assert_eq!(fs::read_to_string(&errs).unwrap().lines().count(), 1 + 21);
    let (code, stdout, _) = pmor(&[
        "eval", "--bundle", s(&out), "--model", s(&model), "--s", "log:1e-1:1e1:5", "--imag", "--fix-p", "0.5", "--magnitudes",
    ]);
    assert_eq!(code, EXIT_OK);
    assert!(stdout.starts_with("s_real,s_imag,p_1,abs_h,abs_hhat\n"));
    assert_eq!(stdout.lines().count(), 6);
    // --fix-s index:k follows the shift curve and needs the data file
    let (code, _, _) = pmor(&["eval", "--bundle", s(&out), "--model", s(&model), "--fix-s", "index:2", "--p", "lin:0:1:3"]);
    assert_eq!(code, EXIT_USAGE);
    let (code, stdout, _) = pmor(&[
        "eval", "--bundle", s(&out), "--model", s(&model), "--data", s(&data), "--fix-s", "index:2", "--p", "lin:0:1:3",
    ]);
    assert_eq!(code, EXIT_OK);
    assert!(stdout.lines().skip(1).all(|l| l.starts_with("5.0000000000000000e0,")));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(pmor(&[]).0, EXIT_USAGE);
    assert_eq!(pmor(&["frobnicate"]).0, EXIT_USAGE);
    assert_eq!(pmor(&["--help"]).0, EXIT_OK);
    assert_eq!(pmor(&["example", "list"]).1, "toy1\ntoy2\npenzl\n");

    let model = dir.path().join("toy1");
    let data = model.join("data.txt");
    pmor(&["example", "export", "toy1", s(&model)]);
    let out = dir.path().join("rom");
    assert_eq!(
        pmor(&["reduce", "--model", s(&model), "--data", s(&data), "--tol", "-1", "--out", s(&out)]).0,
        EXIT_USAGE
    );
    assert_eq!(
        pmor(&["eval", "--bundle", s(&out), "--model", s(&model), "--s", "log:0:1:3", "--fix-p", "0"]).0,
        EXIT_USAGE
    );

    let broken = dir.path().join("broken.txt");
    fs::write(&broken, fs::read_to_string(&data).unwrap().replace("section M", "section X")).unwrap();
    let (code, _, stderr) = pmor(&["reduce", "--model", s(&model), "--data", s(&broken), "--out", s(&out)]);
    assert_eq!(code, EXIT_PARSE);
    assert!(stderr.contains("broken.txt") && stderr.contains("section M"), "{stderr}");

    // λ = -1 sits on the spectrum of A = -diag(1, 1, 2)
    let colliding = dir.path().join("collide.txt");
    fs::write(&colliding, fs::read_to_string(&data).unwrap().replacen("1e0+0e0j 0e0+0e0j", "-1e0+0e0j 0e0+0e0j", 1)).unwrap();
    let (code, _, stderr) = pmor(&["reduce", "--model", s(&model), "--data", s(&colliding), "--out", s(&out)]);
    assert_eq!(code, EXIT_NUMERICAL, "{stderr}");
    assert!(stderr.contains("right shift 1"), "{stderr}");
}

#[test]
fn verify_threshold_fails_numerically() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("toy2");
    let data = model.join("data.txt");
    pmor(&["example", "export", "toy2", s(&model)]);
    let out = dir.path().join("rom");
    pmor(&["reduce", "--model", s(&model), "--data", s(&data), "--tol", "1e-2", "--out", s(&out)]);
    let (code, _, stderr) = pmor(&[
        "verify", "--bundle", s(&out), "--model", s(&model), "--data", s(&data), "--p", "lin:0:1:5", "--max-residual", "1e-14",
    ]);
    assert_eq!(code, EXIT_NUMERICAL, "{stderr}");
}
