use std::fs;

use pmor::error::PmorError;
use pmor::examples::{build, ExampleId};
use pmor::io;
use pmor::rom::build_offline;
use pmor::solver::compute_basis;

#[test]
fn toy_models_and_data_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    for id in [ExampleId::Toy1, ExampleId::Toy2] {
        let ex = build(id);
        let sub = dir.path().join(id.name());
        io::export_example(&ex, &sub).unwrap();
        assert_eq!(io::read_model(&sub).unwrap(), ex.system);
        assert_eq!(io::read_model(&sub.join(io::MODEL_FILE)).unwrap(), ex.system);
        assert_eq!(io::read_data(&sub.join(io::DATA_FILE)).unwrap(), ex.data);
    }
}

#[test]
fn penzl_model_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let ex = build(ExampleId::Penzl);
    io::export_example(&ex, dir.path()).unwrap();
    let back = io::read_model(dir.path()).unwrap();
    assert_eq!(back, ex.system);
    assert_eq!(back.bandwidth(), ex.system.bandwidth());
    assert_eq!(io::read_data(&dir.path().join(io::DATA_FILE)).unwrap(), ex.data);
}

#[test]
fn basis_and_bundle_round_trip_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    for id in [ExampleId::Toy1, ExampleId::Toy2] {
        let ex = build(id);
        let basis = compute_basis(&ex.system, &ex.data, &ex.config).unwrap();
        let sub = dir.path().join(id.name());
        io::write_basis(&basis, &sub).unwrap();
        let back = io::read_basis(&sub).unwrap();
        assert_eq!(back, basis, "{id}");
        let bundle = build_offline(&ex.system, &basis).unwrap();
        let path = sub.join(io::BUNDLE_FILE);
        io::write_bundle_file(&path, &bundle).unwrap();
        assert_eq!(io::read_bundle(&path).unwrap(), bundle);
        assert_eq!(io::read_bundle(&sub).unwrap(), bundle);
    }
}

#[test]
fn one_sided_basis_writes_no_w() {
    let dir = tempfile::tempdir().unwrap();
    let ex = build(ExampleId::Toy2);
    let basis = compute_basis(&ex.system, &ex.data, &ex.config).unwrap();
    io::write_basis(&basis, dir.path()).unwrap();
    assert!(dir.path().join("V.mseries").exists());
    assert!(!dir.path().join("W.mseries").exists());
}

#[test]
fn truncated_bundle_names_missing_section() {
    let ex = build(ExampleId::Toy1);
    let basis = compute_basis(&ex.system, &ex.data, &ex.config).unwrap();
    let text = io::write_bundle(&build_offline(&ex.system, &basis).unwrap());
    let cut = &text[..text.find("section CHAT").unwrap()];
    match io::parse_bundle(cut) {
        Err(PmorError::Parse(e)) => {
            assert_eq!(e.expected, "section CHAT");
            assert_eq!(e.found, "end of file");
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn parse_errors_carry_file_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let ex = build(ExampleId::Toy1);
    io::export_example(&ex, dir.path()).unwrap();
    let a_path = dir.path().join("A.mseries");
    let text = fs::read_to_string(&a_path).unwrap();
    let commented = text.replacen("idx 0", "# constant term\nidx 0", 1);
    fs::write(&a_path, &commented).unwrap();
    assert!(io::read_model(dir.path()).is_ok());
    let line = commented.lines().position(|l| l.starts_with("-1e0+0e0j")).unwrap() + 1;
    fs::write(&a_path, commented.replacen("-1e0+0e0j", "-1e0+0e0jj", 1)).unwrap();
    match io::read_model(dir.path()) {
        Err(PmorError::Parse(e)) => {
            assert_eq!(e.line, line);
            assert_eq!(e.file.as_deref(), Some(a_path.as_path()));
            assert_eq!(e.found, "-1e0+0e0jj");
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn model_header_errors() {
    let dir = tempfile::tempdir().unwrap();
    let ex = build(ExampleId::Toy2);
    io::export_example(&ex, dir.path()).unwrap();
    let header = dir.path().join(io::MODEL_FILE);
    let text = fs::read_to_string(&header).unwrap();

    fs::write(&header, text.replace("states = 3", "states = 4")).unwrap();
    assert!(matches!(io::read_model(dir.path()), Err(PmorError::DimensionMismatch { .. })));

    fs::write(&header, text.replace("inputs = 1\n", "")).unwrap();
    match io::read_model(dir.path()) {
        Err(PmorError::Parse(e)) => assert!(e.found.contains("inputs"), "{e}"),
        other => panic!("{other:?}"),
    }

    fs::write(&header, text.replace("b = \"B.mseries\"", "b = \"missing.mseries\"")).unwrap();
    assert!(matches!(io::read_model(dir.path()), Err(PmorError::Io { .. })));
}

#[test]
fn duplicate_term_in_file() {
    let text = "# two constant terms\nmseries 1 1 1 2\nidx 0\n1e0+0e0j\nidx 0\n2e0+0e0j\n";
    assert!(matches!(io::parse_series(text), Err(PmorError::DuplicateTerm(_))));
}

#[test]
fn trailing_garbage_rejected() {
    let ex = build(ExampleId::Toy2);
    let text = format!("{}extra\n", io::write_data(&ex.data));
    match io::parse_data(&text) {
        Err(PmorError::Parse(e)) => assert_eq!(e.expected, "end of file"),
        other => panic!("{other:?}"),
    }
}
