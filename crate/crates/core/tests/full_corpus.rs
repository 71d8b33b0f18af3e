//! Full-size corpus: 2427 records per family. Slow; run with `--ignored`.

use cfsc::dxf::read_dxf;
use cfsc::generator::{build_dataset, std_templates, validate_record};
use cfsc::geometry::canonicalize;
use cfsc::script::{execute, parse};

#[test]
#[ignore]
fn full_corpus_is_valid() {
    let templates = std_templates();
    let records = build_dataset(&templates, &vec![2427; templates.len()], 7, 0).unwrap();
    assert_eq!(records.len(), 2427 * templates.len());
    let mut failures = Vec::new();
    for r in &records {
        let t = templates.iter().find(|t| t.name == r.template).unwrap();
        let problems = validate_record(t, r);
        if !problems.is_empty() {
            failures.push(format!("{}: {}", r.id, problems.join("; ")));
            continue;
        }
        let model = execute(&parse(&r.script).unwrap()).unwrap();
        let read = read_dxf(&r.dxf).unwrap().model;
        if canonicalize(&read, 1e-6).unwrap() != canonicalize(&model, 1e-6).unwrap() {
            failures.push(format!("{}: DXF round trip differs", r.id));
        }
    }
    assert!(failures.is_empty(), "{} failures, first: {:?}", failures.len(), &failures[..failures.len().min(5)]);
}
