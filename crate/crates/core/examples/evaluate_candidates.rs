//! Score hand-made candidates against generated ground truth.

use cfsc::eval::{evaluate, scale_radii, swap_annotation_type, EvalConfig, ProblemCase};
use cfsc::generator::{build_dataset, std_templates};
use cfsc::script::{parse, pretty_print};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let templates = std_templates();
    let records = build_dataset(&templates, &vec![2; templates.len()], 3, 0)?;

    let cases: Vec<ProblemCase> = records
        .iter()
        .map(|r| {
            let prog = parse(&r.script).expect("generated scripts parse");
            let (bigger, _) = scale_radii(&prog, 1.1);
            let mut candidates = vec![(0, r.script.clone()), (1, pretty_print(&bigger)), (2, "use cad\nmain {\n    add_circle((0, 0)\n}\n".to_string())];
            if let Some(swapped) = swap_annotation_type(&prog) {
                candidates.push((3, pretty_print(&swapped)));
            }
            ProblemCase { problem_id: r.id.clone(), ground_truth: r.script.clone(), candidates }
        })
        .collect();

    let report = evaluate(&cases, &EvalConfig { ks: vec![1, 3], ..EvalConfig::default() })?;
    println!("{}", serde_json::to_string_pretty(&report.aggregates)?);
    Ok(())
}
