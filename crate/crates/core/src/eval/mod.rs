//! Batch evaluation of candidate scripts against a generated corpus.

mod mutate;

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dxf::{read_dxf, sample_points, PointCloud};
use crate::geometry::{AnnotationKind, EntityKind, SketchModel};
use crate::metrics::{
    acc_f, acc_p_traces, annotation_correct, apr, graph_correct, normalized_chamfer, pass_at_k, trace_parameter_count,
    Tally, DEFAULT_TOL,
};
use crate::script::{execute_traced, function_set, parse, CallRecord, ScriptProgram};

pub use mutate::{scale_radii, swap_annotation_type, RADIUS_ARGUMENTS};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("ground truth for `{problem_id}` is unusable: {message}")]
    GroundTruth { problem_id: String, message: String },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{path}:{line}: {message}")]
    BadInput { path: String, line: usize, message: String },
    #[error("no candidate refers to a known problem")]
    NoOverlap,
    #[error("thread pool: {0}")]
    Pool(String),
}

/// One line of a candidates file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub problem_id: String,
    pub sample_index: usize,
    pub script: String,
}

/// A ground-truth script and the candidates generated for it.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemCase {
    pub problem_id: String,
    pub ground_truth: String,
    /// `(sample_index, script)`, in sample order.
    pub candidates: Vec<(usize, String)>,
}

#[derive(Debug, Clone)]
pub struct EvalConfig {
    pub tol: f64,
    pub ks: Vec<usize>,
    /// Points per cloud for chamfer distance.
    pub cloud_points: usize,
    pub seed: u64,
    /// Worker threads; 0 means all cores.
    pub parallelism: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig { tol: DEFAULT_TOL, ks: vec![1, 3, 5], cloud_points: 2048, seed: 0, parallelism: 0 }
    }
}

/// Per-candidate row of the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateOutcome {
    pub problem_id: String,
    pub sample_index: usize,
    /// The ground truth carries annotations.
    pub annotated: bool,
    pub parsed: bool,
    pub executed: bool,
    pub functions_matched: usize,
    pub functions_total: usize,
    pub parameters_matched: usize,
    pub parameters_total: usize,
    /// Present only for executed candidates.
    pub graph_correct: Option<bool>,
    /// Present only for executed candidates of annotated problems.
    pub annotation_type_ok: Option<bool>,
    pub annotation_data_ok: Option<bool>,
    pub success: bool,
    pub cd: Option<f64>,
    pub error: Option<String>,
}

impl CandidateOutcome {
    pub fn functions(&self) -> Tally {
        Tally::new(self.functions_matched, self.functions_total)
    }

    pub fn parameters(&self) -> Tally {
        Tally::new(self.parameters_matched, self.parameters_total)
    }
}

/// Corpus-level values. `None` marks a ratio whose denominator is zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub problems: usize,
    pub candidates: usize,
    pub acc_f: Option<f64>,
    pub acc_p: Option<f64>,
    pub acc_g: Option<f64>,
    pub acc_a: Option<f64>,
    pub annotation_type_error_rate: Option<f64>,
    pub annotation_data_error_rate: Option<f64>,
    /// Parse and execute.
    pub apr: Option<f64>,
    pub apr_parse_only: Option<f64>,
    pub pass_at_k: BTreeMap<String, Option<f64>>,
    /// Problems left out of pass@k because they have fewer than k candidates.
    pub pass_at_k_skipped: BTreeMap<String, usize>,
    pub mean_cd: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub tol: f64,
    pub aggregates: Aggregates,
    pub cases: Vec<CandidateOutcome>,
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

impl EvalReport {
    /// Recomputes every aggregate from the per-candidate rows.
    pub fn from_rows(cases: Vec<CandidateOutcome>, ks: &[usize], tol: f64) -> Self {
        let mut problems: BTreeMap<&str, Vec<&CandidateOutcome>> = BTreeMap::new();
        for c in &cases {
            problems.entry(c.problem_id.as_str()).or_default().push(c);
        }
        let executed: Vec<&CandidateOutcome> = cases.iter().filter(|c| c.executed).collect();
        let ann: Vec<&CandidateOutcome> = executed.iter().copied().filter(|c| c.annotated).collect();
        let count = |v: &[&CandidateOutcome], f: fn(&CandidateOutcome) -> bool| v.iter().filter(|c| f(c)).count();

        let per_problem = |f: fn(&CandidateOutcome) -> bool| -> Vec<(usize, usize)> {
            problems.values().map(|v| (v.iter().filter(|c| f(c)).count(), v.len())).collect()
        };
        let mut pass = BTreeMap::new();
        let mut skipped = BTreeMap::new();
        for &k in ks {
            let mut vals = Vec::new();
            let mut skip = 0;
            for v in problems.values() {
                let c = v.iter().filter(|c| c.success).count();
                match pass_at_k(v.len(), c, k) {
                    Ok(p) => vals.push(p),
                    Err(_) => skip += 1,
                }
            }
            let mean = (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64);
            pass.insert(k.to_string(), mean);
            skipped.insert(k.to_string(), skip);
        }
        let cds: Vec<f64> = cases.iter().filter_map(|c| c.cd).collect();

        let aggregates = Aggregates {
            problems: problems.len(),
            candidates: cases.len(),
            acc_f: cases.iter().map(|c| c.functions()).sum::<Tally>().ratio(),
            acc_p: cases.iter().map(|c| c.parameters()).sum::<Tally>().ratio(),
            acc_g: ratio(count(&executed, |c| c.graph_correct == Some(true)), executed.len()),
            acc_a: ratio(
                count(&ann, |c| c.annotation_type_ok == Some(true) && c.annotation_data_ok == Some(true)),
                ann.len(),
            ),
            annotation_type_error_rate: ratio(count(&ann, |c| c.annotation_type_ok == Some(false)), ann.len()),
            annotation_data_error_rate: ratio(
                count(&ann, |c| c.annotation_type_ok == Some(true) && c.annotation_data_ok == Some(false)),
                ann.len(),
            ),
            apr: apr(&per_problem(|c| c.executed)),
            apr_parse_only: apr(&per_problem(|c| c.parsed)),
            pass_at_k: pass,
            pass_at_k_skipped: skipped,
            mean_cd: (!cds.is_empty()).then(|| cds.iter().sum::<f64>() / cds.len() as f64),
        };
        EvalReport { tol, aggregates, cases }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// The per-candidate table as CSV with a header row.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        for c in &self.cases {
            w.serialize(c).expect("row serializes");
        }
        String::from_utf8(w.into_inner().expect("in-memory writer")).expect("csv is utf-8")
    }
}

struct GroundTruth {
    program: ScriptProgram,
    functions: BTreeMap<String, usize>,
    trace: Vec<CallRecord>,
    model: SketchModel,
    cloud: Option<PointCloud>,
}

impl GroundTruth {
    fn prepare(case: &ProblemCase, cfg: &EvalConfig) -> Result<Self, EvalError> {
        let fail = |message: String| EvalError::GroundTruth { problem_id: case.problem_id.clone(), message };
        let program = parse(&case.ground_truth).map_err(|e| fail(e.to_string()))?;
        let run = execute_traced(&program);
        let model = run.result.map_err(|e| fail(e.to_string()))?.model;
        let cloud = sample_points(&model, cfg.cloud_points.max(1), cfg.seed).ok();
        Ok(GroundTruth { functions: function_set(&program), program, trace: run.trace, model, cloud })
    }
}

fn score(gt: &GroundTruth, problem_id: &str, sample_index: usize, script: &str, cfg: &EvalConfig) -> CandidateOutcome {
    let annotated = !gt.model.annotations.is_empty();
    let mut out = CandidateOutcome {
        problem_id: problem_id.to_string(),
        sample_index,
        annotated,
        parsed: false,
        executed: false,
        functions_matched: 0,
        functions_total: gt.functions.values().sum(),
        parameters_matched: 0,
        parameters_total: trace_parameter_count(&gt.trace),
        graph_correct: None,
        annotation_type_ok: None,
        annotation_data_ok: None,
        success: false,
        cd: None,
        error: None,
    };
    let prog = match parse(script) {
        Ok(p) => p,
        Err(e) => {
            out.error = Some(e.to_string());
            return out;
        }
    };
    out.parsed = true;
    let f = acc_f(&gt.program, &prog);
    out.functions_matched = f.matched;
    let shared: BTreeMap<String, usize> = function_set(&prog)
        .into_iter()
        .filter(|(k, _)| gt.functions.contains_key(k))
        .collect();
    let run = execute_traced(&prog);
    let p = acc_p_traces(&gt.trace, &run.trace, &shared);
    out.parameters_matched = p.matched;
    out.parameters_total = p.total;
    let model = match run.result {
        Ok(e) => e.model,
        Err(e) => {
            out.error = Some(e.to_string());
            return out;
        }
    };
    out.executed = true;
    let graph = graph_correct(&gt.model, &model, cfg.tol);
    out.graph_correct = Some(graph);
    let mut ok = graph;
    if annotated {
        let a = annotation_correct(&gt.model, &model, cfg.tol);
        out.annotation_type_ok = Some(a.type_ok);
        out.annotation_data_ok = Some(a.data_ok);
        ok &= a.correct();
    }
    out.success = ok;
    if let (Some(g), Ok(c)) = (&gt.cloud, sample_points(&model, cfg.cloud_points.max(1), cfg.seed)) {
        out.cd = normalized_chamfer(g, &c).ok();
    }
    out
}

/// Scores one problem; rows follow the candidate order.
pub fn evaluate_case(case: &ProblemCase, cfg: &EvalConfig) -> Result<Vec<CandidateOutcome>, EvalError> {
    let gt = GroundTruth::prepare(case, cfg)?;
    Ok(case.candidates.iter().map(|(i, s)| score(&gt, &case.problem_id, *i, s, cfg)).collect())
}

/// Scores every case on `cfg.parallelism` workers. The report does not
/// depend on the number of workers.
pub fn evaluate(cases: &[ProblemCase], cfg: &EvalConfig) -> Result<EvalReport, EvalError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.parallelism)
        .build()
        .map_err(|e| EvalError::Pool(e.to_string()))?;
    let rows: Vec<Vec<CandidateOutcome>> =
        pool.install(|| cases.par_iter().map(|c| evaluate_case(c, cfg)).collect::<Result<_, _>>())?;
    Ok(EvalReport::from_rows(rows.into_iter().flatten().collect(), &cfg.ks, cfg.tol))
}

#[derive(Deserialize)]
struct ManifestLine {
    id: String,
    script_path: String,
}

fn io_err(path: &Path, e: impl ToString) -> EvalError {
    EvalError::Io { path: path.display().to_string(), message: e.to_string() }
}

fn json_lines<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, EvalError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| {
            serde_json::from_str(l).map_err(|e| EvalError::BadInput {
                path: path.display().to_string(),
                line: n + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

/// Reads `(id, script)` pairs from a corpus manifest. Script paths are
/// resolved against the manifest's directory.
pub fn load_ground_truth(manifest: &Path) -> Result<Vec<(String, String)>, EvalError> {
    let base = manifest.parent().unwrap_or(Path::new("."));
    json_lines::<ManifestLine>(manifest)?
        .into_iter()
        .map(|m| {
            let p = base.join(&m.script_path);
            let script = std::fs::read_to_string(&p).map_err(|e| io_err(&p, e))?;
            Ok((m.id, script))
        })
        .collect()
}

pub fn load_candidates(path: &Path) -> Result<Vec<Candidate>, EvalError> {
    json_lines(path)
}

pub fn candidates_jsonl(candidates: &[Candidate]) -> String {
    candidates.iter().map(|c| serde_json::to_string(c).expect("candidate serializes") + "\n").collect()
}

/// Groups candidates under their problems. Returns the cases, ordered like
/// `ground_truth`, and the distinct unknown problem ids. Problems without
/// candidates are left out.
pub fn assemble_cases(ground_truth: &[(String, String)], candidates: &[Candidate]) -> (Vec<ProblemCase>, Vec<String>) {
    let mut by_id: BTreeMap<&str, Vec<(usize, String)>> = BTreeMap::new();
    let mut unknown = Vec::new();
    let known: BTreeMap<&str, ()> = ground_truth.iter().map(|(id, _)| (id.as_str(), ())).collect();
    for c in candidates {
        if known.contains_key(c.problem_id.as_str()) {
            by_id.entry(c.problem_id.as_str()).or_default().push((c.sample_index, c.script.clone()));
        } else if !unknown.contains(&c.problem_id) {
            unknown.push(c.problem_id.clone());
        }
    }
    let cases = ground_truth
        .iter()
        .filter_map(|(id, gt)| {
            let mut cands = by_id.remove(id.as_str())?;
            cands.sort_by_key(|c| c.0);
            Some(ProblemCase { problem_id: id.clone(), ground_truth: gt.clone(), candidates: cands })
        })
        .collect();
    (cases, unknown)
}

/// Primitive and annotation counts over a corpus, read back from its DXF files.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusStats {
    pub records: usize,
    pub entities: BTreeMap<String, usize>,
    /// Keyed by short label (LA, RA, AA, TA, CA, SA).
    pub annotations: BTreeMap<String, usize>,
    /// Entity types the reader did not understand.
    pub skipped: BTreeMap<String, usize>,
}

impl CorpusStats {
    pub fn new() -> Self {
        CorpusStats {
            records: 0,
            entities: EntityKind::ALL.iter().map(|k| (k.name().to_string(), 0)).collect(),
            annotations: AnnotationKind::ALL.iter().map(|k| (k.short_label().to_string(), 0)).collect(),
            skipped: BTreeMap::new(),
        }
    }

    pub fn add(&mut self, m: &SketchModel) {
        self.records += 1;
        for (k, n) in m.entity_counts() {
            *self.entities.entry(k.name().to_string()).or_insert(0) += n;
        }
        for (k, n) in m.annotation_counts() {
            *self.annotations.entry(k.short_label().to_string()).or_insert(0) += n;
        }
    }
}

impl Default for CorpusStats {
    fn default() -> Self {
        Self::new()
    }
}

#[derive(Deserialize)]
struct ManifestDxf {
    dxf_path: String,
}

/// Reads every DXF listed in a manifest and tallies what it contains.
pub fn corpus_stats(manifest: &Path) -> Result<CorpusStats, EvalError> {
    let base = manifest.parent().unwrap_or(Path::new("."));
    let mut stats = CorpusStats::new();
    for m in json_lines::<ManifestDxf>(manifest)? {
        let p = base.join(&m.dxf_path);
        let bytes = std::fs::read(&p).map_err(|e| io_err(&p, e))?;
        let read = read_dxf(&bytes).map_err(|e| io_err(&p, e))?;
        stats.add(&read.model);
        for (k, n) in read.skipped {
            *stats.skipped.entry(k).or_insert(0) += n;
        }
    }
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;

    const GT: &str = "main {\n    add_circle((0, 0), 10)\n    dim_radius((0, 0), 10)\n    save \"c.dxf\"\n}\n";
    const PLAIN: &str = "main {\n    add_line((0, 0), (10, 0))\n    save \"l.dxf\"\n}\n";

    fn cfg() -> EvalConfig {
        EvalConfig { cloud_points: 256, parallelism: 1, ..EvalConfig::default() }
    }

    fn case(id: &str, gt: &str, cands: &[&str]) -> ProblemCase {
        ProblemCase {
            problem_id: id.into(),
            ground_truth: gt.into(),
            candidates: cands.iter().enumerate().map(|(i, s)| (i, s.to_string())).collect(),
        }
    }

    #[test]
    fn identity_scores_perfectly() {
        let r = evaluate(&[case("a", GT, &[GT; 5]), case("b", PLAIN, &[PLAIN; 5])], &cfg()).unwrap();
        let a = &r.aggregates;
        for v in [a.acc_f, a.acc_p, a.acc_g, a.acc_a, a.apr, a.apr_parse_only] {
            assert_eq!(v, Some(1.0));
        }
        assert!(a.pass_at_k.values().all(|v| *v == Some(1.0)));
        assert_eq!(a.mean_cd, Some(0.0));
        assert_eq!(a.annotation_type_error_rate, Some(0.0));
    }

    #[test]
    fn failure_modes() {
        let wrong_radius = GT.replace("10)\n    dim", "12)\n    dim");
        let linear = "main {\n    add_circle((0, 0), 10)\n    dim_linear((-10, 0), (10, 0), 3)\n    save \"c.dxf\"\n}\n";
        let runtime = "main {\n    add_circle((0, 0), 1 / 0)\n    save \"c.dxf\"\n}\n";
        let r = evaluate(&[case("a", GT, &[GT, &wrong_radius, linear, "main {", runtime])], &cfg()).unwrap();
        let rows = &r.cases;
        assert!(rows[0].success);
        assert_eq!(rows[1].graph_correct, Some(false));
        assert_eq!((rows[1].annotation_type_ok, rows[1].annotation_data_ok), (Some(true), Some(true)));
        assert!(!rows[1].success);
        assert_eq!(rows[2].graph_correct, Some(true));
        assert_eq!(rows[2].annotation_type_ok, Some(false));
        assert!(!rows[3].parsed && rows[3].functions_total == 3 && rows[3].parameters_total == 4);
        assert!(rows[4].parsed && !rows[4].executed && rows[4].graph_correct.is_none());
        let a = &r.aggregates;
        // three executed: identity, wrong circle, wrong annotation type
        assert_eq!(a.acc_g, Some(2.0 / 3.0));
        assert_eq!(a.acc_a, Some(2.0 / 3.0));
        assert_eq!(a.annotation_type_error_rate, Some(1.0 / 3.0));
        assert_eq!(a.apr, Some(3.0 / 5.0));
        assert_eq!(a.apr_parse_only, Some(4.0 / 5.0));
        assert!((a.pass_at_k["1"].unwrap() - 0.2).abs() < 1e-12);
        assert_eq!(a.pass_at_k["5"], Some(1.0));
        assert!(a.mean_cd.unwrap() > 0.0);
    }

    #[test]
    fn two_of_five_gives_pass_at_one_of_point_four() {
        let bad = PLAIN.replace("10, 0)", "11, 0)");
        let cases: Vec<_> = (0..3).map(|i| case(&i.to_string(), PLAIN, &[PLAIN, &bad, PLAIN, &bad, &bad])).collect();
        let r = evaluate(&cases, &cfg()).unwrap();
        assert!((r.aggregates.pass_at_k["1"].unwrap() - 0.4).abs() < 1e-12);
        assert_eq!(r.aggregates.acc_a, None);
    }

    #[test]
    fn short_problems_are_skipped_for_large_k() {
        let r = evaluate(&[case("a", PLAIN, &[PLAIN, PLAIN])], &cfg()).unwrap();
        assert_eq!(r.aggregates.pass_at_k["3"], None);
        assert_eq!(r.aggregates.pass_at_k_skipped["3"], 1);
        assert_eq!(r.aggregates.pass_at_k_skipped["1"], 0);
    }

    #[test]
    fn bad_ground_truth_is_an_error() {
        assert!(matches!(evaluate(&[case("x", "main {", &[PLAIN])], &cfg()), Err(EvalError::GroundTruth { .. })));
    }

    #[test]
    fn aggregates_recompute_from_rows_and_survive_json() {
        let r = evaluate(&[case("a", GT, &[GT, PLAIN, "oops"])], &cfg()).unwrap();
        let back: EvalReport = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
        assert_eq!(EvalReport::from_rows(r.cases.clone(), &[1, 3, 5], r.tol), r);
        let csv = r.to_csv();
        assert_eq!(csv.lines().count(), 4);
        assert!(csv.starts_with("problem_id,sample_index,annotated,parsed,executed"));
    }

    #[test]
    fn parallelism_does_not_change_the_report() {
        let cases: Vec<_> = (0..12).map(|i| case(&format!("p{i}"), GT, &[GT, PLAIN, "x"])).collect();
        let one = evaluate(&cases, &cfg()).unwrap();
        let many = evaluate(&cases, &EvalConfig { parallelism: 4, ..cfg() }).unwrap();
        assert_eq!(one, many);
    }

    #[test]
    fn assembling_cases() {
        let gt = vec![("a".to_string(), GT.to_string()), ("b".to_string(), PLAIN.to_string())];
        let cands = vec![
            Candidate { problem_id: "a".into(), sample_index: 1, script: "s1".into() },
            Candidate { problem_id: "zz".into(), sample_index: 0, script: "s".into() },
            Candidate { problem_id: "a".into(), sample_index: 0, script: "s0".into() },
            Candidate { problem_id: "zz".into(), sample_index: 1, script: "s".into() },
        ];
        let (cases, unknown) = assemble_cases(&gt, &cands);
        assert_eq!(unknown, vec!["zz"]);
        assert_eq!(cases.len(), 1);
        assert_eq!(cases[0].candidates, vec![(0, "s0".to_string()), (1, "s1".to_string())]);
        let text = candidates_jsonl(&cands);
        assert_eq!(text.lines().count(), 4);
    }
}
