use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use super::*;
use crate::dxf::write_dxf;
use crate::geometry::{canonicalize, Annotation};
use crate::script::{check_complete, execute, parse};

/// Category split used when only a total record count is given.
pub const DEFAULT_MIX: [(Category, u32); 3] = [(Category::Plain2D, 115), (Category::Annotated2D, 158), (Category::Solid3D, 212)];

/// Semantic record of one annotation, kept beside the DXF.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnnotationRecord {
    #[serde(rename = "type")]
    pub kind: String,
    pub nominal: f64,
    pub extra: serde_json::Value,
}

impl AnnotationRecord {
    pub fn from_annotation(a: &Annotation) -> Self {
        let extra = match a {
            Annotation::Linear { offset, .. } => json!({ "offset": offset }),
            Annotation::Tolerance { plus, minus, .. } => json!({ "plus": plus, "minus": minus }),
            _ => json!({}),
        };
        AnnotationRecord { kind: a.kind().name().to_string(), nominal: a.nominal(), extra }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetRecord {
    pub id: String,
    pub template: String,
    pub category: Category,
    /// Free parameters.
    pub params: Assignment,
    pub prompt: String,
    pub script: String,
    pub dxf: Vec<u8>,
    pub annotations: Vec<AnnotationRecord>,
    /// Draws rejected by the constraints before this one was accepted.
    pub rejected: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ManifestEntry<'a> {
    pub id: &'a str,
    pub template: &'a str,
    pub params: &'a Assignment,
    pub prompt: &'a str,
    pub script_path: String,
    pub dxf_path: String,
    pub category: Category,
    pub annotations: &'a [AnnotationRecord],
}

#[derive(Debug, Clone, Serialize)]
pub struct QaPair<'a> {
    pub id: &'a str,
    pub prompt: &'a str,
    pub answer_script: &'a str,
    pub category: Category,
}

/// Stable record id: first 16 hex digits of SHA-256 over template name and
/// canonical JSON of the free parameters.
pub fn record_id(template: &str, params: &Assignment) -> String {
    let mut h = Sha256::new();
    h.update(template.as_bytes());
    h.update(b"\n");
    h.update(serde_json::to_string(params).expect("assignment serializes").as_bytes());
    h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
}

/// Seed for one record, derived from the master seed and its position.
pub fn record_seed(seed: u64, template: &str, index: usize, attempt: u32) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(template.as_bytes());
    h.update((index as u64).to_le_bytes());
    h.update(attempt.to_le_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().unwrap())
}

/// Builds one record from a free assignment.
pub fn make_record(tpl: &ParentTemplate, free: &Assignment) -> Result<DatasetRecord, GeneratorError> {
    let script = tpl.instantiate(free)?;
    let full = tpl.complete(free)?;
    let fail = |message: String| GeneratorError::Script { template: tpl.name.to_string(), message };
    let prog = parse(&script).map_err(|e| fail(e.to_string()))?;
    check_complete(&prog).map_err(|e| fail(e.to_string()))?;
    let model = execute(&prog).map_err(|e| fail(e.to_string()))?;
    Ok(DatasetRecord {
        id: record_id(tpl.name, free),
        template: tpl.name.to_string(),
        category: tpl.category,
        params: free.clone(),
        prompt: tpl.prompt_for(&full)?,
        script,
        dxf: write_dxf(&model).to_bytes(),
        annotations: model.annotations.iter().map(AnnotationRecord::from_annotation).collect(),
        rejected: 0,
    })
}

fn record_at(tpl: &ParentTemplate, seed: u64, index: usize, attempt: u32) -> Result<DatasetRecord, GeneratorError> {
    let mut rng = ChaCha8Rng::seed_from_u64(record_seed(seed, tpl.name, index, attempt));
    let (free, rejected) = tpl.sample_counted(&mut rng)?;
    Ok(DatasetRecord { rejected, ..make_record(tpl, &free)? })
}

/// Generates `counts[i]` records of `templates[i]`.
///
/// Records are drawn in parallel on `parallelism` workers (0 means all
/// cores). Duplicate ids are resolved afterwards in index order by redrawing
/// with the next attempt number, so the result does not depend on the
/// number of workers.
pub fn build_dataset(
    templates: &[ParentTemplate],
    counts: &[usize],
    seed: u64,
    parallelism: usize,
) -> Result<Vec<DatasetRecord>, GeneratorError> {
    assert_eq!(templates.len(), counts.len(), "one count per template");
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism)
        .build()
        .map_err(|e| GeneratorError::Io { path: "thread pool".into(), message: e.to_string() })?;
    let jobs: Vec<(usize, usize)> =
        counts.iter().enumerate().flat_map(|(t, &n)| (0..n).map(move |i| (t, i))).collect();
    let drawn: Vec<Result<DatasetRecord, GeneratorError>> =
        pool.install(|| jobs.par_iter().map(|&(t, i)| record_at(&templates[t], seed, i, 0)).collect());

    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(jobs.len());
    for (&(t, i), rec) in jobs.iter().zip(drawn) {
        let mut rec = rec?;
        let mut attempt = 0;
        while !seen.insert(rec.id.clone()) {
            attempt += 1;
            if attempt as usize > MAX_ATTEMPTS {
                return Err(GeneratorError::SamplingExhausted { template: templates[t].name.into(), attempts: MAX_ATTEMPTS });
            }
            rec = record_at(&templates[t], seed, i, attempt)?;
        }
        out.push(rec);
    }
    Ok(out)
}

/// Splits `total` records over categories by `mix` and then evenly over the
/// templates of each category, using largest remainders at both levels.
pub fn counts_for_total(templates: &[ParentTemplate], total: usize, mix: &[(Category, u32)]) -> Vec<usize> {
    let present: Vec<(Category, f64)> = mix
        .iter()
        .filter(|(c, _)| templates.iter().any(|t| t.category == *c))
        .map(|(c, w)| (*c, *w as f64))
        .collect();
    let per_cat = largest_remainder(&present.iter().map(|p| p.1).collect::<Vec<_>>(), total);
    let mut counts = vec![0; templates.len()];
    for ((cat, _), n) in present.iter().zip(per_cat) {
        let idx: Vec<usize> = (0..templates.len()).filter(|&i| templates[i].category == *cat).collect();
        for (i, k) in idx.iter().zip(largest_remainder(&vec![1.0; idx.len()], n)) {
            counts[*i] = k;
        }
    }
    counts
}

fn largest_remainder(weights: &[f64], n: usize) -> Vec<usize> {
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return vec![0; weights.len()];
    }
    let quotas: Vec<f64> = weights.iter().map(|w| w / total * n as f64).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| (quotas[b] - quotas[b].floor()).total_cmp(&(quotas[a] - quotas[a].floor())).then(a.cmp(&b)));
    let short = n - counts.iter().sum::<usize>();
    for &i in order.iter().take(short) {
        counts[i] += 1;
    }
    counts
}

fn sorted(records: &[DatasetRecord]) -> Vec<&DatasetRecord> {
    let mut v: Vec<&DatasetRecord> = records.iter().collect();
    v.sort_by(|a, b| a.id.cmp(&b.id));
    v
}

/// One JSON object per line, ordered by id.
pub fn manifest_jsonl(records: &[DatasetRecord]) -> String {
    let mut out = String::new();
    for r in sorted(records) {
        let e = ManifestEntry {
            id: &r.id,
            template: &r.template,
            params: &r.params,
            prompt: &r.prompt,
            script_path: format!("scripts/{}.cads", r.id),
            dxf_path: format!("dxf/{}.dxf", r.id),
            category: r.category,
            annotations: &r.annotations,
        };
        out.push_str(&serde_json::to_string(&e).expect("manifest serializes"));
        out.push('\n');
    }
    out
}

/// Prompt/answer pairs, one JSON object per line, ordered by id.
pub fn export_qa_pairs(records: &[DatasetRecord]) -> String {
    let mut out = String::new();
    for r in sorted(records) {
        let q = QaPair { id: &r.id, prompt: &r.prompt, answer_script: &r.script, category: r.category };
        out.push_str(&serde_json::to_string(&q).expect("pair serializes"));
        out.push('\n');
    }
    out
}

/// Writes `scripts/`, `dxf/`, `manifest.jsonl` and `qa_pairs.jsonl` under `dir`.
pub fn write_dataset(dir: &Path, records: &[DatasetRecord]) -> Result<(), GeneratorError> {
    let io = |p: &Path, e: std::io::Error| GeneratorError::Io { path: p.display().to_string(), message: e.to_string() };
    for sub in ["scripts", "dxf"] {
        let p = dir.join(sub);
        std::fs::create_dir_all(&p).map_err(|e| io(&p, e))?;
    }
    for r in records {
        let p = dir.join("scripts").join(format!("{}.cads", r.id));
        std::fs::write(&p, &r.script).map_err(|e| io(&p, e))?;
        let p = dir.join("dxf").join(format!("{}.dxf", r.id));
        std::fs::write(&p, &r.dxf).map_err(|e| io(&p, e))?;
    }
    let p = dir.join("manifest.jsonl");
    std::fs::write(&p, manifest_jsonl(records)).map_err(|e| io(&p, e))?;
    let p = dir.join("qa_pairs.jsonl");
    std::fs::write(&p, export_qa_pairs(records)).map_err(|e| io(&p, e))?;
    Ok(())
}

/// Re-checks every record invariant from scratch; returns the problems found.
pub fn validate_record(tpl: &ParentTemplate, r: &DatasetRecord) -> Vec<String> {
    let mut problems = Vec::new();
    let full = match tpl.complete(&r.params) {
        Ok(f) => f,
        Err(e) => return vec![e.to_string()],
    };
    problems.extend(tpl.violations(&full).into_iter().map(|v| format!("violates {v}")));
    if r.id != record_id(tpl.name, &r.params) {
        problems.push("id does not match the parameters".into());
    }
    for spec in &tpl.params {
        if let Some(v) = r.params.get(spec.name) {
            if !r.prompt.contains(&v.render()) {
                problems.push(format!("prompt does not mention {} = {}", spec.name, v.render()));
            }
        }
    }
    let prog = match parse(&r.script) {
        Ok(p) => p,
        Err(e) => {
            problems.push(format!("script does not parse: {e}"));
            return problems;
        }
    };
    if let Err(e) = check_complete(&prog) {
        problems.push(e.to_string());
    }
    match execute(&prog) {
        Ok(model) => {
            if write_dxf(&model).to_bytes() != r.dxf {
                problems.push("stored DXF differs from the executed script".into());
            }
            if let Err(e) = (tpl.postcondition)(&full, &model) {
                problems.push(format!("postcondition: {e}"));
            }
            match execute(&prog.strip_comments()) {
                Ok(bare) if canonicalize(&bare, 1e-9) == canonicalize(&model, 1e-9) => {}
                _ => problems.push("comments change the executed model".into()),
            }
        }
        Err(e) => problems.push(format!("script does not execute: {e}")),
    }
    problems
}

/// Per-template generation summary.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct TemplateStats {
    pub records: usize,
    pub rejected: usize,
}

pub fn template_stats(records: &[DatasetRecord]) -> BTreeMap<String, TemplateStats> {
    let mut m: BTreeMap<String, TemplateStats> = BTreeMap::new();
    for r in records {
        let s = m.entry(r.template.clone()).or_default();
        s.records += 1;
        s.rejected += r.rejected;
    }
    m
}

/// Record counts per category and per template.
pub fn category_counts(records: &[DatasetRecord]) -> BTreeMap<Category, usize> {
    let mut m = BTreeMap::new();
    for r in records {
        *m.entry(r.category).or_insert(0) += 1;
    }
    m
}
