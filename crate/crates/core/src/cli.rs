//! Command-line front end: `generate`, `run`, `evaluate`, `stats` and `lint`.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::dxf::{lint_dxf, write_dxf};
use crate::eval::{assemble_cases, corpus_stats, evaluate, load_candidates, load_ground_truth, EvalConfig};
use crate::generator::{
    build_dataset, counts_for_total, load_templates, template_stats, write_dataset, Category, TemplateSource,
    DEFAULT_MIX,
};
use crate::script::{check_complete, execute, parse};

#[derive(Debug, Parser)]
#[command(name = "cfsc", version, about = "Parametric CAD script corpora, DXF output and candidate scoring")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a corpus of scripts, DXF files, a manifest and prompt/answer pairs.
    Generate(GenerateArgs),
    /// Execute one script and write its DXF.
    Run(RunArgs),
    /// Score candidate scripts against a corpus.
    Evaluate(EvaluateArgs),
    /// Count primitives and annotations over a corpus.
    Stats(StatsArgs),
    /// Check DXF structure or script syntax.
    Lint(LintArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Template directory, or `std` for the built-in families.
    #[arg(long, env = "CFSC_TEMPLATE_PATH", default_value = "std")]
    pub templates: String,
    #[arg(long, conflicts_with = "total", required_unless_present = "total")]
    pub per_template: Option<usize>,
    /// Total record count, split over categories by --mix.
    #[arg(long)]
    pub total: Option<usize>,
    /// Category weights as plain:annotated:3d.
    #[arg(long, default_value = "115:158:212", requires = "total")]
    pub mix: String,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    pub parallel: usize,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    pub script: PathBuf,
    /// Output path; defaults to the script path with a .dxf extension.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// JSON lines of {problem_id, sample_index, script}.
    #[arg(long)]
    pub candidates: PathBuf,
    /// Directory for report.json (and cases.csv with --format csv).
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = crate::metrics::DEFAULT_TOL, value_parser = positive)]
    pub tol: f64,
    #[arg(long, value_delimiter = ',', default_value = "1,3,5")]
    pub k: Vec<usize>,
    /// Seed for point sampling in the chamfer distance.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 2048)]
    pub cloud_points: usize,
    #[arg(long, default_value_t = 0)]
    pub parallel: usize,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    pub manifest: PathBuf,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Args)]
pub struct LintArgs {
    /// `.dxf` files are checked structurally, anything else is parsed as a script.
    #[arg(required = true)]
    pub files: Vec<PathBuf>,
}

fn positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v > 0.0 => Ok(v),
        Ok(v) => Err(format!("must be a positive number, got {v}")),
        Err(e) => Err(e.to_string()),
    }
}

fn template_source(s: &str) -> TemplateSource {
    if s == "std" {
        TemplateSource::Std
    } else {
        TemplateSource::Dir(PathBuf::from(s))
    }
}

fn parse_mix(s: &str) -> Result<Vec<(Category, u32)>> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        bail!("--mix needs three weights like 115:158:212, got `{s}`");
    }
    parts
        .iter()
        .zip(DEFAULT_MIX)
        .map(|(p, (c, _))| Ok((c, p.trim().parse::<u32>().with_context(|| format!("bad weight `{p}`"))?)))
        .collect()
}

fn cmd_generate(a: &GenerateArgs) -> Result<()> {
    let templates = load_templates(&template_source(&a.templates))?;
    if templates.is_empty() {
        bail!("no templates found in {}", a.templates);
    }
    let counts = match (a.per_template, a.total) {
        (Some(n), _) => vec![n; templates.len()],
        (None, Some(total)) => counts_for_total(&templates, total, &parse_mix(&a.mix)?),
        (None, None) => unreachable!("clap requires one of the counts"),
    };
    let records = build_dataset(&templates, &counts, a.seed, a.parallel)?;
    write_dataset(&a.out, &records)?;
    for (name, s) in template_stats(&records) {
        let draws = s.records + s.rejected;
        println!(
            "{name:<22} {:>6} records {:>8} rejected draws  acceptance {:.1}%",
            s.records,
            s.rejected,
            100.0 * s.records as f64 / draws.max(1) as f64
        );
    }
    println!("{} records written to {}", records.len(), a.out.display());
    Ok(())
}

fn cmd_run(a: &RunArgs) -> Result<()> {
    let src = std::fs::read_to_string(&a.script).with_context(|| format!("reading {}", a.script.display()))?;
    let at = a.script.display();
    let prog = parse(&src).map_err(|e| anyhow::anyhow!("{at}:{e}"))?;
    check_complete(&prog).map_err(|e| anyhow::anyhow!("{at}:{e}"))?;
    let model = execute(&prog).map_err(|e| anyhow::anyhow!("{at}:{}: {}", e.span, e.kind))?;
    let out = a.out.clone().unwrap_or_else(|| a.script.with_extension("dxf"));
    std::fs::write(&out, write_dxf(&model).to_bytes()).with_context(|| format!("writing {}", out.display()))?;
    println!("{}: {} entities, {} annotations", out.display(), model.entities.len(), model.annotations.len());
    for (k, n) in model.entity_counts() {
        println!("  {:<10} {n}", k.name());
    }
    for (k, n) in model.annotation_counts() {
        println!("  {:<10} {n}", k.short_label());
    }
    Ok(())
}

fn cmd_evaluate(a: &EvaluateArgs) -> Result<()> {
    if a.k.is_empty() || a.k.contains(&0) {
        bail!("--k needs positive values");
    }
    let gt = load_ground_truth(&a.manifest)?;
    let cands = load_candidates(&a.candidates)?;
    let (cases, unknown) = assemble_cases(&gt, &cands);
    for id in &unknown {
        eprintln!("warning: candidates refer to unknown problem `{id}`, skipped");
    }
    if cases.is_empty() {
        bail!(crate::eval::EvalError::NoOverlap);
    }
    let cfg = EvalConfig { tol: a.tol, ks: a.k.clone(), cloud_points: a.cloud_points, seed: a.seed, parallelism: a.parallel };
    let report = evaluate(&cases, &cfg)?;
    std::fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    write(&a.out.join("report.json"), &report.to_json())?;
    if a.format == Format::Csv {
        write(&a.out.join("cases.csv"), &report.to_csv())?;
    }
    let g = &report.aggregates;
    let show = |v: Option<f64>| v.map_or("n/a".to_string(), |v| format!("{v:.4}"));
    println!("problems {}  candidates {}", g.problems, g.candidates);
    println!("ACC-F {}  ACC-P {}  ACC-G {}  ACC-A {}", show(g.acc_f), show(g.acc_p), show(g.acc_g), show(g.acc_a));
    println!("APR {}  (parse only {})", show(g.apr), show(g.apr_parse_only));
    for (k, v) in &g.pass_at_k {
        println!("pass@{k} {}", show(*v));
    }
    println!("mean CD {}", show(g.mean_cd));
    Ok(())
}

fn write(p: &Path, text: &str) -> Result<()> {
    std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))
}

fn cmd_stats(a: &StatsArgs) -> Result<()> {
    let s = corpus_stats(&a.manifest)?;
    match a.format {
        Some(Format::Json) => println!("{}", serde_json::to_string_pretty(&s)?),
        Some(Format::Csv) => {
            println!("group,type,count");
            for (k, n) in &s.entities {
                println!("entity,{k},{n}");
            }
            for (k, n) in &s.annotations {
                println!("annotation,{k},{n}");
            }
        }
        None => {
            println!("records {}", s.records);
            for (k, n) in s.entities.iter().chain(&s.annotations) {
                println!("{k:<10} {n}");
            }
            for (k, n) in &s.skipped {
                println!("skipped {k} {n}");
            }
        }
    }
    Ok(())
}

fn cmd_lint(a: &LintArgs) -> Result<bool> {
    let mut clean = true;
    for f in &a.files {
        let text = std::fs::read_to_string(f).with_context(|| format!("reading {}", f.display()))?;
        let is_dxf = f.extension().is_some_and(|e| e.eq_ignore_ascii_case("dxf"));
        let issues: Vec<String> = if is_dxf {
            lint_dxf(&text)
        } else {
            match parse(&text).and_then(|p| check_complete(&p)) {
                Ok(()) => Vec::new(),
                Err(e) => vec![e.to_string()],
            }
        };
        for i in &issues {
            eprintln!("{}: {i}", f.display());
        }
        clean &= issues.is_empty();
    }
    Ok(clean)
}

/// Runs a parsed command line. `Ok(false)` means diagnostics were reported.
pub fn run(cli: &Cli) -> Result<bool> {
    match &cli.command {
        Command::Generate(a) => cmd_generate(a).map(|()| true),
        Command::Run(a) => cmd_run(a).map(|()| true),
        Command::Evaluate(a) => cmd_evaluate(a).map(|()| true),
        Command::Stats(a) => cmd_stats(a).map(|()| true),
        Command::Lint(a) => cmd_lint(a),
    }
}

pub fn main() -> ExitCode {
    match run(&Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn command_line_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn flag_validation() {
        let p = |args: &[&str]| Cli::try_parse_from(std::iter::once("cfsc").chain(args.iter().copied()));
        assert!(p(&["generate", "--per-template", "3", "--seed", "7", "--out", "x"]).is_ok());
        // seed is required for generation
        assert!(p(&["generate", "--per-template", "3", "--out", "x"]).is_err());
        assert!(p(&["generate", "--per-template", "3", "--total", "9", "--seed", "1", "--out", "x"]).is_err());
        // commands without randomness take no seed
        assert!(p(&["run", "a.cads", "--seed", "1"]).is_err());
        assert!(p(&["stats", "m.jsonl", "--seed", "1"]).is_err());
        let ev = ["evaluate", "--manifest", "m", "--candidates", "c", "--out", "o"];
        assert!(p(&[&ev[..], &["--tol", "0"]].concat()).is_err());
        assert!(p(&[&ev[..], &["--tol", "-1"]].concat()).is_err());
        match p(&[&ev[..], &["--k", "1,10"]].concat()).unwrap().command {
            Command::Evaluate(a) => assert_eq!(a.k, vec![1, 10]),
            _ => unreachable!(),
        }
    }

    #[test]
    fn mix_parsing() {
        let m = parse_mix("1:2:3").unwrap();
        assert_eq!(m, vec![(Category::Plain2D, 1), (Category::Annotated2D, 2), (Category::Solid3D, 3)]);
        assert!(parse_mix("1:2").is_err());
        assert!(parse_mix("a:2:3").is_err());
    }
}
