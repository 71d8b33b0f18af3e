//! Entity and annotation counts over a generated corpus.

use cfsc::eval::corpus_stats;
use cfsc::generator::{build_dataset, std_templates, write_dataset};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile_dir()?;
    let templates = std_templates();
    write_dataset(&dir, &build_dataset(&templates, &vec![10; templates.len()], 11, 0)?)?;

    let stats = corpus_stats(&dir.join("manifest.jsonl"))?;
    println!("records: {}", stats.records);
    for (k, v) in &stats.entities {
        println!("  {k:<12} {v}");
    }
    for (k, v) in &stats.annotations {
        println!("  {k:<12} {v}");
    }
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}

fn tempfile_dir() -> std::io::Result<std::path::PathBuf> {
    let d = std::env::temp_dir().join(format!("cfsc-stats-{}", std::process::id()));
    std::fs::create_dir_all(&d)?;
    Ok(d)
}
