//! Generate a small corpus and write it to a directory.
//!
//! cargo run --example generate_corpus -- [out_dir] [per_template] [seed]

use std::path::PathBuf;

use cfsc::generator::{build_dataset, std_templates, template_stats, write_dataset};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "corpus".into()));
    let per: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(5);
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(42);

    let templates = std_templates();
    let records = build_dataset(&templates, &vec![per; templates.len()], seed, 0)?;
    write_dataset(&out, &records)?;

    for (name, s) in template_stats(&records) {
        println!("{name:<20} {:>4} records {:>6} rejected draws", s.records, s.rejected);
    }
    println!("wrote {} records to {}", records.len(), out.display());
    Ok(())
}
