//! List each family's parameters and size rules, then sample one part.

use cfsc::generator::{std_templates, RuleSource};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let name = std::env::args().nth(1);
    for t in std_templates() {
        if name.as_deref().is_some_and(|n| n != t.name) {
            continue;
        }
        println!("{} ({})", t.name, t.category.label());
        for p in &t.params {
            println!("  param {:<14} [{}, {}] step {}", p.name, p.min, p.max, p.step);
        }
        for r in &t.constraints {
            let tag = match r.source {
                RuleSource::Published(c) => format!("({c})"),
                RuleSource::ArtifactDefined => "   ".into(),
            };
            println!("  rule {tag} {}: {}", r.name, r.formula);
        }
        let free = t.sample_seeded(7)?;
        let full = t.complete(&free)?;
        println!("  sample: {}", t.prompt_for(&full)?);
        println!();
    }
    Ok(())
}
