/// Structural checks on a DXF text, independent of the reader.
///
/// Returns every problem found; an empty list means the file is well formed:
/// a HEADER section first, balanced SECTION/ENDSEC, exactly one ENTITIES
/// section and `0 EOF` as the final pair.
pub fn lint_dxf(text: &str) -> Vec<String> {
    let mut issues = Vec::new();
    let body = text.strip_suffix('\n').unwrap_or(text);
    let lines: Vec<&str> = body.split('\n').map(|l| l.trim_end_matches('\r')).collect();
    if lines.len() % 2 == 1 {
        issues.push(format!("odd line count {}", lines.len()));
    }
    let mut pairs = Vec::new();
    for (n, c) in lines.chunks_exact(2).enumerate() {
        match c[0].trim().parse::<i32>() {
            Ok(code) => pairs.push((code, c[1].trim())),
            Err(_) => issues.push(format!("pair {n}: group code `{}` is not an integer", c[0])),
        }
    }

    let mut open: Option<&str> = None;
    let mut sections = Vec::new();
    let mut eof_at = None;
    for (i, &(code, v)) in pairs.iter().enumerate() {
        if code != 0 {
            continue;
        }
        match v {
            "SECTION" => {
                if let Some(s) = open {
                    issues.push(format!("SECTION opened inside unterminated {s} section"));
                }
                let name = match pairs.get(i + 1) {
                    Some((2, n)) => *n,
                    _ => {
                        issues.push("SECTION without a name".into());
                        "?"
                    }
                };
                open = Some(name);
                sections.push(name);
            }
            "ENDSEC" => {
                if open.take().is_none() {
                    issues.push("ENDSEC without SECTION".into());
                }
            }
            "EOF" => {
                eof_at.get_or_insert(i);
            }
            _ => {}
        }
    }
    if let Some(s) = open {
        issues.push(format!("{s} section is never closed"));
    }
    match sections.iter().filter(|s| **s == "ENTITIES").count() {
        1 => {}
        n => issues.push(format!("expected exactly one ENTITIES section, found {n}")),
    }
    if sections.first() != Some(&"HEADER") {
        issues.push("file does not begin with the HEADER section".into());
    }
    match eof_at {
        None => issues.push("missing EOF".into()),
        Some(i) if i + 1 != pairs.len() => issues.push("data after EOF".into()),
        _ => {}
    }
    issues
}
