use std::fmt::{self, Write};

use super::ast::*;

/// Renders a program in the canonical layout: four-space indents, one blank line between items.
pub fn pretty_print(prog: &ScriptProgram) -> String {
    prog.to_string()
}

impl fmt::Display for ScriptProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in &self.imports {
            writeln!(f, "use {}", i.name)?;
        }
        if !self.imports.is_empty() {
            writeln!(f)?;
        }
        for func in &self.functions {
            writeln!(f, "fn {}({}) {{", func.name, func.params.join(", "))?;
            write_body(f, &func.body)?;
            writeln!(f, "}}")?;
            writeln!(f)?;
        }
        writeln!(f, "main {{")?;
        write_body(f, &self.main.body)?;
        writeln!(f, "}}")
    }
}

fn write_body(f: &mut fmt::Formatter<'_>, body: &[Statement]) -> fmt::Result {
    for s in body {
        f.write_str("    ")?;
        match &s.kind {
            StmtKind::Assign { name, value } => writeln!(f, "{name} = {value}")?,
            StmtKind::Call { callee, args } => writeln!(f, "{callee}({})", join(args))?,
            StmtKind::Comment(text) => writeln!(f, "# {text}")?,
            StmtKind::Save(path) => writeln!(f, "save {}", quote(path))?,
        }
    }
    Ok(())
}

fn join(args: &[Expr]) -> String {
    let mut s = String::new();
    for (i, a) in args.iter().enumerate() {
        if i > 0 {
            s.push_str(", ");
        }
        let _ = write!(s, "{a}");
    }
    s
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            // shortest representation that parses back to the same f64
            Expr::Number(v) => write!(f, "{v}"),
            Expr::Str(s) => f.write_str(&quote(s)),
            Expr::Ident(s) => f.write_str(s),
            Expr::Tuple(items) => write!(f, "({})", join(items)),
            Expr::Neg(inner) => match **inner {
                Expr::Binary { .. } => write!(f, "-({inner})"),
                _ => write!(f, "-{inner}"),
            },
            Expr::Binary { op, lhs, rhs } => {
                let p = op.precedence();
                let wrap_l = matches!(**lhs, Expr::Binary { op: l, .. } if l.precedence() < p);
                let wrap_r = matches!(**rhs, Expr::Binary { op: r, .. } if r.precedence() <= p);
                if wrap_l {
                    write!(f, "({lhs})")?;
                } else {
                    write!(f, "{lhs}")?;
                }
                write!(f, " {} ", op.symbol())?;
                if wrap_r {
                    write!(f, "({rhs})")
                } else {
                    write!(f, "{rhs}")
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::script::parse;

    #[test]
    fn round_trips_through_parser() {
        let src = "use cad\nfn f(a,b){\n  x = a-(b-1)*2/(3*4)\n  y = -(a+b) + -2\n # note\n  add_text((0,0,1), 2.5, \"say \\\"hi\\\"\")\n}\nmain {\n f((1,2),3)\n save \"out.dxf\"\n}\n";
        let p = parse(src).unwrap();
        let printed = pretty_print(&p);
        let again = parse(&printed).unwrap();
        assert_eq!(p, again);
        assert_eq!(printed, pretty_print(&again));
        assert!(printed.contains("x = a - (b - 1) * 2 / (3 * 4)"), "{printed}");
    }

    #[test]
    fn numbers_print_shortest() {
        assert_eq!(Expr::Number(0.1).to_string(), "0.1");
        assert_eq!(Expr::Number(35.0).to_string(), "35");
        assert_eq!(Expr::Number(1e-7).to_string(), "0.0000001");
    }
}
