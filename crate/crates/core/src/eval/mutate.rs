use crate::script::{is_annotation_builtin, BinOp, Expr, ScriptProgram, Statement, StmtKind};

/// Builtins taking a radius, with the radius argument's position.
pub const RADIUS_ARGUMENTS: &[(&str, usize)] = &[("add_circle", 1), ("add_arc", 1), ("dim_radius", 1)];

fn statements_mut(prog: &mut ScriptProgram) -> impl Iterator<Item = &mut Statement> {
    prog.functions.iter_mut().flat_map(|f| f.body.iter_mut()).chain(prog.main.body.iter_mut())
}

/// Multiplies every radius argument by `factor` by wrapping the argument
/// expression. Returns the mutated copy and the number of call sites touched.
pub fn scale_radii(prog: &ScriptProgram, factor: f64) -> (ScriptProgram, usize) {
    let mut out = prog.clone();
    let mut n = 0;
    for s in statements_mut(&mut out) {
        if let StmtKind::Call { callee, args } = &mut s.kind {
            if let Some(&(_, i)) = RADIUS_ARGUMENTS.iter().find(|(name, _)| name == callee) {
                if let Some(a) = args.get_mut(i) {
                    *a = Expr::binary(BinOp::Mul, a.clone(), Expr::Number(factor));
                    n += 1;
                }
            }
        }
    }
    (out, n)
}

/// Rewrites the first annotation call into a different annotation kind
/// anchored at the same point: anything becomes a roughness mark, and a
/// roughness mark becomes a chamfer note. `None` if there is no annotation.
pub fn swap_annotation_type(prog: &ScriptProgram) -> Option<ScriptProgram> {
    let mut out = prog.clone();
    let s = statements_mut(&mut out)
        .find(|s| matches!(&s.kind, StmtKind::Call { callee, .. } if is_annotation_builtin(callee)))?;
    let StmtKind::Call { callee, args } = &mut s.kind else { unreachable!() };
    let anchor = args.first()?.clone();
    *callee = if callee == "annotate_roughness" { "annotate_chamfer" } else { "annotate_roughness" }.to_string();
    *args = vec![anchor, Expr::Number(1.0)];
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{AnnotationKind, Entity};
    use crate::script::{execute, parse, pretty_print};

    const SRC: &str = "fn ring(c, r) {\n    add_circle(c, r)\n    dim_radius(c, r)\n}\nmain {\n    ring((0, 0), 10)\n    add_arc((0, 0), 20, 0, 90)\n    annotate_roughness((20, 0), 3.2)\n    save \"r.dxf\"\n}\n";

    #[test]
    fn radii_grow_by_the_factor() {
        let p = parse(SRC).unwrap();
        let (m, n) = scale_radii(&p, 1.1);
        assert_eq!(n, 3);
        let before = execute(&p).unwrap();
        // the roughness mark at (20, 0) no longer sits on the arc
        assert!(execute(&m).is_err());
        let no_mark = parse(&SRC.replace("    annotate_roughness((20, 0), 3.2)\n", "")).unwrap();
        let after = execute(&scale_radii(&no_mark, 1.1).0).unwrap();
        let radius = |e: &Entity| match e {
            Entity::Circle { radius, .. } | Entity::Arc { radius, .. } => *radius,
            _ => 0.0,
        };
        for (a, b) in before.entities.iter().zip(&after.entities) {
            assert!((radius(b) - 1.1 * radius(a)).abs() < 1e-12);
        }
        // still printable and parseable
        assert_eq!(parse(&pretty_print(&m)).unwrap(), m);
    }

    #[test]
    fn first_annotation_changes_kind() {
        let p = parse(SRC).unwrap();
        let m = execute(&swap_annotation_type(&p).unwrap()).unwrap();
        let kinds: Vec<_> = m.annotations.iter().map(|a| a.kind()).collect();
        assert_eq!(kinds, vec![AnnotationKind::Roughness, AnnotationKind::Roughness]);
        let rough = parse("main {\n    add_line((0, 0), (1, 0))\n    annotate_roughness((0, 0), 1.6)\n    save \"a.dxf\"\n}\n").unwrap();
        let m = execute(&swap_annotation_type(&rough).unwrap()).unwrap();
        assert_eq!(m.annotations[0].kind(), AnnotationKind::Chamfer);
        assert!(swap_annotation_type(&parse("main {\n    add_line((0, 0), (1, 0))\n}\n").unwrap()).is_none());
    }
}
