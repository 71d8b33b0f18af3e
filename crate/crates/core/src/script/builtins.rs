use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arity {
    Exact(usize),
    AtLeast(usize),
}

impl fmt::Display for Arity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Arity::Exact(n) => write!(f, "{n}"),
            Arity::AtLeast(n) => write!(f, "at least {n}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BuiltinKind {
    Entity,
    Annotation,
    Solid,
}

#[derive(Debug, Clone, Copy)]
pub struct Builtin {
    pub name: &'static str,
    pub arity: Arity,
    pub kind: BuiltinKind,
    pub signature: &'static str,
}

const fn b(name: &'static str, arity: Arity, kind: BuiltinKind, signature: &'static str) -> Builtin {
    Builtin { name, arity, kind, signature }
}

use Arity::*;
use BuiltinKind::*;

/// Drawing vocabulary available to scripts.
pub const BUILTINS: &[Builtin] = &[
    b("add_line", Exact(2), Entity, "add_line(start, end)"),
    b("add_circle", Exact(2), Entity, "add_circle(center, radius)"),
    b("add_arc", Exact(4), Entity, "add_arc(center, radius, start_deg, end_deg)"),
    b("add_lwpolyline", AtLeast(3), Entity, "add_lwpolyline(closed, p1, p2, ...)"),
    b("add_text", Exact(3), Entity, "add_text(position, height, \"content\")"),
    b("dim_linear", Exact(3), Annotation, "dim_linear(p1, p2, offset)"),
    b("dim_radius", Exact(2), Annotation, "dim_radius(center, radius)"),
    b("dim_angular", Exact(3), Annotation, "dim_angular(vertex, p1, p2)"),
    b("annotate_tolerance", Exact(4), Annotation, "annotate_tolerance(target, nominal, plus, minus)"),
    b("annotate_chamfer", Exact(2), Annotation, "annotate_chamfer(corner, size)"),
    b("annotate_roughness", Exact(2), Annotation, "annotate_roughness(position, ra)"),
    b("extrude_polygon", AtLeast(4), Solid, "extrude_polygon(height, p1, p2, p3, ...)"),
    b("revolve_profile", AtLeast(3), Solid, "revolve_profile(segments, (r1, z1), (r2, z2), ...)"),
];

pub fn builtin(name: &str) -> Option<&'static Builtin> {
    BUILTINS.iter().find(|b| b.name == name)
}

pub fn is_annotation_builtin(name: &str) -> bool {
    builtin(name).is_some_and(|b| b.kind == Annotation)
}
