use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::ast::*;
use super::builtins::builtin;
use crate::geometry::{
    extrude_polygon, revolve_profile, Annotation, Entity, GeometryError, Point, SketchModel, POSITION_TOLERANCE,
};

/// Runtime value. Tuples hold 2 or 3 components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Number(f64),
    Tuple(Vec<f64>),
    Str(String),
}

impl Value {
    fn type_name(&self) -> &'static str {
        match self {
            Value::Number(_) => "number",
            Value::Tuple(_) => "tuple",
            Value::Str(_) => "string",
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Number(v) => write!(f, "{v}"),
            Value::Tuple(v) => {
                let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
                write!(f, "({})", parts.join(", "))
            }
            Value::Str(s) => write!(f, "{s:?}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RuntimeErrorKind {
    #[error("division by zero")]
    DivisionByZero,
    #[error("radius must be positive, got {0}")]
    NonPositiveRadius(f64),
    #[error("unbound identifier `{0}`")]
    UnboundIdentifier(String),
    #[error("{0} annotation does not reference any drawn geometry")]
    DanglingAnnotation(&'static str),
    #[error("type mismatch in {context}: expected {expected}, found {found}")]
    TypeMismatch { context: String, expected: &'static str, found: &'static str },
    #[error("arithmetic produced a non-finite value")]
    NonFinite,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("runtime error at line {span}: {kind}")]
pub struct RuntimeError {
    pub kind: RuntimeErrorKind,
    pub span: Span,
}

/// One executed call with its evaluated arguments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CallRecord {
    pub callee: String,
    pub args: Vec<Value>,
}

#[derive(Debug, Clone)]
pub struct Execution {
    pub model: SketchModel,
    /// Path named by the save directive; no file is written here.
    pub save_path: Option<String>,
}

/// Result of a traced run. The trace covers every call made before a failure.
#[derive(Debug, Clone)]
pub struct TracedRun {
    pub trace: Vec<CallRecord>,
    pub result: Result<Execution, RuntimeError>,
}

/// Executes a parsed program into a sketch model.
pub fn execute(prog: &ScriptProgram) -> Result<SketchModel, RuntimeError> {
    execute_traced(prog).result.map(|e| e.model)
}

pub fn execute_traced(prog: &ScriptProgram) -> TracedRun {
    let mut it = Interp { prog, model: SketchModel::new(), ann_spans: Vec::new(), trace: Vec::new(), save: None };
    let result = it.run();
    TracedRun {
        trace: it.trace,
        result: result.map(|()| Execution { model: it.model, save_path: it.save }),
    }
}

struct Interp<'p> {
    prog: &'p ScriptProgram,
    model: SketchModel,
    ann_spans: Vec<Span>,
    trace: Vec<CallRecord>,
    save: Option<String>,
}

type Env = HashMap<String, Value>;

fn err(kind: impl Into<RuntimeErrorKind>, span: Span) -> RuntimeError {
    RuntimeError { kind: kind.into(), span }
}

impl<'p> Interp<'p> {
    fn run(&mut self) -> Result<(), RuntimeError> {
        let mut env = Env::new();
        self.block(&self.prog.main.body, &mut env)?;
        if let Some(i) = self.model.dangling_annotations(POSITION_TOLERANCE).first() {
            let kind = self.model.annotations[*i].kind().name();
            return Err(err(RuntimeErrorKind::DanglingAnnotation(kind), self.ann_spans[*i]));
        }
        Ok(())
    }

    fn block(&mut self, body: &'p [Statement], env: &mut Env) -> Result<(), RuntimeError> {
        for s in body {
            match &s.kind {
                StmtKind::Comment(_) => {}
                StmtKind::Save(p) => self.save = Some(p.clone()),
                StmtKind::Assign { name, value } => {
                    let v = eval(value, env, s.span)?;
                    env.insert(name.clone(), v);
                }
                StmtKind::Call { callee, args } => {
                    let vals = args.iter().map(|a| eval(a, env, s.span)).collect::<Result<Vec<_>, _>>()?;
                    self.trace.push(CallRecord { callee: callee.clone(), args: vals.clone() });
                    if let Some(f) = self.prog.function(callee) {
                        let mut local: Env = f.params.iter().cloned().zip(vals).collect();
                        self.block(&f.body, &mut local)?;
                    } else {
                        self.call_builtin(callee, &vals, s.span)?;
                    }
                }
            }
        }
        Ok(())
    }

    fn call_builtin(&mut self, name: &str, a: &[Value], span: Span) -> Result<(), RuntimeError> {
        debug_assert!(builtin(name).is_some(), "parser admits only known callees");
        let geo = |r: Result<Entity, GeometryError>| r.map_err(|e| geometry_err(e, span));
        let pt = |i: usize| as_point(&a[i], name, span);
        let num = |i: usize| as_number(&a[i], name, span);
        match name {
            "add_line" => self.model.push(geo(Entity::line(pt(0)?, pt(1)?))?),
            "add_circle" => self.model.push(geo(Entity::circle(pt(0)?, num(1)?))?),
            "add_arc" => self.model.push(geo(Entity::arc(pt(0)?, num(1)?, num(2)?, num(3)?))?),
            "add_lwpolyline" => {
                let closed = num(0)? != 0.0;
                let pts = (1..a.len()).map(pt).collect::<Result<Vec<_>, _>>()?;
                self.model.push(geo(Entity::polyline(pts, closed))?);
            }
            "add_text" => {
                let Value::Str(s) = &a[2] else {
                    return Err(mismatch(name, "string", &a[2], span));
                };
                self.model.push(geo(Entity::text(pt(0)?, num(1)?, s.clone()))?);
            }
            "extrude_polygon" => {
                let pts = (1..a.len()).map(pt).collect::<Result<Vec<_>, _>>()?;
                let faces = extrude_polygon(num(0)?, &pts).map_err(|e| geometry_err(e, span))?;
                self.model.entities.extend(faces);
            }
            "revolve_profile" => {
                let seg = num(0)?;
                if seg.fract() != 0.0 || seg < 3.0 {
                    return Err(err(GeometryError::Invalid(format!("segment count must be an integer >= 3, got {seg}")), span));
                }
                let prof = (1..a.len())
                    .map(|i| match &a[i] {
                        Value::Tuple(v) if v.len() == 2 => Ok((v[0], v[1])),
                        other => Err(mismatch(name, "(r, z) pair", other, span)),
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                let faces = revolve_profile(seg as usize, &prof).map_err(|e| geometry_err(e, span))?;
                self.model.entities.extend(faces);
            }
            _ => {
                let ann = match name {
                    "dim_linear" => Annotation::linear(pt(0)?, pt(1)?, num(2)?),
                    "dim_radius" => Annotation::radius(pt(0)?, num(1)?),
                    "dim_angular" => Annotation::angular(pt(0)?, pt(1)?, pt(2)?),
                    "annotate_tolerance" => Annotation::tolerance(pt(0)?, num(1)?, num(2)?, num(3)?),
                    "annotate_chamfer" => Annotation::chamfer(pt(0)?, num(1)?),
                    "annotate_roughness" => Annotation::roughness(pt(0)?, num(1)?),
                    other => unreachable!("unknown builtin {other}"),
                }
                .map_err(|e| geometry_err(e, span))?;
                self.model.annotate(ann);
                self.ann_spans.push(span);
            }
        }
        Ok(())
    }
}

fn geometry_err(e: GeometryError, span: Span) -> RuntimeError {
    match e {
        GeometryError::NonPositiveRadius(r) => err(RuntimeErrorKind::NonPositiveRadius(r), span),
        other => err(other, span),
    }
}

fn mismatch(ctx: &str, expected: &'static str, found: &Value, span: Span) -> RuntimeError {
    err(RuntimeErrorKind::TypeMismatch { context: ctx.to_string(), expected, found: found.type_name() }, span)
}

fn as_point(v: &Value, ctx: &str, span: Span) -> Result<Point, RuntimeError> {
    match v {
        Value::Tuple(t) if t.len() == 2 => Ok(Point::new(t[0], t[1])),
        Value::Tuple(t) if t.len() == 3 => Ok(Point::new3(t[0], t[1], t[2])),
        other => Err(mismatch(ctx, "point", other, span)),
    }
}

fn as_number(v: &Value, ctx: &str, span: Span) -> Result<f64, RuntimeError> {
    match v {
        Value::Number(n) => Ok(*n),
        other => Err(mismatch(ctx, "number", other, span)),
    }
}

fn finite(v: f64, span: Span) -> Result<f64, RuntimeError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(err(RuntimeErrorKind::NonFinite, span))
    }
}

fn eval(e: &Expr, env: &Env, span: Span) -> Result<Value, RuntimeError> {
    Ok(match e {
        Expr::Number(v) => Value::Number(*v),
        Expr::Str(s) => Value::Str(s.clone()),
        Expr::Ident(name) => env
            .get(name)
            .cloned()
            .ok_or_else(|| err(RuntimeErrorKind::UnboundIdentifier(name.clone()), span))?,
        Expr::Tuple(items) => Value::Tuple(
            items
                .iter()
                .map(|i| match eval(i, env, span)? {
                    Value::Number(n) => Ok(n),
                    other => Err(mismatch("tuple", "number", &other, span)),
                })
                .collect::<Result<_, _>>()?,
        ),
        Expr::Neg(inner) => match eval(inner, env, span)? {
            Value::Number(n) => Value::Number(-n),
            Value::Tuple(t) => Value::Tuple(t.into_iter().map(|x| -x).collect()),
            other => return Err(mismatch("negation", "number or tuple", &other, span)),
        },
        Expr::Binary { op, lhs, rhs } => {
            let (l, r) = (eval(lhs, env, span)?, eval(rhs, env, span)?);
            binary(*op, l, r, span)?
        }
    })
}

fn binary(op: BinOp, l: Value, r: Value, span: Span) -> Result<Value, RuntimeError> {
    let scalar = |a: f64, b: f64| -> Result<f64, RuntimeError> {
        let v = match op {
            BinOp::Add => a + b,
            BinOp::Sub => a - b,
            BinOp::Mul => a * b,
            BinOp::Div if b == 0.0 => return Err(err(RuntimeErrorKind::DivisionByZero, span)),
            BinOp::Div => a / b,
        };
        finite(v, span)
    };
    let ctx = format!("`{}`", op.symbol());
    match (l, r) {
        (Value::Number(a), Value::Number(b)) => Ok(Value::Number(scalar(a, b)?)),
        (Value::Tuple(a), Value::Tuple(b)) if matches!(op, BinOp::Add | BinOp::Sub) => {
            if a.len() != b.len() {
                return Err(err(
                    RuntimeErrorKind::TypeMismatch { context: ctx, expected: "tuples of equal length", found: "tuple" },
                    span,
                ));
            }
            Ok(Value::Tuple(a.iter().zip(&b).map(|(x, y)| scalar(*x, *y)).collect::<Result<_, _>>()?))
        }
        (Value::Tuple(a), Value::Number(k)) if matches!(op, BinOp::Mul | BinOp::Div) => {
            Ok(Value::Tuple(a.iter().map(|x| scalar(*x, k)).collect::<Result<_, _>>()?))
        }
        (Value::Number(k), Value::Tuple(a)) if op == BinOp::Mul => {
            Ok(Value::Tuple(a.iter().map(|x| scalar(k, *x)).collect::<Result<_, _>>()?))
        }
        (l, r) => {
            let found = if l.type_name() == "number" { r.type_name() } else { l.type_name() };
            Err(err(RuntimeErrorKind::TypeMismatch { context: ctx, expected: "compatible operands", found }, span))
        }
    }
}
