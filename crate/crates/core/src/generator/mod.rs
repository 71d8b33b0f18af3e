//! Parent templates with randomized, constraint-checked parameters, and the
//! corpus builder that turns them into scripts, DXF files and prompts.

mod dataset;
mod families;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::SketchModel;

pub use dataset::*;
pub use families::{family_names, load_templates, std_templates, TemplateSource};

/// Rejections allowed before a template is declared over-constrained.
pub const MAX_ATTEMPTS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Category {
    #[serde(rename = "2D-plain")]
    Plain2D,
    #[serde(rename = "2D-annotated")]
    Annotated2D,
    #[serde(rename = "3D")]
    Solid3D,
}

impl Category {
    pub const ALL: [Category; 3] = [Category::Plain2D, Category::Annotated2D, Category::Solid3D];

    pub fn label(self) -> &'static str {
        match self {
            Category::Plain2D => "2D-plain",
            Category::Annotated2D => "2D-annotated",
            Category::Solid3D => "3D",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamKind {
    Real,
    Integer,
    /// 2D point; the range applies to each coordinate.
    Point,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamSpec {
    pub name: &'static str,
    pub kind: ParamKind,
    pub min: f64,
    pub max: f64,
    /// Grid spacing of sampled values.
    pub step: f64,
}

impl ParamSpec {
    pub const fn real(name: &'static str, min: f64, max: f64, step: f64) -> Self {
        ParamSpec { name, kind: ParamKind::Real, min, max, step }
    }

    pub const fn int(name: &'static str, min: f64, max: f64) -> Self {
        ParamSpec { name, kind: ParamKind::Integer, min, max, step: 1.0 }
    }

    pub const fn point(name: &'static str, min: f64, max: f64, step: f64) -> Self {
        ParamSpec { name, kind: ParamKind::Point, min, max, step }
    }

    fn draw(&self, rng: &mut impl Rng) -> f64 {
        let slots = ((self.max - self.min) / self.step + 1e-9).floor() as u64;
        round6(self.min + rng.gen_range(0..=slots) as f64 * self.step)
    }

    pub fn sample(&self, rng: &mut impl Rng) -> ParamValue {
        match self.kind {
            ParamKind::Point => ParamValue::Point(vec![self.draw(rng), self.draw(rng)]),
            _ => ParamValue::Num(self.draw(rng)),
        }
    }

    fn admits(&self, v: &ParamValue) -> bool {
        let ok = |x: f64| {
            x >= self.min - 1e-9
                && x <= self.max + 1e-9
                && (self.kind != ParamKind::Integer || x.fract() == 0.0)
        };
        match (self.kind, v) {
            (ParamKind::Point, ParamValue::Point(p)) => p.len() == 2 && p.iter().all(|&x| ok(x)),
            (ParamKind::Real | ParamKind::Integer, ParamValue::Num(x)) => ok(*x),
            _ => false,
        }
    }
}

/// A parameter value: a number, a point, or rows of arguments for list slots.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum ParamValue {
    Num(f64),
    Point(Vec<f64>),
    Rows(Vec<Vec<ParamValue>>),
}

impl ParamValue {
    pub fn pt(x: f64, y: f64) -> Self {
        ParamValue::Point(vec![round6(x), round6(y)])
    }

    pub fn pt3(x: f64, y: f64, z: f64) -> Self {
        ParamValue::Point(vec![round6(x), round6(y), round6(z)])
    }

    pub fn num(v: f64) -> Self {
        ParamValue::Num(round6(v))
    }

    /// Script text for the value. Rows render as comma-separated arguments.
    pub fn render(&self) -> String {
        match self {
            ParamValue::Num(v) => format_number(*v),
            ParamValue::Point(p) => format!("({})", p.iter().map(|v| format_number(*v)).collect::<Vec<_>>().join(", ")),
            ParamValue::Rows(rows) => rows
                .iter()
                .map(|r| r.iter().map(ParamValue::render).collect::<Vec<_>>().join(", "))
                .collect::<Vec<_>>()
                .join("; "),
        }
    }
}

/// Parameter name to value. Ordered, so serialization is canonical.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Assignment(pub BTreeMap<String, ParamValue>);

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: &str, v: ParamValue) -> Self {
        self.set(name, v);
        self
    }

    pub fn set(&mut self, name: &str, v: ParamValue) {
        self.0.insert(name.to_string(), v);
    }

    pub fn get(&self, name: &str) -> Option<&ParamValue> {
        self.0.get(name)
    }

    /// Numeric parameter; NaN if absent or not a number, which fails every rule.
    pub fn num(&self, name: &str) -> f64 {
        match self.0.get(name) {
            Some(ParamValue::Num(v)) => *v,
            _ => f64::NAN,
        }
    }

    pub fn point(&self, name: &str) -> (f64, f64) {
        match self.0.get(name) {
            Some(ParamValue::Point(p)) if p.len() >= 2 => (p[0], p[1]),
            _ => (f64::NAN, f64::NAN),
        }
    }

    pub fn rows(&self, name: &str) -> &[Vec<ParamValue>] {
        match self.0.get(name) {
            Some(ParamValue::Rows(r)) => r,
            _ => &[],
        }
    }

    fn merged(&self, other: &Assignment) -> Assignment {
        let mut m = self.clone();
        m.0.extend(other.0.iter().map(|(k, v)| (k.clone(), v.clone())));
        m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RuleSource {
    /// One of the published size constraints, labelled a to e.
    Published(char),
    /// Added so that every sample is a drawable, plausible part.
    ArtifactDefined,
}

#[derive(Clone)]
pub struct ConstraintRule {
    pub name: &'static str,
    pub formula: &'static str,
    pub source: RuleSource,
    pub check: fn(&Assignment) -> bool,
}

impl fmt::Debug for ConstraintRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} [{}]", self.name, self.formula)
    }
}

impl ConstraintRule {
    pub fn holds(&self, a: &Assignment) -> bool {
        (self.check)(a)
    }
}

/// A parametrized drawing: skeleton script with `${slot}` placeholders and
/// the rules that make an assignment legal.
#[derive(Clone)]
pub struct ParentTemplate {
    pub name: &'static str,
    pub category: Category,
    pub skeleton: String,
    pub params: Vec<ParamSpec>,
    /// Names of values computed from the free parameters.
    pub derived: &'static [&'static str],
    pub constraints: Vec<ConstraintRule>,
    pub prompt: &'static str,
    /// `(slot, text)`: the comment goes above the first line using the slot.
    pub comments: &'static [(&'static str, &'static str)],
    pub derive: fn(&Assignment) -> Assignment,
    /// Geometric check on the executed model.
    pub postcondition: fn(&Assignment, &SketchModel) -> Result<(), String>,
}

impl fmt::Debug for ParentTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ParentTemplate").field("name", &self.name).field("category", &self.category).finish()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeneratorError {
    #[error("{template}: constraint violation: {}", violated.join("; "))]
    ConstraintViolation { template: String, violated: Vec<String> },
    #[error("{template}: no legal assignment after {attempts} attempts")]
    SamplingExhausted { template: String, attempts: usize },
    #[error("{template}: parameter `{name}`: {message}")]
    BadParameter { template: String, name: String, message: String },
    #[error("{template}: template error: {message}")]
    Template { template: String, message: String },
    #[error("{template}: generated script fails: {message}")]
    Script { template: String, message: String },
    #[error("unknown template `{0}`")]
    UnknownTemplate(String),
    #[error("I/O error on {path}: {message}")]
    Io { path: String, message: String },
}

/// Rounds to 6 decimal places, the precision used for every emitted value.
pub fn round6(v: f64) -> f64 {
    let r = (v * 1e6).round() / 1e6;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

/// Up to 6 decimals with trailing zeros removed: 20, 12.5, -0.333333.
pub fn format_number(v: f64) -> String {
    let s = format!("{:.6}", round6(v));
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.to_string()
    }
}

/// A `${name}` or `${name[]}` placeholder found in text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Slot {
    pub name: String,
    pub list: bool,
    pub start: usize,
    pub end: usize,
}

pub fn find_slots(text: &str) -> Vec<Slot> {
    let mut out = Vec::new();
    let mut from = 0;
    while let Some(i) = text[from..].find("${") {
        let start = from + i;
        let Some(j) = text[start..].find('}') else { break };
        let end = start + j + 1;
        let inner = &text[start + 2..end - 1];
        let (name, list) = match inner.strip_suffix("[]") {
            Some(n) => (n, true),
            None => (inner, false),
        };
        out.push(Slot { name: name.to_string(), list, start, end });
        from = end;
    }
    out
}

impl ParentTemplate {
    fn err(&self, message: impl Into<String>) -> GeneratorError {
        GeneratorError::Template { template: self.name.to_string(), message: message.into() }
    }

    pub fn param(&self, name: &str) -> Option<&ParamSpec> {
        self.params.iter().find(|p| p.name == name)
    }

    /// Checks that every slot in skeleton, prompt and comments is declared.
    pub fn validate(&self) -> Result<(), GeneratorError> {
        let free: BTreeSet<&str> = self.params.iter().map(|p| p.name).collect();
        let known = |n: &str| free.contains(n) || self.derived.contains(&n);
        for line in self.skeleton.lines() {
            let slots = find_slots(line);
            if slots.iter().filter(|s| s.list).count() > 1 {
                return Err(self.err(format!("more than one list slot on line `{}`", line.trim())));
            }
            for s in &slots {
                if !known(&s.name) {
                    return Err(self.err(format!("skeleton slot `{}` is not a declared parameter", s.name)));
                }
            }
        }
        for s in find_slots(self.prompt) {
            if !known(&s.name) || s.list {
                return Err(self.err(format!("prompt slot `{}` is not a declared scalar parameter", s.name)));
            }
        }
        for (slot, _) in self.comments {
            if !find_slots(&self.skeleton).iter().any(|s| s.name == *slot) {
                return Err(self.err(format!("comment anchor `{slot}` does not occur in the skeleton")));
            }
        }
        Ok(())
    }

    /// Every rule the full assignment breaks, as `name: formula`.
    pub fn violations(&self, full: &Assignment) -> Vec<String> {
        self.constraints
            .iter()
            .filter(|r| !r.holds(full))
            .map(|r| format!("{}: {}", r.name, r.formula))
            .collect()
    }

    /// Free parameters plus everything derived from them.
    pub fn complete(&self, free: &Assignment) -> Result<Assignment, GeneratorError> {
        for spec in &self.params {
            let v = free.get(spec.name).ok_or_else(|| GeneratorError::BadParameter {
                template: self.name.into(),
                name: spec.name.into(),
                message: "missing".into(),
            })?;
            if !spec.admits(v) {
                return Err(GeneratorError::BadParameter {
                    template: self.name.into(),
                    name: spec.name.into(),
                    message: format!("value {} outside [{}, {}]", v.render(), spec.min, spec.max),
                });
            }
        }
        if let Some(extra) = free.0.keys().find(|k| self.param(k).is_none()) {
            return Err(GeneratorError::BadParameter {
                template: self.name.into(),
                name: extra.clone(),
                message: "not a free parameter of this template".into(),
            });
        }
        Ok(free.merged(&(self.derive)(free)))
    }

    /// Rejection sampling: uniform draws on each parameter's grid until
    /// every rule holds. Returns the free assignment.
    pub fn sample_assignment(&self, rng: &mut impl Rng) -> Result<Assignment, GeneratorError> {
        self.sample_counted(rng).map(|(a, _)| a)
    }

    /// Like [`Self::sample_assignment`], also returning how many draws were rejected.
    pub fn sample_counted(&self, rng: &mut impl Rng) -> Result<(Assignment, usize), GeneratorError> {
        for rejected in 0..MAX_ATTEMPTS {
            let free = Assignment(self.params.iter().map(|p| (p.name.to_string(), p.sample(rng))).collect());
            let full = free.merged(&(self.derive)(&free));
            if self.constraints.iter().all(|r| r.holds(&full)) {
                return Ok((free, rejected));
            }
        }
        Err(GeneratorError::SamplingExhausted { template: self.name.to_string(), attempts: MAX_ATTEMPTS })
    }

    pub fn sample_seeded(&self, seed: u64) -> Result<Assignment, GeneratorError> {
        self.sample_assignment(&mut ChaCha8Rng::seed_from_u64(seed))
    }

    /// Renders the script for a free assignment, rejecting illegal ones.
    pub fn instantiate(&self, free: &Assignment) -> Result<String, GeneratorError> {
        let full = self.complete(free)?;
        let violated = self.violations(&full);
        if !violated.is_empty() {
            return Err(GeneratorError::ConstraintViolation { template: self.name.to_string(), violated });
        }
        self.render(&full)
    }

    fn render(&self, full: &Assignment) -> Result<String, GeneratorError> {
        let mut lines: Vec<String> = self.skeleton.lines().map(str::to_string).collect();
        // comments go in bottom-up so earlier insertions do not shift later anchors
        let mut inserts: Vec<(usize, usize, String)> = Vec::new();
        for (order, (slot, text)) in self.comments.iter().enumerate() {
            let at = lines
                .iter()
                .position(|l| find_slots(l).iter().any(|s| s.name == *slot))
                .ok_or_else(|| self.err(format!("comment anchor `{slot}` not found")))?;
            let indent: String = lines[at].chars().take_while(|c| c.is_whitespace()).collect();
            inserts.push((at, order, format!("{indent}# {text}")));
        }
        inserts.sort_by(|a, b| b.0.cmp(&a.0).then(b.1.cmp(&a.1)));
        for (at, _, c) in inserts {
            lines.insert(at, c);
        }

        let mut out = String::new();
        for line in &lines {
            let slots = find_slots(line);
            match slots.iter().find(|s| s.list) {
                Some(list) => {
                    let rows = match full.get(&list.name) {
                        Some(ParamValue::Rows(r)) => r,
                        _ => return Err(self.err(format!("`{}` is not a list parameter", list.name))),
                    };
                    for row in rows {
                        let arg = row.iter().map(ParamValue::render).collect::<Vec<_>>().join(", ");
                        out.push_str(&self.fill(line, full, Some(arg.as_str()))?);
                        out.push('\n');
                    }
                }
                None => {
                    out.push_str(&self.fill(line, full, None)?);
                    out.push('\n');
                }
            }
        }
        Ok(out)
    }

    fn fill(&self, line: &str, full: &Assignment, row: Option<&str>) -> Result<String, GeneratorError> {
        let mut out = String::new();
        let mut last = 0;
        for s in find_slots(line) {
            out.push_str(&line[last..s.start]);
            if s.list {
                out.push_str(row.unwrap_or_default());
            } else {
                match full.get(&s.name) {
                    Some(v @ (ParamValue::Num(_) | ParamValue::Point(_))) => out.push_str(&v.render()),
                    _ => return Err(self.err(format!("no scalar value for slot `{}`", s.name))),
                }
            }
            last = s.end;
        }
        out.push_str(&line[last..]);
        Ok(out)
    }

    /// Natural-language request for the drawing.
    pub fn prompt_for(&self, full: &Assignment) -> Result<String, GeneratorError> {
        self.fill(self.prompt, full, None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_formatting() {
        assert_eq!(format_number(20.0), "20");
        assert_eq!(format_number(12.5), "12.5");
        assert_eq!(format_number(-1.0 / 3.0), "-0.333333");
        assert_eq!(format_number(-1e-9), "0");
        assert_eq!(format_number(0.1 + 0.2), "0.3");
    }

    #[test]
    fn slots_are_found() {
        let s = find_slots("add_arc(${rows[]}, r) + ${x}");
        assert_eq!(s.len(), 2);
        assert!(s[0].list && s[0].name == "rows");
        assert!(!s[1].list && s[1].name == "x");
    }

    #[test]
    fn grid_draws_stay_in_range() {
        let p = ParamSpec::real("r", 0.5, 2.0, 0.25);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut seen = BTreeSet::new();
        for _ in 0..500 {
            let ParamValue::Num(v) = p.sample(&mut rng) else { panic!() };
            assert!(p.admits(&ParamValue::Num(v)));
            assert_eq!(((v - 0.5) / 0.25).fract(), 0.0);
            seen.insert((v * 4.0) as i64);
        }
        assert_eq!(seen.len(), 7);
    }
}
