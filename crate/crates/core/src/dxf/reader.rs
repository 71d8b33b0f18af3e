use std::collections::BTreeMap;

use super::writer::direction;
use super::*;
use crate::geometry::{Annotation, Entity, GeometryError, Point, SketchModel};

/// Model recovered from a DXF file plus the entity types that were ignored.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DxfRead {
    pub model: SketchModel,
    pub skipped: BTreeMap<String, usize>,
}

/// Splits text into group-code/value pairs. Accepts LF or CR/LF line ends.
pub fn parse_pairs(text: &str) -> Result<Vec<(i32, String)>, DxfError> {
    let mut lines: Vec<&str> = text.split('\n').map(|l| l.strip_suffix('\r').unwrap_or(l)).collect();
    if lines.last() == Some(&"") {
        lines.pop();
    }
    if lines.len() % 2 != 0 {
        return Err(DxfError::Malformed(format!("odd number of lines ({})", lines.len())));
    }
    lines
        .chunks(2)
        .enumerate()
        .map(|(i, c)| {
            let code = c[0].trim().parse::<i32>().map_err(|_| {
                DxfError::Malformed(format!("line {}: group code `{}` is not an integer", 2 * i + 1, c[0].trim()))
            })?;
            Ok((code, c[1].to_string()))
        })
        .collect()
}

/// Reads the supported entity subset back into a model.
pub fn read_dxf(bytes: &[u8]) -> Result<DxfRead, DxfError> {
    let text = std::str::from_utf8(bytes).map_err(|e| DxfError::Malformed(format!("not UTF-8: {e}")))?;
    let pairs = parse_pairs(text)?;
    match pairs.last() {
        Some((0, v)) if v.trim() == "EOF" => {}
        _ => return Err(DxfError::Malformed("missing EOF".into())),
    }
    let is = |i: usize, code: i32, v: &str| pairs.get(i).is_some_and(|(c, s)| *c == code && s.trim() == v);
    let start = (0..pairs.len())
        .find(|&i| is(i, 0, "SECTION") && is(i + 1, 2, "ENTITIES"))
        .ok_or_else(|| DxfError::Malformed("no ENTITIES section".into()))?
        + 2;
    let end = (start..pairs.len())
        .find(|&i| is(i, 0, "ENDSEC"))
        .ok_or_else(|| DxfError::Malformed("unterminated ENTITIES section".into()))?;

    let mut out = DxfRead::default();
    let mut i = start;
    while i < end {
        if pairs[i].0 != 0 {
            return Err(DxfError::Malformed(format!("entity starts with group code {}", pairs[i].0)));
        }
        let j = (i + 1..end).find(|&j| pairs[j].0 == 0).unwrap_or(end);
        let rec = Record { kind: pairs[i].1.trim(), pairs: &pairs[i + 1..j] };
        match rec.decode()? {
            Decoded::Entity(e) => out.model.push(e),
            Decoded::Annotation(a) => out.model.annotate(a),
            Decoded::Skip => *out.skipped.entry(rec.kind.to_string()).or_insert(0) += 1,
        }
        i = j;
    }
    Ok(out)
}

enum Decoded {
    Entity(Entity),
    Annotation(Annotation),
    Skip,
}

struct Record<'a> {
    kind: &'a str,
    pairs: &'a [(i32, String)],
}

impl Record<'_> {
    fn err(&self, message: impl Into<String>) -> DxfError {
        DxfError::BadEntity { entity: self.kind.to_string(), message: message.into() }
    }

    fn geo(&self, e: GeometryError) -> DxfError {
        self.err(e.to_string())
    }

    fn raw(&self, code: i32) -> Option<&str> {
        self.pairs.iter().find(|(c, _)| *c == code).map(|(_, v)| v.as_str())
    }

    fn opt(&self, code: i32) -> Result<Option<f64>, DxfError> {
        self.raw(code)
            .map(|v| v.trim().parse::<f64>().map_err(|_| self.err(format!("group {code}: `{v}` is not a number"))))
            .transpose()
    }

    fn real(&self, code: i32) -> Result<f64, DxfError> {
        self.opt(code)?.ok_or_else(|| self.err(format!("missing group {code}")))
    }

    fn point(&self, base: i32) -> Result<Point, DxfError> {
        Ok(Point::new3(self.real(base)?, self.real(base + 10)?, self.opt(base + 20)?.unwrap_or(0.0)))
    }

    fn int(&self, code: i32) -> Result<Option<i64>, DxfError> {
        self.raw(code)
            .map(|v| v.trim().parse::<i64>().map_err(|_| self.err(format!("group {code}: `{v}` is not an integer"))))
            .transpose()
    }

    fn layer(&self) -> &str {
        self.raw(8).map(str::trim).unwrap_or("0")
    }

    fn decode(&self) -> Result<Decoded, DxfError> {
        let g = |r: Result<Entity, GeometryError>| r.map(Decoded::Entity).map_err(|e| self.geo(e));
        let a = |r: Result<Annotation, GeometryError>| r.map(Decoded::Annotation).map_err(|e| self.geo(e));
        match self.kind {
            "LINE" => g(Entity::line(self.point(10)?, self.point(11)?)),
            "CIRCLE" => g(Entity::circle(self.point(10)?, self.real(40)?)),
            "ARC" => g(Entity::arc(self.point(10)?, self.real(40)?, self.real(50)?, self.real(51)?)),
            "LWPOLYLINE" => {
                let z = self.opt(38)?.unwrap_or(0.0);
                let xs: Vec<&str> = self.pairs.iter().filter(|p| p.0 == 10).map(|p| p.1.as_str()).collect();
                let ys: Vec<&str> = self.pairs.iter().filter(|p| p.0 == 20).map(|p| p.1.as_str()).collect();
                if xs.len() != ys.len() {
                    return Err(self.err("unpaired vertex coordinates"));
                }
                let num = |s: &str| s.trim().parse::<f64>().map_err(|_| self.err(format!("`{s}` is not a number")));
                let vertices = xs
                    .iter()
                    .zip(&ys)
                    .map(|(x, y)| Ok(Point::new3(num(x)?, num(y)?, z)))
                    .collect::<Result<Vec<_>, DxfError>>()?;
                let closed = self.int(70)?.unwrap_or(0) & 1 == 1;
                g(Entity::polyline(vertices, closed))
            }
            "TEXT" => {
                let pos = self.point(10)?;
                let content = unescape_text(self.raw(1).unwrap_or(""));
                if self.layer() == LAYER_ANNOTATION {
                    if let Some(ann) = annotation_from_text(pos, &content) {
                        return a(ann);
                    }
                }
                g(Entity::text(pos, self.real(40)?, content))
            }
            "3DFACE" => {
                let mut v = (0..4).map(|i| self.point(10 + i)).collect::<Result<Vec<_>, _>>()?;
                if v[3] == v[2] {
                    v.pop();
                }
                g(Entity::face(v))
            }
            "DIMENSION" => match self.int(70)?.unwrap_or(0) & 0x07 {
                0 | 1 => {
                    let (p1, p2) = (self.point(13)?, self.point(14)?);
                    let (_, normal) = direction(p1, p2);
                    let offset = self.point(10)?.sub(p2).dot(normal);
                    a(Annotation::linear(p1, p2, offset))
                }
                4 => {
                    let center = self.point(10)?;
                    let r = match self.opt(42)? {
                        Some(r) => r,
                        None => center.distance(self.point(15)?),
                    };
                    a(Annotation::radius(center, r))
                }
                5 => a(Annotation::angular(self.point(15)?, self.point(13)?, self.point(14)?)),
                _ => Ok(Decoded::Skip),
            },
            _ => Ok(Decoded::Skip),
        }
    }
}

fn annotation_from_text(pos: Point, s: &str) -> Option<Result<Annotation, GeometryError>> {
    let num = |t: &str| t.trim().parse::<f64>().ok();
    if let Some(rest) = s.strip_prefix(TOLERANCE_PREFIX) {
        let v: Vec<f64> = rest.split(';').map(num).collect::<Option<_>>()?;
        if let [nominal, plus, minus] = v[..] {
            return Some(Annotation::tolerance(pos, nominal, plus, minus));
        }
        return None;
    }
    if let Some(rest) = s.strip_prefix(ROUGHNESS_PREFIX) {
        return num(rest).map(|v| Annotation::roughness(pos, v));
    }
    if let Some(rest) = s.strip_prefix(CHAMFER_PREFIX) {
        return num(rest).map(|v| Annotation::chamfer(pos, v));
    }
    None
}
