use std::fmt::Write;

use super::*;
use crate::geometry::{Annotation, Entity, Point, SketchModel};

/// Group-code/value pairs of one entity, starting with the `0` record.
pub type EntityRecord = Vec<(i32, String)>;

#[derive(Debug, Clone, PartialEq)]
pub struct DxfDocument {
    /// `$INSUNITS` value; 4 is millimetres.
    pub insunits: i32,
    pub entities: Vec<EntityRecord>,
}

/// Six decimals, rounded half away from zero on `v / 1e-6` exactly like the
/// canonical form at that tolerance, so reading a file back never moves a
/// value into a neighbouring bucket.
fn real(v: f64) -> String {
    let k = (v / 1e-6).round();
    if k.abs() >= 1e15 {
        return format!("{v:.6}");
    }
    if k == 0.0 {
        // -0 and 0 must print identically for byte determinism
        return "0.000000".into();
    }
    let digits = format!("{:07}", k.abs() as u64);
    let (int, frac) = digits.split_at(digits.len() - 6);
    format!("{}{int}.{frac}", if k < 0.0 { "-" } else { "" })
}

struct Rec {
    pairs: EntityRecord,
}

impl Rec {
    fn new(kind: &str, handle: usize, layer: &str, subclass: &str) -> Rec {
        let mut pairs = vec![
            (0, kind.to_string()),
            (5, format!("{handle:X}")),
            (100, "AcDbEntity".into()),
            (8, layer.to_string()),
        ];
        if !subclass.is_empty() {
            pairs.push((100, subclass.into()));
        }
        Rec { pairs }
    }

    fn s(mut self, code: i32, v: impl Into<String>) -> Self {
        self.pairs.push((code, v.into()));
        self
    }

    fn r(self, code: i32, v: f64) -> Self {
        self.s(code, real(v))
    }

    fn i(self, code: i32, v: i64) -> Self {
        self.s(code, v.to_string())
    }

    /// Point on codes `base`, `base + 10`, `base + 20`.
    fn p(self, base: i32, p: Point) -> Self {
        self.r(base, p.x).r(base + 10, p.y).r(base + 20, p.z)
    }
}

const FIRST_ENTITY_HANDLE: usize = 0x100;

/// Serializes a model. Geometry goes on the GEOM layer, annotations on ANNOT.
pub fn write_dxf(model: &SketchModel) -> DxfDocument {
    let mut handle = FIRST_ENTITY_HANDLE;
    let mut next = || {
        handle += 1;
        handle
    };
    let mut entities = Vec::new();
    for e in &model.entities {
        entities.push(entity_record(e, next()).pairs);
    }
    for a in &model.annotations {
        entities.push(annotation_record(a, next()).pairs);
    }
    DxfDocument { insunits: 4, entities }
}

fn entity_record(e: &Entity, h: usize) -> Rec {
    let g = LAYER_GEOMETRY;
    match e {
        Entity::Line { start, end } => Rec::new("LINE", h, g, "AcDbLine").p(10, *start).p(11, *end),
        Entity::Circle { center, radius } => Rec::new("CIRCLE", h, g, "AcDbCircle").p(10, *center).r(40, *radius),
        Entity::Arc { center, radius, start_angle, end_angle } => Rec::new("ARC", h, g, "AcDbCircle")
            .p(10, *center)
            .r(40, *radius)
            .s(100, "AcDbArc")
            .r(50, *start_angle)
            .r(51, *end_angle),
        Entity::Polyline { vertices, closed } => {
            let mut r = Rec::new("LWPOLYLINE", h, g, "AcDbPolyline")
                .i(90, vertices.len() as i64)
                .i(70, *closed as i64)
                .r(38, vertices[0].z);
            for v in vertices {
                r = r.r(10, v.x).r(20, v.y);
            }
            r
        }
        Entity::Text { position, height, content } => text(h, g, *position, *height, content),
        Entity::Face3D { vertices } => {
            let mut r = Rec::new("3DFACE", h, g, "AcDbFace");
            for i in 0..4 {
                r = r.p(10 + i as i32, vertices[i.min(vertices.len() - 1)]);
            }
            r
        }
    }
}

fn text(h: usize, layer: &str, position: Point, height: f64, content: &str) -> Rec {
    Rec::new("TEXT", h, layer, "AcDbText")
        .p(10, position)
        .r(40, height)
        .s(1, escape_text(content))
        .s(100, "AcDbText")
}

const ANNOTATION_TEXT_HEIGHT: f64 = 2.5;

fn dimension(h: usize) -> Rec {
    Rec::new("DIMENSION", h, LAYER_ANNOTATION, "AcDbDimension").s(2, "").s(3, "STANDARD")
}

fn annotation_record(a: &Annotation, h: usize) -> Rec {
    let note = |p: Point, s: String| text(h, LAYER_ANNOTATION, p, ANNOTATION_TEXT_HEIGHT, &s);
    match a {
        Annotation::Linear { p1, p2, offset, measured } => {
            let (dir, normal) = direction(*p1, *p2);
            let line_pt = p2.add(normal.scale(*offset));
            let mid = p1.add(p2.sub(*p1).scale(0.5)).add(normal.scale(*offset));
            dimension(h)
                .p(10, line_pt)
                .p(11, mid)
                .i(70, 0)
                .r(42, *measured)
                .s(100, "AcDbAlignedDimension")
                .p(13, *p1)
                .p(14, *p2)
                .r(50, dir.y.atan2(dir.x).to_degrees())
                .s(100, "AcDbRotatedDimension")
        }
        Annotation::Radius { center, radius } => {
            let rim = center.add(Point::new(*radius, 0.0));
            dimension(h)
                .p(10, *center)
                .p(11, center.add(Point::new(radius / 2.0, 0.0)))
                .i(70, 4)
                .r(42, *radius)
                .s(100, "AcDbRadialDimension")
                .p(15, rim)
                .r(40, 0.0)
        }
        Annotation::Angular { vertex, p1, p2, measured_deg } => {
            let reach = 0.5 * p1.distance(*vertex).min(p2.distance(*vertex));
            let a1 = (p1.y - vertex.y).atan2(p1.x - vertex.x);
            let mid = a1 + measured_deg.to_radians() / 2.0;
            let arc_pt = vertex.add(Point::new(reach * mid.cos(), reach * mid.sin()));
            dimension(h)
                .p(10, arc_pt)
                .p(11, arc_pt)
                .i(70, 5)
                .r(42, measured_deg.to_radians())
                .s(100, "AcDb3PointAngularDimension")
                .p(13, *p1)
                .p(14, *p2)
                .p(15, *vertex)
        }
        Annotation::Tolerance { target, nominal, plus, minus } => {
            note(*target, format!("{TOLERANCE_PREFIX}{};{};{}", real(*nominal), real(*plus), real(*minus)))
        }
        Annotation::Chamfer { corner, size } => note(*corner, format!("{CHAMFER_PREFIX}{}", real(*size))),
        Annotation::Roughness { position, ra_value } => note(*position, format!("{ROUGHNESS_PREFIX}{}", real(*ra_value))),
    }
}

/// Unit direction from `p1` to `p2` and its left normal, in the XY plane.
pub(crate) fn direction(p1: Point, p2: Point) -> (Point, Point) {
    let d = Point::new(p2.x - p1.x, p2.y - p1.y);
    let n = d.norm();
    if n == 0.0 {
        (Point::new(1.0, 0.0), Point::new(0.0, 1.0))
    } else {
        let u = d.scale(1.0 / n);
        (u, Point::new(-u.y, u.x))
    }
}

impl DxfDocument {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut pair = |code: i32, v: &str| {
            let _ = write!(out, "{code:>3}\n{v}\n");
        };
        let handseed = FIRST_ENTITY_HANDLE + self.entities.len() + 1;
        for (c, v) in [
            (0, "SECTION"),
            (2, "HEADER"),
            (9, "$ACADVER"),
            (1, ACAD_VERSION),
            (9, "$INSUNITS"),
            (70, &self.insunits.to_string()),
            (9, "$HANDSEED"),
            (5, &format!("{handseed:X}")),
            (0, "ENDSEC"),
            (0, "SECTION"),
            (2, "TABLES"),
            (0, "TABLE"),
            (2, "LAYER"),
            (5, "2"),
            (100, "AcDbSymbolTable"),
            (70, "3"),
        ] {
            pair(c, v);
        }
        for (i, layer) in ["0", LAYER_GEOMETRY, LAYER_ANNOTATION].iter().enumerate() {
            for (c, v) in [
                (0, "LAYER"),
                (5, &format!("{:X}", 0x10 + i)),
                (100, "AcDbSymbolTableRecord"),
                (100, "AcDbLayerTableRecord"),
                (2, layer),
                (70, "0"),
                (62, if i == 2 { "1" } else { "7" }),
                (6, "CONTINUOUS"),
            ] {
                pair(c, v);
            }
        }
        for (c, v) in [(0, "ENDTAB"), (0, "ENDSEC"), (0, "SECTION"), (2, "ENTITIES")] {
            pair(c, v);
        }
        for rec in &self.entities {
            for (c, v) in rec {
                pair(*c, v);
            }
        }
        pair(0, "ENDSEC");
        pair(0, "EOF");
        out
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        self.to_text().into_bytes()
    }
}
