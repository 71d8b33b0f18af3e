//! Entity and annotation model built by scripts and serialized to DXF.
//!
//! Everything here is immutable after construction. Constructors validate the
//! invariants (finite coordinates, positive radii, normalized angles) so that
//! downstream code can assume a well-formed [`SketchModel`].

mod canonical;
mod solid;

pub use canonical::{canonicalize, CanonicalForm, Descriptor, DescriptorKind};
pub use solid::{extrude_polygon, revolve_profile};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Distance under which a referenced coordinate counts as lying on geometry.
pub const POSITION_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("non-finite coordinate in {0}")]
    NonFinite(&'static str),
    #[error("radius must be positive, got {0}")]
    NonPositiveRadius(f64),
    #[error("arc start and end angles coincide ({0} deg)")]
    DegenerateArc(f64),
    #[error("polyline needs at least {needed} vertices, got {got}")]
    TooFewVertices { needed: usize, got: usize },
    #[error("polyline vertices must share one elevation")]
    NonPlanarPolyline,
    #[error("text height must be positive, got {0}")]
    NonPositiveHeight(f64),
    #[error("text content must be a single line")]
    MultilineText,
    #[error("3D face needs 3 or 4 vertices, got {0}")]
    FaceVertexCount(usize),
    #[error("angle between annotation rays is degenerate")]
    DegenerateAngle,
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0, z: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y, z: 0.0 }
    }

    pub const fn new3(x: f64, y: f64, z: f64) -> Self {
        Point { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn add(self, o: Point) -> Point {
        Point::new3(self.x + o.x, self.y + o.y, self.z + o.z)
    }

    pub fn sub(self, o: Point) -> Point {
        Point::new3(self.x - o.x, self.y - o.y, self.z - o.z)
    }

    pub fn scale(self, k: f64) -> Point {
        Point::new3(self.x * k, self.y * k, self.z * k)
    }

    pub fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Point) -> Point {
        Point::new3(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn distance(self, o: Point) -> f64 {
        measure_linear(self, o)
    }

    fn check(self, what: &'static str) -> Result<Point, GeometryError> {
        if self.is_finite() {
            Ok(self)
        } else {
            Err(GeometryError::NonFinite(what))
        }
    }
}

/// Euclidean distance between two points.
pub fn measure_linear(p1: Point, p2: Point) -> f64 {
    let (dx, dy, dz) = (p2.x - p1.x, p2.y - p1.y, p2.z - p1.z);
    (dx * dx + dy * dy + dz * dz).sqrt()
}

/// Maps any finite angle in degrees onto `[0, 360)`.
pub fn normalize_degrees(deg: f64) -> f64 {
    let r = deg.rem_euclid(360.0);
    // rem_euclid can round up to exactly 360 for tiny negative inputs
    if r >= 360.0 {
        0.0
    } else {
        r
    }
}

/// Counter-clockwise sweep from `start` to `end`, in `(0, 360]`.
pub fn ccw_sweep(start: f64, end: f64) -> f64 {
    let s = normalize_degrees(end - start);
    if s == 0.0 {
        360.0
    } else {
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Entity {
    Line { start: Point, end: Point },
    Circle { center: Point, radius: f64 },
    Arc { center: Point, radius: f64, start_angle: f64, end_angle: f64 },
    Polyline { vertices: Vec<Point>, closed: bool },
    Text { position: Point, height: f64, content: String },
    Face3D { vertices: Vec<Point> },
}

impl Entity {
    pub fn line(start: Point, end: Point) -> Result<Self, GeometryError> {
        Ok(Entity::Line { start: start.check("line start")?, end: end.check("line end")? })
    }

    pub fn circle(center: Point, radius: f64) -> Result<Self, GeometryError> {
        check_radius(radius)?;
        Ok(Entity::Circle { center: center.check("circle center")?, radius })
    }

    pub fn arc(center: Point, radius: f64, start_deg: f64, end_deg: f64) -> Result<Self, GeometryError> {
        check_radius(radius)?;
        if !start_deg.is_finite() || !end_deg.is_finite() {
            return Err(GeometryError::NonFinite("arc angle"));
        }
        let (s, e) = (normalize_degrees(start_deg), normalize_degrees(end_deg));
        if s == e {
            return Err(GeometryError::DegenerateArc(s));
        }
        Ok(Entity::Arc { center: center.check("arc center")?, radius, start_angle: s, end_angle: e })
    }

    pub fn polyline(vertices: Vec<Point>, closed: bool) -> Result<Self, GeometryError> {
        let needed = if closed { 3 } else { 2 };
        if vertices.len() < needed {
            return Err(GeometryError::TooFewVertices { needed, got: vertices.len() });
        }
        for v in &vertices {
            v.check("polyline vertex")?;
        }
        if vertices.iter().any(|v| v.z != vertices[0].z) {
            return Err(GeometryError::NonPlanarPolyline);
        }
        Ok(Entity::Polyline { vertices, closed })
    }

    pub fn text(position: Point, height: f64, content: impl Into<String>) -> Result<Self, GeometryError> {
        let content = content.into();
        if !height.is_finite() || height <= 0.0 {
            return Err(GeometryError::NonPositiveHeight(height));
        }
        if content.contains(['\n', '\r']) {
            return Err(GeometryError::MultilineText);
        }
        Ok(Entity::Text { position: position.check("text position")?, height, content })
    }

    pub fn face(vertices: Vec<Point>) -> Result<Self, GeometryError> {
        if !(3..=4).contains(&vertices.len()) {
            return Err(GeometryError::FaceVertexCount(vertices.len()));
        }
        for v in &vertices {
            v.check("face vertex")?;
        }
        Ok(Entity::Face3D { vertices })
    }

    pub fn kind(&self) -> EntityKind {
        match self {
            Entity::Line { .. } => EntityKind::Line,
            Entity::Circle { .. } => EntityKind::Circle,
            Entity::Arc { .. } => EntityKind::Arc,
            Entity::Polyline { .. } => EntityKind::Polyline,
            Entity::Text { .. } => EntityKind::Text,
            Entity::Face3D { .. } => EntityKind::Face3D,
        }
    }

    /// Straight edges of the entity (polyline segments, face edges, the line itself).
    pub fn segments(&self) -> Vec<(Point, Point)> {
        match self {
            Entity::Line { start, end } => vec![(*start, *end)],
            Entity::Polyline { vertices, closed } => ring_edges(vertices, *closed),
            Entity::Face3D { vertices } => ring_edges(vertices, true),
            _ => Vec::new(),
        }
    }

    /// Whether `p` lies on this entity's geometry or on one of its defining
    /// points (circle and arc centers, text insertion point).
    pub fn touches(&self, p: Point, tol: f64) -> bool {
        match self {
            Entity::Circle { center, radius } => {
                let d = center.distance(p);
                d <= tol || (d - radius).abs() <= tol
            }
            Entity::Arc { center, radius, start_angle, end_angle } => {
                let d = center.distance(p);
                if d <= tol {
                    return true;
                }
                if (d - radius).abs() > tol || (p.z - center.z).abs() > tol {
                    return false;
                }
                let a = normalize_degrees((p.y - center.y).atan2(p.x - center.x).to_degrees());
                let slack = (tol / radius).to_degrees();
                let sweep = ccw_sweep(*start_angle, *end_angle);
                let off = normalize_degrees(a - start_angle);
                off <= sweep + slack || off >= 360.0 - slack
            }
            Entity::Text { position, .. } => position.distance(p) <= tol,
            _ => self.segments().iter().any(|&(a, b)| point_segment_distance(p, a, b) <= tol),
        }
    }
}

fn check_radius(r: f64) -> Result<(), GeometryError> {
    if !r.is_finite() {
        Err(GeometryError::NonFinite("radius"))
    } else if r <= 0.0 {
        Err(GeometryError::NonPositiveRadius(r))
    } else {
        Ok(())
    }
}

fn ring_edges(v: &[Point], closed: bool) -> Vec<(Point, Point)> {
    let mut out: Vec<_> = v.windows(2).map(|w| (w[0], w[1])).collect();
    if closed && v.len() > 2 {
        out.push((v[v.len() - 1], v[0]));
    }
    out
}

pub fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = b.sub(a);
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return p.distance(a);
    }
    let t = (p.sub(a).dot(ab) / len2).clamp(0.0, 1.0);
    p.distance(a.add(ab.scale(t)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EntityKind {
    Line,
    Circle,
    Arc,
    Polyline,
    Text,
    Face3D,
}

impl EntityKind {
    pub const ALL: [EntityKind; 6] = [
        EntityKind::Line,
        EntityKind::Circle,
        EntityKind::Arc,
        EntityKind::Polyline,
        EntityKind::Text,
        EntityKind::Face3D,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EntityKind::Line => "Line",
            EntityKind::Circle => "Circle",
            EntityKind::Arc => "Arc",
            EntityKind::Polyline => "Polyline",
            EntityKind::Text => "Text",
            EntityKind::Face3D => "Face3D",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Annotation {
    Linear { p1: Point, p2: Point, offset: f64, measured: f64 },
    Radius { center: Point, radius: f64 },
    Angular { vertex: Point, p1: Point, p2: Point, measured_deg: f64 },
    Tolerance { target: Point, nominal: f64, plus: f64, minus: f64 },
    Chamfer { corner: Point, size: f64 },
    Roughness { position: Point, ra_value: f64 },
}

impl Annotation {
    /// Linear dimension; the measured value is derived from the defpoints.
    pub fn linear(p1: Point, p2: Point, offset: f64) -> Result<Self, GeometryError> {
        p1.check("dimension point")?;
        p2.check("dimension point")?;
        finite(offset, "dimension offset")?;
        Ok(Annotation::Linear { p1, p2, offset, measured: measure_linear(p1, p2) })
    }

    pub fn radius(center: Point, radius: f64) -> Result<Self, GeometryError> {
        check_radius(radius)?;
        Ok(Annotation::Radius { center: center.check("radius center")?, radius })
    }

    /// Angular dimension; measured counter-clockwise from the ray to `p1` to the ray to `p2`.
    pub fn angular(vertex: Point, p1: Point, p2: Point) -> Result<Self, GeometryError> {
        vertex.check("angle vertex")?;
        p1.check("angle point")?;
        p2.check("angle point")?;
        let measured_deg = ccw_angle(vertex, p1, p2).ok_or(GeometryError::DegenerateAngle)?;
        Ok(Annotation::Angular { vertex, p1, p2, measured_deg })
    }

    pub fn tolerance(target: Point, nominal: f64, plus: f64, minus: f64) -> Result<Self, GeometryError> {
        finite(nominal, "tolerance nominal")?;
        finite(plus, "tolerance")?;
        finite(minus, "tolerance")?;
        Ok(Annotation::Tolerance { target: target.check("tolerance target")?, nominal, plus, minus })
    }

    pub fn chamfer(corner: Point, size: f64) -> Result<Self, GeometryError> {
        finite(size, "chamfer size")?;
        Ok(Annotation::Chamfer { corner: corner.check("chamfer corner")?, size })
    }

    pub fn roughness(position: Point, ra_value: f64) -> Result<Self, GeometryError> {
        finite(ra_value, "roughness value")?;
        Ok(Annotation::Roughness { position: position.check("roughness position")?, ra_value })
    }

    pub fn kind(&self) -> AnnotationKind {
        match self {
            Annotation::Linear { .. } => AnnotationKind::Linear,
            Annotation::Radius { .. } => AnnotationKind::Radius,
            Annotation::Angular { .. } => AnnotationKind::Angular,
            Annotation::Tolerance { .. } => AnnotationKind::Tolerance,
            Annotation::Chamfer { .. } => AnnotationKind::Chamfer,
            Annotation::Roughness { .. } => AnnotationKind::Roughness,
        }
    }

    /// Coordinates that must coincide with drawn geometry.
    pub fn anchors(&self) -> Vec<Point> {
        match self {
            Annotation::Linear { p1, p2, .. } => vec![*p1, *p2],
            Annotation::Radius { center, .. } => vec![*center],
            Annotation::Angular { vertex, p1, p2, .. } => vec![*vertex, *p1, *p2],
            Annotation::Tolerance { target, .. } => vec![*target],
            Annotation::Chamfer { corner, .. } => vec![*corner],
            Annotation::Roughness { position, .. } => vec![*position],
        }
    }

    /// The headline numeric value of the annotation.
    pub fn nominal(&self) -> f64 {
        match self {
            Annotation::Linear { measured, .. } => *measured,
            Annotation::Radius { radius, .. } => *radius,
            Annotation::Angular { measured_deg, .. } => *measured_deg,
            Annotation::Tolerance { nominal, .. } => *nominal,
            Annotation::Chamfer { size, .. } => *size,
            Annotation::Roughness { ra_value, .. } => *ra_value,
        }
    }
}

fn finite(v: f64, what: &'static str) -> Result<f64, GeometryError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(GeometryError::NonFinite(what))
    }
}

/// Counter-clockwise angle (degrees, in `(0, 360)`) from ray `vertex->p1` to ray `vertex->p2`.
pub fn ccw_angle(vertex: Point, p1: Point, p2: Point) -> Option<f64> {
    let (a, b) = (p1.sub(vertex), p2.sub(vertex));
    if a.norm() == 0.0 || b.norm() == 0.0 {
        return None;
    }
    let a1 = a.y.atan2(a.x).to_degrees();
    let a2 = b.y.atan2(b.x).to_degrees();
    let m = normalize_degrees(a2 - a1);
    (m > 0.0).then_some(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnnotationKind {
    Linear,
    Radius,
    Angular,
    Tolerance,
    Chamfer,
    Roughness,
}

impl AnnotationKind {
    pub const ALL: [AnnotationKind; 6] = [
        AnnotationKind::Linear,
        AnnotationKind::Radius,
        AnnotationKind::Angular,
        AnnotationKind::Tolerance,
        AnnotationKind::Chamfer,
        AnnotationKind::Roughness,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AnnotationKind::Linear => "linear",
            AnnotationKind::Radius => "radius",
            AnnotationKind::Angular => "angular",
            AnnotationKind::Tolerance => "tolerance",
            AnnotationKind::Chamfer => "chamfer",
            AnnotationKind::Roughness => "roughness",
        }
    }

    /// Short label used in primitive statistics (LA, RA, AA, ...).
    pub fn short_label(self) -> &'static str {
        match self {
            AnnotationKind::Linear => "LA",
            AnnotationKind::Radius => "RA",
            AnnotationKind::Angular => "AA",
            AnnotationKind::Tolerance => "TA",
            AnnotationKind::Chamfer => "CA",
            AnnotationKind::Roughness => "SA",
        }
    }
}

/// Ordered entities plus ordered annotations.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SketchModel {
    pub entities: Vec<Entity>,
    pub annotations: Vec<Annotation>,
}

impl SketchModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, e: Entity) {
        self.entities.push(e);
    }

    pub fn annotate(&mut self, a: Annotation) {
        self.annotations.push(a);
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty() && self.annotations.is_empty()
    }

    /// True when every anchor of `a` lies on some entity.
    pub fn anchors_on_geometry(&self, a: &Annotation, tol: f64) -> bool {
        a.anchors().iter().all(|&p| self.entities.iter().any(|e| e.touches(p, tol)))
    }

    /// Indices of annotations whose anchors do not lie on any entity.
    pub fn dangling_annotations(&self, tol: f64) -> Vec<usize> {
        (0..self.annotations.len())
            .filter(|&i| !self.anchors_on_geometry(&self.annotations[i], tol))
            .collect()
    }

    pub fn entity_counts(&self) -> std::collections::BTreeMap<EntityKind, usize> {
        let mut m = std::collections::BTreeMap::new();
        for e in &self.entities {
            *m.entry(e.kind()).or_insert(0) += 1;
        }
        m
    }

    pub fn annotation_counts(&self) -> std::collections::BTreeMap<AnnotationKind, usize> {
        let mut m = std::collections::BTreeMap::new();
        for a in &self.annotations {
            *m.entry(a.kind()).or_insert(0) += 1;
        }
        m
    }

    /// Geometry only, annotations dropped.
    pub fn geometry_only(&self) -> SketchModel {
        SketchModel { entities: self.entities.clone(), annotations: Vec::new() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn measure_linear_examples() {
        assert_eq!(measure_linear(Point::new(0.0, 0.0), Point::new(3.0, 4.0)), 5.0);
        let p = Point::new(7.25, -3.5);
        assert_eq!(measure_linear(p, p), 0.0);
        assert_eq!(measure_linear(Point::new(26.0, 29.0), Point::new(26.0, 64.0)), 35.0);
    }

    #[test]
    fn angles_normalize_into_range() {
        assert_eq!(normalize_degrees(360.0), 0.0);
        assert_eq!(normalize_degrees(-90.0), 270.0);
        assert_eq!(normalize_degrees(725.0), 5.0);
        assert_eq!(normalize_degrees(-1e-20), 0.0);
        let Entity::Arc { start_angle, end_angle, .. } =
            Entity::arc(Point::ORIGIN, 1.0, -90.0, 450.0).unwrap()
        else {
            unreachable!()
        };
        assert_eq!((start_angle, end_angle), (270.0, 90.0));
    }

    #[test]
    fn constructors_reject_invalid_input() {
        assert_eq!(Entity::circle(Point::ORIGIN, -5.0), Err(GeometryError::NonPositiveRadius(-5.0)));
        assert!(matches!(Entity::circle(Point::new(f64::NAN, 0.0), 1.0), Err(GeometryError::NonFinite(_))));
        assert!(matches!(Entity::arc(Point::ORIGIN, 1.0, 10.0, 370.0), Err(GeometryError::DegenerateArc(_))));
        assert!(matches!(
            Entity::polyline(vec![Point::ORIGIN, Point::new(1.0, 0.0)], true),
            Err(GeometryError::TooFewVertices { needed: 3, got: 2 })
        ));
        assert!(Entity::text(Point::ORIGIN, 2.5, "a\nb").is_err());
        assert!(Entity::face(vec![Point::ORIGIN; 5]).is_err());
        assert!(Annotation::angular(Point::ORIGIN, Point::new(1.0, 0.0), Point::new(2.0, 0.0)).is_err());
    }

    #[test]
    fn angular_measures_ccw() {
        let a = Annotation::angular(Point::ORIGIN, Point::new(1.0, 0.0), Point::new(0.0, 1.0)).unwrap();
        assert!((a.nominal() - 90.0).abs() < 1e-12);
        let b = Annotation::angular(Point::ORIGIN, Point::new(0.0, 1.0), Point::new(1.0, 0.0)).unwrap();
        assert!((b.nominal() - 270.0).abs() < 1e-12);
    }

    #[test]
    fn touches_respects_arc_extent() {
        let arc = Entity::arc(Point::ORIGIN, 10.0, 0.0, 90.0).unwrap();
        assert!(arc.touches(Point::new(0.0, 10.0), 1e-9));
        assert!(arc.touches(Point::ORIGIN, 1e-9));
        assert!(!arc.touches(Point::new(-10.0, 0.0), 1e-9));
        let wrap = Entity::arc(Point::ORIGIN, 10.0, 270.0, 90.0).unwrap();
        assert!(wrap.touches(Point::new(10.0, 0.0), 1e-9));
        assert!(!wrap.touches(Point::new(-10.0, 0.0), 1e-9));
        let poly = Entity::polyline(
            vec![Point::new(0.0, 0.0), Point::new(4.0, 0.0), Point::new(4.0, 3.0)],
            true,
        )
        .unwrap();
        assert!(poly.touches(Point::new(2.0, 1.5), 1e-9), "closing edge counts");
    }

    #[test]
    fn dangling_annotations_detected() {
        let mut m = SketchModel::new();
        m.push(Entity::line(Point::new(0.0, 0.0), Point::new(35.0, 0.0)).unwrap());
        m.annotate(Annotation::linear(Point::new(0.0, 0.0), Point::new(35.0, 0.0), 5.0).unwrap());
        m.annotate(Annotation::chamfer(Point::new(1.0, 1.0), 0.5).unwrap());
        assert_eq!(m.dangling_annotations(POSITION_TOLERANCE), vec![1]);
    }

    fn pt() -> impl Strategy<Value = Point> {
        (-1e3..1e3f64, -1e3..1e3f64, -1e3..1e3f64).prop_map(|(x, y, z)| Point::new3(x, y, z))
    }

    proptest! {
        #[test]
        fn measure_linear_is_a_metric(a in pt(), b in pt(), c in pt()) {
            prop_assert_eq!(measure_linear(a, b), measure_linear(b, a));
            prop_assert!(measure_linear(a, b) >= 0.0);
            prop_assert!(measure_linear(a, c) <= measure_linear(a, b) + measure_linear(b, c) + 1e-9);
        }
    }
}
