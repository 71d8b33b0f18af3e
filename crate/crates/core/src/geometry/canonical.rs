use super::{Annotation, Entity, GeometryError, Point, SketchModel};

/// Tag of a canonical descriptor; entity and annotation variants share one space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DescriptorKind {
    Line,
    Circle,
    Arc,
    Polyline,
    Text,
    Face3D,
    Linear,
    Radius,
    Angular,
    Tolerance,
    Chamfer,
    Roughness,
}

/// One quantized entity or annotation. Reals are stored as integer multiples of the tolerance.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Descriptor {
    pub kind: DescriptorKind,
    pub values: Vec<i64>,
    pub text: Option<String>,
}

/// Order-independent, tolerance-quantized view of a sketch.
///
/// Both lists are sorted multisets: duplicates survive, construction order does not.
/// Dimension offsets are presentation only and are not part of the form, and
/// measured lengths and angles are left out because the defpoints fix them.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalForm {
    pub tol: f64,
    pub entities: Vec<Descriptor>,
    pub annotations: Vec<Descriptor>,
}

struct Quantizer {
    tol: f64,
    turn: i64,
}

impl Quantizer {
    fn q(&self, v: f64) -> Result<i64, GeometryError> {
        if !v.is_finite() {
            return Err(GeometryError::NonFinite("canonical value"));
        }
        // f64::round is half-away-from-zero
        let s = (v / self.tol).round();
        if s.abs() > 9.0e15 {
            return Err(GeometryError::Invalid(format!("value {v} too large for tolerance {}", self.tol)));
        }
        Ok(s as i64)
    }

    fn angle(&self, deg: f64) -> Result<i64, GeometryError> {
        Ok(self.q(deg)?.rem_euclid(self.turn))
    }

    fn point(&self, p: &Point) -> Result<[i64; 3], GeometryError> {
        Ok([self.q(p.x)?, self.q(p.y)?, self.q(p.z)?])
    }
}

/// Quantizes every real in `model` to the nearest multiple of `tol` and sorts the result.
pub fn canonicalize(model: &SketchModel, tol: f64) -> Result<CanonicalForm, GeometryError> {
    if !(tol.is_finite() && tol > 0.0) {
        return Err(GeometryError::Invalid(format!("tolerance must be positive, got {tol}")));
    }
    let qz = Quantizer { tol, turn: (360.0 / tol).round() as i64 };
    let mut entities = model
        .entities
        .iter()
        .map(|e| entity_descriptor(&qz, e))
        .collect::<Result<Vec<_>, _>>()?;
    let mut annotations = model
        .annotations
        .iter()
        .map(|a| annotation_descriptor(&qz, a))
        .collect::<Result<Vec<_>, _>>()?;
    entities.sort();
    annotations.sort();
    Ok(CanonicalForm { tol, entities, annotations })
}

fn desc(kind: DescriptorKind, values: Vec<i64>) -> Descriptor {
    Descriptor { kind, values, text: None }
}

fn entity_descriptor(qz: &Quantizer, e: &Entity) -> Result<Descriptor, GeometryError> {
    use DescriptorKind as K;
    Ok(match e {
        Entity::Line { start, end } => {
            let (a, b) = sorted_pair(qz.point(start)?, qz.point(end)?);
            desc(K::Line, [a, b].concat())
        }
        Entity::Circle { center, radius } => {
            let mut v = qz.point(center)?.to_vec();
            v.push(qz.q(*radius)?);
            desc(K::Circle, v)
        }
        Entity::Arc { center, radius, start_angle, end_angle } => {
            let mut v = qz.point(center)?.to_vec();
            v.extend([qz.q(*radius)?, qz.angle(*start_angle)?, qz.angle(*end_angle)?]);
            desc(K::Arc, v)
        }
        Entity::Polyline { vertices, closed } => {
            let pts = vertices.iter().map(|p| qz.point(p)).collect::<Result<Vec<_>, _>>()?;
            let pts = if *closed { min_cyclic(pts) } else { min_direction(pts) };
            let mut v = vec![*closed as i64];
            v.extend(pts.into_iter().flatten());
            desc(K::Polyline, v)
        }
        Entity::Text { position, height, content } => {
            let mut v = qz.point(position)?.to_vec();
            v.push(qz.q(*height)?);
            Descriptor { kind: K::Text, values: v, text: Some(content.clone()) }
        }
        Entity::Face3D { vertices } => {
            let mut pts = vertices.iter().map(|p| qz.point(p)).collect::<Result<Vec<_>, _>>()?;
            pts.dedup();
            while pts.len() > 1 && pts.first() == pts.last() {
                pts.pop();
            }
            desc(K::Face3D, min_cyclic(pts).into_iter().flatten().collect())
        }
    })
}

fn annotation_descriptor(qz: &Quantizer, a: &Annotation) -> Result<Descriptor, GeometryError> {
    use DescriptorKind as K;
    let with = |kind, p: &Point, rest: &[f64]| -> Result<Descriptor, GeometryError> {
        let mut v = qz.point(p)?.to_vec();
        for r in rest {
            v.push(qz.q(*r)?);
        }
        Ok(desc(kind, v))
    };
    match a {
        Annotation::Linear { p1, p2, .. } => {
            let (a, b) = sorted_pair(qz.point(p1)?, qz.point(p2)?);
            Ok(desc(K::Linear, [a, b].concat()))
        }
        Annotation::Radius { center, radius } => with(K::Radius, center, &[*radius]),
        Annotation::Angular { vertex, p1, p2, .. } => {
            Ok(desc(K::Angular, [qz.point(vertex)?, qz.point(p1)?, qz.point(p2)?].concat()))
        }
        Annotation::Tolerance { target, nominal, plus, minus } => {
            with(K::Tolerance, target, &[*nominal, *plus, *minus])
        }
        Annotation::Chamfer { corner, size } => with(K::Chamfer, corner, &[*size]),
        Annotation::Roughness { position, ra_value } => with(K::Roughness, position, &[*ra_value]),
    }
}

fn sorted_pair(a: [i64; 3], b: [i64; 3]) -> ([i64; 3], [i64; 3]) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

fn min_direction(pts: Vec<[i64; 3]>) -> Vec<[i64; 3]> {
    let mut rev = pts.clone();
    rev.reverse();
    pts.min(rev)
}

/// Smallest rotation of the ring, traversed in either direction.
fn min_cyclic(pts: Vec<[i64; 3]>) -> Vec<[i64; 3]> {
    let n = pts.len();
    let mut rev = pts.clone();
    rev.reverse();
    let mut best = pts.clone();
    for ring in [&pts, &rev] {
        for s in 0..n {
            let cand: Vec<_> = ring[s..].iter().chain(&ring[..s]).copied().collect();
            if cand < best {
                best = cand;
            }
        }
    }
    best
}

impl CanonicalForm {
    /// Rebuilds a model whose reals are the bucket centers of this form.
    ///
    /// Linear dimensions come back with a zero offset.
    pub fn to_model(&self) -> Result<SketchModel, GeometryError> {
        let t = self.tol;
        let f = |v: i64| v as f64 * t;
        let pt = |v: &[i64]| Point::new3(f(v[0]), f(v[1]), f(v[2]));
        let pts = |v: &[i64]| v.chunks(3).map(pt).collect::<Vec<_>>();
        let mut m = SketchModel::new();
        for d in &self.entities {
            let v = &d.values;
            m.push(match d.kind {
                DescriptorKind::Line => Entity::line(pt(&v[0..3]), pt(&v[3..6]))?,
                DescriptorKind::Circle => Entity::circle(pt(&v[0..3]), f(v[3]))?,
                DescriptorKind::Arc => Entity::arc(pt(&v[0..3]), f(v[3]), f(v[4]), f(v[5]))?,
                DescriptorKind::Polyline => Entity::polyline(pts(&v[1..]), v[0] != 0)?,
                DescriptorKind::Text => {
                    Entity::text(pt(&v[0..3]), f(v[3]), d.text.clone().unwrap_or_default())?
                }
                DescriptorKind::Face3D => Entity::face(pts(v))?,
                k => return Err(GeometryError::Invalid(format!("{k:?} is not an entity descriptor"))),
            });
        }
        for d in &self.annotations {
            let v = &d.values;
            m.annotate(match d.kind {
                DescriptorKind::Linear => Annotation::linear(pt(&v[0..3]), pt(&v[3..6]), 0.0)?,
                DescriptorKind::Radius => Annotation::radius(pt(&v[0..3]), f(v[3]))?,
                DescriptorKind::Angular => Annotation::angular(pt(&v[0..3]), pt(&v[3..6]), pt(&v[6..9]))?,
                DescriptorKind::Tolerance => {
                    Annotation::tolerance(pt(&v[0..3]), f(v[3]), f(v[4]), f(v[5]))?
                }
                DescriptorKind::Chamfer => Annotation::chamfer(pt(&v[0..3]), f(v[3]))?,
                DescriptorKind::Roughness => Annotation::roughness(pt(&v[0..3]), f(v[3]))?,
                k => return Err(GeometryError::Invalid(format!("{k:?} is not an annotation descriptor"))),
            });
        }
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn circle(x: f64, y: f64, r: f64) -> SketchModel {
        SketchModel { entities: vec![Entity::circle(Point::new(x, y), r).unwrap()], annotations: vec![] }
    }

    #[test]
    fn deterministic() {
        let m = circle(1.5, 2.5, 3.0);
        assert_eq!(canonicalize(&m, 1e-3).unwrap(), canonicalize(&m, 1e-3).unwrap());
    }

    #[test]
    fn radius_within_bucket_is_equal() {
        let a = canonicalize(&circle(0.0, 0.0, 10.00004), 1e-3).unwrap();
        let b = canonicalize(&circle(0.0, 0.0, 10.0), 1e-3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn center_one_bucket_apart_differs() {
        let a = canonicalize(&circle(0.0, 0.0, 5.0), 1e-3).unwrap();
        let b = canonicalize(&circle(0.0, 0.01, 5.0), 1e-3).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn rounds_half_away_from_zero() {
        let qz = Quantizer { tol: 0.5, turn: 720 };
        assert_eq!(qz.q(0.25).unwrap(), 1);
        assert_eq!(qz.q(-0.25).unwrap(), -1);
        assert_eq!(qz.angle(359.9).unwrap(), 0);
    }

    #[test]
    fn order_and_direction_independent() {
        let p = |x, y| Point::new(x, y);
        let mut a = SketchModel::new();
        a.push(Entity::line(p(0.0, 0.0), p(1.0, 0.0)).unwrap());
        a.push(Entity::polyline(vec![p(0.0, 0.0), p(2.0, 0.0), p(2.0, 2.0)], true).unwrap());
        let mut b = SketchModel::new();
        b.push(Entity::polyline(vec![p(2.0, 2.0), p(2.0, 0.0), p(0.0, 0.0)], true).unwrap());
        b.push(Entity::line(p(1.0, 0.0), p(0.0, 0.0)).unwrap());
        assert_eq!(canonicalize(&a, 1e-3).unwrap(), canonicalize(&b, 1e-3).unwrap());
    }

    #[test]
    fn duplicates_are_kept() {
        let mut a = circle(0.0, 0.0, 1.0);
        let single = canonicalize(&a, 1e-3).unwrap();
        a.entities.push(a.entities[0].clone());
        assert_eq!(canonicalize(&a, 1e-3).unwrap().entities.len(), 2);
        assert_ne!(canonicalize(&a, 1e-3).unwrap(), single);
    }

    #[test]
    fn rejects_bad_tolerance() {
        assert!(canonicalize(&SketchModel::new(), 0.0).is_err());
    }

    fn model() -> impl Strategy<Value = SketchModel> {
        let coord = -500.0..500.0f64;
        let ent = prop_oneof![
            (coord.clone(), coord.clone(), 0.1..100.0f64)
                .prop_map(|(x, y, r)| Entity::circle(Point::new(x, y), r).unwrap()),
            (coord.clone(), coord.clone(), coord.clone(), coord.clone())
                .prop_map(|(a, b, c, d)| Entity::line(Point::new(a, b), Point::new(c, d)).unwrap()),
            (coord.clone(), coord.clone(), 0.1..100.0f64, 0.0..180.0f64, 181.0..359.0f64)
                .prop_map(|(x, y, r, s, e)| Entity::arc(Point::new(x, y), r, s, e).unwrap()),
        ];
        let ann = (coord.clone(), coord.clone(), 0.1..50.0f64).prop_map(|(x, y, r)| {
            Annotation::radius(Point::new(x, y), r).unwrap()
        });
        (prop::collection::vec(ent, 1..8), prop::collection::vec(ann, 0..3))
            .prop_map(|(entities, annotations)| SketchModel { entities, annotations })
    }

    proptest! {
        #[test]
        fn canonicalize_is_idempotent(m in model(), k in 1..4i32) {
            let tol = 10f64.powi(-k);
            let form = canonicalize(&m, tol).unwrap();
            let again = canonicalize(&form.to_model().unwrap(), tol).unwrap();
            prop_assert_eq!(form, again);
        }
    }
}
