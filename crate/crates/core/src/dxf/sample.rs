use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::TAU;

use super::DxfError;
use crate::geometry::{ccw_sweep, Entity, Point, SketchModel};

#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Point>,
    /// Index into `model.entities` of the entity each point was drawn from.
    pub sources: Vec<usize>,
    /// Bounding-box diagonal of the sampled model's geometry.
    pub source_bbox_diagonal: f64,
}

impl PointCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Samples `n` points from the model's geometry.
///
/// If the model has any 3D faces, points are spread over faces by area;
/// otherwise over curves by length. Text is never sampled. Each entity gets
/// a largest-remainder share of `n`, and its points are stratified along the
/// entity with seeded jitter, so equal inputs give equal clouds.
pub fn sample_points(model: &SketchModel, n: usize, seed: u64) -> Result<PointCloud, DxfError> {
    if n == 0 {
        return Err(DxfError::ZeroBudget);
    }
    let solid = model.entities.iter().any(|e| matches!(e, Entity::Face3D { .. }));
    let weights: Vec<f64> = model
        .entities
        .iter()
        .map(|e| match (solid, e) {
            (true, Entity::Face3D { vertices }) => triangles(vertices).iter().map(|t| tri_area(*t)).sum(),
            (false, _) => length(e),
            _ => 0.0,
        })
        .collect();
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(DxfError::EmptyModel);
    }
    let counts = allocate(&weights, n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(n);
    let mut sources = Vec::with_capacity(n);
    for (idx, (e, &m)) in model.entities.iter().zip(&counts).enumerate() {
        for j in 0..m {
            let u = ((j as f64 + rng.gen::<f64>()) / m as f64).min(1.0);
            points.push(locate(e, u, &mut rng));
            sources.push(idx);
        }
    }
    Ok(PointCloud { points, sources, source_bbox_diagonal: bbox_diagonal(model) })
}

/// Splits `n` in proportion to `weights` by the largest-remainder rule.
pub(crate) fn allocate(weights: &[f64], n: usize) -> Vec<usize> {
    let total: f64 = weights.iter().sum();
    let quotas: Vec<f64> = weights.iter().map(|w| w / total * n as f64).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).filter(|&i| weights[i] > 0.0).collect();
    order.sort_by(|&a, &b| (quotas[b] - quotas[b].floor()).total_cmp(&(quotas[a] - quotas[a].floor())).then(a.cmp(&b)));
    for &i in order.iter().cycle().take(n.saturating_sub(assigned)) {
        counts[i] += 1;
    }
    counts
}

fn length(e: &Entity) -> f64 {
    match e {
        Entity::Circle { radius, .. } => TAU * radius,
        Entity::Arc { radius, start_angle, end_angle, .. } => radius * ccw_sweep(*start_angle, *end_angle).to_radians(),
        Entity::Text { .. } | Entity::Face3D { .. } => 0.0,
        _ => e.segments().iter().map(|(a, b)| a.distance(*b)).sum(),
    }
}

fn triangles(v: &[Point]) -> Vec<[Point; 3]> {
    (1..v.len() - 1).map(|i| [v[0], v[i], v[i + 1]]).collect()
}

fn tri_area([a, b, c]: [Point; 3]) -> f64 {
    0.5 * b.sub(a).cross(c.sub(a)).norm()
}

fn on_circle(center: Point, r: f64, rad: f64) -> Point {
    Point::new3(center.x + r * rad.cos(), center.y + r * rad.sin(), center.z)
}

/// Point at fraction `u` of the entity's measure.
fn locate(e: &Entity, u: f64, rng: &mut ChaCha8Rng) -> Point {
    match e {
        Entity::Circle { center, radius } => on_circle(*center, *radius, TAU * u),
        Entity::Arc { center, radius, start_angle, end_angle } => {
            let deg = start_angle + ccw_sweep(*start_angle, *end_angle) * u;
            on_circle(*center, *radius, deg.to_radians())
        }
        Entity::Face3D { vertices } => {
            let tris = triangles(vertices);
            let t = pick(&tris.iter().map(|t| tri_area(*t)).collect::<Vec<_>>(), u).0;
            let [a, b, c] = tris[t];
            let (mut r1, mut r2) = (rng.gen::<f64>(), rng.gen::<f64>());
            if r1 + r2 > 1.0 {
                (r1, r2) = (1.0 - r1, 1.0 - r2);
            }
            a.add(b.sub(a).scale(r1)).add(c.sub(a).scale(r2))
        }
        _ => {
            let segs = e.segments();
            let (i, t) = pick(&segs.iter().map(|(a, b)| a.distance(*b)).collect::<Vec<_>>(), u);
            let (a, b) = segs[i];
            a.add(b.sub(a).scale(t))
        }
    }
}

/// Finds the part containing fraction `u` of the summed measures and the
/// local fraction within it.
fn pick(measures: &[f64], u: f64) -> (usize, f64) {
    let total: f64 = measures.iter().sum();
    let mut target = u * total;
    for (i, &m) in measures.iter().enumerate() {
        if m > 0.0 && (target < m || i == measures.len() - 1) {
            return (i, (target / m).clamp(0.0, 1.0));
        }
        target -= m;
    }
    let last = measures.iter().rposition(|&m| m > 0.0).unwrap_or(0);
    (last, 1.0)
}

/// Diagonal of the axis-aligned box around all non-text geometry; 0 if none.
pub fn bbox_diagonal(model: &SketchModel) -> f64 {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    let mut add = |p: Point| {
        for (k, v) in [p.x, p.y, p.z].into_iter().enumerate() {
            lo[k] = lo[k].min(v);
            hi[k] = hi[k].max(v);
        }
    };
    for e in &model.entities {
        match e {
            Entity::Circle { center, radius } => {
                add(center.add(Point::new(*radius, *radius)));
                add(center.sub(Point::new(*radius, *radius)));
            }
            Entity::Arc { center, radius, start_angle, end_angle } => {
                let sweep = ccw_sweep(*start_angle, *end_angle);
                add(on_circle(*center, *radius, start_angle.to_radians()));
                add(on_circle(*center, *radius, (start_angle + sweep).to_radians()));
                for q in [0.0, 90.0, 180.0, 270.0_f64] {
                    if (q - start_angle).rem_euclid(360.0) <= sweep {
                        add(on_circle(*center, *radius, q.to_radians()));
                    }
                }
            }
            Entity::Text { .. } => {}
            Entity::Line { start, end } => {
                add(*start);
                add(*end);
            }
            Entity::Polyline { vertices, .. } | Entity::Face3D { vertices } => vertices.iter().for_each(|v| add(*v)),
        }
    }
    if lo[0] > hi[0] {
        return 0.0;
    }
    Point::new3(hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]).norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::normalize_degrees;
    use proptest::prelude::*;

    fn p(x: f64, y: f64) -> Point {
        Point::new(x, y)
    }

    /// Distance from `q` to the analytic locus of `e`.
    fn off_locus(e: &Entity, q: Point) -> f64 {
        match e {
            Entity::Circle { center, radius } => (center.distance(q) - radius).abs() + (q.z - center.z).abs(),
            Entity::Arc { center, radius, start_angle, end_angle } => {
                let a = normalize_degrees((q.y - center.y).atan2(q.x - center.x).to_degrees());
                let off = normalize_degrees(a - start_angle);
                let inside = off <= ccw_sweep(*start_angle, *end_angle) + 1e-9 || off >= 360.0 - 1e-9;
                let radial = (center.distance(q) - radius).abs();
                if inside {
                    radial
                } else {
                    f64::INFINITY
                }
            }
            _ => e
                .segments()
                .iter()
                .map(|&(a, b)| crate::geometry::point_segment_distance(q, a, b))
                .fold(f64::INFINITY, f64::min),
        }
    }

    #[test]
    fn unit_circle_points_lie_on_circle() {
        let mut m = SketchModel::new();
        m.push(Entity::circle(p(0.0, 0.0), 1.0).unwrap());
        let c = sample_points(&m, 4, 7).unwrap();
        assert_eq!(c.len(), 4);
        for q in &c.points {
            assert!((q.distance(Point::ORIGIN) - 1.0).abs() <= 1e-9);
        }
        // stratified: one point per quadrant
        let mut quads: Vec<i32> = c.points.iter().map(|q| (normalize_degrees(q.y.atan2(q.x).to_degrees()) / 90.0) as i32).collect();
        quads.sort();
        assert_eq!(quads, vec![0, 1, 2, 3]);
    }

    #[test]
    fn allocation_follows_length() {
        let mut m = SketchModel::new();
        m.push(Entity::line(p(0.0, 0.0), p(10.0, 0.0)).unwrap());
        m.push(Entity::line(p(0.0, 0.0), p(30.0, 0.0)).unwrap());
        let c = sample_points(&m, 400, 1).unwrap();
        let first = c.sources.iter().filter(|&&s| s == 0).count();
        assert!((first as i64 - 100).abs() <= 1);
        assert!((400 - first as i64 - 300).abs() <= 1);
    }

    #[test]
    fn largest_remainder_examples() {
        assert_eq!(allocate(&[1.0, 1.0, 1.0], 10), vec![4, 3, 3]);
        assert_eq!(allocate(&[0.0, 2.0, 1.0], 4), vec![0, 3, 1]);
        assert_eq!(allocate(&[1.0], 1), vec![1]);
    }

    #[test]
    fn faces_take_precedence_and_text_is_ignored() {
        let mut m = SketchModel::new();
        m.push(Entity::text(p(100.0, 100.0), 2.0, "x").unwrap());
        assert_eq!(sample_points(&m, 10, 0), Err(DxfError::EmptyModel));
        m.push(Entity::line(p(0.0, 0.0), p(1.0, 0.0)).unwrap());
        m.push(Entity::face(vec![p(0.0, 0.0), p(2.0, 0.0), p(2.0, 2.0), p(0.0, 2.0)]).unwrap());
        let c = sample_points(&m, 50, 3).unwrap();
        assert!(c.sources.iter().all(|&s| s == 2));
        assert!(c.points.iter().all(|q| (0.0..=2.0).contains(&q.x) && (0.0..=2.0).contains(&q.y)));
        assert_eq!(c.source_bbox_diagonal, 8f64.sqrt());
        assert_eq!(sample_points(&m, 0, 0), Err(DxfError::ZeroBudget));
    }

    #[test]
    fn arc_bbox_includes_crossed_extremes() {
        let mut m = SketchModel::new();
        m.push(Entity::arc(p(0.0, 0.0), 1.0, 350.0, 10.0).unwrap());
        let d = bbox_diagonal(&m);
        let (s, c) = 10f64.to_radians().sin_cos();
        assert!((d - ((1.0 - c).powi(2) + (2.0 * s).powi(2)).sqrt()).abs() < 1e-12);
    }

    fn entity() -> impl Strategy<Value = Entity> {
        let c = -50.0..50.0f64;
        prop_oneof![
            (c.clone(), c.clone(), c.clone(), c.clone())
                .prop_filter_map("zero length", |(a, b, x, y)| Entity::line(p(a, b), p(x, y)).ok()),
            (c.clone(), c.clone(), 0.1..20.0f64).prop_map(|(x, y, r)| Entity::circle(p(x, y), r).unwrap()),
            (c.clone(), c.clone(), 0.1..20.0f64, 0.0..360.0f64, 1.0..359.0f64)
                .prop_map(|(x, y, r, s, w)| Entity::arc(p(x, y), r, s, s + w).unwrap()),
            (proptest::collection::vec((c.clone(), c), 3..6), any::<bool>())
                .prop_map(|(v, cl)| Entity::polyline(v.into_iter().map(|(x, y)| p(x, y)).collect(), cl).unwrap()),
        ]
    }

    proptest! {
        #[test]
        fn samples_lie_on_their_source(es in proptest::collection::vec(entity(), 1..5), n in 1usize..300, seed in any::<u64>()) {
            let m = SketchModel { entities: es, annotations: vec![] };
            let c = sample_points(&m, n, seed).unwrap();
            prop_assert_eq!(c.len(), n);
            for (q, &s) in c.points.iter().zip(&c.sources) {
                prop_assert!(off_locus(&m.entities[s], *q) <= 1e-9, "{:?} off {:?}", q, m.entities[s]);
            }
            prop_assert_eq!(&c, &sample_points(&m, n, seed).unwrap());
        }
    }
}
