//! Cross-check written files against an independent DXF reader.

use ::dxf::entities::EntityType;
use ::dxf::Drawing;
use cfsc::generator::{build_dataset, std_templates};
use cfsc::geometry::{Entity, Point};
use cfsc::script::{execute, parse};

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-6 * (1.0 + b.abs())
}

fn same_point(p: &::dxf::Point, q: Point) -> bool {
    close(p.x, q.x) && close(p.y, q.y) && close(p.z, q.z)
}

#[test]
fn geometry_reads_back_identically_in_the_dxf_crate() {
    let templates = std_templates();
    let records = build_dataset(&templates, &vec![6; templates.len()], 31, 1).unwrap();
    for r in &records {
        let model = execute(&parse(&r.script).unwrap()).unwrap();
        let drawing = Drawing::load(&mut r.dxf.as_slice()).unwrap();
        let theirs: Vec<&EntityType> = drawing
            .entities()
            .map(|e| &e.specific)
            .filter(|s| {
                matches!(
                    s,
                    EntityType::Line(_) | EntityType::Circle(_) | EntityType::Arc(_) | EntityType::LwPolyline(_) | EntityType::Face3D(_)
                )
            })
            .collect();
        let ours: Vec<&Entity> = model.entities.iter().filter(|e| !matches!(e, Entity::Text { .. })).collect();
        assert_eq!(theirs.len(), ours.len(), "{}", r.id);
        for (t, o) in theirs.iter().zip(&ours) {
            let ok = match (t, o) {
                (EntityType::Line(l), Entity::Line { start, end }) => same_point(&l.p1, *start) && same_point(&l.p2, *end),
                (EntityType::Circle(c), Entity::Circle { center, radius }) => {
                    same_point(&c.center, *center) && close(c.radius, *radius)
                }
                (EntityType::Arc(a), Entity::Arc { center, radius, start_angle, end_angle }) => {
                    same_point(&a.center, *center)
                        && close(a.radius, *radius)
                        && close(a.start_angle, *start_angle)
                        && close(a.end_angle, *end_angle)
                }
                (EntityType::LwPolyline(p), Entity::Polyline { vertices, closed }) => {
                    p.is_closed() == *closed
                        && p.vertices.len() == vertices.len()
                        && p.vertices.iter().zip(vertices).all(|(a, b)| close(a.x, b.x) && close(a.y, b.y))
                }
                (EntityType::Face3D(f), Entity::Face3D { vertices }) => {
                    let corners = [&f.first_corner, &f.second_corner, &f.third_corner, &f.fourth_corner];
                    (0..4).all(|i| same_point(corners[i], vertices[i.min(vertices.len() - 1)]))
                }
                _ => false,
            };
            assert!(ok, "{}: {t:?} vs {o:?}", r.id);
        }
    }
}
