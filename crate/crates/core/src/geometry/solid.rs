//! Face-soup solids. Extrusions and revolutions are emitted as 3- and 4-vertex faces.

use super::{Entity, GeometryError, Point};

/// Extrudes a planar polygon (given in the XY plane at its own elevation) along +Z.
///
/// Side walls are quads; both caps are ear-clipped into triangles.
pub fn extrude_polygon(height: f64, outline: &[Point]) -> Result<Vec<Entity>, GeometryError> {
    if !height.is_finite() || height <= 0.0 {
        return Err(GeometryError::Invalid(format!("extrusion height must be positive, got {height}")));
    }
    if outline.len() < 3 {
        return Err(GeometryError::TooFewVertices { needed: 3, got: outline.len() });
    }
    if outline.iter().any(|p| !p.is_finite()) {
        return Err(GeometryError::NonFinite("extrusion outline"));
    }
    if outline.iter().any(|p| p.z != outline[0].z) {
        return Err(GeometryError::NonPlanarPolyline);
    }
    let up = |p: &Point| Point::new3(p.x, p.y, p.z + height);
    let tris = ear_clip(outline)?;
    let n = outline.len();
    let mut faces = Vec::with_capacity(n + 2 * tris.len());
    for i in 0..n {
        let (a, b) = (outline[i], outline[(i + 1) % n]);
        faces.push(Entity::face(vec![a, b, up(&b), up(&a)])?);
    }
    for [i, j, k] in &tris {
        faces.push(Entity::face(vec![outline[*i], outline[*k], outline[*j]])?);
        faces.push(Entity::face(vec![up(&outline[*i]), up(&outline[*j]), up(&outline[*k])])?);
    }
    Ok(faces)
}

/// Revolves an open profile of `(radius, z)` points around the Z axis.
///
/// A profile edge touching the axis produces triangles; an edge lying on it produces nothing.
pub fn revolve_profile(segments: usize, profile: &[(f64, f64)]) -> Result<Vec<Entity>, GeometryError> {
    if segments < 3 {
        return Err(GeometryError::Invalid(format!("revolution needs at least 3 segments, got {segments}")));
    }
    if profile.len() < 2 {
        return Err(GeometryError::TooFewVertices { needed: 2, got: profile.len() });
    }
    for &(r, z) in profile {
        if !r.is_finite() || !z.is_finite() {
            return Err(GeometryError::NonFinite("profile point"));
        }
        if r < 0.0 {
            return Err(GeometryError::Invalid(format!("profile radius must be non-negative, got {r}")));
        }
    }
    let ring: Vec<(f64, f64)> = (0..segments)
        .map(|j| {
            let t = std::f64::consts::TAU * j as f64 / segments as f64;
            (t.cos(), t.sin())
        })
        .collect();
    let at = |(r, z): (f64, f64), j: usize| {
        let (c, s) = ring[j % segments];
        Point::new3(r * c, r * s, z)
    };
    let mut faces = Vec::new();
    for w in profile.windows(2) {
        let (a, b) = (w[0], w[1]);
        if a == b || (a.0 == 0.0 && b.0 == 0.0) {
            continue;
        }
        for j in 0..segments {
            let mut v = vec![at(a, j), at(a, j + 1), at(b, j + 1), at(b, j)];
            if a.0 == 0.0 {
                v.remove(1);
            } else if b.0 == 0.0 {
                v.remove(3);
            }
            faces.push(Entity::face(v)?);
        }
    }
    Ok(faces)
}

fn signed_area(pts: &[Point]) -> f64 {
    let n = pts.len();
    (0..n)
        .map(|i| {
            let (a, b) = (pts[i], pts[(i + 1) % n]);
            a.x * b.y - b.x * a.y
        })
        .sum::<f64>()
        / 2.0
}

fn cross2(o: Point, a: Point, b: Point) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

/// Ear-clipping triangulation of a simple polygon; returns CCW index triples.
fn ear_clip(pts: &[Point]) -> Result<Vec<[usize; 3]>, GeometryError> {
    let area = signed_area(pts);
    if area.abs() < 1e-12 {
        return Err(GeometryError::Invalid("extrusion outline has zero area".into()));
    }
    let mut idx: Vec<usize> = (0..pts.len()).collect();
    if area < 0.0 {
        idx.reverse();
    }
    let mut out = Vec::with_capacity(pts.len() - 2);
    while idx.len() > 3 {
        let n = idx.len();
        let ear = (0..n).find(|&i| {
            let (a, b, c) = (idx[(i + n - 1) % n], idx[i], idx[(i + 1) % n]);
            if cross2(pts[a], pts[b], pts[c]) <= 0.0 {
                return false;
            }
            idx.iter().all(|&o| {
                o == a || o == b || o == c || !inside_triangle(pts[o], pts[a], pts[b], pts[c])
            })
        });
        let Some(i) = ear else {
            return Err(GeometryError::Invalid("extrusion outline is not a simple polygon".into()));
        };
        out.push([idx[(i + n - 1) % n], idx[i], idx[(i + 1) % n]]);
        idx.remove(i);
    }
    out.push([idx[0], idx[1], idx[2]]);
    Ok(out)
}

fn inside_triangle(p: Point, a: Point, b: Point, c: Point) -> bool {
    cross2(a, b, p) >= 0.0 && cross2(b, c, p) >= 0.0 && cross2(c, a, p) >= 0.0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn face_area(e: &Entity) -> f64 {
        let Entity::Face3D { vertices: v } = e else { panic!() };
        let tri = |a: Point, b: Point, c: Point| b.sub(a).cross(c.sub(a)).norm() / 2.0;
        let mut s = tri(v[0], v[1], v[2]);
        if v.len() == 4 {
            s += tri(v[0], v[2], v[3]);
        }
        s
    }

    #[test]
    fn extruded_square_has_expected_area() {
        let sq = [Point::new(0.0, 0.0), Point::new(2.0, 0.0), Point::new(2.0, 2.0), Point::new(0.0, 2.0)];
        let faces = extrude_polygon(3.0, &sq).unwrap();
        assert_eq!(faces.len(), 4 + 2 * 2);
        let area: f64 = faces.iter().map(face_area).sum();
        assert!((area - (4.0 * 6.0 + 2.0 * 4.0)).abs() < 1e-12);
    }

    #[test]
    fn ear_clip_handles_concave_outline() {
        // L-shape, clockwise
        let l = [
            Point::new(0.0, 0.0),
            Point::new(0.0, 2.0),
            Point::new(1.0, 2.0),
            Point::new(1.0, 1.0),
            Point::new(2.0, 1.0),
            Point::new(2.0, 0.0),
        ];
        let tris = ear_clip(&l).unwrap();
        assert_eq!(tris.len(), 4);
        let area: f64 = tris
            .iter()
            .map(|t| cross2(l[t[0]], l[t[1]], l[t[2]]) / 2.0)
            .sum();
        assert!((area - 3.0).abs() < 1e-12);
    }

    #[test]
    fn revolved_cylinder_closes_at_axis() {
        let faces = revolve_profile(16, &[(0.0, 0.0), (1.0, 0.0), (1.0, 2.0), (0.0, 2.0)]).unwrap();
        assert_eq!(faces.len(), 48);
        let tris = faces.iter().filter(|f| matches!(f, Entity::Face3D { vertices } if vertices.len() == 3)).count();
        assert_eq!(tris, 32);
        let area: f64 = faces.iter().map(face_area).sum();
        // inscribed 16-gon prism
        let side = 16.0 * 2.0 * (std::f64::consts::PI / 16.0).sin() * 2.0;
        let cap = 16.0 * 0.5 * (std::f64::consts::TAU / 16.0).sin();
        assert!((area - (side + 2.0 * cap)).abs() < 1e-9);
    }

    #[test]
    fn rejects_degenerate_input() {
        assert!(extrude_polygon(0.0, &[Point::ORIGIN; 3]).is_err());
        assert!(extrude_polygon(1.0, &[Point::ORIGIN, Point::new(1.0, 0.0), Point::new(2.0, 0.0)]).is_err());
        assert!(revolve_profile(2, &[(1.0, 0.0), (1.0, 1.0)]).is_err());
        assert!(revolve_profile(8, &[(-1.0, 0.0), (1.0, 1.0)]).is_err());
    }
}
