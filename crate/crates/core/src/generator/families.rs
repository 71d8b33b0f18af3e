use std::f64::consts::PI;
use std::path::PathBuf;

use super::*;
use crate::geometry::{Annotation, Entity};

macro_rules! skeleton {
    ($name:literal) => {
        ($name, include_str!(concat!("../../templates/std/", $name, ".cadt")))
    };
}

const STD_SKELETONS: [(&str, &str); 12] = [
    skeleton!("tangent_circles"),
    skeleton!("concentric_circles"),
    skeleton!("bearing"),
    skeleton!("spur_gear"),
    skeleton!("pentagon"),
    skeleton!("annotated_rectangle"),
    skeleton!("hex_nut"),
    skeleton!("flange"),
    skeleton!("key"),
    skeleton!("screw_3d"),
    skeleton!("hex_nut_3d"),
    skeleton!("flange_3d"),
];

/// Where skeleton scripts come from.
#[derive(Debug, Clone, PartialEq)]
pub enum TemplateSource {
    /// The skeletons compiled into the library.
    Std,
    /// A directory of `<family>.cadt` files; only families present are loaded.
    Dir(PathBuf),
}

pub fn family_names() -> Vec<&'static str> {
    STD_SKELETONS.iter().map(|(n, _)| *n).collect()
}

pub fn std_templates() -> Vec<ParentTemplate> {
    STD_SKELETONS.iter().map(|(n, s)| family(n, s.to_string()).expect("built-in family")).collect()
}

pub fn load_templates(source: &TemplateSource) -> Result<Vec<ParentTemplate>, GeneratorError> {
    let templates = match source {
        TemplateSource::Std => std_templates(),
        TemplateSource::Dir(dir) => {
            let io = |e: std::io::Error| GeneratorError::Io { path: dir.display().to_string(), message: e.to_string() };
            let mut found = Vec::new();
            for entry in std::fs::read_dir(dir).map_err(io)? {
                let path = entry.map_err(io)?.path();
                if path.extension().and_then(|e| e.to_str()) != Some("cadt") {
                    continue;
                }
                let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| GeneratorError::Io { path: path.display().to_string(), message: e.to_string() })?;
                let tpl = family(&stem, text).ok_or(GeneratorError::UnknownTemplate(stem))?;
                found.push(tpl);
            }
            let order = family_names();
            found.sort_by_key(|t| order.iter().position(|n| *n == t.name));
            found
        }
    };
    for t in &templates {
        t.validate()?;
    }
    Ok(templates)
}

fn rule(name: &'static str, formula: &'static str, source: RuleSource, check: fn(&Assignment) -> bool) -> ConstraintRule {
    ConstraintRule { name, formula, source, check }
}

use RuleSource::{ArtifactDefined as Artifact, Published};

fn no_derived(_: &Assignment) -> Assignment {
    Assignment::new()
}

fn circles(m: &SketchModel) -> Vec<((f64, f64), f64)> {
    m.entities
        .iter()
        .filter_map(|e| match e {
            Entity::Circle { center, radius } => Some(((center.x, center.y), *radius)),
            _ => None,
        })
        .collect()
}

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).hypot(a.1 - b.1)
}

fn close(a: f64, b: f64, tol: f64, what: &str) -> Result<(), String> {
    if (a - b).abs() <= tol {
        Ok(())
    } else {
        Err(format!("{what}: {a} differs from {b}"))
    }
}

fn family(name: &str, skeleton: String) -> Option<ParentTemplate> {
    let t = match name {
        "tangent_circles" => ParentTemplate {
            name: "tangent_circles",
            category: Category::Plain2D,
            skeleton,
            params: vec![
                ParamSpec::point("c", -60.0, 60.0, 0.5),
                ParamSpec::real("r_major", 5.0, 40.0, 0.5),
                ParamSpec::real("r_minor", 2.0, 30.0, 0.5),
            ],
            derived: &["d_center"],
            constraints: vec![
                rule("tangent circles", "d_center = R_major + R_minor", Published('a'), |a| {
                    a.num("d_center") == a.num("r_major") + a.num("r_minor")
                }),
                rule("dependent circle is the smaller", "R_minor <= R_major", Artifact, |a| {
                    a.num("r_minor") <= a.num("r_major")
                }),
            ],
            prompt: "Draw two externally tangent circles. The main circle is centered at ${c} with radius ${r_major}. \
                     The second circle has radius ${r_minor} and sits to the right of the main circle, touching it, \
                     so the centers are ${d_center} apart.",
            comments: &[("r_major", "radius of the main circle"), ("r_minor", "radius of the dependent circle, tangent to the main one")],
            derive: |a| Assignment::new().with("d_center", ParamValue::Num(a.num("r_major") + a.num("r_minor"))),
            postcondition: |a, m| {
                let c = circles(m);
                if c.len() != 2 {
                    return Err(format!("expected 2 circles, found {}", c.len()));
                }
                let d = dist(c[0].0, c[1].0);
                if d != c[0].1 + c[1].1 || d != a.num("d_center") {
                    return Err(format!("center distance {d} is not r1 + r2 = {}", c[0].1 + c[1].1));
                }
                Ok(())
            },
        },
        "concentric_circles" => ParentTemplate {
            name: "concentric_circles",
            category: Category::Plain2D,
            skeleton,
            params: vec![
                ParamSpec::point("c", -60.0, 60.0, 0.5),
                ParamSpec::real("r_outer", 5.0, 60.0, 0.5),
                ParamSpec::real("r_inner", 2.0, 55.0, 0.5),
            ],
            derived: &[],
            constraints: vec![rule("visible wall", "r_inner <= r_outer - 1", Artifact, |a| {
                a.num("r_inner") <= a.num("r_outer") - 1.0
            })],
            prompt: "Draw two concentric circles centered at ${c}: an outer circle of radius ${r_outer} \
                     and an inner circle of radius ${r_inner}.",
            comments: &[("r_outer", "outer circle radius"), ("r_inner", "inner circle radius, same center")],
            derive: no_derived,
            postcondition: |_, m| {
                let c = circles(m);
                if c.len() != 2 || c[0].0 != c[1].0 {
                    return Err("expected two circles sharing a center".into());
                }
                Ok(())
            },
        },
        "bearing" => ParentTemplate {
            name: "bearing",
            category: Category::Plain2D,
            skeleton,
            params: vec![
                ParamSpec::point("c", -60.0, 60.0, 0.5),
                ParamSpec::real("d_outer", 30.0, 150.0, 1.0),
                ParamSpec::real("d_inner", 20.0, 100.0, 1.0),
                ParamSpec::real("d_ball", 2.0, 20.0, 0.5),
                ParamSpec::real("wall", 2.0, 15.0, 0.5),
            ],
            derived: &["od", "bore", "n_ball", "balls"],
            constraints: vec![
                rule("ball quantity", "n_ball = floor(pi (D_outer - D_inner) / (2.2 d_ball))", Published('d'), |a| {
                    a.num("n_ball") == ball_count(a.num("d_outer"), a.num("d_inner"), a.num("d_ball"))
                }),
                rule("ball fits the race gap", "0.5 (D_outer - D_inner) / 2 <= d_ball <= 0.95 (D_outer - D_inner) / 2", Artifact, |a| {
                    let gap = (a.num("d_outer") - a.num("d_inner")) / 2.0;
                    a.num("d_ball") >= 0.5 * gap && a.num("d_ball") <= 0.95 * gap
                }),
                rule("outer ring wall", "od >= D_outer + 4", Artifact, |a| a.num("od") >= a.num("d_outer") + 4.0),
                rule("inner ring wall", "6 <= bore <= D_inner - 4", Artifact, |a| {
                    a.num("bore") >= 6.0 && a.num("bore") <= a.num("d_inner") - 4.0
                }),
                rule("enough balls", "n_ball >= 3", Artifact, |a| a.num("n_ball") >= 3.0),
                rule("balls fit the pitch circle", "1.1 n_ball d_ball <= pi (D_outer + D_inner) / 2", Artifact, |a| {
                    1.1 * a.num("n_ball") * a.num("d_ball") <= PI * (a.num("d_outer") + a.num("d_inner")) / 2.0
                }),
            ],
            prompt: "Draw the front view of a ball bearing centered at ${c}. The outer ring has outside diameter ${od} \
                     and race diameter ${d_outer}; the inner ring has race diameter ${d_inner} and bore ${bore}, \
                     both rings ${wall} thick. Place ${n_ball} balls of diameter ${d_ball} evenly on the pitch circle.",
            comments: &[
                ("od", "outside diameter of the outer ring"),
                ("d_outer", "race diameter of the outer ring, not its outside"),
                ("d_inner", "race diameter of the inner ring"),
                ("bore", "bore of the inner ring"),
                ("d_ball", "ball diameter; the ball count follows from the race gap"),
            ],
            derive: derive_bearing,
            postcondition: |a, m| {
                let c = circles(m);
                let n = a.num("n_ball") as usize;
                if c.len() != 4 + n {
                    return Err(format!("expected {} circles, found {}", 4 + n, c.len()));
                }
                let pitch = (a.num("d_outer") + a.num("d_inner")) / 4.0;
                for (center, r) in &c[4..] {
                    close(dist(*center, a.point("c")), pitch, 1e-5, "ball pitch radius")?;
                    close(*r, a.num("d_ball") / 2.0, 0.0, "ball radius")?;
                }
                Ok(())
            },
        },
        "spur_gear" => ParentTemplate {
            name: "spur_gear",
            category: Category::Plain2D,
            skeleton,
            params: vec![
                ParamSpec::point("c", -50.0, 50.0, 0.5),
                ParamSpec::real("module", 1.0, 4.0, 0.25),
                ParamSpec::int("teeth", 12.0, 36.0),
                ParamSpec::real("rho", 0.1, 2.5, 0.05),
                ParamSpec::real("bore", 4.0, 60.0, 1.0),
            ],
            derived: &["fillets", "flanks", "tips"],
            constraints: vec![
                rule("root fillet", "rho_root >= 0.25 m_n", Published('e'), |a| a.num("rho") >= 0.25 * a.num("module")),
                rule("fillet fits the tooth gap", "rho_root <= 0.6 m_n", Artifact, |a| a.num("rho") <= 0.6 * a.num("module")),
                rule("positive tip land", "psi_tip < pi / z", Artifact, |a| {
                    gear_psi_tip(a.num("module"), a.num("teeth"), a.num("rho")) < PI / a.num("teeth")
                }),
                rule("hub inside the root circle", "bore <= 2 r_root - 4 m_n", Artifact, |a| {
                    let m = a.num("module");
                    a.num("bore") <= 2.0 * m * (a.num("teeth") / 2.0 - 1.25) - 4.0 * m
                }),
            ],
            prompt: "Draw a spur gear centered at ${c} with module ${module} and ${teeth} teeth. \
                     Use root fillets of radius ${rho} and a central bore of diameter ${bore}.",
            comments: &[
                ("module", "normal module"),
                ("rho", "root fillet radius, at least a quarter of the module"),
                ("fillets", "root fillet arcs, one per tooth gap"),
                ("flanks", "tooth flanks, two per gap"),
                ("tips", "tip arcs on the addendum circle"),
            ],
            derive: derive_gear,
            postcondition: |a, m| {
                let z = a.num("teeth") as usize;
                let radii: Vec<f64> = m
                    .entities
                    .iter()
                    .filter_map(|e| match e {
                        Entity::Arc { radius, .. } => Some(*radius),
                        _ => None,
                    })
                    .collect();
                if radii.len() != 4 * z {
                    return Err(format!("expected {} arcs, found {}", 4 * z, radii.len()));
                }
                if radii[..z].iter().any(|&r| r < 0.25 * a.num("module")) {
                    return Err("root fillet below a quarter module".into());
                }
                Ok(())
            },
        },
        "pentagon" => ParentTemplate {
            name: "pentagon",
            category: Category::Plain2D,
            skeleton,
            params: vec![
                ParamSpec::point("c", -60.0, 60.0, 0.5),
                ParamSpec::real("radius", 5.0, 60.0, 0.5),
                ParamSpec::int("rotation", 0.0, 71.0),
            ],
            derived: &["v0", "v1", "v2", "v3", "v4"],
            constraints: vec![rule("rotation below the symmetry period", "rotation < 72", Artifact, |a| a.num("rotation") < 72.0)],
            prompt: "Draw a regular pentagon centered at ${c} with circumradius ${radius}, \
                     rotated ${rotation} degrees so that its first vertex is at ${v0}.",
            comments: &[("v0", "vertices in counter-clockwise order")],
            derive: |a| {
                let (cx, cy) = a.point("c");
                let mut out = Assignment::new();
                for k in 0..5 {
                    let t = (a.num("rotation") + 72.0 * k as f64).to_radians();
                    let r = a.num("radius");
                    out.set(&format!("v{k}"), ParamValue::pt(cx + r * t.cos(), cy + r * t.sin()));
                }
                out
            },
            postcondition: |a, m| {
                let Some(Entity::Polyline { vertices, closed: true }) = m.entities.first() else {
                    return Err("expected a closed polyline".into());
                };
                if vertices.len() != 5 {
                    return Err("pentagon needs 5 vertices".into());
                }
                for v in vertices {
                    close(dist((v.x, v.y), a.point("c")), a.num("radius"), 1e-5, "circumradius")?;
                }
                Ok(())
            },
        },
        "annotated_rectangle" => ParentTemplate {
            name: "annotated_rectangle",
            category: Category::Annotated2D,
            skeleton,
            params: vec![
                ParamSpec::point("origin", -50.0, 50.0, 0.5),
                ParamSpec::real("width", 5.0, 120.0, 0.5),
                ParamSpec::real("height", 5.0, 120.0, 0.5),
                ParamSpec::real("offset", 2.0, 15.0, 0.5),
            ],
            derived: &[],
            constraints: vec![rule("dimension offset", "offset <= min(width, height)", Artifact, |a| {
                a.num("offset") <= a.num("width").min(a.num("height"))
            })],
            prompt: "Draw a rectangle with its lower-left corner at ${origin}, width ${width} and height ${height}. \
                     Dimension the bottom edge and the right edge, with dimension lines ${offset} outside the outline.",
            comments: &[("width", "width along x"), ("height", "height along y"), ("offset", "distance of dimension lines from the outline")],
            derive: no_derived,
            postcondition: |a, m| {
                let measured: Vec<f64> = m.annotations.iter().map(|x| x.nominal()).collect();
                if measured.len() != 2 {
                    return Err("expected two dimensions".into());
                }
                close(measured[0], a.num("width"), 1e-9, "width dimension")?;
                close(measured[1], a.num("height"), 1e-9, "height dimension")
            },
        },
        "hex_nut" => ParentTemplate {
            name: "hex_nut",
            category: Category::Annotated2D,
            skeleton,
            params: vec![
                ParamSpec::point("c", -60.0, 60.0, 0.5),
                ParamSpec::real("s_hex", 8.0, 60.0, 0.1),
                ParamSpec::real("d_nominal", 4.0, 40.0, 0.5),
                ParamSpec::real("thread_ratio", 0.75, 0.95, 0.01),
            ],
            derived: &["d_internal", "r_corner"],
            constraints: hex_rules(),
            prompt: "Draw a hexagon nut centered at ${c} with width across flats ${s_hex}, \
                     nominal diameter ${d_nominal} and thread minor diameter ${d_internal} (${thread_ratio} of nominal). \
                     Dimension the width across flats, the minor radius and one 120 degree corner angle.",
            comments: &[
                ("s_hex", "width across flats"),
                ("r_corner", "corner radius, half the width across corners"),
                ("d_nominal", "nominal diameter"),
                ("d_internal", "thread minor diameter"),
            ],
            derive: derive_hex,
            postcondition: |a, m| {
                let n = &m.annotations;
                if n.len() != 3 {
                    return Err("expected 3 annotations".into());
                }
                close(n[0].nominal(), a.num("s_hex"), 1e-9, "across flats")?;
                close(n[1].nominal(), a.num("d_internal") / 2.0, 1e-12, "minor radius")?;
                close(n[2].nominal(), 120.0, 1e-3, "corner angle")
            },
        },
        "flange" => ParentTemplate {
            name: "flange",
            category: Category::Annotated2D,
            skeleton,
            params: flange_params(false),
            derived: &["holes"],
            constraints: flange_rules(),
            prompt: "Draw a flange centered at ${c} with outside diameter ${d_outer} and a bore of ${d_bore} \
                     toleranced +${tol}/0. Put ${n_bolts} bolt holes of diameter ${d_bolt} evenly on a ${d_pcd} pitch circle, \
                     and dimension the outside radius.",
            comments: &[
                ("d_outer", "outside diameter"),
                ("d_bore", "bore diameter, toleranced"),
                ("d_bolt", "bolt hole diameter"),
                ("holes", "hole centers on the pitch circle"),
            ],
            derive: |a| derive_holes(a, None),
            postcondition: flange_post,
        },
        "key" => ParentTemplate {
            name: "key",
            category: Category::Annotated2D,
            skeleton,
            params: vec![
                ParamSpec::point("origin", -50.0, 50.0, 0.5),
                ParamSpec::real("length", 10.0, 100.0, 0.5),
                ParamSpec::real("width", 3.0, 30.0, 0.5),
                ParamSpec::real("chamfer", 0.1, 3.0, 0.1),
                ParamSpec::real("roughness", 0.8, 6.4, 0.8),
            ],
            derived: &[],
            constraints: vec![
                rule("slender key", "length >= 2 width", Artifact, |a| a.num("length") >= 2.0 * a.num("width")),
                rule("small chamfer", "chamfer <= 0.1 width", Artifact, |a| a.num("chamfer") <= 0.1 * a.num("width") + 1e-12),
            ],
            prompt: "Draw a round-ended feather key whose left end center is at ${origin}, overall length ${length} \
                     and width ${width}. Dimension the length and the end radius, note a C${chamfer} chamfer on the top edge \
                     and roughness Ra ${roughness} on the bottom face.",
            comments: &[
                ("width", "key width; the ends are half circles"),
                ("length", "overall length including the rounded ends"),
                ("chamfer", "edge chamfer size"),
            ],
            derive: no_derived,
            postcondition: |a, m| {
                let n = &m.annotations;
                if n.len() != 4 {
                    return Err("expected 4 annotations".into());
                }
                close(n[0].nominal(), a.num("length"), 1e-9, "length dimension")?;
                close(n[1].nominal(), a.num("width") / 2.0, 1e-12, "end radius")
            },
        },
        "screw_3d" => ParentTemplate {
            name: "screw_3d",
            category: Category::Solid3D,
            skeleton,
            params: vec![
                ParamSpec::real("d", 3.0, 24.0, 0.5),
                ParamSpec::real("length", 8.0, 120.0, 1.0),
                ParamSpec::real("head_d", 4.0, 48.0, 0.5),
                ParamSpec::real("head_h", 1.5, 20.0, 0.5),
                ParamSpec::int("segments", 12.0, 48.0),
            ],
            derived: &[],
            constraints: vec![
                rule("head diameter", "1.5 d <= head_d <= 2 d", Artifact, |a| {
                    (1.5 * a.num("d")..=2.0 * a.num("d")).contains(&a.num("head_d"))
                }),
                rule("head height", "0.5 d <= head_h <= 0.8 d", Artifact, |a| {
                    (0.5 * a.num("d")..=0.8 * a.num("d")).contains(&a.num("head_h"))
                }),
                rule("shank length", "length >= 2 d", Artifact, |a| a.num("length") >= 2.0 * a.num("d")),
            ],
            prompt: "Model a cylinder-head screw as a solid of revolution about the z axis with ${segments} segments: \
                     shank diameter ${d} and length ${length}, head diameter ${head_d} and head height ${head_h}.",
            comments: &[("d", "shank diameter"), ("head_d", "head diameter"), ("head_h", "head height")],
            derive: no_derived,
            postcondition: |a, m| {
                let n = a.num("segments") as usize;
                if m.entities.len() != 5 * n {
                    return Err(format!("expected {} faces, found {}", 5 * n, m.entities.len()));
                }
                Ok(())
            },
        },
        "hex_nut_3d" => ParentTemplate {
            name: "hex_nut_3d",
            category: Category::Solid3D,
            skeleton,
            params: vec![
                ParamSpec::real("s_hex", 8.0, 60.0, 0.5),
                ParamSpec::real("d_nominal", 4.0, 40.0, 0.5),
                ParamSpec::real("thread_ratio", 0.75, 0.95, 0.01),
                ParamSpec::real("thickness", 2.0, 40.0, 0.5),
            ],
            derived: &["d_internal", "r_corner"],
            constraints: {
                let mut r = hex_rules();
                r.push(rule("nut thickness", "0.5 d_nominal <= thickness <= d_nominal", Artifact, |a| {
                    (0.5 * a.num("d_nominal")..=a.num("d_nominal")).contains(&a.num("thickness"))
                }));
                r
            },
            prompt: "Model a hexagon nut as an extruded prism of thickness ${thickness} with width across flats ${s_hex}, \
                     marking the nominal diameter ${d_nominal} hole on both faces. The thread minor diameter is ${d_internal}, ${thread_ratio} of nominal.",
            comments: &[("s_hex", "width across flats"), ("thickness", "nut thickness along z")],
            derive: derive_hex,
            postcondition: |a, m| {
                let faces = m.entities.iter().filter(|e| matches!(e, Entity::Face3D { .. })).count();
                if faces != 14 {
                    return Err(format!("expected 14 faces, found {faces}"));
                }
                let t = a.num("thickness");
                for e in &m.entities {
                    if let Entity::Face3D { vertices } = e {
                        if vertices.iter().any(|v| v.z != 0.0 && v.z != t) {
                            return Err("face vertex off the nut faces".into());
                        }
                    }
                }
                Ok(())
            },
        },
        "flange_3d" => ParentTemplate {
            name: "flange_3d",
            category: Category::Solid3D,
            skeleton,
            params: flange_params(true),
            derived: &["holes"],
            constraints: flange_rules(),
            prompt: "Model a flange plate of thickness ${thickness} as a solid of revolution with ${segments} segments: \
                     outside diameter ${d_outer}, bore ${d_bore}. Mark ${n_bolts} bolt holes of diameter ${d_bolt} \
                     on a ${d_pcd} pitch circle on the top face.",
            comments: &[("thickness", "plate thickness"), ("holes", "hole centers on the top face")],
            derive: |a| derive_holes(a, Some(a.num("thickness"))),
            postcondition: flange_post,
        },
        _ => return None,
    };
    Some(t)
}

pub(crate) fn ball_count(d_outer: f64, d_inner: f64, d_ball: f64) -> f64 {
    (PI * (d_outer - d_inner) / (2.2 * d_ball)).floor()
}

fn derive_bearing(a: &Assignment) -> Assignment {
    let (cx, cy) = a.point("c");
    let (dout, din, wall) = (a.num("d_outer"), a.num("d_inner"), a.num("wall"));
    let n = ball_count(dout, din, a.num("d_ball"));
    let pitch = (dout + din) / 4.0;
    let balls = (0..n.max(0.0) as usize)
        .map(|k| {
            let t = 2.0 * PI * k as f64 / n;
            vec![ParamValue::pt(cx + pitch * t.cos(), cy + pitch * t.sin())]
        })
        .collect();
    Assignment::new()
        .with("od", ParamValue::num(dout + 2.0 * wall))
        .with("bore", ParamValue::num(din - 2.0 * wall))
        .with("n_ball", ParamValue::Num(n))
        .with("balls", ParamValue::Rows(balls))
}

/// Half-angle of a tooth gap at the tip circle.
pub(crate) fn gear_psi_tip(m: f64, z: f64, rho: f64) -> f64 {
    let ra = m * (z / 2.0 + 1.0);
    (rho / ra).asin().max(0.6 * PI / z)
}

fn derive_gear(a: &Assignment) -> Assignment {
    let (cx, cy) = a.point("c");
    let (m, z, rho) = (a.num("module"), a.num("teeth"), a.num("rho"));
    let rf = m * (z / 2.0 - 1.25);
    let ra = m * (z / 2.0 + 1.0);
    let rb = m * z / 2.0 * 20f64.to_radians().cos();
    let tau = 2.0 * PI / z;
    let delta = (rho / (rf + rho)).atan();
    let re = (rf + rho).hypot(rho);
    let psi = gear_psi_tip(m, z, rho);
    let at = |r: f64, t: f64| (cx + r * t.cos(), cy + r * t.sin());
    let deg = |t: f64| crate::geometry::normalize_degrees(t.to_degrees());

    let (mut fillets, mut flanks, mut tips) = (Vec::new(), Vec::new(), Vec::new());
    for k in 0..z as usize {
        let phi = k as f64 * tau;
        let (fx, fy) = at(rf + rho, phi);
        fillets.push(vec![
            ParamValue::pt(fx, fy),
            ParamValue::num(deg(phi + PI / 2.0)),
            ParamValue::num(deg(phi + 1.5 * PI)),
        ]);
        for side in [-1.0, 1.0] {
            let e = at(re, phi + side * delta);
            let t = at(ra, phi + side * psi);
            let mid = ((e.0 + t.0) / 2.0, (e.1 + t.1) / 2.0);
            let h = dist(e, t) / 2.0;
            let rmid = (re + ra) / 2.0;
            let radius = (rmid * rmid - rb * rb).max(0.0).sqrt().max(1.05 * h);
            // unit normal to the chord, turned toward the tooth on this side
            let (dx, dy) = ((t.0 - e.0) / (2.0 * h), (t.1 - e.1) / (2.0 * h));
            let mut n = (-dy, dx);
            let pm = phi + side * (delta + psi) / 2.0;
            if n.0 * (-pm.sin()) * side + n.1 * pm.cos() * side < 0.0 {
                n = (-n.0, -n.1);
            }
            let back = (radius * radius - h * h).sqrt();
            let o = (mid.0 + n.0 * back, mid.1 + n.1 * back);
            let ae = deg((e.1 - o.1).atan2(e.0 - o.0));
            let at_ = deg((t.1 - o.1).atan2(t.0 - o.0));
            let (a0, a1) = if crate::geometry::ccw_sweep(ae, at_) <= 180.0 { (ae, at_) } else { (at_, ae) };
            flanks.push(vec![ParamValue::pt(o.0, o.1), ParamValue::num(radius), ParamValue::num(a0), ParamValue::num(a1)]);
        }
        tips.push(vec![ParamValue::num(deg(phi + psi)), ParamValue::num(deg(phi + tau - psi))]);
    }
    Assignment::new()
        .with("fillets", ParamValue::Rows(fillets))
        .with("flanks", ParamValue::Rows(flanks))
        .with("tips", ParamValue::Rows(tips))
}

fn derive_hex(a: &Assignment) -> Assignment {
    Assignment::new()
        .with("d_internal", ParamValue::num(a.num("thread_ratio") * a.num("d_nominal")))
        .with("r_corner", ParamValue::num(a.num("s_hex") / 3f64.sqrt()))
}

fn hex_rules() -> Vec<ConstraintRule> {
    vec![
        rule("width across flats", "S_hex >= 1.5 d_nominal + 0.2 d_internal", Published('b'), |a| {
            a.num("s_hex") >= 1.5 * a.num("d_nominal") + 0.2 * a.num("d_internal")
        }),
        rule("nominal diameter below the short diameter", "d_nominal < S_hex", Published('b'), |a| {
            a.num("d_nominal") < a.num("s_hex")
        }),
        rule("thread depth", "0.75 d_nominal <= d_internal < d_nominal", Artifact, |a| {
            a.num("d_internal") >= 0.75 * a.num("d_nominal") && a.num("d_internal") < a.num("d_nominal")
        }),
        rule("compact nut", "S_hex <= 2.2 d_nominal", Artifact, |a| a.num("s_hex") <= 2.2 * a.num("d_nominal")),
    ]
}

fn flange_params(solid: bool) -> Vec<ParamSpec> {
    let mut p = vec![
        ParamSpec::real("d_outer", 60.0, 300.0, 1.0),
        ParamSpec::real("d_bore", 10.0, 150.0, 1.0),
        ParamSpec::real("d_bolt", 6.0, 30.0, 0.5),
        ParamSpec::real("d_pcd", 30.0, 260.0, 1.0),
        ParamSpec::int("n_bolts", 3.0, 12.0),
    ];
    if solid {
        p.push(ParamSpec::real("thickness", 5.0, 40.0, 0.5));
        p.push(ParamSpec::int("segments", 16.0, 64.0));
    } else {
        p.insert(0, ParamSpec::point("c", -60.0, 60.0, 0.5));
        p.push(ParamSpec::real("tol", 0.01, 0.1, 0.01));
    }
    p
}

fn flange_rules() -> Vec<ConstraintRule> {
    vec![
        rule("bolt circle", "D_pcd >= D_bore + 2.5 D_bolt", Published('c'), |a| {
            a.num("d_pcd") >= a.num("d_bore") + 2.5 * a.num("d_bolt")
        }),
        rule("edge distance", "d_outer >= D_pcd + 2 D_bolt", Artifact, |a| {
            a.num("d_outer") >= a.num("d_pcd") + 2.0 * a.num("d_bolt")
        }),
        rule("hole spacing", "pi D_pcd / n_bolts >= 2 D_bolt", Artifact, |a| {
            PI * a.num("d_pcd") / a.num("n_bolts") >= 2.0 * a.num("d_bolt")
        }),
    ]
}

fn derive_holes(a: &Assignment, z: Option<f64>) -> Assignment {
    let (cx, cy) = if a.get("c").is_some() { a.point("c") } else { (0.0, 0.0) };
    let n = a.num("n_bolts");
    let r = a.num("d_pcd") / 2.0;
    let holes = (0..n.max(0.0) as usize)
        .map(|k| {
            let t = 2.0 * PI * k as f64 / n;
            let (x, y) = (cx + r * t.cos(), cy + r * t.sin());
            vec![match z {
                Some(z) => ParamValue::pt3(x, y, z),
                None => ParamValue::pt(x, y),
            }]
        })
        .collect();
    Assignment::new().with("holes", ParamValue::Rows(holes))
}

fn flange_post(a: &Assignment, m: &SketchModel) -> Result<(), String> {
    let c = if a.get("c").is_some() { a.point("c") } else { (0.0, 0.0) };
    // the bore may share the bolt size; it is the one at the center
    let holes: Vec<_> = circles(m)
        .into_iter()
        .filter(|(p, r)| *r == a.num("d_bolt") / 2.0 && dist(*p, c) > 1e-9)
        .collect();
    if holes.len() < a.num("n_bolts") as usize {
        return Err("missing bolt holes".into());
    }
    for (center, r) in holes {
        let pcd = 2.0 * dist(center, c);
        if pcd < a.num("d_bore") + 2.5 * 2.0 * r - 2e-6 {
            return Err(format!("bolt circle {pcd} too small for the bore"));
        }
    }
    if let Some(Annotation::Tolerance { nominal, .. }) = m.annotations.get(1) {
        close(*nominal, a.num("d_bore"), 0.0, "toleranced bore")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::script::{execute, parse};

    #[test]
    fn all_families_load_and_validate() {
        let t = load_templates(&TemplateSource::Std).unwrap();
        assert_eq!(t.len(), 12);
        let cats: Vec<usize> = Category::ALL.iter().map(|c| t.iter().filter(|x| x.category == *c).count()).collect();
        assert_eq!(cats, vec![5, 4, 3]);
    }

    #[test]
    fn flange_bore_may_match_the_bolt_size() {
        let tpl = std_templates().into_iter().find(|t| t.name == "flange").unwrap();
        let free = Assignment::new()
            .with("c", ParamValue::pt(0.0, 0.0))
            .with("d_outer", ParamValue::Num(100.0))
            .with("d_bore", ParamValue::Num(10.0))
            .with("d_bolt", ParamValue::Num(10.0))
            .with("d_pcd", ParamValue::Num(40.0))
            .with("n_bolts", ParamValue::Num(4.0))
            .with("tol", ParamValue::Num(0.05));
        let rec = crate::generator::make_record(&tpl, &free).unwrap();
        assert_eq!(crate::generator::validate_record(&tpl, &rec), Vec::<String>::new());
    }

    #[test]
    fn ball_count_example() {
        assert_eq!(ball_count(80.0, 50.0, 10.0), 4.0);
    }

    #[test]
    fn bearing_samples_obey_ball_quantity() {
        let tpl = std_templates().into_iter().find(|t| t.name == "bearing").unwrap();
        for seed in 0..50 {
            let free = tpl.sample_seeded(seed).unwrap();
            let full = tpl.complete(&free).unwrap();
            let expected = (PI * (full.num("d_outer") - full.num("d_inner")) / (2.2 * full.num("d_ball"))).floor();
            assert_eq!(full.num("n_ball"), expected);
            assert_eq!(full.rows("balls").len() as f64, expected);
        }
    }

    #[test]
    fn every_family_samples_renders_and_runs() {
        for tpl in std_templates() {
            for seed in 0..20 {
                let free = tpl.sample_seeded(seed).unwrap();
                let full = tpl.complete(&free).unwrap();
                let src = tpl.instantiate(&free).unwrap();
                let model = execute(&parse(&src).unwrap()).unwrap_or_else(|e| panic!("{}: {e}\n{src}", tpl.name));
                (tpl.postcondition)(&full, &model).unwrap_or_else(|e| panic!("{}: {e}", tpl.name));
                assert_eq!(src, tpl.instantiate(&free).unwrap());
            }
        }
    }

    #[test]
    fn acceptance_rate_leaves_margin_under_the_cap() {
        // a family accepting fewer than 2% of draws would risk exhausting the cap
        use rand::SeedableRng;
        for tpl in std_templates() {
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            let mut ok = 0;
            for _ in 0..2000 {
                let free = Assignment(tpl.params.iter().map(|p| (p.name.to_string(), p.sample(&mut rng))).collect());
                if tpl.violations(&tpl.complete(&free).unwrap()).is_empty() {
                    ok += 1;
                }
            }
            assert!(ok >= 40, "{} accepted {ok}/2000", tpl.name);
        }
    }
}
