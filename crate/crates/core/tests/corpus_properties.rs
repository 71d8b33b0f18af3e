use std::sync::OnceLock;

use cfsc::dxf::{read_dxf, sample_points, write_dxf};
use cfsc::eval::{evaluate, EvalConfig, ProblemCase};
use cfsc::generator::{build_dataset, std_templates, DatasetRecord};
use cfsc::geometry::{canonicalize, Entity, Point};
use cfsc::metrics::{acc_f, acc_p, graph_correct};
use cfsc::script::{execute, parse, pretty_print};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn corpus() -> &'static [DatasetRecord] {
    static C: OnceLock<Vec<DatasetRecord>> = OnceLock::new();
    C.get_or_init(|| {
        let t = std_templates();
        // 12 x 84 = 1008 records
        build_dataset(&t, &vec![84; t.len()], 99, 0).unwrap()
    })
}

#[test]
fn dxf_round_trip_over_a_thousand_records() {
    assert!(corpus().len() >= 1000);
    for r in corpus() {
        let model = execute(&parse(&r.script).unwrap()).unwrap();
        let read = read_dxf(&r.dxf).unwrap();
        assert!(read.skipped.is_empty());
        assert_eq!(canonicalize(&read.model, 1e-6).unwrap(), canonicalize(&model, 1e-6).unwrap(), "{}", r.id);
        // a second trip is byte-stable
        assert_eq!(write_dxf(&read.model).to_bytes(), write_dxf(&write_read(&read.model)).to_bytes());
    }
}

fn write_read(m: &cfsc::geometry::SketchModel) -> cfsc::geometry::SketchModel {
    read_dxf(&write_dxf(m).to_bytes()).unwrap().model
}

#[test]
fn identical_text_scores_one_on_every_record() {
    for r in corpus() {
        let p = parse(&r.script).unwrap();
        assert_eq!(acc_f(&p, &p).ratio(), Some(1.0));
        assert_eq!(acc_p(&p, &p).ratio(), Some(1.0));
    }
}

#[test]
fn graph_correct_ignores_order_and_comments() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for r in corpus().iter().step_by(7) {
        let p = parse(&r.script).unwrap();
        let m = execute(&p).unwrap();
        let mut shuffled = m.clone();
        shuffled.entities.shuffle(&mut rng);
        assert!(graph_correct(&m, &shuffled, 1e-3));
        let bare = execute(&parse(&pretty_print(&p.strip_comments())).unwrap()).unwrap();
        assert!(graph_correct(&m, &bare, 1e-3));
    }
}

fn on_face(p: Point, v: &[Point]) -> bool {
    // split into fan triangles; a point belongs if it lies in one of them
    (1..v.len() - 1).any(|i| {
        let (a, b, c) = (v[0], v[i], v[i + 1]);
        let n = b.sub(a).cross(c.sub(a));
        let area2 = n.norm();
        if area2 == 0.0 {
            return false;
        }
        let plane = (p.sub(a).dot(n) / area2).abs();
        let sub = |x: Point, y: Point| y.sub(x).cross(p.sub(x)).dot(n) / (area2 * area2);
        plane <= 1e-9 && [sub(a, b), sub(b, c), sub(c, a)].iter().all(|w| *w >= -1e-9)
    })
}

#[test]
fn sampled_points_lie_on_their_source_entities() {
    for r in corpus().iter().step_by(5) {
        let m = execute(&parse(&r.script).unwrap()).unwrap();
        let cloud = sample_points(&m, 500, 3).unwrap();
        assert_eq!(cloud.len(), 500);
        for (p, &s) in cloud.points.iter().zip(&cloud.sources) {
            let e = &m.entities[s];
            let ok = match e {
                Entity::Face3D { vertices } => on_face(*p, vertices),
                Entity::Circle { center, radius } | Entity::Arc { center, radius, .. } => {
                    (center.distance(*p) - radius).abs() <= 1e-9 && e.touches(*p, 1e-9)
                }
                _ => e.touches(*p, 1e-9),
            };
            assert!(ok, "{} point {p:?} off {e:?}", r.template);
        }
    }
}

fn mutate(script: &str, rng: &mut ChaCha8Rng) -> String {
    let mut lines: Vec<String> = script.lines().map(str::to_string).collect();
    for _ in 0..rng.gen_range(1..4) {
        let i = rng.gen_range(0..lines.len());
        match rng.gen_range(0..6) {
            0 => {
                lines.remove(i);
            }
            1 => {
                let l = lines[i].clone();
                lines.insert(i, l);
            }
            2 => {
                let j = rng.gen_range(0..lines.len());
                lines.swap(i, j);
            }
            3 => {
                let l: String = lines[i]
                    .chars()
                    .map(|c| if c.is_ascii_digit() && rng.gen_bool(0.3) { char::from(b'0' + rng.gen_range(0..10)) } else { c })
                    .collect();
                lines[i] = l;
            }
            4 => {
                let cut = rng.gen_range(0..=lines[i].len());
                lines[i].truncate(cut);
            }
            _ => lines[i] = lines[i].replace('+', "-"),
        }
        if lines.is_empty() {
            lines.push(String::new());
        }
    }
    lines.join("\n") + "\n"
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn printed_scripts_parse_back_to_the_same_program(idx in 0usize..1008) {
        let r = &corpus()[idx % corpus().len()];
        let p = parse(&r.script).unwrap();
        let printed = pretty_print(&p);
        let again = parse(&printed).unwrap();
        prop_assert_eq!(&again, &p);
        prop_assert_eq!(pretty_print(&again), printed);
        let m1 = execute(&p).unwrap();
        let m2 = execute(&again).unwrap();
        prop_assert_eq!(canonicalize(&m1, 1e-9).unwrap(), canonicalize(&m2, 1e-9).unwrap());
    }

    #[test]
    fn aggregates_stay_in_range_on_mutated_scripts(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cases: Vec<ProblemCase> = corpus()
            .choose_multiple(&mut rng, 6)
            .map(|r| ProblemCase {
                problem_id: r.id.clone(),
                ground_truth: r.script.clone(),
                candidates: (0..5).map(|i| (i, mutate(&r.script, &mut rng))).collect(),
            })
            .collect();
        let cfg = EvalConfig { cloud_points: 128, parallelism: 1, ..EvalConfig::default() };
        let rep = evaluate(&cases, &cfg).unwrap();
        let a = &rep.aggregates;
        let unit = [a.acc_f, a.acc_p, a.acc_g, a.acc_a, a.apr, a.apr_parse_only,
            a.annotation_type_error_rate, a.annotation_data_error_rate];
        for v in unit.into_iter().chain(a.pass_at_k.values().copied()).flatten() {
            prop_assert!((0.0..=1.0).contains(&v), "{:?}", a);
        }
        if let Some(cd) = a.mean_cd {
            prop_assert!(cd >= 0.0 && cd.is_finite());
        }
        for c in &rep.cases {
            prop_assert!(c.functions_matched <= c.functions_total);
            prop_assert!(c.parameters_matched <= c.parameters_total);
            prop_assert!(c.executed || c.graph_correct.is_none());
            prop_assert!(c.parsed || !c.executed);
        }
    }
}
