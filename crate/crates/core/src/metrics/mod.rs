//! Scoring functions for generated scripts against ground truth.

mod chamfer;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::geometry::{canonicalize, SketchModel};
use crate::script::{execute_traced, function_set, CallRecord, ScriptProgram, Value};

pub use chamfer::{chamfer_distance, chamfer_distance_brute_force, normalized_chamfer, KdTree};

/// Relative tolerance for parameter comparison.
pub const PARAM_REL_TOL: f64 = 1e-6;
/// Absolute floor under [`PARAM_REL_TOL`].
pub const PARAM_ABS_TOL: f64 = 1e-9;
/// Default tolerance for geometry and annotation comparison, in drawing units.
pub const DEFAULT_TOL: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("pass@k needs 1 <= k <= n and c <= n, got n={n} c={c} k={k}")]
    Domain { n: usize, c: usize, k: usize },
    #[error("point cloud is empty")]
    EmptyCloud,
}

/// A `matched / total` count pair. Aggregates sum both sides before dividing.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Tally {
    pub matched: usize,
    pub total: usize,
}

impl Tally {
    pub fn new(matched: usize, total: usize) -> Self {
        Tally { matched, total }
    }

    /// `None` when the total is zero.
    pub fn ratio(self) -> Option<f64> {
        (self.total > 0).then(|| self.matched as f64 / self.total as f64)
    }
}

impl std::ops::Add for Tally {
    type Output = Tally;
    fn add(self, o: Tally) -> Tally {
        Tally::new(self.matched + o.matched, self.total + o.total)
    }
}

impl std::iter::Sum for Tally {
    fn sum<I: Iterator<Item = Tally>>(it: I) -> Tally {
        it.fold(Tally::default(), |a, b| a + b)
    }
}

fn multiset_intersection(a: &BTreeMap<String, usize>, b: &BTreeMap<String, usize>) -> BTreeMap<String, usize> {
    a.iter()
        .filter_map(|(k, &n)| b.get(k).map(|&m| (k.clone(), n.min(m))))
        .filter(|(_, n)| *n > 0)
        .collect()
}

/// Function accuracy: how many of the ground truth's functions the candidate also has.
pub fn acc_f(gt: &ScriptProgram, cand: &ScriptProgram) -> Tally {
    let g = function_set(gt);
    let common = multiset_intersection(&g, &function_set(cand));
    Tally::new(common.values().sum(), g.values().sum())
}

/// Whether two argument values agree: numbers within a relative tolerance
/// with an absolute floor, tuples element by element, strings exactly.
pub fn values_match(a: &Value, b: &Value) -> bool {
    let num = |x: f64, y: f64| (x - y).abs() <= (PARAM_REL_TOL * x.abs().max(y.abs())).max(PARAM_ABS_TOL);
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => num(*x, *y),
        (Value::Tuple(x), Value::Tuple(y)) => x.len() == y.len() && x.iter().zip(y).all(|(p, q)| num(*p, *q)),
        (Value::Str(x), Value::Str(y)) => x == y,
        _ => false,
    }
}

/// Parameter accuracy over call traces.
///
/// For every function both programs share, the k-th call in the ground
/// truth is paired with the k-th call in the candidate and their arguments
/// are compared position by position. A tuple counts as one parameter. Calls
/// with no partner or a different arity add their parameters to the total
/// only.
pub fn acc_p_traces(gt: &[CallRecord], cand: &[CallRecord], shared: &BTreeMap<String, usize>) -> Tally {
    let mut by_name: BTreeMap<&str, Vec<&CallRecord>> = BTreeMap::new();
    for c in cand {
        by_name.entry(c.callee.as_str()).or_default().push(c);
    }
    let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
    let mut t = Tally::default();
    for g in gt.iter().filter(|g| shared.contains_key(&g.callee)) {
        let k = seen.entry(g.callee.as_str()).or_insert(0);
        let partner = by_name.get(g.callee.as_str()).and_then(|v| v.get(*k));
        *k += 1;
        t.total += g.args.len();
        if let Some(c) = partner.filter(|c| c.args.len() == g.args.len()) {
            t.matched += g.args.iter().zip(&c.args).filter(|(a, b)| values_match(a, b)).count();
        }
    }
    t
}

/// Parameter accuracy of two parsed programs, using their execution traces.
/// A run that fails part way contributes the calls made before the failure.
pub fn acc_p(gt: &ScriptProgram, cand: &ScriptProgram) -> Tally {
    let shared = multiset_intersection(&function_set(gt), &function_set(cand));
    acc_p_traces(&execute_traced(gt).trace, &execute_traced(cand).trace, &shared)
}

/// Every parameter of every ground-truth call; the denominator charged to a
/// candidate that does not parse.
pub fn trace_parameter_count(trace: &[CallRecord]) -> usize {
    trace.iter().map(|c| c.args.len()).sum()
}

/// Geometry equality at `tol`, ignoring annotations and entity order.
pub fn graph_correct(gt: &SketchModel, cand: &SketchModel, tol: f64) -> bool {
    match (canonicalize(gt, tol), canonicalize(cand, tol)) {
        (Ok(a), Ok(b)) => a.entities == b.entities,
        _ => false,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct AnnotationMatch {
    /// Same multiset of annotation kinds.
    pub type_ok: bool,
    /// Kinds match and every annotation's values agree at the tolerance.
    pub data_ok: bool,
}

impl AnnotationMatch {
    pub fn correct(self) -> bool {
        self.type_ok && self.data_ok
    }
}

pub fn annotation_correct(gt: &SketchModel, cand: &SketchModel, tol: f64) -> AnnotationMatch {
    let kinds = |m: &SketchModel| {
        let mut k: Vec<_> = m.annotations.iter().map(|a| a.kind()).collect();
        k.sort();
        k
    };
    let type_ok = kinds(gt) == kinds(cand);
    let data_ok = type_ok
        && match (canonicalize(gt, tol), canonicalize(cand, tol)) {
            (Ok(a), Ok(b)) => a.annotations == b.annotations,
            _ => false,
        };
    AnnotationMatch { type_ok, data_ok }
}

/// Unbiased pass@k: the chance that a random k-subset of n samples, c of
/// them correct, holds at least one correct sample.
///
/// Uses `1 - prod_{i=n-c+1}^{n} (1 - k/i)` which avoids large binomials.
pub fn pass_at_k(n: usize, c: usize, k: usize) -> Result<f64, MetricError> {
    if k == 0 || k > n || c > n {
        return Err(MetricError::Domain { n, c, k });
    }
    if n - c < k {
        return Ok(1.0);
    }
    let miss: f64 = (n - c + 1..=n).map(|i| 1.0 - k as f64 / i as f64).product();
    Ok(1.0 - miss)
}

/// Average parsing rate: per-problem fraction of valid candidates, averaged
/// over problems. Each item is `(valid, candidates)`; problems without
/// candidates are skipped.
pub fn apr(per_problem: &[(usize, usize)]) -> Option<f64> {
    let rates: Vec<f64> = per_problem
        .iter()
        .filter(|(_, n)| *n > 0)
        .map(|&(ok, n)| ok as f64 / n as f64)
        .collect();
    (!rates.is_empty()).then(|| rates.iter().sum::<f64>() / rates.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Annotation, Entity, Point};
    use crate::script::parse;
    use proptest::prelude::*;

    fn prog(src: &str) -> ScriptProgram {
        parse(src).unwrap()
    }

    const CIRCLES: &str = "fn circles(c, r) {\n    add_circle(c, r)\n    add_circle(c, r / 2)\n}\nmain {\n    circles((0, 0), 10)\n    add_circle((30, 0), 5)\n    save \"a.dxf\"\n}\n";

    #[test]
    fn acc_f_cases() {
        let gt = prog(CIRCLES);
        assert_eq!(acc_f(&gt, &gt), Tally::new(3, 3));
        let cand = prog("main {\n    add_circle((0, 0), 10)\n    save \"a.dxf\"\n}\n");
        // {circles, main, add_circle} against {main, add_circle}
        assert_eq!(acc_f(&gt, &cand), Tally::new(2, 3));
        let other = prog("fn a() {\n    add_line((0, 0), (1, 0))\n}\nfn b() {\n    a()\n}\nmain {\n    b()\n    save \"a.dxf\"\n}\n");
        let disjoint = prog("fn x() {\n    add_circle((0, 0), 1)\n}\nfn y() {\n    x()\n}\nmain {\n    y()\n    save \"a.dxf\"\n}\n");
        let t = acc_f(&other, &disjoint);
        // only `main` is shared
        assert_eq!(t, Tally::new(1, 4));
    }

    #[test]
    fn acc_p_cases() {
        let gt = prog("main {\n    add_circle((0, 0), 10)\n    save \"a.dxf\"\n}\n");
        let cand = prog("main {\n    add_circle((0, 0), 12)\n    save \"a.dxf\"\n}\n");
        assert_eq!(acc_p(&gt, &gt), Tally::new(2, 2));
        assert_eq!(acc_p(&gt, &cand), Tally::new(1, 2));

        let g = prog(CIRCLES);
        assert_eq!(acc_p(&g, &g).ratio(), Some(1.0));
    }

    #[test]
    fn acc_p_arity_mismatch_counts_nothing() {
        let gt = [CallRecord { callee: "f".into(), args: vec![Value::Number(1.0), Value::Number(2.0)] }];
        let cand = [CallRecord { callee: "f".into(), args: vec![Value::Number(1.0)] }];
        let shared = BTreeMap::from([("f".to_string(), 1)]);
        assert_eq!(acc_p_traces(&gt, &cand, &shared), Tally::new(0, 2));
        assert_eq!(acc_p_traces(&gt, &[], &shared), Tally::new(0, 2));
        assert_eq!(acc_p_traces(&gt, &gt, &BTreeMap::new()), Tally::new(0, 0));
    }

    #[test]
    fn value_tolerance_has_relative_and_absolute_parts() {
        let n = Value::Number;
        assert!(values_match(&n(1000.0), &n(1000.0005)));
        assert!(!values_match(&n(1000.0), &n(1000.002)));
        assert!(values_match(&n(0.0), &n(5e-10)));
        assert!(!values_match(&n(0.0), &n(5e-9)));
        assert!(!values_match(&Value::Tuple(vec![1.0, 2.0]), &Value::Tuple(vec![1.0, 2.0, 0.0])));
        assert!(!values_match(&n(1.0), &Value::Str("1".into())));
    }

    fn circle(r: f64) -> SketchModel {
        let mut m = SketchModel::new();
        m.push(Entity::circle(Point::new(0.0, 0.0), r).unwrap());
        m.push(Entity::line(Point::new(0.0, 0.0), Point::new(5.0, 5.0)).unwrap());
        m
    }

    #[test]
    fn graph_correct_buckets() {
        let tol = 1e-3;
        assert!(graph_correct(&circle(10.0), &circle(10.0), tol));
        assert!(graph_correct(&circle(10.0), &circle(10.0 + tol / 10.0), tol));
        assert!(!graph_correct(&circle(10.0), &circle(10.0 + 10.0 * tol), tol));
        let mut rev = circle(10.0);
        rev.entities.reverse();
        assert!(graph_correct(&circle(10.0), &rev, tol));
        let mut annotated = circle(10.0);
        annotated.annotate(Annotation::radius(Point::new(0.0, 0.0), 10.0).unwrap());
        assert!(graph_correct(&circle(10.0), &annotated, tol));
    }

    #[test]
    fn annotation_cases() {
        let tol = 1e-3;
        let with = |a: Annotation| {
            let mut m = circle(10.0);
            m.annotate(a);
            m
        };
        let o = Point::new(0.0, 0.0);
        let gt = with(Annotation::radius(o, 10.0).unwrap());
        assert_eq!(annotation_correct(&gt, &gt, tol), AnnotationMatch { type_ok: true, data_ok: true });
        let linear = with(Annotation::linear(o, Point::new(10.0, 0.0), 2.0).unwrap());
        assert_eq!(annotation_correct(&gt, &linear, tol), AnnotationMatch { type_ok: false, data_ok: false });
        let off = with(Annotation::radius(o, 10.5).unwrap());
        assert_eq!(annotation_correct(&gt, &off, tol), AnnotationMatch { type_ok: true, data_ok: false });
        let near = with(Annotation::radius(o, 10.0 + tol / 10.0).unwrap());
        assert!(annotation_correct(&gt, &near, tol).correct());
    }

    fn binom(n: usize, k: usize) -> u128 {
        if k > n {
            return 0;
        }
        (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
    }

    /// Counts k-subsets of n items (the first c correct) that contain a correct item.
    fn enumerate(n: usize, c: usize, k: usize) -> f64 {
        let mut hit = 0u64;
        let mut all = 0u64;
        for mask in 0u32..(1 << n) {
            if mask.count_ones() as usize == k {
                all += 1;
                if mask & ((1u32 << c) - 1) != 0 {
                    hit += 1;
                }
            }
        }
        hit as f64 / all as f64
    }

    #[test]
    fn pass_at_k_matches_enumeration() {
        assert!((pass_at_k(5, 2, 1).unwrap() - 0.4).abs() < 1e-15);
        for n in 1..=8 {
            for c in 0..=n {
                for k in 1..=n {
                    let got = pass_at_k(n, c, k).unwrap();
                    assert!((got - enumerate(n, c, k)).abs() < 1e-12, "n={n} c={c} k={k}");
                    let closed = 1.0 - binom(n - c, k) as f64 / binom(n, k) as f64;
                    assert!((got - closed).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn pass_at_k_edges() {
        assert_eq!(pass_at_k(7, 0, 3).unwrap(), 0.0);
        assert_eq!(pass_at_k(7, 1, 7).unwrap(), 1.0);
        assert_eq!(pass_at_k(3, 1, 4), Err(MetricError::Domain { n: 3, c: 1, k: 4 }));
        assert!(pass_at_k(3, 4, 1).is_err());
        assert!(pass_at_k(3, 1, 0).is_err());
        // large n stays finite where binomials would overflow
        let v = pass_at_k(10_000, 3, 100).unwrap();
        assert!(v > 0.0 && v < 1.0);
    }

    #[test]
    fn pass_at_k_agrees_with_monte_carlo() {
        use rand::{seq::index::sample, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let draws = 1_000_000;
        for (n, c, k) in [(10, 3, 2), (8, 1, 5), (6, 2, 1), (10, 7, 3), (5, 0, 2)] {
            let p = pass_at_k(n, c, k).unwrap();
            let hits = (0..draws).filter(|_| sample(&mut rng, n, k).iter().any(|i| i < c)).count();
            let est = hits as f64 / draws as f64;
            let sigma = (p * (1.0 - p) / draws as f64).sqrt();
            assert!((est - p).abs() <= 3.0 * sigma + 1e-12, "n={n} c={c} k={k}: {est} vs {p}");
        }
    }

    proptest! {
        #[test]
        fn pass_at_k_is_monotone(n in 1usize..40, c in 0usize..40, k in 1usize..40) {
            prop_assume!(c <= n && k <= n);
            let p = pass_at_k(n, c, k).unwrap();
            prop_assert!((0.0..=1.0).contains(&p));
            if k < n {
                prop_assert!(pass_at_k(n, c, k + 1).unwrap() >= p - 1e-15);
            }
            if c < n {
                prop_assert!(pass_at_k(n, c + 1, k).unwrap() >= p - 1e-15);
            }
        }
    }

    #[test]
    fn apr_cases() {
        assert_eq!(apr(&[(3, 3), (2, 2)]), Some(1.0));
        assert_eq!(apr(&[(1, 2), (1, 2), (1, 2)]), Some(0.5));
        // 2/4, 3/3, 0/2 -> (0.5 + 1 + 0) / 3
        assert!((apr(&[(2, 4), (3, 3), (0, 2)]).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(apr(&[]), None);
    }
}
