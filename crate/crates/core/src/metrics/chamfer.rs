use super::MetricError;
use crate::dxf::PointCloud;
use crate::geometry::Point;

/// Static 3-d tree for nearest-neighbour queries.
#[derive(Debug, Clone)]
pub struct KdTree {
    points: Vec<[f64; 3]>,
    // implicit balanced tree: node i covers order[lo..hi], split at the median
    order: Vec<usize>,
}

fn coords(p: &Point) -> [f64; 3] {
    [p.x, p.y, p.z]
}

fn dist(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let (dx, dy, dz) = (a[0] - b[0], a[1] - b[1], a[2] - b[2]);
    (dx * dx + dy * dy + dz * dz).sqrt()
}

impl KdTree {
    pub fn new(points: &[Point]) -> Self {
        let pts: Vec<[f64; 3]> = points.iter().map(coords).collect();
        let mut order: Vec<usize> = (0..pts.len()).collect();
        build(&pts, &mut order, 0);
        KdTree { points: pts, order }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Distance from `q` to the closest stored point; infinite when empty.
    pub fn nearest_distance(&self, q: &Point) -> f64 {
        let mut best = f64::INFINITY;
        self.search(&coords(q), 0, self.order.len(), 0, &mut best);
        best
    }

    fn search(&self, q: &[f64; 3], lo: usize, hi: usize, depth: usize, best: &mut f64) {
        if lo >= hi {
            return;
        }
        let mid = lo + (hi - lo) / 2;
        let p = &self.points[self.order[mid]];
        let d = dist(q, p);
        if d < *best {
            *best = d;
        }
        let axis = depth % 3;
        let delta = q[axis] - p[axis];
        let (near, far) = if delta < 0.0 { ((lo, mid), (mid + 1, hi)) } else { ((mid + 1, hi), (lo, mid)) };
        self.search(q, near.0, near.1, depth + 1, best);
        if delta.abs() <= *best {
            self.search(q, far.0, far.1, depth + 1, best);
        }
    }
}

fn build(pts: &[[f64; 3]], order: &mut [usize], depth: usize) {
    if order.len() <= 1 {
        return;
    }
    let axis = depth % 3;
    let mid = order.len() / 2;
    order.select_nth_unstable_by(mid, |&a, &b| pts[a][axis].total_cmp(&pts[b][axis]));
    let (left, right) = order.split_at_mut(mid);
    build(pts, left, depth + 1);
    build(pts, &mut right[1..], depth + 1);
}

fn mean_nearest(from: &[Point], to: &KdTree) -> f64 {
    from.iter().map(|p| to.nearest_distance(p)).sum::<f64>() / from.len() as f64
}

/// Symmetric, unsquared chamfer distance: mean nearest-neighbour distance
/// from `a` to `b` plus the same from `b` to `a`.
pub fn chamfer_distance(a: &[Point], b: &[Point]) -> Result<f64, MetricError> {
    if a.is_empty() || b.is_empty() {
        return Err(MetricError::EmptyCloud);
    }
    Ok(mean_nearest(a, &KdTree::new(b)) + mean_nearest(b, &KdTree::new(a)))
}

/// All-pairs reference implementation of [`chamfer_distance`].
pub fn chamfer_distance_brute_force(a: &[Point], b: &[Point]) -> Result<f64, MetricError> {
    if a.is_empty() || b.is_empty() {
        return Err(MetricError::EmptyCloud);
    }
    let one_way = |from: &[Point], to: &[Point]| {
        from.iter()
            .map(|p| to.iter().map(|q| dist(&coords(p), &coords(q))).fold(f64::INFINITY, f64::min))
            .sum::<f64>()
            / from.len() as f64
    };
    Ok(one_way(a, b) + one_way(b, a))
}

/// Chamfer distance after scaling both clouds so the ground truth's
/// bounding-box diagonal is 1. A degenerate diagonal leaves units unchanged.
pub fn normalized_chamfer(gt: &PointCloud, cand: &PointCloud) -> Result<f64, MetricError> {
    let d = gt.source_bbox_diagonal;
    let s = if d > 0.0 && d.is_finite() { 1.0 / d } else { 1.0 };
    let scale = |c: &PointCloud| c.points.iter().map(|p| p.scale(s)).collect::<Vec<_>>();
    chamfer_distance(&scale(gt), &scale(cand))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_cloud(rng: &mut ChaCha8Rng, n: usize) -> Vec<Point> {
        (0..n).map(|_| Point::new3(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0), rng.gen_range(-1.0..1.0))).collect()
    }

    #[test]
    fn trivial_values() {
        let a = [Point::new(0.0, 0.0)];
        let b = [Point::new(3.0, 4.0)];
        assert_eq!(chamfer_distance(&a, &b).unwrap(), 10.0);
        assert_eq!(chamfer_distance(&a, &a).unwrap(), 0.0);
        assert_eq!(chamfer_distance(&a, &[]), Err(MetricError::EmptyCloud));
        assert_eq!(chamfer_distance_brute_force(&[], &a), Err(MetricError::EmptyCloud));
    }

    #[test]
    fn kd_tree_finds_the_brute_force_neighbour() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pts = random_cloud(&mut rng, 700);
        let tree = KdTree::new(&pts);
        for q in random_cloud(&mut rng, 300) {
            let brute = pts.iter().map(|p| dist(&coords(p), &coords(&q))).fold(f64::INFINITY, f64::min);
            assert_eq!(tree.nearest_distance(&q), brute);
        }
        assert_eq!(KdTree::new(&[]).nearest_distance(&Point::ORIGIN), f64::INFINITY);
    }

    #[test]
    fn duplicate_and_collinear_points() {
        let pts: Vec<Point> = (0..50).map(|i| Point::new((i % 5) as f64, 0.0)).collect();
        let tree = KdTree::new(&pts);
        assert_eq!(tree.nearest_distance(&Point::new(2.2, 1.0)), (0.04f64 + 1.0).sqrt());
        assert_eq!(tree.len(), 50);
    }

    #[test]
    fn normalization_divides_by_ground_truth_diagonal() {
        let gt = PointCloud { points: vec![Point::new(0.0, 0.0)], sources: vec![0], source_bbox_diagonal: 4.0 };
        let cand = PointCloud { points: vec![Point::new(2.0, 0.0)], sources: vec![0], source_bbox_diagonal: 1.0 };
        assert_eq!(normalized_chamfer(&gt, &cand).unwrap(), 1.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn symmetric_non_negative_and_zero_on_equal_sets(seed in any::<u64>(), n in 1usize..60, m in 1usize..60) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_cloud(&mut rng, n);
            let b = random_cloud(&mut rng, m);
            let ab = chamfer_distance(&a, &b).unwrap();
            prop_assert!(ab > 0.0);
            prop_assert_eq!(ab, chamfer_distance(&b, &a).unwrap());
            let mut shuffled = a.clone();
            shuffled.reverse();
            prop_assert_eq!(chamfer_distance(&a, &shuffled).unwrap(), 0.0);
        }
    }
}
