//! Planar geometry used to prune the candidate grid: convex hulls,
//! point-in-hull tests and seeded k-means.

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::rng::{derive_seed, SeededRng};

/// Boundary tolerance for hull membership, in meters.
pub const HULL_TOLERANCE_M: f64 = 1e-9;

const KMEANS_MAX_ITER: usize = 100;
const KMEANS_SHIFT_TOL_M: f64 = 1e-6;

/// Ground-plane point in meters.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dist2(self, other: Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    pub fn dist(self, other: Point) -> f64 {
        self.dist2(other).sqrt()
    }
}

impl From<[f64; 2]> for Point {
    fn from(p: [f64; 2]) -> Self {
        Point::new(p[0], p[1])
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

/// z-component of `(a - o) x (b - o)`.
fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

fn dist_to_segment(p: Point, a: Point, b: Point) -> f64 {
    let len2 = a.dist2(b);
    if len2 == 0.0 {
        return p.dist(a);
    }
    let t = (((p.x - a.x) * (b.x - a.x) + (p.y - a.y) * (b.y - a.y)) / len2).clamp(0.0, 1.0);
    p.dist(Point::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)))
}

/// Convex polygon with counter-clockwise vertices and no collinear
/// triples. One vertex is a point hull, two a segment.
#[derive(Clone, Debug, PartialEq)]
pub struct Hull {
    vertices: Vec<Point>,
}

impl Hull {
    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    /// Inside-or-on test; points within `tol` meters of the boundary count
    /// as inside.
    pub fn contains(&self, p: Point, tol: f64) -> bool {
        match self.vertices.as_slice() {
            [] => false,
            [a] => p.dist(*a) <= tol,
            [a, b] => dist_to_segment(p, *a, *b) <= tol,
            vs => {
                let n = vs.len();
                (0..n).all(|i| {
                    let a = vs[i];
                    let b = vs[(i + 1) % n];
                    // signed distance of p to the edge line, positive inside
                    cross(a, b, p) / a.dist(b) >= -tol
                })
            }
        }
    }

    /// Vertex centroid.
    pub fn centroid(&self) -> Point {
        centroid(&self.vertices)
    }
}

/// Convex hull by Andrew's monotone chain.
pub fn convex_hull(points: &[Point]) -> Result<Hull> {
    if points.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return Ok(Hull { vertices: pts });
    }

    let mut hull: Vec<Point> = Vec::with_capacity(2 * pts.len());
    for &p in &pts {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower_len = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower_len && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    // all points collinear: chain collapses to both endpoints
    if hull.len() == 2 && hull[0] == hull[1] {
        hull.pop();
    }
    Ok(Hull { vertices: hull })
}

pub fn centroid(points: &[Point]) -> Point {
    let n = points.len() as f64;
    let (sx, sy) = points.iter().fold((0.0, 0.0), |(sx, sy), p| (sx + p.x, sy + p.y));
    Point::new(sx / n, sy / n)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Cluster {
    pub center: Point,
    pub members: Vec<usize>,
}

fn nearest(centers: &[Point], p: Point) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, c) in centers.iter().enumerate() {
        let d = p.dist2(*c);
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    best
}

/// Sum of squared distances of every point to its assigned center.
pub fn kmeans_objective(points: &[Point], clusters: &[Cluster]) -> f64 {
    clusters
        .iter()
        .flat_map(|c| c.members.iter().map(move |&m| points[m].dist2(c.center)))
        .sum()
}

/// Lloyd's k-means. Initial centers are `k` distinct input points sampled
/// with `seed`; an emptied cluster is re-seeded at the point farthest from
/// its current center. Stops when no center moves more than 1e-6 m, or after
/// 100 iterations.
pub fn kmeans(points: &[Point], k: usize, seed: u64) -> Result<Vec<Cluster>> {
    if k == 0 || k > points.len() {
        return Err(Error::InvalidParameter(format!(
            "k-means needs 1 <= k <= {} (got k = {k})",
            points.len()
        )));
    }
    let mut rng = SeededRng::new(seed);
    // partial Fisher-Yates over point indices
    let mut idx: Vec<usize> = (0..points.len()).collect();
    for i in 0..k {
        let j = i + rng.below(points.len() - i);
        idx.swap(i, j);
    }
    let mut centers: Vec<Point> = idx[..k].iter().map(|&i| points[i]).collect();
    let mut assign = vec![0usize; points.len()];

    for _ in 0..KMEANS_MAX_ITER {
        for (a, p) in assign.iter_mut().zip(points) {
            *a = nearest(&centers, *p);
        }
        let mut sums = vec![(0.0f64, 0.0f64, 0usize); k];
        for (a, p) in assign.iter().zip(points) {
            let s = &mut sums[*a];
            s.0 += p.x;
            s.1 += p.y;
            s.2 += 1;
        }
        let mut shift = 0.0f64;
        for c in 0..k {
            let (sx, sy, n) = sums[c];
            let next = if n > 0 {
                Point::new(sx / n as f64, sy / n as f64)
            } else {
                let far = (0..points.len())
                    .max_by(|&a, &b| {
                        let da = points[a].dist2(centers[assign[a]]);
                        let db = points[b].dist2(centers[assign[b]]);
                        // ties resolve to the lower index
                        da.total_cmp(&db).then(b.cmp(&a))
                    })
                    .expect("non-empty");
                assign[far] = c;
                points[far]
            };
            shift = shift.max(next.dist(centers[c]));
            centers[c] = next;
        }
        if shift < KMEANS_SHIFT_TOL_M {
            break;
        }
    }
    for (a, p) in assign.iter_mut().zip(points) {
        *a = nearest(&centers, *p);
    }

    let mut clusters: Vec<Cluster> = centers
        .into_iter()
        .map(|center| Cluster {
            center,
            members: Vec::new(),
        })
        .collect();
    for (i, a) in assign.into_iter().enumerate() {
        clusters[a].members.push(i);
    }
    Ok(clusters)
}

/// Index of the grid point nearest to `p`; ties go to the lower index.
pub fn nearest_grid_index(grid: &[Point], p: Point) -> usize {
    nearest(grid, p)
}

/// Grid indices (ascending) inside the union of the convex hulls of
/// `hull_clusters` k-means clusters of the users. With `hull_clusters == 1`
/// this is the plain hull of all users. Never empty: if no grid point
/// qualifies, the grid point nearest to each hull centroid is used.
pub fn candidate_positions(instance: &Instance, hull_clusters: usize) -> Vec<usize> {
    let points = instance.user_points();
    let grid = instance.grid();
    if points.is_empty() {
        return (0..grid.len()).collect();
    }
    let k = hull_clusters.clamp(1, points.len());
    let hulls: Vec<Hull> = if k == 1 {
        vec![convex_hull(&points).expect("non-empty")]
    } else {
        kmeans(&points, k, derive_seed(instance.seed, 0x6b6d))
            .expect("k in range")
            .into_iter()
            .filter(|c| !c.members.is_empty())
            .map(|c| {
                let pts: Vec<Point> = c.members.iter().map(|&m| points[m]).collect();
                convex_hull(&pts).expect("non-empty")
            })
            .collect()
    };

    let inside: Vec<usize> = grid
        .iter()
        .enumerate()
        .filter(|(_, g)| hulls.iter().any(|h| h.contains(**g, HULL_TOLERANCE_M)))
        .map(|(i, _)| i)
        .collect();
    if !inside.is_empty() {
        return inside;
    }
    let mut fallback: Vec<usize> = hulls.iter().map(|h| nearest_grid_index(grid, h.centroid())).collect();
    fallback.sort_unstable();
    fallback.dedup();
    fallback
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pts(v: &[(f64, f64)]) -> Vec<Point> {
        v.iter().map(|&(x, y)| Point::new(x, y)).collect()
    }

    fn signed_area(vs: &[Point]) -> f64 {
        let n = vs.len();
        (0..n)
            .map(|i| vs[i].x * vs[(i + 1) % n].y - vs[(i + 1) % n].x * vs[i].y)
            .sum::<f64>()
            / 2.0
    }

    /// O(n^3)-ish reference: a point is a hull vertex iff it is not inside
    /// or on any triangle of other points and not between two others on a
    /// segment.
    fn brute_force_extreme(points: &[Point]) -> Vec<Point> {
        let n = points.len();
        let mut out = Vec::new();
        'outer: for i in 0..n {
            let p = points[i];
            for a in 0..n {
                for b in 0..n {
                    if a == i || b == i || a == b {
                        continue;
                    }
                    if dist_to_segment(p, points[a], points[b]) < 1e-12 {
                        continue 'outer;
                    }
                    for c in 0..n {
                        if c == i || c == a || c == b {
                            continue;
                        }
                        let (pa, pb, pc) = (points[a], points[b], points[c]);
                        let d1 = cross(pa, pb, p);
                        let d2 = cross(pb, pc, p);
                        let d3 = cross(pc, pa, p);
                        let neg = d1 < 0.0 || d2 < 0.0 || d3 < 0.0;
                        let pos = d1 > 0.0 || d2 > 0.0 || d3 > 0.0;
                        if !(neg && pos) {
                            continue 'outer;
                        }
                    }
                }
            }
            out.push(p);
        }
        out
    }

    #[test]
    fn triangle_is_its_own_hull_ccw() {
        let h = convex_hull(&pts(&[(0.0, 0.0), (0.0, 1.0), (1.0, 0.0)])).unwrap();
        assert_eq!(h.vertices().len(), 3);
        assert!(signed_area(h.vertices()) > 0.0);
    }

    #[test]
    fn square_with_center_keeps_corners() {
        let h = convex_hull(&pts(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0), (0.5, 0.5)])).unwrap();
        let mut v: Vec<[f64; 2]> = h.vertices().iter().map(|&p| p.into()).collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(v, vec![[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]]);
    }

    #[test]
    fn collinear_points_drop_middle_vertex() {
        let h = convex_hull(&pts(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0), (2.0, 2.0)])).unwrap();
        assert_eq!(h.vertices().len(), 3);
        assert!(h.contains(Point::new(1.0, 0.0), HULL_TOLERANCE_M));
    }

    #[test]
    fn degenerate_hulls() {
        let one = convex_hull(&pts(&[(3.0, 4.0), (3.0, 4.0)])).unwrap();
        assert_eq!(one.vertices(), &[Point::new(3.0, 4.0)]);
        assert!(one.contains(Point::new(3.0, 4.0), HULL_TOLERANCE_M));
        assert!(!one.contains(Point::new(3.0, 4.1), HULL_TOLERANCE_M));

        let seg = convex_hull(&pts(&[(0.0, 0.0), (1.0, 1.0), (2.0, 2.0)])).unwrap();
        assert_eq!(seg.vertices().len(), 2);
        assert!(seg.contains(Point::new(1.5, 1.5), HULL_TOLERANCE_M));
        assert!(!seg.contains(Point::new(1.5, 1.6), HULL_TOLERANCE_M));
        assert!(!seg.contains(Point::new(2.5, 2.5), HULL_TOLERANCE_M));
    }

    #[test]
    fn empty_hull_is_an_error() {
        assert!(matches!(convex_hull(&[]), Err(Error::EmptyInput)));
    }

    #[test]
    fn hundred_random_points_match_brute_force() {
        let mut rng = SeededRng::new(99);
        for _ in 0..20 {
            let points: Vec<Point> = (0..100)
                .map(|_| Point::new(rng.uniform() * 700.0, rng.uniform() * 700.0))
                .collect();
            let h = convex_hull(&points).unwrap();
            for p in &points {
                assert!(h.contains(*p, HULL_TOLERANCE_M));
            }
            for v in h.vertices() {
                assert!(points.contains(v));
            }
            let mut expected = brute_force_extreme(&points);
            let mut got = h.vertices().to_vec();
            let key = |a: &Point, b: &Point| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y));
            expected.sort_by(key);
            got.sort_by(key);
            assert_eq!(got, expected);
            assert!(signed_area(h.vertices()) > 0.0);
        }
    }

    #[test]
    fn kmeans_single_cluster_is_centroid() {
        let points = pts(&[(0.0, 0.0), (2.0, 0.0), (4.0, 6.0)]);
        let c = kmeans(&points, 1, 5).unwrap();
        assert_eq!(c.len(), 1);
        assert!((c[0].center.x - 2.0).abs() < 1e-12);
        assert!((c[0].center.y - 2.0).abs() < 1e-12);
        assert_eq!(c[0].members, vec![0, 1, 2]);
    }

    #[test]
    fn kmeans_separates_two_blobs() {
        let mut rng = SeededRng::new(11);
        let mut points = Vec::new();
        for i in 0..60 {
            let cx = if i < 30 { 100.0 } else { 600.0 };
            points.push(Point::new(cx + 10.0 * rng.normal(), 300.0 + 10.0 * rng.normal()));
        }
        for seed in 0..10 {
            let c = kmeans(&points, 2, seed).unwrap();
            let mut sets: Vec<Vec<usize>> = c.into_iter().map(|c| c.members).collect();
            sets.sort();
            assert_eq!(sets[0], (0..30).collect::<Vec<_>>());
            assert_eq!(sets[1], (30..60).collect::<Vec<_>>());
        }
    }

    #[test]
    fn kmeans_k_equals_n_gives_singletons() {
        let points = pts(&[(0.0, 0.0), (10.0, 0.0), (0.0, 10.0), (7.0, 7.0)]);
        let c = kmeans(&points, 4, 1).unwrap();
        for cl in &c {
            assert_eq!(cl.members.len(), 1);
            assert_eq!(cl.center, points[cl.members[0]]);
        }
    }

    #[test]
    fn kmeans_rejects_bad_k() {
        let points = pts(&[(0.0, 0.0)]);
        assert!(kmeans(&points, 0, 1).is_err());
        assert!(kmeans(&points, 2, 1).is_err());
    }

    #[test]
    fn kmeans_is_deterministic() {
        let mut rng = SeededRng::new(4);
        let points: Vec<Point> = (0..50)
            .map(|_| Point::new(rng.uniform() * 500.0, rng.uniform() * 500.0))
            .collect();
        assert_eq!(kmeans(&points, 4, 17).unwrap(), kmeans(&points, 4, 17).unwrap());
    }

    #[test]
    fn kmeans_objective_does_not_increase() {
        // Replays the seeded init; Lloyd steps never raise the objective
        // above that of the initial assignment.
        let mut rng = SeededRng::new(8);
        let points: Vec<Point> = (0..80)
            .map(|_| Point::new(rng.uniform() * 500.0, rng.uniform() * 500.0))
            .collect();
        for seed in 0..20 {
            let mut r = SeededRng::new(seed);
            let mut idx: Vec<usize> = (0..points.len()).collect();
            for i in 0..3 {
                let j = i + r.below(points.len() - i);
                idx.swap(i, j);
            }
            let init: Vec<Point> = idx[..3].iter().map(|&i| points[i]).collect();
            let init_obj: f64 = points.iter().map(|p| p.dist2(init[nearest(&init, *p)])).sum();
            let c = kmeans(&points, 3, seed).unwrap();
            assert!(kmeans_objective(&points, &c) <= init_obj + 1e-9);
        }
    }

    proptest! {
        #[test]
        fn hull_contains_all_inputs(raw in prop::collection::vec((0.0f64..1000.0, 0.0f64..1000.0), 1..60)) {
            let points: Vec<Point> = raw.iter().map(|&(x, y)| Point::new(x, y)).collect();
            let h = convex_hull(&points).unwrap();
            for p in &points {
                prop_assert!(h.contains(*p, HULL_TOLERANCE_M));
            }
            let vs = h.vertices();
            if vs.len() >= 3 {
                prop_assert!(signed_area(vs) > 0.0);
                for i in 0..vs.len() {
                    let c = cross(vs[i], vs[(i + 1) % vs.len()], vs[(i + 2) % vs.len()]);
                    prop_assert!(c > 0.0);
                }
            }
        }
    }
}
