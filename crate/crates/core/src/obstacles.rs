//! Dense obstacles from sparse features: K-means in the plane, then one
//! convex hull per cluster.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{orient, point_segment_distance, Point2, Rect};

/// Half-width given to hulls that collapse to a point or a segment.
pub const DEGENERATE_INFLATION: f64 = 1e-3;

const COLLINEAR_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObstacleParams {
    /// Number of clusters `K`.
    pub clusters: usize,
    /// Outward offset applied to every hull.
    pub margin: f64,
    pub max_iters: usize,
    /// Recorded for reproducibility; farthest-point seeding is itself
    /// deterministic, so no random stream is drawn from it.
    pub seed: u64,
}

impl Default for ObstacleParams {
    fn default() -> Self {
        Self {
            clusters: 1000,
            margin: 0.0,
            max_iters: 100,
            seed: 0,
        }
    }
}

impl ObstacleParams {
    pub fn validate(&self) -> Result<()> {
        if self.clusters < 1 {
            return Err(Error::InvalidConfig("obstacles.clusters must be >= 1".into()));
        }
        if !(self.margin >= 0.0 && self.margin.is_finite()) {
            return Err(Error::InvalidConfig("obstacles.margin must be >= 0".into()));
        }
        if self.max_iters < 1 {
            return Err(Error::InvalidConfig("obstacles.max_iters must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    pub centroid: Point2,
    /// Indices into the clustered point list.
    pub members: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansOutput {
    pub clusters: Vec<Cluster>,
    /// Within-cluster sum of squares after each assignment step.
    pub wcss_history: Vec<f64>,
    pub iterations: usize,
}

fn dist2(a: &Point2, b: &Point2) -> f64 {
    let d = *a - *b;
    d.dot(&d)
}

fn nearest(p: &Point2, centers: &[Point2]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (j, c) in centers.iter().enumerate() {
        let d = dist2(p, c);
        if d < best_d {
            best = j;
            best_d = d;
        }
    }
    best
}

/// Farthest-point seeding starting from point 0.
fn farthest_point_seeds(points: &[Point2], k: usize) -> Vec<Point2> {
    let mut centers = vec![points[0]];
    let mut gap: Vec<f64> = points.iter().map(|p| dist2(p, &points[0])).collect();
    while centers.len() < k {
        let (far, _) = gap
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |(bi, bd), (i, &d)| if d > bd { (i, d) } else { (bi, bd) });
        let c = points[far];
        centers.push(c);
        for (g, p) in gap.iter_mut().zip(points) {
            *g = g.min(dist2(p, &c));
        }
    }
    centers
}

pub fn kmeans(points: &[Point2], params: &ObstacleParams) -> Vec<Cluster> {
    kmeans_traced(points, params).clusters
}

/// Lloyd iterations to an assignment fixpoint or `max_iters`. Empty
/// clusters are dropped from the output.
pub fn kmeans_traced(points: &[Point2], params: &ObstacleParams) -> KMeansOutput {
    if points.is_empty() {
        return KMeansOutput {
            clusters: Vec::new(),
            wcss_history: Vec::new(),
            iterations: 0,
        };
    }
    if params.clusters >= points.len() {
        let clusters = points
            .iter()
            .enumerate()
            .map(|(i, p)| Cluster {
                centroid: *p,
                members: vec![i],
            })
            .collect();
        return KMeansOutput {
            clusters,
            wcss_history: vec![0.0],
            iterations: 0,
        };
    }

    let mut centers = farthest_point_seeds(points, params.clusters);
    let mut assignment: Vec<usize> = vec![usize::MAX; points.len()];
    let mut wcss_history = Vec::new();
    let mut iterations = 0;
    for _ in 0..params.max_iters {
        iterations += 1;
        let next: Vec<usize> = points.iter().map(|p| nearest(p, &centers)).collect();
        let wcss: f64 = points.iter().zip(&next).map(|(p, &j)| dist2(p, &centers[j])).sum();
        wcss_history.push(wcss);
        if next == assignment {
            break;
        }
        assignment = next;
        centers = recompute_centroids(points, &assignment, &centers);
    }

    let mut members: Vec<Vec<usize>> = vec![Vec::new(); centers.len()];
    for (i, &j) in assignment.iter().enumerate() {
        members[j].push(i);
    }
    let clusters = members
        .into_iter()
        .filter(|m| !m.is_empty())
        .map(|m| Cluster {
            centroid: mean(m.iter().map(|&i| points[i])),
            members: m,
        })
        .collect();
    KMeansOutput {
        clusters,
        wcss_history,
        iterations,
    }
}

fn mean(points: impl Iterator<Item = Point2>) -> Point2 {
    let (sum, n) = points.fold((Point2::ORIGIN, 0usize), |(s, n), p| (s + p, n + 1));
    sum * (1.0 / n as f64)
}

fn recompute_centroids(points: &[Point2], assignment: &[usize], previous: &[Point2]) -> Vec<Point2> {
    let mut sums = vec![Point2::ORIGIN; previous.len()];
    let mut counts = vec![0usize; previous.len()];
    for (p, &j) in points.iter().zip(assignment) {
        sums[j] = sums[j] + *p;
        counts[j] += 1;
    }
    sums.iter()
        .zip(&counts)
        .zip(previous)
        .map(|((s, &c), prev)| if c == 0 { *prev } else { *s * (1.0 / c as f64) })
        .collect()
}

/// Convex polygon with counter-clockwise vertices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Point2>", into = "Vec<Point2>")]
pub struct ConvexPolygon {
    vertices: Vec<Point2>,
    bbox: Rect,
}

impl TryFrom<Vec<Point2>> for ConvexPolygon {
    type Error = Error;
    fn try_from(v: Vec<Point2>) -> Result<Self> {
        ConvexPolygon::new(v)
    }
}

impl From<ConvexPolygon> for Vec<Point2> {
    fn from(p: ConvexPolygon) -> Self {
        p.vertices
    }
}

impl ConvexPolygon {
    /// Validates vertex count, orientation and convexity.
    pub fn new(vertices: Vec<Point2>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::Degenerate("polygon needs at least 3 vertices".into()));
        }
        if vertices.iter().any(|p| !p.is_finite()) {
            return Err(Error::Degenerate("polygon has non-finite vertices".into()));
        }
        let n = vertices.len();
        for i in 0..n {
            let turn = orient(vertices[i], vertices[(i + 1) % n], vertices[(i + 2) % n]);
            if turn <= 0.0 {
                return Err(Error::Degenerate(
                    "polygon vertices must be strictly convex and counter-clockwise".into(),
                ));
            }
        }
        Ok(Self::from_ccw(vertices))
    }

    fn from_ccw(vertices: Vec<Point2>) -> Self {
        let bbox = Rect::bounding(&vertices).expect("non-empty");
        Self { vertices, bbox }
    }

    pub fn rectangle(min: Point2, max: Point2) -> Result<Self> {
        Self::new(vec![min, Point2::new(max.u, min.v), max, Point2::new(min.u, max.v)])
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn bbox(&self) -> Rect {
        self.bbox
    }

    pub fn edges(&self) -> impl Iterator<Item = (Point2, Point2)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn area(&self) -> f64 {
        0.5 * self.edges().map(|(a, b)| a.cross(&b)).sum::<f64>()
    }

    /// Closed containment with absolute tolerance `tol`.
    pub fn contains(&self, p: &Point2, tol: f64) -> bool {
        self.edges().all(|(a, b)| {
            let e = b - a;
            e.cross(&(*p - a)) >= -tol * e.norm()
        })
    }

    /// 0 inside, else distance to the boundary.
    pub fn distance(&self, p: &Point2) -> f64 {
        if self.contains(p, 0.0) {
            return 0.0;
        }
        self.edges()
            .map(|(a, b)| point_segment_distance(*p, a, b))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Monotone-chain hull, collinear points removed. Output is CCW starting
/// at the lexicographically smallest point.
pub fn hull_vertices(points: &[Point2]) -> Vec<Point2> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.u.total_cmp(&b.u).then(a.v.total_cmp(&b.v)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<Point2> = Vec::with_capacity(2 * pts.len());
    // lower chain
    for p in &pts {
        while hull.len() >= 2 && orient(hull[hull.len() - 2], hull[hull.len() - 1], *p) <= COLLINEAR_TOL {
            hull.pop();
        }
        hull.push(*p);
    }
    // upper chain
    let lower_len = hull.len() + 1;
    for p in pts.iter().rev().skip(1) {
        while hull.len() >= lower_len && orient(hull[hull.len() - 2], hull[hull.len() - 1], *p) <= COLLINEAR_TOL {
            hull.pop();
        }
        hull.push(*p);
    }
    hull.pop();
    hull
}

fn square(center: Point2, half: f64) -> ConvexPolygon {
    let h = half;
    ConvexPolygon::from_ccw(vec![
        center + Point2::new(-h, -h),
        center + Point2::new(h, -h),
        center + Point2::new(h, h),
        center + Point2::new(-h, h),
    ])
}

fn thick_segment(a: Point2, b: Point2, half: f64) -> ConvexPolygon {
    let d = (b - a) * (1.0 / a.distance(&b));
    let n = d.perp();
    let (dh, nh) = (d * half, n * half);
    ConvexPolygon::from_ccw(vec![a - dh - nh, b + dh - nh, b + dh + nh, a - dh + nh])
}

/// Offset a CCW convex polygon outward by `margin` using mitred corners,
/// bevelled where the miter would exceed twice the margin.
fn offset_polygon(hull: &[Point2], margin: f64) -> Vec<Point2> {
    let n = hull.len();
    let outward = |a: Point2, b: Point2| {
        let d = b - a;
        Point2::new(d.v, -d.u) * (1.0 / d.norm())
    };
    let mut out = Vec::with_capacity(2 * n);
    for i in 0..n {
        let prev = hull[(i + n - 1) % n];
        let cur = hull[i];
        let next = hull[(i + 1) % n];
        let n1 = outward(prev, cur);
        let n2 = outward(cur, next);
        let denom = 1.0 + n1.dot(&n2);
        let miter = (n1 + n2) * (margin / denom);
        if denom > 0.5 {
            out.push(cur + miter);
        } else {
            out.push(cur + n1 * margin);
            out.push(cur + n2 * margin);
        }
    }
    out
}

/// Convex hull of a cluster, inflated by `margin`. Point and segment hulls
/// become squares and rectangles of half-width `max(margin, 1e-3)`.
pub fn convex_hull(cluster: &[Point2], margin: f64) -> ConvexPolygon {
    assert!(!cluster.is_empty(), "convex_hull needs at least one point");
    let hull = hull_vertices(cluster);
    let half = margin.max(DEGENERATE_INFLATION);
    match hull.len() {
        1 => square(hull[0], half),
        2 => thick_segment(hull[0], hull[1], half),
        _ if margin == 0.0 => ConvexPolygon::from_ccw(hull),
        _ => {
            let grown = hull_vertices(&offset_polygon(&hull, margin));
            ConvexPolygon::from_ccw(grown)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ObstacleSet {
    pub polygons: Vec<ConvexPolygon>,
    /// Source cluster of each polygon.
    pub provenance: Vec<usize>,
}

impl ObstacleSet {
    pub fn new(polygons: Vec<ConvexPolygon>) -> Self {
        let provenance = (0..polygons.len()).collect();
        Self { polygons, provenance }
    }

    pub fn len(&self) -> usize {
        self.polygons.len()
    }

    pub fn is_empty(&self) -> bool {
        self.polygons.is_empty()
    }

    pub fn bbox(&self) -> Option<Rect> {
        self.polygons.iter().map(|p| p.bbox()).reduce(|a, b| a.union(&b))
    }

    pub fn contains_point(&self, p: &Point2) -> bool {
        self.polygons.iter().any(|poly| poly.bbox().contains(p) && poly.contains(p, 0.0))
    }

    /// Drop every polygon for which `keep` returns false.
    pub fn retain(&mut self, mut keep: impl FnMut(&ConvexPolygon) -> bool) {
        let mut polygons = Vec::with_capacity(self.polygons.len());
        let mut provenance = Vec::with_capacity(self.polygons.len());
        for (poly, src) in self.polygons.drain(..).zip(self.provenance.drain(..)) {
            if keep(&poly) {
                polygons.push(poly);
                provenance.push(src);
            }
        }
        self.polygons = polygons;
        self.provenance = provenance;
    }
}

/// K-means on the projected cloud, then one hull per cluster.
pub fn build_obstacles(cloud2d: &[Point2], params: &ObstacleParams) -> ObstacleSet {
    let clusters = kmeans(cloud2d, params);
    let mut set = ObstacleSet::default();
    for (index, cluster) in clusters.iter().enumerate() {
        let pts: Vec<Point2> = cluster.members.iter().map(|&i| cloud2d[i]).collect();
        set.polygons.push(convex_hull(&pts, params.margin));
        set.provenance.push(index);
    }
    set
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn p(u: f64, v: f64) -> Point2 {
        Point2::new(u, v)
    }

    fn params(k: usize) -> ObstacleParams {
        ObstacleParams { clusters: k, ..Default::default() }
    }

    #[test]
    fn single_cluster_is_the_mean() {
        let pts = [p(0., 0.), p(2., 0.), p(4., 3.)];
        let c = kmeans(&pts, &params(1));
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].members, vec![0, 1, 2]);
        assert!(c[0].centroid.distance(&p(2.0, 1.0)) < 1e-12);
    }

    #[test]
    fn k_at_least_n_gives_singletons() {
        let pts = [p(0., 0.), p(1., 0.), p(5., 5.)];
        let c = kmeans(&pts, &params(3));
        assert_eq!(c.len(), 3);
        assert!(c.iter().enumerate().all(|(i, cl)| cl.members == vec![i]));
        assert_eq!(kmeans(&pts, &params(10)).len(), 3);
    }

    fn two_blobs(rng: &mut ChaCha8Rng) -> Vec<Point2> {
        let mut pts = Vec::new();
        for center in [p(0.0, 0.0), p(20.0, 5.0)] {
            for _ in 0..10 {
                pts.push(center + p(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
            }
        }
        pts
    }

    fn best_two_partition(pts: &[Point2]) -> (f64, Vec<usize>) {
        let n = pts.len();
        let mut best = (f64::INFINITY, Vec::new());
        for mask in 1..(1u32 << (n - 1)) {
            let group: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
            let rest: Vec<usize> = (0..n).filter(|i| mask & (1 << i) == 0).collect();
            let cost = |g: &[usize]| {
                let c = mean(g.iter().map(|&i| pts[i]));
                g.iter().map(|&i| dist2(&pts[i], &c)).sum::<f64>()
            };
            let total = cost(&group) + cost(&rest);
            if total < best.0 {
                best = (total, group);
            }
        }
        best
    }

    #[test]
    fn separated_blobs_match_optimal_partition() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let pts = two_blobs(&mut rng);
        let (_, optimal) = best_two_partition(&pts);
        let c = kmeans(&pts, &params(2));
        assert_eq!(c.len(), 2);
        let complement: Vec<usize> = (0..20).filter(|i| !optimal.contains(i)).collect();
        assert!(c.iter().any(|cl| cl.members == optimal));
        assert!(c.iter().any(|cl| cl.members == complement));
    }

    #[test]
    fn wcss_never_increases() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let pts: Vec<Point2> = (0..300)
            .map(|_| p(rng.random_range(0.0..10.0), rng.random_range(0.0..10.0)))
            .collect();
        let out = kmeans_traced(&pts, &params(12));
        assert!(out.wcss_history.len() >= 2);
        for w in out.wcss_history.windows(2) {
            assert!(w[1] <= w[0] + 1e-9);
        }
        let members: usize = out.clusters.iter().map(|c| c.members.len()).sum();
        assert_eq!(members, 300);
    }

    #[test]
    fn duplicate_points_drop_empty_clusters() {
        let pts = vec![p(1.0, 1.0); 6];
        let c = kmeans(&pts, &params(3));
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].members.len(), 6);
    }

    #[test]
    fn unit_square_hull() {
        let h = convex_hull(&[p(1., 1.), p(0., 0.), p(0., 1.), p(1., 0.), p(0.5, 0.5)], 0.0);
        assert_eq!(h.vertices(), &[p(0., 0.), p(1., 0.), p(1., 1.), p(0., 1.)]);
    }

    #[test]
    fn point_hull_becomes_square() {
        let h = convex_hull(&[p(2.0, 3.0)], 0.1);
        let expected = [p(1.9, 2.9), p(2.1, 2.9), p(2.1, 3.1), p(1.9, 3.1)];
        for (a, b) in h.vertices().iter().zip(expected) {
            assert!(a.distance(&b) < 1e-12);
        }
        let tiny = convex_hull(&[p(0.0, 0.0)], 0.0);
        assert!((tiny.area() - 4e-6).abs() < 1e-15);
    }

    #[test]
    fn collinear_hull_becomes_rectangle() {
        let pts = [p(0.0, 0.0), p(1.0, 1.0), p(2.0, 2.0)];
        let h = convex_hull(&pts, 0.1);
        assert_eq!(h.vertices().len(), 4);
        assert!(h.area() > 0.0);
        for q in &pts {
            assert!(h.contains(q, 0.0));
            assert!(point_in_polygon_ray(q, h.vertices()));
        }
    }

    /// Even-odd ray casting, independent of the half-plane test.
    fn point_in_polygon_ray(q: &Point2, poly: &[Point2]) -> bool {
        let mut inside = false;
        let n = poly.len();
        for i in 0..n {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            if (a.v > q.v) != (b.v > q.v) {
                let t = (q.v - a.v) / (b.v - a.v);
                if q.u < a.u + t * (b.u - a.u) {
                    inside = !inside;
                }
            }
        }
        inside
    }

    #[test]
    fn square_cluster_gives_square_obstacle() {
        let pts = [p(0., 0.), p(1., 0.), p(1., 1.), p(0., 1.)];
        let set = build_obstacles(&pts, &params(1));
        assert_eq!(set.len(), 1);
        assert_eq!(set.polygons[0].vertices(), &[p(0., 0.), p(1., 0.), p(1., 1.), p(0., 1.)]);
        assert_eq!(set.provenance, vec![0]);
    }

    #[test]
    fn invalid_polygons_rejected() {
        assert!(ConvexPolygon::new(vec![p(0., 0.), p(1., 0.)]).is_err());
        // clockwise
        assert!(ConvexPolygon::new(vec![p(0., 0.), p(0., 1.), p(1., 1.)]).is_err());
        assert!(ConvexPolygon::rectangle(p(0., 0.), p(2., 1.)).is_ok());
    }

    #[test]
    fn margin_offsets_outward() {
        let pts = [p(0., 0.), p(1., 0.), p(1., 1.), p(0., 1.)];
        let h = convex_hull(&pts, 0.25);
        assert!(h.contains(&p(-0.24, 0.5), 0.0));
        assert!(h.contains(&p(-0.2, -0.2), 0.0));
        assert!(!h.contains(&p(-0.3, 0.5), 0.0));
        // thin triangle exercises the bevel
        let sharp = convex_hull(&[p(0., 0.), p(10., 0.), p(10., 0.2)], 0.1);
        assert!(sharp.vertices().len() > 3);
        assert!(ConvexPolygon::new(sharp.vertices().to_vec()).is_ok());
    }

    proptest! {
        #[test]
        fn hull_contains_cluster(raw in prop::collection::vec((-10.0..10.0f64, -10.0..10.0f64), 1..40),
                                 margin in 0.0..0.5f64) {
            let pts: Vec<Point2> = raw.iter().map(|&(u, v)| p(u, v)).collect();
            let h = convex_hull(&pts, margin);
            prop_assert!(h.vertices().len() >= 3);
            prop_assert!(h.area() > 0.0);
            prop_assert!(ConvexPolygon::new(h.vertices().to_vec()).is_ok());
            for q in &pts {
                prop_assert!(h.contains(q, 1e-9));
            }
            if margin == 0.0 && hull_vertices(&pts).len() >= 3 {
                for v in h.vertices() {
                    prop_assert!(pts.contains(v));
                }
            }
        }

        #[test]
        fn obstacles_cover_their_points(raw in prop::collection::vec((-10.0..10.0f64, -10.0..10.0f64), 1..80),
                                        k in 1usize..20, margin in 0.0..0.3f64) {
            let pts: Vec<Point2> = raw.iter().map(|&(u, v)| p(u, v)).collect();
            let prm = ObstacleParams { clusters: k, margin, max_iters: 50, seed: 0 };
            let clusters = kmeans(&pts, &prm);
            let set = build_obstacles(&pts, &prm);
            prop_assert_eq!(set.len(), clusters.len());
            for (poly, cl) in set.polygons.iter().zip(&clusters) {
                for &i in &cl.members {
                    prop_assert!(poly.distance(&pts[i]) <= margin + 1e-9);
                }
            }
            prop_assert_eq!(build_obstacles(&pts, &prm), set);
        }
    }
}
