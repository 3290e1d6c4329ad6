//! Geometric primitives shared by the pipeline stages.
//!
//! Coordinates are in "map units": monocular SLAM maps carry an arbitrary
//! global scale, so nothing here assumes metres.

use std::f64::consts::TAU;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `AᵀA = I` for a plane basis.
pub const ORTHONORMAL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const ORIGIN: Point3 = Point3 {
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn dot(&self, other: &Point3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(&self, other: &Point3) -> Point3 {
        Point3::new(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn distance(&self, other: &Point3) -> f64 {
        (*self - *other).norm()
    }
}

impl Add for Point3 {
    type Output = Point3;
    fn add(self, rhs: Point3) -> Point3 {
        Point3::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl Sub for Point3 {
    type Output = Point3;
    fn sub(self, rhs: Point3) -> Point3 {
        Point3::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl Mul<f64> for Point3 {
    type Output = Point3;
    fn mul(self, rhs: f64) -> Point3 {
        Point3::new(self.x * rhs, self.y * rhs, self.z * rhs)
    }
}

impl Neg for Point3 {
    type Output = Point3;
    fn neg(self) -> Point3 {
        Point3::new(-self.x, -self.y, -self.z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub u: f64,
    pub v: f64,
}

impl Point2 {
    pub const ORIGIN: Point2 = Point2 { u: 0.0, v: 0.0 };

    pub const fn new(u: f64, v: f64) -> Self {
        Self { u, v }
    }

    pub fn from_polar(radius: f64, angle: f64) -> Self {
        Self::new(radius * angle.cos(), radius * angle.sin())
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.v.is_finite()
    }

    pub fn dot(&self, other: &Point2) -> f64 {
        self.u * other.u + self.v * other.v
    }

    /// z-component of the 3D cross product.
    pub fn cross(&self, other: &Point2) -> f64 {
        self.u * other.v - self.v * other.u
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn distance(&self, other: &Point2) -> f64 {
        (*self - *other).norm()
    }

    /// Counter-clockwise perpendicular.
    pub fn perp(&self) -> Point2 {
        Point2::new(-self.v, self.u)
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, rhs: Point2) -> Point2 {
        Point2::new(self.u + rhs.u, self.v + rhs.v)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, rhs: Point2) -> Point2 {
        Point2::new(self.u - rhs.u, self.v - rhs.v)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, rhs: f64) -> Point2 {
        Point2::new(self.u * rhs, self.v * rhs)
    }
}

impl Neg for Point2 {
    type Output = Point2;
    fn neg(self) -> Point2 {
        Point2::new(-self.u, -self.v)
    }
}

/// Axis-aligned rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min: Point2,
    pub max: Point2,
}

impl Rect {
    pub fn new(min: Point2, max: Point2) -> Self {
        Self { min, max }
    }

    /// Smallest rectangle holding every point; `None` when empty.
    pub fn bounding<'a>(points: impl IntoIterator<Item = &'a Point2>) -> Option<Rect> {
        points.into_iter().fold(None, |acc, p| {
            Some(match acc {
                None => Rect::new(*p, *p),
                Some(r) => r.including(p),
            })
        })
    }

    pub fn including(&self, p: &Point2) -> Rect {
        Rect::new(
            Point2::new(self.min.u.min(p.u), self.min.v.min(p.v)),
            Point2::new(self.max.u.max(p.u), self.max.v.max(p.v)),
        )
    }

    pub fn union(&self, other: &Rect) -> Rect {
        self.including(&other.min).including(&other.max)
    }

    pub fn width(&self) -> f64 {
        self.max.u - self.min.u
    }

    pub fn height(&self) -> f64 {
        self.max.v - self.min.v
    }

    /// Grow each side by `fraction` of the corresponding extent, and by at
    /// least `min_pad`.
    pub fn inflated(&self, fraction: f64, min_pad: f64) -> Rect {
        let du = (self.width() * fraction).max(min_pad);
        let dv = (self.height() * fraction).max(min_pad);
        Rect::new(
            Point2::new(self.min.u - du, self.min.v - dv),
            Point2::new(self.max.u + du, self.max.v + dv),
        )
    }

    pub fn contains(&self, p: &Point2) -> bool {
        p.u >= self.min.u && p.u <= self.max.u && p.v >= self.min.v && p.v <= self.max.v
    }

    pub fn intersects(&self, other: &Rect) -> bool {
        self.min.u <= other.max.u
            && other.min.u <= self.max.u
            && self.min.v <= other.max.v
            && other.min.v <= self.max.v
    }
}

/// Ordered 3D feature points; a point's index is its position in `points`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PointCloud3 {
    pub points: Vec<Point3>,
}

impl PointCloud3 {
    pub fn new(points: Vec<Point3>) -> Self {
        Self { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Point3> {
        self.points.iter()
    }

    pub fn subset(&self, indices: impl IntoIterator<Item = usize>) -> PointCloud3 {
        PointCloud3::new(indices.into_iter().map(|i| self.points[i]).collect())
    }

    pub fn scaled(&self, factor: f64) -> PointCloud3 {
        PointCloud3::new(self.points.iter().map(|p| *p * factor).collect())
    }
}

impl From<Vec<Point3>> for PointCloud3 {
    fn from(points: Vec<Point3>) -> Self {
        Self::new(points)
    }
}

/// A 2D affine plane embedded in 3D: orthonormal basis columns plus an offset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 9]", into = "[f64; 9]")]
pub struct AffinePlane {
    basis: [Point3; 2],
    offset: Point3,
}

impl AffinePlane {
    pub fn new(col0: Point3, col1: Point3, offset: Point3) -> Result<Self> {
        let plane = Self {
            basis: [col0, col1],
            offset,
        };
        if !(col0.is_finite() && col1.is_finite() && offset.is_finite()) {
            return Err(Error::Degenerate("plane has non-finite entries".into()));
        }
        let err = plane.orthonormality_error();
        if err > ORTHONORMAL_TOL {
            return Err(Error::Degenerate(format!(
                "plane basis is not orthonormal (|AᵀA - I| = {err:e})"
            )));
        }
        Ok(plane)
    }

    /// The plane z = `height` with the x and y axes as basis.
    pub fn horizontal(height: f64) -> Self {
        Self {
            basis: [Point3::new(1.0, 0.0, 0.0), Point3::new(0.0, 1.0, 0.0)],
            offset: Point3::new(0.0, 0.0, height),
        }
    }

    /// Plane through three points, anchored at `p1`, basis from Gram-Schmidt
    /// on `(p2 - p1, p3 - p1)`.
    pub fn from_three_points(p1: Point3, p2: Point3, p3: Point3) -> Result<Self> {
        let a = p2 - p1;
        let b = p3 - p1;
        let area = 0.5 * a.cross(&b).norm();
        if !(area > 1e-12) {
            return Err(Error::Degenerate(
                "plane points are coincident or collinear".into(),
            ));
        }
        let e0 = a * (1.0 / a.norm());
        let w = b - e0 * b.dot(&e0);
        let e1 = w * (1.0 / w.norm());
        Self::new(e0, e1, p1)
    }

    pub fn basis(&self) -> [Point3; 2] {
        self.basis
    }

    pub fn offset(&self) -> Point3 {
        self.offset
    }

    /// `‖AᵀA − I₂‖∞`.
    pub fn orthonormality_error(&self) -> f64 {
        let [a, b] = self.basis;
        let entries = [a.dot(&a) - 1.0, b.dot(&b) - 1.0, a.dot(&b)];
        entries.iter().fold(0.0f64, |m, e| m.max(e.abs()))
    }

    /// `Aᵀ(p − v)`.
    pub fn project(&self, p: &Point3) -> Point2 {
        let d = *p - self.offset;
        Point2::new(self.basis[0].dot(&d), self.basis[1].dot(&d))
    }

    /// `A q + v`.
    pub fn lift(&self, q: &Point2) -> Point3 {
        self.basis[0] * q.u + self.basis[1] * q.v + self.offset
    }

    /// Euclidean distance from `p` to the plane.
    pub fn residual(&self, p: &Point3) -> f64 {
        p.distance(&self.lift(&self.project(p)))
    }

    pub fn project_all(&self, cloud: &PointCloud3) -> Vec<Point2> {
        cloud.iter().map(|p| self.project(p)).collect()
    }

    /// Column-major `A` followed by `v`.
    pub fn to_array(&self) -> [f64; 9] {
        let [a, b] = self.basis;
        let v = self.offset;
        [a.x, a.y, a.z, b.x, b.y, b.z, v.x, v.y, v.z]
    }

    /// Inverse of [`AffinePlane::to_array`], with the orthonormality check.
    pub fn from_array(a: &[f64; 9]) -> Result<Self> {
        Self::new(
            Point3::new(a[0], a[1], a[2]),
            Point3::new(a[3], a[4], a[5]),
            Point3::new(a[6], a[7], a[8]),
        )
    }
}

impl TryFrom<[f64; 9]> for AffinePlane {
    type Error = Error;

    fn try_from(a: [f64; 9]) -> Result<Self> {
        Self::from_array(&a)
    }
}

impl From<AffinePlane> for [f64; 9] {
    fn from(p: AffinePlane) -> Self {
        p.to_array()
    }
}

/// Parameters of the pairwise distance score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreParams {
    /// Pairs closer than this score 0.
    pub epsilon: f64,
    /// Rescale the cloud so its median pairwise distance is 1 before scoring.
    pub normalize: bool,
}

impl Default for ScoreParams {
    fn default() -> Self {
        Self {
            epsilon: 1e-6,
            normalize: false,
        }
    }
}

/// `1 − 1/d(a, b)`, or 0 for pairs closer than `epsilon`.
pub fn distance_score(a: &Point3, b: &Point3, params: &ScoreParams) -> f64 {
    score_from_distance(a.distance(b), params.epsilon)
}

#[inline]
pub(crate) fn score_from_distance(d: f64, epsilon: f64) -> f64 {
    if d < epsilon {
        0.0
    } else {
        1.0 - 1.0 / d
    }
}

/// Angle of `p − origin` in `[0, 2π)`.
pub fn relative_angle(origin: &Point2, p: &Point2) -> Result<f64> {
    let d = *p - *origin;
    if d.norm() < 1e-12 {
        return Err(Error::Degenerate(
            "point coincides with the angle origin".into(),
        ));
    }
    Ok(wrap_angle(d.v.atan2(d.u)))
}

/// Map an angle into `[0, 2π)`.
pub fn wrap_angle(angle: f64) -> f64 {
    let a = angle.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if a >= TAU {
        0.0
    } else {
        a
    }
}

/// Median of all pairwise distances. `None` for fewer than two points.
pub fn median_pairwise_distance(cloud: &PointCloud3) -> Option<f64> {
    let n = cloud.len();
    if n < 2 {
        return None;
    }
    let mut d = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            d.push(cloud.points[i].distance(&cloud.points[j]));
        }
    }
    let m = d.len();
    let cmp = |a: &f64, b: &f64| a.total_cmp(b);
    let upper = *d.select_nth_unstable_by(m / 2, cmp).1;
    if m % 2 == 1 {
        Some(upper)
    } else {
        let lower = d[..m / 2].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Some(0.5 * (lower + upper))
    }
}

/// Uniform scale factor that brings the median pairwise distance to 1.
/// Returns 1 when the median is undefined or zero.
pub fn normalization_factor(cloud: &PointCloud3) -> f64 {
    match median_pairwise_distance(cloud) {
        Some(m) if m > 0.0 && m.is_finite() => 1.0 / m,
        _ => 1.0,
    }
}

/// Closed-segment intersection test, touching counts.
pub fn segments_intersect(a: Point2, b: Point2, c: Point2, d: Point2) -> bool {
    const EPS: f64 = 1e-12;
    let o1 = orient(a, b, c);
    let o2 = orient(a, b, d);
    let o3 = orient(c, d, a);
    let o4 = orient(c, d, b);
    if ((o1 > EPS && o2 < -EPS) || (o1 < -EPS && o2 > EPS))
        && ((o3 > EPS && o4 < -EPS) || (o3 < -EPS && o4 > EPS))
    {
        return true;
    }
    (o1.abs() <= EPS && on_segment(a, b, c))
        || (o2.abs() <= EPS && on_segment(a, b, d))
        || (o3.abs() <= EPS && on_segment(c, d, a))
        || (o4.abs() <= EPS && on_segment(c, d, b))
}

/// Twice the signed area of triangle `abc`.
pub fn orient(a: Point2, b: Point2, c: Point2) -> f64 {
    (b - a).cross(&(c - a))
}

fn on_segment(a: Point2, b: Point2, p: Point2) -> bool {
    const EPS: f64 = 1e-12;
    p.u >= a.u.min(b.u) - EPS
        && p.u <= a.u.max(b.u) + EPS
        && p.v >= a.v.min(b.v) - EPS
        && p.v <= a.v.max(b.v) + EPS
}

/// Distance from `p` to the closed segment `[a, b]`.
pub fn point_segment_distance(p: Point2, a: Point2, b: Point2) -> f64 {
    let ab = b - a;
    let len2 = ab.dot(&ab);
    if len2 == 0.0 {
        return p.distance(&a);
    }
    let t = ((p - a).dot(&ab) / len2).clamp(0.0, 1.0);
    p.distance(&(a + ab * t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn z1_plane() -> AffinePlane {
        AffinePlane::from_three_points(
            Point3::new(0.0, 0.0, 1.0),
            Point3::new(1.0, 0.0, 1.0),
            Point3::new(0.0, 1.0, 1.0),
        )
        .unwrap()
    }

    #[test]
    fn axis_aligned_plane() {
        let plane = z1_plane();
        assert_eq!(plane.offset(), Point3::new(0.0, 0.0, 1.0));
        let [a, b] = plane.basis();
        assert_eq!(a, Point3::new(1.0, 0.0, 0.0));
        assert_eq!(b, Point3::new(0.0, 1.0, 0.0));
        assert_eq!(plane.project(&Point3::new(3.0, 4.0, 7.0)), Point2::new(3.0, 4.0));
        assert_eq!(plane.lift(&Point2::new(2.0, 5.0)), Point3::new(2.0, 5.0, 1.0));
        assert_eq!(plane.lift(&Point2::ORIGIN), plane.offset());
        assert_eq!(plane.project(&plane.offset()), Point2::ORIGIN);
    }

    #[test]
    fn collinear_and_coincident_are_rejected() {
        let r = AffinePlane::from_three_points(
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 1.0, 1.0),
            Point3::new(2.0, 2.0, 2.0),
        );
        assert!(matches!(r, Err(Error::Degenerate(_))));
        let p = Point3::new(1.0, 2.0, 3.0);
        assert!(AffinePlane::from_three_points(p, p, Point3::ORIGIN).is_err());
    }

    #[test]
    fn non_orthonormal_basis_rejected() {
        let r = AffinePlane::new(
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(1.0, 1.0, 0.0),
            Point3::ORIGIN,
        );
        assert!(r.is_err());
    }

    #[test]
    fn score_values() {
        let p = ScoreParams::default();
        let o = Point3::ORIGIN;
        assert_eq!(distance_score(&o, &Point3::new(1.0, 0.0, 0.0), &p), 0.0);
        assert_eq!(distance_score(&o, &Point3::new(0.0, 2.0, 0.0), &p), 0.5);
        assert_eq!(distance_score(&o, &o, &p), 0.0);
        assert!(distance_score(&o, &Point3::new(0.5, 0.0, 0.0), &p) < 0.0);
    }

    #[test]
    fn angles() {
        let o = Point2::ORIGIN;
        assert_eq!(relative_angle(&o, &Point2::new(1.0, 0.0)).unwrap(), 0.0);
        assert!((relative_angle(&o, &Point2::new(0.0, 2.0)).unwrap() - PI / 2.0).abs() < 1e-15);
        let a = relative_angle(&Point2::new(1.0, 1.0), &Point2::new(0.0, 1.0)).unwrap();
        assert!((a - PI).abs() < 1e-15);
        assert!(relative_angle(&o, &o).is_err());
        let below = relative_angle(&o, &Point2::new(1.0, -1e-300)).unwrap();
        assert!((0.0..TAU).contains(&below));
    }

    #[test]
    fn median_distance() {
        let c = PointCloud3::new(vec![
            Point3::ORIGIN,
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(3.0, 0.0, 0.0),
        ]);
        // distances 1, 3, 2
        assert_eq!(median_pairwise_distance(&c), Some(2.0));
        let c4 = PointCloud3::new(vec![Point3::ORIGIN, Point3::new(2.0, 0.0, 0.0)]);
        assert_eq!(normalization_factor(&c4), 0.5);
        assert_eq!(normalization_factor(&PointCloud3::default()), 1.0);
    }

    #[test]
    fn segment_intersection() {
        let p = Point2::new;
        assert!(segments_intersect(p(0., 0.), p(2., 2.), p(0., 2.), p(2., 0.)));
        assert!(!segments_intersect(p(0., 0.), p(1., 0.), p(0., 1.), p(1., 1.)));
        // touching endpoint
        assert!(segments_intersect(p(0., 0.), p(1., 0.), p(1., 0.), p(1., 1.)));
        // collinear overlap
        assert!(segments_intersect(p(0., 0.), p(2., 0.), p(1., 0.), p(3., 0.)));
        assert!(!segments_intersect(p(0., 0.), p(1., 0.), p(2., 0.), p(3., 0.)));
    }

    fn arb_point3() -> impl Strategy<Value = Point3> {
        (-100.0..100.0f64, -100.0..100.0f64, -100.0..100.0f64)
            .prop_map(|(x, y, z)| Point3::new(x, y, z))
    }

    proptest! {
        #[test]
        fn plane_contains_its_points(p1 in arb_point3(), p2 in arb_point3(), p3 in arb_point3()) {
            prop_assume!(0.5 * (p2 - p1).cross(&(p3 - p1)).norm() > 1e-3);
            let plane = AffinePlane::from_three_points(p1, p2, p3).unwrap();
            prop_assert!(plane.orthonormality_error() <= ORTHONORMAL_TOL);
            prop_assert_eq!(plane.offset(), p1);
            for p in [p1, p2, p3] {
                prop_assert!(plane.residual(&p) <= 1e-9);
                prop_assert!(plane.lift(&plane.project(&p)).distance(&p) <= 1e-9);
            }
        }

        #[test]
        fn projection_roundtrip(p1 in arb_point3(), p2 in arb_point3(), p3 in arb_point3(),
                                q in arb_point3(), u in -50.0..50.0f64, v in -50.0..50.0f64) {
            prop_assume!(0.5 * (p2 - p1).cross(&(p3 - p1)).norm() > 1e-3);
            let plane = AffinePlane::from_three_points(p1, p2, p3).unwrap();
            let q2 = plane.project(&q);
            let again = plane.project(&plane.lift(&q2));
            prop_assert!((again - q2).norm() <= 1e-12 * (1.0 + q2.norm()));
            let lifted = plane.lift(&Point2::new(u, v));
            prop_assert!(plane.residual(&lifted) <= 1e-9);
            prop_assert!(plane.project(&lifted).distance(&Point2::new(u, v)) <= 1e-9);
        }

        #[test]
        fn score_symmetric_and_bounded(a in arb_point3(), b in arb_point3()) {
            let p = ScoreParams::default();
            let s = distance_score(&a, &b, &p);
            prop_assert_eq!(s, distance_score(&b, &a, &p));
            prop_assert!(s < 1.0);
            let d = a.distance(&b);
            prop_assert_eq!(s >= 0.0, d >= 1.0 || d < p.epsilon);
        }

        #[test]
        fn score_monotone(d1 in 1e-6..1e3f64, delta in 1e-6..1e3f64) {
            let p = ScoreParams::default();
            let o = Point3::ORIGIN;
            let s1 = distance_score(&o, &Point3::new(d1, 0.0, 0.0), &p);
            let s2 = distance_score(&o, &Point3::new(d1 + delta, 0.0, 0.0), &p);
            prop_assert!(s2 > s1);
        }
    }
}
