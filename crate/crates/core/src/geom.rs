//! Planar geometry used by the propagation model.

use core::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::math;

/// A point or vector in the plane, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, other: Self) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3-D cross product.
    pub fn cross(self, other: Self) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        math::hypot(self.x, self.y)
    }

    pub fn distance(self, other: Self) -> f64 {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Point2 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point2 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Self::new(self.x * s, self.y * s)
    }
}

impl Neg for Point2 {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y)
    }
}

impl From<[f64; 2]> for Point2 {
    fn from(p: [f64; 2]) -> Self {
        Self::new(p[0], p[1])
    }
}

/// A line segment between two endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub a: Point2,
    pub b: Point2,
}

/// Parametric tolerance for treating a crossing as touching an endpoint.
const PARAM_EPS: f64 = 1e-9;

impl Segment {
    pub const fn new(a: Point2, b: Point2) -> Self {
        Self { a, b }
    }

    pub fn length(&self) -> f64 {
        self.a.distance(self.b)
    }

    pub fn direction(&self) -> Point2 {
        self.b - self.a
    }

    /// Mirror image of `p` across the infinite line through this segment.
    pub fn mirror(&self, p: Point2) -> Point2 {
        let d = self.direction();
        let t = (p - self.a).dot(d) / d.dot(d);
        let foot = self.a + d * t;
        foot * 2.0 - p
    }

    /// Parameters `(t, u)` where the lines `p + t (q - p)` and
    /// `a + u (b - a)` meet, or `None` for parallel lines.
    pub fn line_parameters(&self, p: Point2, q: Point2) -> Option<(f64, f64)> {
        let r = q - p;
        let s = self.direction();
        let den = r.cross(s);
        if den.abs() < 1e-15 * (r.norm() * s.norm()).max(1e-300) {
            return None;
        }
        let ap = self.a - p;
        Some((ap.cross(s) / den, ap.cross(r) / den))
    }

    /// Whether the open segment `p`–`q` crosses this segment. Touching at
    /// `p` or `q` does not count; touching this segment's endpoints does.
    pub fn blocks(&self, p: Point2, q: Point2) -> bool {
        match self.line_parameters(p, q) {
            Some((t, u)) => t > PARAM_EPS && t < 1.0 - PARAM_EPS && (-PARAM_EPS..=1.0 + PARAM_EPS).contains(&u),
            None => false,
        }
    }

    pub fn distance_to_point(&self, p: Point2) -> f64 {
        let d = self.direction();
        let len2 = d.dot(d);
        if len2 == 0.0 {
            return self.a.distance(p);
        }
        let t = ((p - self.a).dot(d) / len2).clamp(0.0, 1.0);
        (self.a + d * t).distance(p)
    }

    /// Minimum distance between this segment and the segment `p`–`q`.
    pub fn distance_to_segment(&self, p: Point2, q: Point2) -> f64 {
        let other = Segment::new(p, q);
        if let Some((t, u)) = self.line_parameters(p, q) {
            if (0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&u) {
                return 0.0;
            }
        }
        self.distance_to_point(p)
            .min(self.distance_to_point(q))
            .min(other.distance_to_point(self.a))
            .min(other.distance_to_point(self.b))
    }
}

/// Axis-aligned rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min: Point2,
    pub max: Point2,
}

impl Rect {
    pub const fn new(min: Point2, max: Point2) -> Self {
        Self { min, max }
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn diagonal(&self) -> f64 {
        math::hypot(self.width(), self.height())
    }

    pub fn contains(&self, p: Point2) -> bool {
        let eps = 1e-9;
        p.x >= self.min.x - eps && p.x <= self.max.x + eps && p.y >= self.min.y - eps && p.y <= self.max.y + eps
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mirror_across_x_axis() {
        let wall = Segment::new(Point2::new(0.0, 0.0), Point2::new(5.0, 0.0));
        assert_eq!(wall.mirror(Point2::new(1.0, 2.0)), Point2::new(1.0, -2.0));
    }

    #[test]
    fn mirror_across_diagonal() {
        let wall = Segment::new(Point2::new(0.0, 0.0), Point2::new(1.0, 1.0));
        let m = wall.mirror(Point2::new(2.0, 0.0));
        assert!((m.x - 0.0).abs() < 1e-12 && (m.y - 2.0).abs() < 1e-12);
    }

    #[test]
    fn crossing_tests() {
        let wall = Segment::new(Point2::new(0.0, -1.0), Point2::new(0.0, 1.0));
        assert!(wall.blocks(Point2::new(-1.0, 0.0), Point2::new(1.0, 0.0)));
        assert!(!wall.blocks(Point2::new(-1.0, 2.0), Point2::new(1.0, 2.0)));
        // ending on the wall is not a crossing
        assert!(!wall.blocks(Point2::new(-1.0, 0.0), Point2::new(0.0, 0.0)));
        // parallel
        assert!(!wall.blocks(Point2::new(1.0, -1.0), Point2::new(1.0, 1.0)));
    }

    #[test]
    fn segment_distances() {
        let s = Segment::new(Point2::new(0.0, 0.0), Point2::new(2.0, 0.0));
        assert_eq!(s.distance_to_point(Point2::new(1.0, 3.0)), 3.0);
        assert_eq!(s.distance_to_point(Point2::new(5.0, 4.0)), 5.0);
        assert_eq!(s.distance_to_segment(Point2::new(1.0, 1.0), Point2::new(1.0, -1.0)), 0.0);
        assert_eq!(s.distance_to_segment(Point2::new(3.0, 1.0), Point2::new(3.0, 2.0)), 2f64.sqrt());
    }
}
