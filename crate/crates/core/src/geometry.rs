//! Planar primitives shared by the scene rasterizer and the ray tracer.

use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Sub};

/// A point or vector in scene meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3D cross product.
    pub fn cross(self, other: Point) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Point) -> f64 {
        (self - other).norm()
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, k: f64) -> Point {
        Point::new(self.x * k, self.y * k)
    }
}

/// Axis-aligned rectangle `[x_min, x_max] × [y_min, y_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl Rect {
    pub const fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Self {
        Rect { x_min, y_min, x_max, y_max }
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.x_min && p.x <= self.x_max && p.y >= self.y_min && p.y <= self.y_max
    }

    pub fn intersects(&self, other: &Rect) -> bool {
        self.x_min <= other.x_max
            && other.x_min <= self.x_max
            && self.y_min <= other.y_max
            && other.y_min <= self.y_max
    }

    pub fn bounding(points: &[Point]) -> Rect {
        let mut r = Rect::new(f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in points {
            r.x_min = r.x_min.min(p.x);
            r.y_min = r.y_min.min(p.y);
            r.x_max = r.x_max.max(p.x);
            r.y_max = r.y_max.max(p.y);
        }
        r
    }

    pub fn of_segment(a: Point, b: Point) -> Rect {
        Rect::new(a.x.min(b.x), a.y.min(b.y), a.x.max(b.x), a.y.max(b.y))
    }
}

/// Shoelace area; positive for counter-clockwise vertex order.
pub fn signed_area(poly: &[Point]) -> f64 {
    let n = poly.len();
    if n < 3 {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in 0..n {
        acc += poly[i].cross(poly[(i + 1) % n]);
    }
    acc * 0.5
}

/// Iterates the closed polygon's edges as `(start, end)` pairs.
pub fn edges(poly: &[Point]) -> impl Iterator<Item = (Point, Point)> + '_ {
    (0..poly.len()).map(move |i| (poly[i], poly[(i + 1) % poly.len()]))
}

fn on_segment(p: Point, a: Point, b: Point) -> bool {
    const TOL: f64 = 1e-9;
    let ab = b - a;
    let ap = p - a;
    let len = ab.norm();
    if len == 0.0 {
        return ap.norm() <= TOL;
    }
    if (ab.cross(ap) / len).abs() > TOL {
        return false;
    }
    let along = ap.dot(ab) / len;
    along >= -TOL && along <= len + TOL
}

/// Point-in-polygon with the boundary counted as inside.
pub fn contains_point(poly: &[Point], p: Point) -> bool {
    let mut inside = false;
    for (a, b) in edges(poly) {
        if on_segment(p, a, b) {
            return true;
        }
        if (a.y > p.y) != (b.y > p.y) {
            let x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x_cross {
                inside = !inside;
            }
        }
    }
    inside
}

/// Parametric intersection of segments `p + t·r` and `q + u·s`, `t,u ∈ [0,1]`.
/// Returns `(t, u)` for a proper or touching crossing; collinear overlaps
/// report the overlap endpoint nearest to `p`.
pub fn segment_intersection(p: Point, p2: Point, q: Point, q2: Point) -> Option<(f64, f64)> {
    const EPS: f64 = 1e-12;
    let r = p2 - p;
    let s = q2 - q;
    let denom = r.cross(s);
    let qp = q - p;
    if denom.abs() <= EPS * r.norm() * s.norm() {
        if qp.cross(r).abs() > 1e-9 * r.norm().max(1.0) {
            return None;
        }
        let rr = r.dot(r);
        if rr == 0.0 {
            return None;
        }
        let t0 = qp.dot(r) / rr;
        let t1 = t0 + s.dot(r) / rr;
        let (lo, hi) = if t0 <= t1 { (t0, t1) } else { (t1, t0) };
        if hi < 0.0 || lo > 1.0 {
            return None;
        }
        let t = lo.max(0.0);
        let hit = p + r * t;
        let ss = s.dot(s);
        let u = if ss > 0.0 { (hit - q).dot(s) / ss } else { 0.0 };
        return Some((t, u.clamp(0.0, 1.0)));
    }
    let t = qp.cross(s) / denom;
    let u = qp.cross(r) / denom;
    let tol = 1e-12;
    if t >= -tol && t <= 1.0 + tol && u >= -tol && u <= 1.0 + tol {
        Some((t.clamp(0.0, 1.0), u.clamp(0.0, 1.0)))
    } else {
        None
    }
}

/// True when no two non-adjacent edges touch and the polygon has at least
/// three vertices.
pub fn is_simple(poly: &[Point]) -> bool {
    let n = poly.len();
    if n < 3 {
        return false;
    }
    for i in 0..n {
        if poly[i] == poly[(i + 1) % n] {
            return false;
        }
    }
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        for j in (i + 1)..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            let (c, d) = (poly[j], poly[(j + 1) % n]);
            if adjacent {
                // Adjacent edges may only share their common vertex.
                let r = b - a;
                let s = d - c;
                if r.cross(s).abs() <= 1e-12 * r.norm() * s.norm() && r.dot(s) < 0.0 {
                    return false;
                }
                continue;
            }
            if segment_intersection(a, b, c, d).is_some() {
                return false;
            }
        }
    }
    true
}

/// Parameters `t ∈ [0,1]` along `a → b` at which the segment enters, leaves,
/// or starts/ends inside the polygon. The segment's intersection with the
/// closed polygon is a union of intervals whose endpoints are all in this list.
pub fn segment_polygon_params(poly: &[Point], a: Point, b: Point, out: &mut Vec<f64>) {
    out.clear();
    if contains_point(poly, a) {
        out.push(0.0);
    }
    if contains_point(poly, b) {
        out.push(1.0);
    }
    for (c, d) in edges(poly) {
        if let Some((t, _)) = segment_intersection(a, b, c, d) {
            out.push(t);
            // Collinear overlap: also record the far end of the overlap.
            let r = b - a;
            if r.cross(d - c).abs() <= 1e-12 * r.norm() * (d - c).norm() {
                let rr = r.dot(r);
                if rr > 0.0 {
                    for e in [c, d] {
                        let te = (e - a).dot(r) / rr;
                        if (0.0..=1.0).contains(&te) {
                            out.push(te);
                        }
                    }
                }
            }
        }
    }
}
