//! Vectors, boxes, rays, affine transforms and triangle primitives.

use std::ops::{Add, AddAssign, Div, Index, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

use crate::float::Float;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[T; 3]", into = "[T; 3]", bound(serialize = "T: Clone + Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct Vector3<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T> From<[T; 3]> for Vector3<T> {
    fn from([x, y, z]: [T; 3]) -> Self {
        Self { x, y, z }
    }
}

impl<T> From<Vector3<T>> for [T; 3] {
    fn from(v: Vector3<T>) -> Self {
        [v.x, v.y, v.z]
    }
}

impl<T: Float> Vector3<T> {
    #[inline]
    pub fn new(x: T, y: T, z: T) -> Self {
        Self { x, y, z }
    }

    #[inline]
    pub fn zero() -> Self {
        Self::splat(T::zero())
    }

    #[inline]
    pub fn splat(v: T) -> Self {
        Self { x: v, y: v, z: v }
    }

    #[inline]
    pub fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    #[inline]
    pub fn cross(self, o: Self) -> Self {
        Self::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    #[inline]
    pub fn length_squared(self) -> T {
        self.dot(self)
    }

    #[inline]
    pub fn length(self) -> T {
        self.length_squared().sqrt()
    }

    /// Unit vector in the same direction; zero stays zero.
    #[inline]
    pub fn normalized(self) -> Self {
        let len = self.length();
        if len > T::zero() {
            self / len
        } else {
            self
        }
    }

    #[inline]
    pub fn mul_elem(self, o: Self) -> Self {
        Self::new(self.x * o.x, self.y * o.y, self.z * o.z)
    }

    #[inline]
    pub fn min_elem(self, o: Self) -> Self {
        Self::new(self.x.min(o.x), self.y.min(o.y), self.z.min(o.z))
    }

    #[inline]
    pub fn max_elem(self, o: Self) -> Self {
        Self::new(self.x.max(o.x), self.y.max(o.y), self.z.max(o.z))
    }

    #[inline]
    pub fn max_component(self) -> T {
        self.x.max(self.y).max(self.z)
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    #[inline]
    pub fn map(self, f: impl Fn(T) -> T) -> Self {
        Self::new(f(self.x), f(self.y), f(self.z))
    }

    pub fn cast<U: Float>(self) -> Vector3<U> {
        Vector3::new(
            U::lit(self.x.to_f64_lossy()),
            U::lit(self.y.to_f64_lossy()),
            U::lit(self.z.to_f64_lossy()),
        )
    }

    /// Orthonormal basis `(t, b)` completing `self` (assumed unit).
    pub fn orthonormal_basis(self) -> (Self, Self) {
        // Duff et al. branchless construction.
        let one = T::one();
        let sign = if self.z >= T::zero() { one } else { -one };
        let a = -one / (sign + self.z);
        let b = self.x * self.y * a;
        let t = Self::new(one + sign * self.x * self.x * a, sign * b, -sign * self.x);
        let bt = Self::new(b, sign + self.y * self.y * a, -self.y);
        (t, bt)
    }
}

impl<T> Index<usize> for Vector3<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        match i {
            0 => &self.x,
            1 => &self.y,
            2 => &self.z,
            _ => panic!("axis {i} out of range"),
        }
    }
}

impl<T: Float> Add for Vector3<T> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl<T: Float> AddAssign for Vector3<T> {
    #[inline]
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl<T: Float> Sub for Vector3<T> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl<T: Float> SubAssign for Vector3<T> {
    #[inline]
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}

impl<T: Float> Mul<T> for Vector3<T> {
    type Output = Self;
    #[inline]
    fn mul(self, s: T) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }
}

impl<T: Float> Div<T> for Vector3<T> {
    type Output = Self;
    #[inline]
    fn div(self, s: T) -> Self {
        Self::new(self.x / s, self.y / s, self.z / s)
    }
}

impl<T: Float> Neg for Vector3<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

/// Axis-aligned bounding box. The default value is empty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb<T> {
    pub min: Vector3<T>,
    pub max: Vector3<T>,
}

impl<T: Float> Default for Aabb<T> {
    fn default() -> Self {
        Self::empty()
    }
}

impl<T: Float> Aabb<T> {
    pub fn empty() -> Self {
        Self {
            min: Vector3::splat(T::infinity()),
            max: Vector3::splat(T::neg_infinity()),
        }
    }

    pub fn from_points<I: IntoIterator<Item = Vector3<T>>>(pts: I) -> Self {
        pts.into_iter().fold(Self::empty(), |b, p| b.grow(p))
    }

    pub fn is_empty(&self) -> bool {
        self.min.x > self.max.x || self.min.y > self.max.y || self.min.z > self.max.z
    }

    #[must_use]
    pub fn grow(self, p: Vector3<T>) -> Self {
        Self {
            min: self.min.min_elem(p),
            max: self.max.max_elem(p),
        }
    }

    #[must_use]
    pub fn union(self, o: Self) -> Self {
        Self {
            min: self.min.min_elem(o.min),
            max: self.max.max_elem(o.max),
        }
    }

    pub fn contains_box(&self, o: &Self) -> bool {
        o.is_empty()
            || (self.min.x <= o.min.x
                && self.min.y <= o.min.y
                && self.min.z <= o.min.z
                && self.max.x >= o.max.x
                && self.max.y >= o.max.y
                && self.max.z >= o.max.z)
    }

    pub fn extent(&self) -> Vector3<T> {
        if self.is_empty() {
            Vector3::zero()
        } else {
            self.max - self.min
        }
    }

    pub fn center(&self) -> Vector3<T> {
        (self.min + self.max) * T::lit(0.5)
    }

    pub fn diagonal(&self) -> T {
        self.extent().length()
    }

    pub fn surface_area(&self) -> T {
        let e = self.extent();
        T::lit(2.0) * (e.x * e.y + e.y * e.z + e.z * e.x)
    }

    pub fn largest_axis(&self) -> usize {
        let e = self.extent();
        if e.x >= e.y && e.x >= e.z {
            0
        } else if e.y >= e.z {
            1
        } else {
            2
        }
    }

    /// Squared distance from `p` to the box (0 inside).
    pub fn distance_squared(&self, p: Vector3<T>) -> T {
        let d = (self.min - p).max_elem(p - self.max).max_elem(Vector3::zero());
        d.length_squared()
    }

    /// Slab test; returns the entry distance when the box is hit within `[t_min, t_max]`.
    #[inline]
    pub fn hit(&self, origin: Vector3<T>, inv_dir: Vector3<T>, t_min: T, t_max: T) -> Option<T> {
        let mut t0 = t_min;
        let mut t1 = t_max;
        for axis in 0..3 {
            if inv_dir[axis].is_infinite() {
                // Ray parallel to this slab.
                if origin[axis] < self.min[axis] || origin[axis] > self.max[axis] {
                    return None;
                }
                continue;
            }
            let a = (self.min[axis] - origin[axis]) * inv_dir[axis];
            let b = (self.max[axis] - origin[axis]) * inv_dir[axis];
            let (near, far) = if a <= b { (a, b) } else { (b, a) };
            if near > t0 {
                t0 = near;
            }
            if far < t1 {
                t1 = far;
            }
            if t0 > t1 {
                return None;
            }
        }
        Some(t0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray<T> {
    pub origin: Vector3<T>,
    pub dir: Vector3<T>,
    pub t_max: T,
}

impl<T: Float> Ray<T> {
    pub fn new(origin: Vector3<T>, dir: Vector3<T>) -> Self {
        Self {
            origin,
            dir,
            t_max: T::infinity(),
        }
    }

    pub fn with_t_max(mut self, t_max: T) -> Self {
        self.t_max = t_max;
        self
    }

    #[inline]
    pub fn at(&self, t: T) -> Vector3<T> {
        self.origin + self.dir * t
    }
}

/// Affine transform stored as the top three rows of a row-major 4x4 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Affine3<T> {
    pub rows: [[T; 4]; 3],
}

impl<T: Float> Affine3<T> {
    pub fn identity() -> Self {
        let (o, z) = (T::one(), T::zero());
        Self {
            rows: [[o, z, z, z], [z, o, z, z], [z, z, o, z]],
        }
    }

    pub fn translation(t: Vector3<T>) -> Self {
        let mut m = Self::identity();
        m.rows[0][3] = t.x;
        m.rows[1][3] = t.y;
        m.rows[2][3] = t.z;
        m
    }

    pub fn scale(s: Vector3<T>) -> Self {
        let mut m = Self::identity();
        m.rows[0][0] = s.x;
        m.rows[1][1] = s.y;
        m.rows[2][2] = s.z;
        m
    }

    /// Rotation about +y by `angle` radians.
    pub fn rotation_y(angle: T) -> Self {
        let (s, c) = angle.sin_cos();
        let mut m = Self::identity();
        m.rows[0][0] = c;
        m.rows[0][2] = s;
        m.rows[2][0] = -s;
        m.rows[2][2] = c;
        m
    }

    /// Builds from 16 row-major values; `None` unless the last row is `[0, 0, 0, 1]`.
    pub fn from_row_major(v: &[T; 16]) -> Option<Self> {
        let (z, o) = (T::zero(), T::one());
        if v[12] != z || v[13] != z || v[14] != z || v[15] != o {
            return None;
        }
        Some(Self {
            rows: [
                [v[0], v[1], v[2], v[3]],
                [v[4], v[5], v[6], v[7]],
                [v[8], v[9], v[10], v[11]],
            ],
        })
    }

    pub fn to_row_major(&self) -> [T; 16] {
        let r = &self.rows;
        let (z, o) = (T::zero(), T::one());
        [
            r[0][0], r[0][1], r[0][2], r[0][3], r[1][0], r[1][1], r[1][2], r[1][3], r[2][0],
            r[2][1], r[2][2], r[2][3], z, z, z, o,
        ]
    }

    /// `self * other` (apply `other` first).
    #[must_use]
    pub fn then_after(&self, other: &Self) -> Self {
        let mut out = Self::identity();
        for i in 0..3 {
            for j in 0..4 {
                let mut acc = if j == 3 { self.rows[i][3] } else { T::zero() };
                for k in 0..3 {
                    acc += self.rows[i][k] * other.rows[k][j];
                }
                out.rows[i][j] = acc;
            }
        }
        out
    }

    pub fn determinant(&self) -> T {
        let m = &self.rows;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    pub fn inverse(&self) -> Option<Self> {
        let det = self.determinant();
        if !det.is_finite() || det.abs() <= T::lit(1e-12) {
            return None;
        }
        let m = &self.rows;
        let inv_det = T::one() / det;
        let mut a = [[T::zero(); 3]; 3];
        a[0][0] = (m[1][1] * m[2][2] - m[1][2] * m[2][1]) * inv_det;
        a[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) * inv_det;
        a[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) * inv_det;
        a[1][0] = (m[1][2] * m[2][0] - m[1][0] * m[2][2]) * inv_det;
        a[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) * inv_det;
        a[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) * inv_det;
        a[2][0] = (m[1][0] * m[2][1] - m[1][1] * m[2][0]) * inv_det;
        a[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) * inv_det;
        a[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) * inv_det;
        let t = Vector3::new(m[0][3], m[1][3], m[2][3]);
        let mut out = Self::identity();
        for i in 0..3 {
            out.rows[i][..3].copy_from_slice(&a[i]);
            out.rows[i][3] = -(a[i][0] * t.x + a[i][1] * t.y + a[i][2] * t.z);
        }
        Some(out)
    }

    #[inline]
    pub fn point(&self, p: Vector3<T>) -> Vector3<T> {
        let m = &self.rows;
        Vector3::new(
            m[0][0] * p.x + m[0][1] * p.y + m[0][2] * p.z + m[0][3],
            m[1][0] * p.x + m[1][1] * p.y + m[1][2] * p.z + m[1][3],
            m[2][0] * p.x + m[2][1] * p.y + m[2][2] * p.z + m[2][3],
        )
    }

    #[inline]
    pub fn vector(&self, v: Vector3<T>) -> Vector3<T> {
        let m = &self.rows;
        Vector3::new(
            m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
            m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z,
        )
    }

    /// Transforms a normal with the inverse transpose; the result is not normalized.
    pub fn normal(&self, n: Vector3<T>) -> Option<Vector3<T>> {
        let inv = self.inverse()?;
        let m = &inv.rows;
        Some(Vector3::new(
            m[0][0] * n.x + m[1][0] * n.y + m[2][0] * n.z,
            m[0][1] * n.x + m[1][1] * n.y + m[2][1] * n.z,
            m[0][2] * n.x + m[1][2] * n.y + m[2][2] * n.z,
        ))
    }
}

/// Ray/triangle hit parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriangleHit<T> {
    pub t: T,
    /// Barycentric weight of vertex 1.
    pub u: T,
    /// Barycentric weight of vertex 2.
    pub v: T,
}

/// Möller–Trumbore intersection restricted to `t in (t_min, t_max)`.
#[inline]
pub fn intersect_triangle<T: Float>(
    origin: Vector3<T>,
    dir: Vector3<T>,
    tri: &[Vector3<T>; 3],
    t_min: T,
    t_max: T,
) -> Option<TriangleHit<T>> {
    let e1 = tri[1] - tri[0];
    let e2 = tri[2] - tri[0];
    let p = dir.cross(e2);
    let det = e1.dot(p);
    if det == T::zero() || !det.is_finite() {
        return None;
    }
    let inv_det = T::one() / det;
    let s = origin - tri[0];
    let u = s.dot(p) * inv_det;
    if u < T::zero() || u > T::one() {
        return None;
    }
    let q = s.cross(e1);
    let v = dir.dot(q) * inv_det;
    if v < T::zero() || u + v > T::one() {
        return None;
    }
    let t = e2.dot(q) * inv_det;
    if t > t_min && t < t_max {
        Some(TriangleHit { t, u, v })
    } else {
        None
    }
}

/// Closest point on triangle `tri` to `p` (Ericson, Real-Time Collision Detection 5.1.5).
pub fn closest_point_on_triangle<T: Float>(p: Vector3<T>, tri: &[Vector3<T>; 3]) -> Vector3<T> {
    let [a, b, c] = *tri;
    let zero = T::zero();
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(ap);
    let d2 = ac.dot(ap);
    if d1 <= zero && d2 <= zero {
        return a;
    }
    let bp = p - b;
    let d3 = ab.dot(bp);
    let d4 = ac.dot(bp);
    if d3 >= zero && d4 <= d3 {
        return b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= zero && d1 >= zero && d3 <= zero {
        let v = d1 / (d1 - d3);
        return a + ab * v;
    }
    let cp = p - c;
    let d5 = ab.dot(cp);
    let d6 = ac.dot(cp);
    if d6 >= zero && d5 <= d6 {
        return c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= zero && d2 >= zero && d6 <= zero {
        let w = d2 / (d2 - d6);
        return a + ac * w;
    }
    let va = d3 * d6 - d5 * d4;
    if va <= zero && (d4 - d3) >= zero && (d5 - d6) >= zero {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return b + (c - b) * w;
    }
    let denom = T::one() / (va + vb + vc);
    if !denom.is_finite() {
        // Degenerate triangle: fall back to the nearest vertex.
        let da = (p - a).length_squared();
        let db = (p - b).length_squared();
        let dc = (p - c).length_squared();
        return if da <= db && da <= dc {
            a
        } else if db <= dc {
            b
        } else {
            c
        };
    }
    let v = vb * denom;
    let w = vc * denom;
    a + ab * v + ac * w
}

pub fn triangle_area<T: Float>(tri: &[Vector3<T>; 3]) -> T {
    (tri[1] - tri[0]).cross(tri[2] - tri[0]).length() * T::lit(0.5)
}

/// 2D point-in-polygon (even-odd rule) on `(x, z)` coordinates.
pub fn point_in_polygon<T: Float>(p: [T; 2], poly: &[[T; 2]]) -> bool {
    let n = poly.len();
    if n < 3 {
        return false;
    }
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (xi, zi) = (poly[i][0], poly[i][1]);
        let (xj, zj) = (poly[j][0], poly[j][1]);
        if (zi > p[1]) != (zj > p[1]) {
            let x_cross = (xj - xi) * (p[1] - zi) / (zj - zi) + xi;
            if p[0] < x_cross {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Signed area of a 2D polygon (positive for counter-clockwise in `(x, z)`).
pub fn polygon_signed_area<T: Float>(poly: &[[T; 2]]) -> T {
    let n = poly.len();
    let mut acc = T::zero();
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        acc += a[0] * b[1] - b[0] * a[1];
    }
    acc * T::lit(0.5)
}

/// True when no two non-adjacent edges of the closed polygon intersect.
pub fn polygon_is_simple<T: Float>(poly: &[[T; 2]]) -> bool {
    let n = poly.len();
    if n < 3 {
        return false;
    }
    let orient = |a: [T; 2], b: [T; 2], c: [T; 2]| -> T {
        (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    };
    let on_segment = |a: [T; 2], b: [T; 2], p: [T; 2]| -> bool {
        p[0] >= a[0].min(b[0]) && p[0] <= a[0].max(b[0]) && p[1] >= a[1].min(b[1]) && p[1] <= a[1].max(b[1])
    };
    let segments_touch = |a: [T; 2], b: [T; 2], c: [T; 2], d: [T; 2]| -> bool {
        let o1 = orient(a, b, c);
        let o2 = orient(a, b, d);
        let o3 = orient(c, d, a);
        let o4 = orient(c, d, b);
        let z = T::zero();
        if ((o1 > z && o2 < z) || (o1 < z && o2 > z)) && ((o3 > z && o4 < z) || (o3 < z && o4 > z)) {
            return true;
        }
        (o1 == z && on_segment(a, b, c))
            || (o2 == z && on_segment(a, b, d))
            || (o3 == z && on_segment(c, d, a))
            || (o4 == z && on_segment(c, d, b))
    };
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        for j in (i + 1)..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                continue;
            }
            let (c, d) = (poly[j], poly[(j + 1) % n]);
            if segments_touch(a, b, c, d) {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    type V = Vector3<f64>;

    #[test]
    fn cross_follows_right_hand_rule() {
        let x = V::new(1.0, 0.0, 0.0);
        let y = V::new(0.0, 1.0, 0.0);
        assert_eq!(x.cross(y), V::new(0.0, 0.0, 1.0));
    }

    #[test]
    fn affine_inverse_round_trips() {
        let m = Affine3::translation(V::new(1.0, 2.0, 3.0))
            .then_after(&Affine3::rotation_y(0.7))
            .then_after(&Affine3::scale(V::new(2.0, 0.5, 3.0)));
        let inv = m.inverse().unwrap();
        let p = V::new(0.3, -1.2, 4.0);
        let back = inv.point(m.point(p));
        assert!((back - p).length() < 1e-12);
    }

    #[test]
    fn singular_affine_has_no_inverse() {
        let m = Affine3::scale(V::new(1.0, 0.0, 1.0));
        assert!(m.inverse().is_none());
    }

    #[test]
    fn triangle_hit_at_expected_distance() {
        let tri = [V::new(0.0, 0.0, 0.0), V::new(1.0, 0.0, 0.0), V::new(0.0, 1.0, 0.0)];
        let h = intersect_triangle(V::new(0.2, 0.2, 5.0), V::new(0.0, 0.0, -1.0), &tri, 0.0, f64::INFINITY)
            .unwrap();
        assert!((h.t - 5.0).abs() < 1e-12);
        assert!((h.u - 0.2).abs() < 1e-12 && (h.v - 0.2).abs() < 1e-12);
    }

    #[test]
    fn closest_point_regions() {
        let tri = [V::new(0.0, 0.0, 0.0), V::new(1.0, 0.0, 0.0), V::new(0.0, 1.0, 0.0)];
        assert_eq!(closest_point_on_triangle(V::new(-1.0, -1.0, 0.0), &tri), tri[0]);
        let p = closest_point_on_triangle(V::new(0.25, 0.25, 2.0), &tri);
        assert!((p - V::new(0.25, 0.25, 0.0)).length() < 1e-12);
        let e = closest_point_on_triangle(V::new(0.5, -3.0, 0.0), &tri);
        assert!((e - V::new(0.5, 0.0, 0.0)).length() < 1e-12);
    }

    #[test]
    fn polygon_predicates() {
        let square = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        assert!(point_in_polygon([0.5, 0.5], &square));
        assert!(!point_in_polygon([1.5, 0.5], &square));
        assert!(polygon_is_simple(&square));
        assert!((polygon_signed_area::<f64>(&square) - 1.0).abs() < 1e-12);
        let bowtie = [[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]];
        assert!(!polygon_is_simple(&bowtie));
    }

    #[test]
    fn orthonormal_basis_is_orthonormal() {
        for n in [V::new(0.0, 0.0, 1.0), V::new(0.0, 0.0, -1.0), V::new(0.3, -0.8, 0.2).normalized()] {
            let (t, b) = n.orthonormal_basis();
            assert!(t.dot(n).abs() < 1e-12 && b.dot(n).abs() < 1e-12 && t.dot(b).abs() < 1e-12);
            assert!((t.length() - 1.0).abs() < 1e-12 && (b.length() - 1.0).abs() < 1e-12);
        }
    }
}
