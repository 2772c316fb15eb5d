//! Planar geometry helpers shared by the cloth world, renderer and perception.

use std::f64::consts::{FRAC_PI_2, PI};
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    /// Unit vector at angle `theta` from the x axis.
    pub fn from_angle(theta: f64) -> Self {
        Vec2::new(theta.cos(), theta.sin())
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z component of the 3D cross product.
    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    /// Counter-clockwise rotation by `angle` radians.
    pub fn rotate(self, angle: f64) -> Vec2 {
        let (s, c) = angle.sin_cos();
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    /// Left-hand perpendicular (rotation by +90°).
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, o: Vec2) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Maps an undirected line angle into `(-π/2, π/2]`.
pub fn wrap_line_angle(theta: f64) -> f64 {
    let mut t = theta.rem_euclid(PI);
    if t > FRAC_PI_2 {
        t -= PI;
    }
    t
}

/// Maps an angle into `(-π, π]`.
pub fn wrap_angle(theta: f64) -> f64 {
    let mut t = theta.rem_euclid(2.0 * PI);
    if t > PI {
        t -= 2.0 * PI;
    }
    t
}

/// Smallest absolute difference between two undirected line angles, in `[0, π/2]`.
pub fn line_angle_error(a: f64, b: f64) -> f64 {
    wrap_line_angle(a - b).abs()
}

/// Accumulated first and second moments of a weighted planar point set.
///
/// Segments are integrated exactly, so a total-least-squares fit over
/// piecewise-linear boundaries does not depend on a sampling step.
#[derive(Debug, Clone, Copy, Default)]
pub struct Moments2 {
    pub w: f64,
    sx: f64,
    sy: f64,
    sxx: f64,
    sxy: f64,
    syy: f64,
}

/// Result of a total-least-squares line fit.
#[derive(Debug, Clone, Copy)]
pub struct LineFit {
    pub centroid: Vec2,
    /// Direction of the principal axis, in `(-π/2, π/2]`.
    pub angle: f64,
    pub lambda_max: f64,
    pub lambda_min: f64,
}

impl LineFit {
    /// Ratio of minor to major principal variance; 0 for collinear points.
    pub fn straightness_residual(&self) -> f64 {
        if self.lambda_max <= 0.0 {
            0.0
        } else {
            (self.lambda_min / self.lambda_max).max(0.0)
        }
    }
}

impl Moments2 {
    pub fn add_point(&mut self, p: Vec2, w: f64) {
        self.w += w;
        self.sx += w * p.x;
        self.sy += w * p.y;
        self.sxx += w * p.x * p.x;
        self.sxy += w * p.x * p.y;
        self.syy += w * p.y * p.y;
    }

    /// Adds the segment `a`–`b` with uniform line density.
    pub fn add_segment(&mut self, a: Vec2, b: Vec2) {
        let len = (b - a).norm();
        if len == 0.0 {
            return;
        }
        self.w += len;
        self.sx += len * (a.x + b.x) / 2.0;
        self.sy += len * (a.y + b.y) / 2.0;
        self.sxx += len * (a.x * a.x + b.x * b.x + a.x * b.x) / 3.0;
        self.syy += len * (a.y * a.y + b.y * b.y + a.y * b.y) / 3.0;
        self.sxy += len * (2.0 * a.x * a.y + 2.0 * b.x * b.y + a.x * b.y + b.x * a.y) / 6.0;
    }

    pub fn fit(&self) -> Option<LineFit> {
        if self.w <= 0.0 {
            return None;
        }
        let mx = self.sx / self.w;
        let my = self.sy / self.w;
        let cxx = (self.sxx / self.w - mx * mx).max(0.0);
        let cyy = (self.syy / self.w - my * my).max(0.0);
        let cxy = self.sxy / self.w - mx * my;
        let half_tr = (cxx + cyy) / 2.0;
        let disc = (((cxx - cyy) / 2.0).powi(2) + cxy * cxy).sqrt();
        let angle = wrap_line_angle(0.5 * (2.0 * cxy).atan2(cxx - cyy));
        Some(LineFit {
            centroid: Vec2::new(mx, my),
            angle,
            lambda_max: half_tr + disc,
            lambda_min: half_tr - disc,
        })
    }
}

/// Shoelace signed area; positive for counter-clockwise polygons.
pub fn signed_area(poly: &[Vec2]) -> f64 {
    let n = poly.len();
    if n < 3 {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in 0..n {
        acc += poly[i].cross(poly[(i + 1) % n]);
    }
    acc / 2.0
}

/// Even-odd point-in-polygon test.
pub fn point_in_polygon(p: Vec2, poly: &[Vec2]) -> bool {
    let n = poly.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (poly[i], poly[j]);
        if (a.y > p.y) != (b.y > p.y) {
            let x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x_cross {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

fn orient(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    (b - a).cross(c - a)
}

/// Proper or touching intersection of closed segments `p1p2` and `q1q2`.
pub fn segments_intersect(p1: Vec2, p2: Vec2, q1: Vec2, q2: Vec2) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let on = |a: Vec2, b: Vec2, c: Vec2, d: f64| {
        d == 0.0
            && c.x >= a.x.min(b.x)
            && c.x <= a.x.max(b.x)
            && c.y >= a.y.min(b.y)
            && c.y <= a.y.max(b.y)
    };
    on(q1, q2, p1, d1) || on(q1, q2, p2, d2) || on(p1, p2, q1, d3) || on(p1, p2, q2, d4)
}

/// True when no two non-adjacent edges of the closed polygon intersect.
///
/// Edges are bucketed on a uniform grid so typical boundaries are checked in
/// near-linear time.
pub fn is_simple_polygon(poly: &[Vec2]) -> bool {
    let n = poly.len();
    if n < 3 {
        return false;
    }
    let (mut lo, mut hi) = (poly[0], poly[0]);
    let mut max_len: f64 = 0.0;
    for i in 0..n {
        let p = poly[i];
        lo = Vec2::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Vec2::new(hi.x.max(p.x), hi.y.max(p.y));
        max_len = max_len.max((poly[(i + 1) % n] - p).norm());
    }
    let cell = max_len.max(1e-9) * 2.0;
    let nx = (((hi.x - lo.x) / cell).floor() as usize + 1).min(4096);
    let ny = (((hi.y - lo.y) / cell).floor() as usize + 1).min(4096);
    let cell_x = ((hi.x - lo.x) / nx as f64).max(1e-12);
    let cell_y = ((hi.y - lo.y) / ny as f64).max(1e-12);
    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); nx * ny];
    let idx = |v: f64, origin: f64, size: f64, count: usize| {
        (((v - origin) / size).floor().max(0.0) as usize).min(count - 1)
    };
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        let (x0, x1) = (
            idx(a.x.min(b.x), lo.x, cell_x, nx),
            idx(a.x.max(b.x), lo.x, cell_x, nx),
        );
        let (y0, y1) = (
            idx(a.y.min(b.y), lo.y, cell_y, ny),
            idx(a.y.max(b.y), lo.y, cell_y, ny),
        );
        for gy in y0..=y1 {
            for gx in x0..=x1 {
                buckets[gy * nx + gx].push(i);
            }
        }
    }
    for bucket in &buckets {
        for (k, &i) in bucket.iter().enumerate() {
            for &j in &bucket[k + 1..] {
                let adjacent =
                    j == i + 1 || i == j + 1 || (i == 0 && j == n - 1) || (j == 0 && i == n - 1);
                if adjacent {
                    continue;
                }
                if segments_intersect(poly[i], poly[(i + 1) % n], poly[j], poly[(j + 1) % n]) {
                    return false;
                }
            }
        }
    }
    true
}

/// Clips a (possibly concave) polygon against an axis-aligned rectangle
/// using Sutherland–Hodgman. The area of the result equals the area of the
/// intersection; degenerate connecting edges may appear along the rectangle.
pub fn clip_polygon_to_rect(poly: &[Vec2], half_w: f64, half_h: f64) -> Vec<Vec2> {
    let mut out: Vec<Vec2> = poly.to_vec();
    // (axis, sign, bound): keep points with sign * coord <= bound
    let planes = [
        (0, 1.0, half_w),
        (0, -1.0, half_w),
        (1, 1.0, half_h),
        (1, -1.0, half_h),
    ];
    for &(axis, sign, bound) in &planes {
        if out.is_empty() {
            break;
        }
        let input = std::mem::take(&mut out);
        let coord = |p: Vec2| sign * if axis == 0 { p.x } else { p.y };
        let n = input.len();
        for i in 0..n {
            let cur = input[i];
            let prev = input[(i + n - 1) % n];
            let (c_in, p_in) = (coord(cur) <= bound, coord(prev) <= bound);
            if c_in != p_in {
                let t = (bound - coord(prev)) / (coord(cur) - coord(prev));
                out.push(prev + (cur - prev) * t);
            }
            if c_in {
                out.push(cur);
            }
        }
    }
    out
}

/// Liang–Barsky clip of segment `a`–`b` to the rectangle `|x| <= hw, |y| <= hh`.
pub fn clip_segment_to_rect(a: Vec2, b: Vec2, hw: f64, hh: f64) -> Option<(Vec2, Vec2)> {
    let d = b - a;
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    let checks = [
        (-d.x, a.x + hw),
        (d.x, hw - a.x),
        (-d.y, a.y + hh),
        (d.y, hh - a.y),
    ];
    for (p, q) in checks {
        if p == 0.0 {
            if q < 0.0 {
                return None;
            }
        } else {
            let r = q / p;
            if p < 0.0 {
                if r > t1 {
                    return None;
                }
                t0 = t0.max(r);
            } else {
                if r < t0 {
                    return None;
                }
                t1 = t1.min(r);
            }
        }
    }
    Some((a + d * t0, a + d * t1))
}

/// Euclidean distance from `p` to the segment `a`–`b`.
pub fn point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    point_segment_distance_sq(p, a, b).sqrt()
}

pub fn point_segment_distance_sq(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let d = b - a;
    let len2 = d.norm_sq();
    let t = if len2 > 0.0 {
        ((p - a).dot(d) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (p - (a + d * t)).norm_sq()
}
