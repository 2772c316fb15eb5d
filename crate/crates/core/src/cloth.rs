//! The cloth world: a closed boundary polygon with four structural corners,
//! flattened and crumpled generators, and ground-truth contact queries for a
//! sensor footprint.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid_arg, Error, Result};
use crate::geometry::{
    clip_polygon_to_rect, clip_segment_to_rect, is_simple_polygon, point_in_polygon, signed_area,
    Moments2, Vec2,
};
use crate::rng::child_rng;
use crate::types::{ContactClass, EdgePose};

/// Maximum distance between consecutive boundary vertices.
pub const MAX_VERTEX_SPACING_MM: f64 = 5.0;
/// Vertex spacing used by the generators.
const GENERATOR_SPACING_MM: f64 = 1.5;
/// Amplitude bound of the boundary noise of a flattened cloth.
pub const FLATTENED_NOISE_MM: f64 = 1.0;
const CRUMPLE_RETRIES: usize = 10;
const CRUMPLE_DAMPING: f64 = 0.7;
const GRID_CELL_MM: f64 = 8.0;

/// Rectangular sensing window placed on the cloth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorFootprint {
    pub center: Vec2,
    /// World angle of the sensor x axis.
    pub heading: f64,
    pub width_mm: f64,
    pub height_mm: f64,
}

impl SensorFootprint {
    pub const DEFAULT_WIDTH_MM: f64 = 19.0;
    pub const DEFAULT_HEIGHT_MM: f64 = 16.0;

    pub fn new(center: Vec2, heading: f64, width_mm: f64, height_mm: f64) -> Result<Self> {
        if !(width_mm > 0.0 && height_mm > 0.0) {
            return Err(invalid_arg(format!(
                "footprint extent must be positive, got {width_mm} x {height_mm}"
            )));
        }
        if !center.is_finite() || !heading.is_finite() {
            return Err(invalid_arg("footprint pose must be finite"));
        }
        Ok(SensorFootprint {
            center,
            heading,
            width_mm,
            height_mm,
        })
    }

    pub fn with_default_size(center: Vec2, heading: f64) -> Self {
        SensorFootprint {
            center,
            heading,
            width_mm: Self::DEFAULT_WIDTH_MM,
            height_mm: Self::DEFAULT_HEIGHT_MM,
        }
    }

    pub fn to_sensor(&self, world: Vec2) -> Vec2 {
        (world - self.center).rotate(-self.heading)
    }

    pub fn to_world(&self, sensor: Vec2) -> Vec2 {
        self.center + sensor.rotate(self.heading)
    }

    pub fn half_extent(&self) -> Vec2 {
        Vec2::new(self.width_mm / 2.0, self.height_mm / 2.0)
    }

    /// Strict containment of a world point.
    pub fn contains(&self, world: Vec2) -> bool {
        let s = self.to_sensor(world);
        let h = self.half_extent();
        s.x.abs() < h.x && s.y.abs() < h.y
    }

    /// Radius of the circle circumscribing the window.
    pub fn circumradius(&self) -> f64 {
        self.half_extent().norm()
    }
}

/// Ground truth of what a footprint touches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContactQueryResult {
    pub true_class: ContactClass,
    pub true_edge_pose: Option<EdgePose>,
    pub coverage_fraction: f64,
}

/// Closed cloth boundary in world millimetres, counter-clockwise.
#[derive(Debug, Clone)]
pub struct ClothEdge {
    boundary: Vec<Vec2>,
    corner_indices: [usize; 4],
    perturbation_seed: Option<u64>,
    grid: SegmentGrid,
}

impl PartialEq for ClothEdge {
    fn eq(&self, other: &Self) -> bool {
        self.boundary == other.boundary && self.corner_indices == other.corner_indices
    }
}

impl ClothEdge {
    /// Validates and wraps a boundary. Clockwise input is reversed so the
    /// interior always lies to the left of the vertex order.
    pub fn new(
        mut boundary: Vec<Vec2>,
        mut corner_indices: [usize; 4],
        perturbation_seed: Option<u64>,
    ) -> Result<Self> {
        let n = boundary.len();
        if n < 4 {
            return Err(invalid_arg("cloth boundary needs at least 4 vertices"));
        }
        if boundary.iter().any(|p| !p.is_finite()) {
            return Err(invalid_arg("cloth boundary has non-finite vertices"));
        }
        for &c in &corner_indices {
            if c >= n {
                return Err(invalid_arg(format!(
                    "corner index {c} out of range for {n} vertices"
                )));
            }
        }
        let mut sorted = corner_indices;
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(invalid_arg("corner indices must be distinct"));
        }
        for i in 0..n {
            let d = (boundary[(i + 1) % n] - boundary[i]).norm();
            if d > MAX_VERTEX_SPACING_MM + 1e-9 {
                return Err(invalid_arg(format!(
                    "vertices {i} and {} are {d:.3} mm apart (max {MAX_VERTEX_SPACING_MM})",
                    (i + 1) % n
                )));
            }
        }
        if !is_simple_polygon(&boundary) {
            return Err(invalid_arg("cloth boundary self-intersects"));
        }
        if signed_area(&boundary) < 0.0 {
            boundary.reverse();
            for c in corner_indices.iter_mut() {
                *c = n - 1 - *c;
            }
        }
        let grid = SegmentGrid::build(&boundary);
        Ok(ClothEdge {
            boundary,
            corner_indices,
            perturbation_seed,
            grid,
        })
    }

    pub fn boundary(&self) -> &[Vec2] {
        &self.boundary
    }

    pub fn corner_indices(&self) -> [usize; 4] {
        self.corner_indices
    }

    pub fn perturbation_seed(&self) -> Option<u64> {
        self.perturbation_seed
    }

    pub fn corner(&self, k: usize) -> Vec2 {
        self.boundary[self.corner_indices[k % 4]]
    }

    /// Corner indices sorted along the boundary order.
    pub fn corners_in_boundary_order(&self) -> [usize; 4] {
        let mut c = self.corner_indices;
        c.sort_unstable();
        c
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.boundary)
    }

    pub fn contains(&self, p: Vec2) -> bool {
        point_in_polygon(p, &self.boundary)
    }

    /// Boundary vertices from `from` to `to` (inclusive) following the
    /// counter-clockwise order.
    pub fn boundary_path(&self, from: usize, to: usize) -> Vec<Vec2> {
        let n = self.boundary.len();
        let mut out = Vec::new();
        let mut i = from;
        loop {
            out.push(self.boundary[i]);
            if i == to {
                break;
            }
            i = (i + 1) % n;
        }
        out
    }

    /// World-space boundary segments that may come within `margin` of the
    /// footprint.
    pub fn local_segments(&self, fp: &SensorFootprint, margin: f64) -> Vec<(Vec2, Vec2)> {
        let r = fp.circumradius() + margin;
        let lo = fp.center - Vec2::new(r, r);
        let hi = fp.center + Vec2::new(r, r);
        let n = self.boundary.len();
        self.grid
            .candidates(lo, hi)
            .into_iter()
            .map(|i| (self.boundary[i], self.boundary[(i + 1) % n]))
            .collect()
    }

    /// Classifies what the footprint touches from the cloth geometry.
    pub fn query_contact(&self, fp: &SensorFootprint) -> ContactQueryResult {
        let half = fp.half_extent();
        let mut moments = Moments2::default();
        for (a, b) in self.local_segments(fp, 0.0) {
            if let Some((p, q)) =
                clip_segment_to_rect(fp.to_sensor(a), fp.to_sensor(b), half.x, half.y)
            {
                moments.add_segment(p, q);
            }
        }
        let no_contact = ContactQueryResult {
            true_class: ContactClass::GraspFailure,
            true_edge_pose: None,
            coverage_fraction: 0.0,
        };
        let full_contact = ContactQueryResult {
            true_class: ContactClass::InFabric,
            true_edge_pose: None,
            coverage_fraction: 1.0,
        };
        let Some(fit) = moments.fit() else {
            return if self.contains(fp.center) {
                full_contact
            } else {
                no_contact
            };
        };

        let local: Vec<Vec2> = self.boundary.iter().map(|&p| fp.to_sensor(p)).collect();
        let clipped = clip_polygon_to_rect(&local, half.x, half.y);
        let coverage = (signed_area(&clipped) / (fp.width_mm * fp.height_mm)).clamp(0.0, 1.0);
        let has_corner = self
            .corner_indices
            .iter()
            .any(|&c| fp.contains(self.boundary[c]));
        if coverage <= 0.0 {
            return no_contact;
        }
        if coverage >= 1.0 && !has_corner {
            return full_contact;
        }
        let pose = EdgePose::new(fit.centroid.x, fit.centroid.y, fit.angle).canonical();
        ContactQueryResult {
            true_class: if has_corner {
                ContactClass::Corner
            } else {
                ContactClass::Edge
            },
            true_edge_pose: Some(pose),
            coverage_fraction: coverage,
        }
    }

    /// Serializes to the `CLOTH v1` plain-text vertex list.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "CLOTH v1 {}", self.boundary.len());
        for p in &self.boundary {
            let _ = writeln!(s, "{:?} {:?}", p.x, p.y);
        }
        let c = self.corner_indices;
        let _ = writeln!(s, "CORNERS {} {} {} {}", c[0], c[1], c[2], c[3]);
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty cloth file".into()))?;
        let mut parts = header.split_whitespace();
        if parts.next() != Some("CLOTH") || parts.next() != Some("v1") {
            return Err(Error::Parse(format!("bad cloth header `{header}`")));
        }
        let n: usize = parts
            .next()
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| Error::Parse("cloth header lacks a vertex count".into()))?;
        let mut boundary = Vec::with_capacity(n);
        for i in 0..n {
            let line = lines
                .next()
                .ok_or_else(|| Error::Parse(format!("expected {n} vertices, found {i}")))?;
            let v: Vec<f64> = line
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse(format!("vertex {i}: {e}")))?;
            if v.len() != 2 {
                return Err(Error::Parse(format!("vertex {i}: expected `x y`")));
            }
            boundary.push(Vec2::new(v[0], v[1]));
        }
        let corners_line = lines
            .next()
            .ok_or_else(|| Error::Parse("missing CORNERS line".into()))?;
        let mut parts = corners_line.split_whitespace();
        if parts.next() != Some("CORNERS") {
            return Err(Error::Parse(format!(
                "expected CORNERS, got `{corners_line}`"
            )));
        }
        let idx: Vec<usize> = parts
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse(format!("corner index: {e}")))?;
        let corners: [usize; 4] = idx
            .try_into()
            .map_err(|_| Error::Parse("CORNERS needs exactly 4 indices".into()))?;
        if let Some(extra) = lines.next() {
            return Err(Error::Parse(format!("trailing content `{extra}`")));
        }
        ClothEdge::new(boundary, corners, None)
    }
}

/// Uniform-grid bucketing of boundary segments for local queries.
#[derive(Debug, Clone)]
struct SegmentGrid {
    origin: Vec2,
    nx: usize,
    ny: usize,
    cells: Vec<Vec<usize>>,
}

impl SegmentGrid {
    fn build(poly: &[Vec2]) -> Self {
        let mut lo = poly[0];
        let mut hi = poly[0];
        for p in poly {
            lo = Vec2::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Vec2::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        let nx = ((hi.x - lo.x) / GRID_CELL_MM).floor() as usize + 1;
        let ny = ((hi.y - lo.y) / GRID_CELL_MM).floor() as usize + 1;
        let mut grid = SegmentGrid {
            origin: lo,
            nx,
            ny,
            cells: vec![Vec::new(); nx * ny],
        };
        let n = poly.len();
        for i in 0..n {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            let lo_s = Vec2::new(a.x.min(b.x), a.y.min(b.y));
            let hi_s = Vec2::new(a.x.max(b.x), a.y.max(b.y));
            let (x0, y0) = grid.cell_of(lo_s);
            let (x1, y1) = grid.cell_of(hi_s);
            for gy in y0..=y1 {
                for gx in x0..=x1 {
                    grid.cells[gy * nx + gx].push(i);
                }
            }
        }
        grid
    }

    fn cell_of(&self, p: Vec2) -> (usize, usize) {
        let gx = ((p.x - self.origin.x) / GRID_CELL_MM)
            .floor()
            .clamp(0.0, (self.nx - 1) as f64);
        let gy = ((p.y - self.origin.y) / GRID_CELL_MM)
            .floor()
            .clamp(0.0, (self.ny - 1) as f64);
        (gx as usize, gy as usize)
    }

    fn candidates(&self, lo: Vec2, hi: Vec2) -> Vec<usize> {
        let max = Vec2::new(
            self.origin.x + self.nx as f64 * GRID_CELL_MM,
            self.origin.y + self.ny as f64 * GRID_CELL_MM,
        );
        if hi.x < self.origin.x || hi.y < self.origin.y || lo.x > max.x || lo.y > max.y {
            return Vec::new();
        }
        let (x0, y0) = self.cell_of(lo);
        let (x1, y1) = self.cell_of(hi);
        let mut out = Vec::new();
        for gy in y0..=y1 {
            for gx in x0..=x1 {
                out.extend_from_slice(&self.cells[gy * self.nx + gx]);
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }
}

/// Vertex of a generated rectangle, remembering which side it lies on.
#[derive(Debug, Clone, Copy)]
struct SideVertex {
    p: Vec2,
    side: usize,
    /// Arc position along the side in mm.
    s: f64,
}

fn check_dimensions(width_mm: f64, height_mm: f64) -> Result<()> {
    for (name, v) in [("width_mm", width_mm), ("height_mm", height_mm)] {
        if !(50.0..=1000.0).contains(&v) {
            return Err(invalid_arg(format!("{name} = {v} outside [50, 1000]")));
        }
    }
    Ok(())
}

/// Rectangle `[0, w] x [0, h]`, counter-clockwise from the origin, with a
/// smooth normal displacement bounded by `noise_mm` that vanishes at corners.
fn rectangle_vertices(w: f64, h: f64, noise_mm: f64, seed: u64) -> (Vec<SideVertex>, [usize; 4]) {
    let corners = [
        Vec2::new(0.0, 0.0),
        Vec2::new(w, 0.0),
        Vec2::new(w, h),
        Vec2::new(0.0, h),
    ];
    let mut rng = child_rng(seed, 1, 0);
    let mut verts = Vec::new();
    let mut corner_idx = [0usize; 4];
    for side in 0..4 {
        let (a, b) = (corners[side], corners[(side + 1) % 4]);
        let len = (b - a).norm();
        let t = (b - a) * (1.0 / len);
        let outward = Vec2::new(t.y, -t.x);
        let terms: Vec<(f64, f64, f64)> = (0..3)
            .map(|_| {
                (
                    rng.random_range(0.3..1.0),
                    rng.random_range(1.0..8.0),
                    rng.random_range(0.0..2.0 * PI),
                )
            })
            .collect();
        let norm: f64 = terms.iter().map(|t| t.0).sum();
        let segments = (len / GENERATOR_SPACING_MM).ceil() as usize;
        corner_idx[side] = verts.len();
        for k in 0..segments {
            let u = k as f64 / segments as f64;
            let wave: f64 = terms
                .iter()
                .map(|&(amp, f, ph)| amp * (2.0 * PI * f * u + ph).sin())
                .sum();
            let disp = noise_mm * (PI * u).sin() * wave / norm;
            verts.push(SideVertex {
                p: a + t * (u * len) + outward * disp,
                side,
                s: u * len,
            });
        }
    }
    (verts, corner_idx)
}

/// Flattened cloth: an axis-aligned `width_mm x height_mm` rectangle with
/// boundary noise of at most [`FLATTENED_NOISE_MM`].
pub fn make_flattened(width_mm: f64, height_mm: f64, seed: u64) -> Result<ClothEdge> {
    make_flattened_with_noise(width_mm, height_mm, FLATTENED_NOISE_MM, seed)
}

/// As [`make_flattened`] with an explicit noise amplitude; `0.0` gives the
/// exact rectangle.
pub fn make_flattened_with_noise(
    width_mm: f64,
    height_mm: f64,
    noise_mm: f64,
    seed: u64,
) -> Result<ClothEdge> {
    check_dimensions(width_mm, height_mm)?;
    if !(0.0..=FLATTENED_NOISE_MM).contains(&noise_mm) {
        return Err(invalid_arg(format!(
            "noise amplitude {noise_mm} outside [0, {FLATTENED_NOISE_MM}]"
        )));
    }
    let (verts, corners) = rectangle_vertices(width_mm, height_mm, noise_mm, seed);
    ClothEdge::new(
        verts.into_iter().map(|v| v.p).collect(),
        corners,
        Some(seed),
    )
}

struct Wave {
    k: Vec2,
    dir: Vec2,
    amp: f64,
    phase: f64,
}

struct Fold {
    side: usize,
    s: f64,
    depth: f64,
    width: f64,
    skew: f64,
}

/// Crumpled cloth: the flattened cloth for the same seed, displaced by a
/// smooth sinusoidal field plus local inward folds, both scaled by
/// `severity`. Displacement is damped and retried until the boundary is
/// simple.
pub fn make_crumpled(width_mm: f64, height_mm: f64, severity: f64, seed: u64) -> Result<ClothEdge> {
    check_dimensions(width_mm, height_mm)?;
    if !(0.0..=1.0).contains(&severity) {
        return Err(invalid_arg(format!("severity {severity} outside [0, 1]")));
    }
    let (verts, corners) = rectangle_vertices(width_mm, height_mm, FLATTENED_NOISE_MM, seed);
    if severity == 0.0 {
        return ClothEdge::new(
            verts.into_iter().map(|v| v.p).collect(),
            corners,
            Some(seed),
        );
    }

    let size = width_mm.max(height_mm);
    let mut rng = child_rng(seed, 2, 0);
    let waves: Vec<Wave> = (0..3)
        .map(|_| {
            let wavelength = rng.random_range(0.5..1.2) * size;
            Wave {
                k: Vec2::from_angle(rng.random_range(0.0..2.0 * PI)) * (2.0 * PI / wavelength),
                dir: Vec2::from_angle(rng.random_range(0.0..2.0 * PI)),
                amp: rng.random_range(3.0..8.0),
                phase: rng.random_range(0.0..2.0 * PI),
            }
        })
        .collect();
    let side_len = |side: usize| {
        if side.is_multiple_of(2) {
            width_mm
        } else {
            height_mm
        }
    };
    let n_folds = rng.random_range(2..=4);
    let folds: Vec<Fold> = (0..n_folds)
        .map(|_| {
            let side = rng.random_range(0..4);
            Fold {
                side,
                s: rng.random_range(0.2..0.8) * side_len(side),
                depth: rng.random_range(6.0..16.0),
                width: rng.random_range(8.0..16.0),
                skew: rng.random_range(-0.6..0.6),
            }
        })
        .collect();

    let mut scale = severity;
    for _attempt in 0..=CRUMPLE_RETRIES {
        let displaced: Vec<Vec2> = verts
            .iter()
            .map(|v| {
                let mut d = Vec2::ZERO;
                for w in &waves {
                    d += w.dir * (w.amp * (w.k.dot(v.p) + w.phase).sin());
                }
                let side_dir = Vec2::from_angle(v.side as f64 * PI / 2.0);
                let inward = side_dir.perp();
                for f in folds.iter().filter(|f| f.side == v.side) {
                    let z = (v.s - f.s) / f.width;
                    let g = (-0.5 * z * z).exp();
                    d += inward * (f.depth * g) + side_dir * (f.skew * f.depth * z * g);
                }
                v.p + d * scale
            })
            .collect();
        let (poly, new_corners) = subdivide(&displaced, corners, 4.0);
        if is_simple_polygon(&poly) && signed_area(&poly) > 0.0 {
            return ClothEdge::new(poly, new_corners, Some(seed));
        }
        scale *= CRUMPLE_DAMPING;
    }
    Err(Error::GenerationFailure(format!(
        "crumpled boundary still self-intersects after {CRUMPLE_RETRIES} damped retries"
    )))
}

/// Inserts vertices so consecutive points are at most `max_len` apart.
fn subdivide(poly: &[Vec2], corners: [usize; 4], max_len: f64) -> (Vec<Vec2>, [usize; 4]) {
    let n = poly.len();
    let mut out = Vec::with_capacity(n);
    let mut remap = vec![0usize; n];
    for i in 0..n {
        remap[i] = out.len();
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        let pieces = ((b - a).norm() / max_len).ceil().max(1.0) as usize;
        for k in 0..pieces {
            out.push(a + (b - a) * (k as f64 / pieces as f64));
        }
    }
    (out, corners.map(|c| remap[c]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::point_segment_distance;

    fn rect_distance(p: Vec2, w: f64, h: f64) -> f64 {
        let c = [
            Vec2::new(0.0, 0.0),
            Vec2::new(w, 0.0),
            Vec2::new(w, h),
            Vec2::new(0.0, h),
        ];
        (0..4)
            .map(|i| point_segment_distance(p, c[i], c[(i + 1) % 4]))
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn flattened_bounding_box_and_corners() {
        let cloth = make_flattened(300.0, 300.0, 0).unwrap();
        let (mut lo, mut hi) = (Vec2::new(f64::MAX, f64::MAX), Vec2::new(f64::MIN, f64::MIN));
        for p in cloth.boundary() {
            lo = Vec2::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Vec2::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        assert!(lo.x >= -1.0 && lo.y >= -1.0 && hi.x <= 301.0 && hi.y <= 301.0);
        assert!(hi.x - lo.x >= 299.0);
        let expected = [
            Vec2::new(0.0, 0.0),
            Vec2::new(300.0, 0.0),
            Vec2::new(300.0, 300.0),
            Vec2::new(0.0, 300.0),
        ];
        for (k, e) in expected.iter().enumerate() {
            assert!((cloth.corner(k) - *e).norm() < 1e-9);
        }
        for p in cloth.boundary() {
            assert!(rect_distance(*p, 300.0, 300.0) <= FLATTENED_NOISE_MM + 1e-9);
        }
    }

    #[test]
    fn flattened_is_deterministic_and_seed_dependent() {
        let a = make_flattened(300.0, 300.0, 0).unwrap();
        let b = make_flattened(300.0, 300.0, 0).unwrap();
        assert_eq!(a.boundary(), b.boundary());
        let c1 = make_flattened(300.0, 300.0, 1).unwrap();
        let c2 = make_flattened(300.0, 300.0, 2).unwrap();
        assert_ne!(c1.boundary(), c2.boundary());
        assert_eq!(c1.corner_indices().len(), 4);
        assert_eq!(c2.corner_indices().len(), 4);
    }

    #[test]
    fn dimension_range_enforced() {
        assert!(matches!(
            make_flattened(40.0, 300.0, 0),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            make_flattened(300.0, 1001.0, 0),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            make_crumpled(300.0, 300.0, 1.5, 0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn crumpled_zero_severity_is_flattened() {
        let flat = make_flattened(300.0, 300.0, 5).unwrap();
        let crumpled = make_crumpled(300.0, 300.0, 0.0, 5).unwrap();
        assert_eq!(flat.boundary(), crumpled.boundary());
        assert_eq!(flat.corner_indices(), crumpled.corner_indices());
    }

    #[test]
    fn crumpled_half_severity_departs_from_rectangle() {
        let cloth = make_crumpled(300.0, 300.0, 0.5, 7).unwrap();
        assert!(is_simple_polygon(cloth.boundary()));
        let hausdorff = cloth
            .boundary()
            .iter()
            .map(|p| rect_distance(*p, 300.0, 300.0))
            .fold(0.0, f64::max);
        assert!(hausdorff > 5.0, "hausdorff {hausdorff}");
    }

    #[test]
    fn crumpled_full_severity_keeps_four_corners() {
        let cloth = make_crumpled(300.0, 300.0, 1.0, 7).unwrap();
        assert!(is_simple_polygon(cloth.boundary()));
        let mut c = cloth.corner_indices().to_vec();
        c.sort_unstable();
        c.dedup();
        assert_eq!(c.len(), 4);
    }

    #[test]
    fn contact_outside_and_inside() {
        let cloth = make_flattened(300.0, 300.0, 0).unwrap();
        let out = cloth.query_contact(&SensorFootprint::with_default_size(
            Vec2::new(-50.0, 150.0),
            0.0,
        ));
        assert_eq!(
            out,
            ContactQueryResult {
                true_class: ContactClass::GraspFailure,
                true_edge_pose: None,
                coverage_fraction: 0.0
            }
        );
        let inside = cloth.query_contact(&SensorFootprint::with_default_size(
            Vec2::new(150.0, 150.0),
            0.3,
        ));
        assert_eq!(
            inside,
            ContactQueryResult {
                true_class: ContactClass::InFabric,
                true_edge_pose: None,
                coverage_fraction: 1.0
            }
        );
    }

    #[test]
    fn contact_straddling_side_midpoint() {
        let cloth = make_flattened(300.0, 300.0, 0).unwrap();
        let r = cloth.query_contact(&SensorFootprint::with_default_size(
            Vec2::new(150.0, 0.0),
            0.0,
        ));
        assert_eq!(r.true_class, ContactClass::Edge);
        assert!(
            (r.coverage_fraction - 0.5).abs() < 0.07,
            "{}",
            r.coverage_fraction
        );
        let pose = r.true_edge_pose.unwrap();
        assert!(
            pose.x.abs() < 0.1 && pose.y.abs() < 1.0 && pose.theta.abs() < 0.1,
            "{pose:?}"
        );
    }

    #[test]
    fn exact_rectangle_gives_zero_angle() {
        let cloth = make_flattened_with_noise(300.0, 200.0, 0.0, 0).unwrap();
        for (c, h) in [
            (Vec2::new(100.0, 3.0), 0.0),
            (Vec2::new(300.0, 80.0), PI / 2.0),
            (Vec2::new(40.0, 197.0), PI),
        ] {
            let r = cloth.query_contact(&SensorFootprint::with_default_size(c, h));
            assert_eq!(r.true_class, ContactClass::Edge);
            assert!(r.true_edge_pose.unwrap().theta.abs() < 1e-6);
        }
    }

    #[test]
    fn corner_inside_footprint() {
        let cloth = make_flattened(300.0, 300.0, 0).unwrap();
        let r = cloth.query_contact(&SensorFootprint::with_default_size(
            Vec2::new(4.0, 0.0),
            0.0,
        ));
        assert_eq!(r.true_class, ContactClass::Corner);
        assert!(r.true_edge_pose.is_some());
        assert!(r.coverage_fraction > 0.2 && r.coverage_fraction < 0.45);
    }

    #[test]
    fn text_roundtrip() {
        let cloth = make_crumpled(120.0, 80.0, 0.4, 3).unwrap();
        let parsed = ClothEdge::from_text(&cloth.to_text()).unwrap();
        assert_eq!(parsed, cloth);
        assert!(ClothEdge::from_text("CLOTH v2 3\n").is_err());
        assert!(ClothEdge::from_text("CLOTH v1 2\n0 0\n1 1\nCORNERS 0 1 0 1\n").is_err());
    }

    #[test]
    fn rejects_sparse_or_self_intersecting_boundaries() {
        let sparse = vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(10.0, 0.0),
            Vec2::new(10.0, 10.0),
            Vec2::new(0.0, 10.0),
        ];
        assert!(ClothEdge::new(sparse, [0, 1, 2, 3], None).is_err());
    }
}
