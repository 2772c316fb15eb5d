//! Fixed feature extractors for contact classification and pose regression.

use std::f64::consts::PI;

use crate::geometry::{Moments2, Vec2};
use crate::render::CONTACT_THRESHOLD;
use crate::types::{TactileImage, TactileSequence, SEQUENCE_LEN};

/// Identifier of the classification feature layout.
pub const CLASS_FEATURE_SPEC: &str = "contact-shape-v1";

/// Per-frame features, in order:
///
/// 0. coverage fraction of the contact mask
/// 1. contact centroid x, 2. centroid y (both divided by the half extent)
/// 3. central second moment xx, 4. yy, 5. xy (divided by half extent squared)
/// 6. mask transitions along rows per row, 7. along columns per column
/// 8. corner score: λmin/λmax of the scatter of interior boundary pixels
pub const FRAME_FEATURES: usize = 9;

/// 5 frames of [`FRAME_FEATURES`] followed by the 4 frame-to-frame deltas.
pub const CLASS_FEATURES: usize = FRAME_FEATURES * (2 * SEQUENCE_LEN - 1);

/// 3x3 box blur with edge replication.
pub(crate) fn box_blur3(img: &TactileImage) -> Vec<f64> {
    let (w, h) = (img.width as isize, img.height as isize);
    let at = |c: isize, r: isize| img.pixels[(r.clamp(0, h - 1) * w + c.clamp(0, w - 1)) as usize];
    let mut out = Vec::with_capacity(img.len());
    for r in 0..h {
        for c in 0..w {
            let mut s = 0.0;
            for dr in -1..=1 {
                for dc in -1..=1 {
                    s += at(c + dc, r + dr);
                }
            }
            out.push(s / 9.0);
        }
    }
    out
}

/// Contact mask after 3x3 smoothing.
pub fn contact_mask(img: &TactileImage) -> Vec<bool> {
    box_blur3(img)
        .into_iter()
        .map(|v| v > CONTACT_THRESHOLD)
        .collect()
}

/// Mask pixels with a 4-neighbour outside the mask; the image border does
/// not count as outside.
pub(crate) fn interior_boundary(mask: &[bool], w: usize, h: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for r in 0..h {
        for c in 0..w {
            if !mask[r * w + c] {
                continue;
            }
            let outside = (c > 0 && !mask[r * w + c - 1])
                || (c + 1 < w && !mask[r * w + c + 1])
                || (r > 0 && !mask[(r - 1) * w + c])
                || (r + 1 < h && !mask[(r + 1) * w + c]);
            if outside {
                out.push((c, r));
            }
        }
    }
    out
}

pub fn frame_features(img: &TactileImage) -> [f64; FRAME_FEATURES] {
    let (w, h) = (img.width, img.height);
    let mask = contact_mask(img);
    let half = img.half_extent_mm();
    let mut f = [0.0; FRAME_FEATURES];
    let mut n = 0usize;
    let (mut sx, mut sy) = (0.0, 0.0);
    for r in 0..h {
        for c in 0..w {
            if mask[r * w + c] {
                let p = img.pixel_to_sensor(c, r);
                n += 1;
                sx += p.x / half.x;
                sy += p.y / half.y;
            }
        }
    }
    f[0] = n as f64 / (w * h) as f64;
    if n > 0 {
        let (mx, my) = (sx / n as f64, sy / n as f64);
        let (mut xx, mut yy, mut xy) = (0.0, 0.0, 0.0);
        for r in 0..h {
            for c in 0..w {
                if mask[r * w + c] {
                    let p = img.pixel_to_sensor(c, r);
                    let (dx, dy) = (p.x / half.x - mx, p.y / half.y - my);
                    xx += dx * dx;
                    yy += dy * dy;
                    xy += dx * dy;
                }
            }
        }
        f[1] = mx;
        f[2] = my;
        f[3] = xx / n as f64;
        f[4] = yy / n as f64;
        f[5] = xy / n as f64;
    }
    let mut row_t = 0usize;
    for r in 0..h {
        for c in 1..w {
            row_t += (mask[r * w + c] != mask[r * w + c - 1]) as usize;
        }
    }
    let mut col_t = 0usize;
    for c in 0..w {
        for r in 1..h {
            col_t += (mask[r * w + c] != mask[(r - 1) * w + c]) as usize;
        }
    }
    f[6] = row_t as f64 / h as f64;
    f[7] = col_t as f64 / w as f64;
    let boundary = interior_boundary(&mask, w, h);
    if boundary.len() >= 3 {
        let mut m = Moments2::default();
        for &(c, r) in &boundary {
            m.add_point(img.pixel_to_sensor(c, r), 1.0);
        }
        if let Some(fit) = m.fit() {
            if fit.lambda_max > 0.0 {
                f[8] = fit.lambda_min / fit.lambda_max;
            }
        }
    }
    f
}

/// Classification features of a sequence; see [`FRAME_FEATURES`] for the
/// per-frame layout. Frames come oldest first, then deltas `f[k+1] - f[k]`.
pub fn extract_features(seq: &TactileSequence) -> Vec<f64> {
    let per: Vec<[f64; FRAME_FEATURES]> = seq.frames().iter().map(frame_features).collect();
    sequence_features(&per)
}

/// Sequence features from precomputed per-frame features (oldest first).
///
/// # Panics
/// If `per` does not hold exactly [`SEQUENCE_LEN`] frames.
pub fn sequence_features(per: &[[f64; FRAME_FEATURES]]) -> Vec<f64> {
    assert_eq!(
        per.len(),
        SEQUENCE_LEN,
        "sequence features need {SEQUENCE_LEN} frames"
    );
    let mut out = Vec::with_capacity(CLASS_FEATURES);
    per.iter().for_each(|f| out.extend_from_slice(f));
    for k in 0..SEQUENCE_LEN - 1 {
        out.extend(per[k + 1].iter().zip(&per[k]).map(|(a, b)| a - b));
    }
    out
}

/// Identifier of the regression feature layout.
pub const POSE_FEATURE_SPEC: &str = "pooled-gradient-v1";

/// Number of doubled-angle orientation histogram bins.
pub const ORIENTATION_BINS: usize = 8;

/// Settings of the regression feature map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseFeatureParams {
    pub pool_px: usize,
    /// Gradient magnitudes below this floor (per pooled cell) are ignored.
    pub gradient_floor: f64,
}

impl Default for PoseFeatureParams {
    fn default() -> Self {
        PoseFeatureParams {
            pool_px: 4,
            gradient_floor: 0.03,
        }
    }
}

impl PoseFeatureParams {
    pub fn pooled_dims(&self, width: usize, height: usize) -> (usize, usize) {
        (width / self.pool_px, height / self.pool_px)
    }

    pub fn feature_len(&self, width: usize, height: usize) -> usize {
        let (pw, ph) = self.pooled_dims(width, height);
        3 * pw.saturating_sub(2) * ph.saturating_sub(2) + ORIENTATION_BINS
    }
}

/// Regression features: the image is mean-pooled, a Sobel gradient is taken
/// at every interior pooled cell, and each cell contributes
/// `[w, w·cos 2φ, w·sin 2φ]` where `w` is its floored gradient magnitude
/// normalised to sum 1 and `φ` its gradient direction. A global
/// doubled-angle orientation histogram of the same weights follows.
pub fn pose_features(img: &TactileImage, p: &PoseFeatureParams) -> Vec<f64> {
    let k = p.pool_px.max(1);
    let (pw, ph) = p.pooled_dims(img.width, img.height);
    let mut pooled = vec![0.0; pw * ph];
    for r in 0..ph * k {
        for c in 0..pw * k {
            pooled[(r / k) * pw + c / k] += img.pixels[r * img.width + c];
        }
    }
    let norm = (k * k) as f64;
    pooled.iter_mut().for_each(|v| *v /= norm);
    let at = |c: usize, r: usize| pooled[r * pw + c];
    let n_cells = pw.saturating_sub(2) * ph.saturating_sub(2);
    let mut cells = Vec::with_capacity(n_cells);
    for r in 1..ph.saturating_sub(1) {
        for c in 1..pw.saturating_sub(1) {
            let gx = (at(c + 1, r - 1) + 2.0 * at(c + 1, r) + at(c + 1, r + 1)
                - at(c - 1, r - 1)
                - 2.0 * at(c - 1, r)
                - at(c - 1, r + 1))
                / 8.0;
            // Rows grow downward, sensor y grows upward.
            let gy = (at(c - 1, r - 1) + 2.0 * at(c, r - 1) + at(c + 1, r - 1)
                - at(c - 1, r + 1)
                - 2.0 * at(c, r + 1)
                - at(c + 1, r + 1))
                / 8.0;
            cells.push(Vec2::new(gx, gy));
        }
    }
    let weights: Vec<f64> = cells
        .iter()
        .map(|g| (g.norm() - p.gradient_floor).max(0.0))
        .collect();
    let total: f64 = weights.iter().sum();
    let mut out = vec![0.0; 3 * n_cells + ORIENTATION_BINS];
    if total <= 1e-12 {
        return out;
    }
    for (i, (g, wt)) in cells.iter().zip(&weights).enumerate() {
        if *wt == 0.0 {
            continue;
        }
        let w = wt / total;
        let m2 = g.norm_sq();
        let c2 = (g.x * g.x - g.y * g.y) / m2;
        let s2 = 2.0 * g.x * g.y / m2;
        out[3 * i] = w;
        out[3 * i + 1] = w * c2;
        out[3 * i + 2] = w * s2;
        let phi2 = s2.atan2(c2);
        let bin = (((phi2 + PI) / (2.0 * PI) * ORIENTATION_BINS as f64) as usize)
            .min(ORIENTATION_BINS - 1);
        out[3 * n_cells + bin] += w;
    }
    out
}
