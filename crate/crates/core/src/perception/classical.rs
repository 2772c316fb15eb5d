//! Classical edge detection: histogram-mode threshold, transition band,
//! total-least-squares line.

use crate::error::{Error, Result};
use crate::geometry::Moments2;
use crate::types::{EdgePose, TactileImage};

const HIST_BINS: usize = 32;

/// Midpoint between the two dominant modes of the intensity histogram.
fn two_mode_threshold(img: &TactileImage) -> Option<f64> {
    let mut hist = [0.0f64; HIST_BINS];
    for &v in &img.pixels {
        hist[((v * HIST_BINS as f64) as usize).min(HIST_BINS - 1)] += 1.0;
    }
    let smooth: Vec<f64> = (0..HIST_BINS)
        .map(|b| {
            let l = if b > 0 { hist[b - 1] } else { 0.0 };
            let r = if b + 1 < HIST_BINS { hist[b + 1] } else { 0.0 };
            l + 2.0 * hist[b] + r
        })
        .collect();
    let first = (0..HIST_BINS).fold(0, |best, b| if smooth[b] > smooth[best] { b } else { best });
    let score = |b: usize| smooth[b] * (b as f64 - first as f64).powi(2);
    let second = (0..HIST_BINS).fold(
        first,
        |best, b| if score(b) > score(best) { b } else { best },
    );
    if second == first {
        return None;
    }
    let center = |b: usize| (b as f64 + 0.5) / HIST_BINS as f64;
    Some(0.5 * (center(first) + center(second)))
}

/// Classical baseline. Requires a contact coverage in `(0.05, 0.95)`.
pub fn estimate_pose_classical(img: &TactileImage) -> Result<EdgePose> {
    let thr = two_mode_threshold(img)
        .ok_or_else(|| Error::NoEdgeDetected("single-mode intensity histogram".into()))?;
    let (w, h) = (img.width, img.height);
    let mask: Vec<bool> = img.pixels.iter().map(|&v| v > thr).collect();
    let coverage = mask.iter().filter(|&&m| m).count() as f64 / mask.len() as f64;
    if !(coverage > 0.05 && coverage < 0.95) {
        return Err(Error::NoEdgeDetected(format!(
            "contact coverage {coverage:.3} outside (0.05, 0.95)"
        )));
    }
    let mut m = Moments2::default();
    for r in 0..h {
        for c in 0..w {
            let v = mask[r * w + c];
            let differs = (c > 0 && mask[r * w + c - 1] != v)
                || (c + 1 < w && mask[r * w + c + 1] != v)
                || (r > 0 && mask[(r - 1) * w + c] != v)
                || (r + 1 < h && mask[(r + 1) * w + c] != v);
            if differs {
                m.add_point(img.pixel_to_sensor(c, r), 1.0);
            }
        }
    }
    let fit = m
        .fit()
        .ok_or_else(|| Error::NoEdgeDetected("empty transition band".into()))?;
    Ok(EdgePose::new(fit.centroid.x, fit.centroid.y, fit.angle).canonical())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::line_angle_error;
    use crate::render::{render_edge, ClothSide, EdgeAnnotation, RenderParams};

    fn render(x: f64, y: f64, t: f64) -> TactileImage {
        let ann = EdgeAnnotation {
            pose: EdgePose::new(x, y, t),
            cloth_side: ClothSide::LeftOfEdge,
        };
        render_edge(&ann, &RenderParams::default(), 64, 52, 0.3).unwrap()
    }

    #[test]
    fn centered_edge() {
        let p = estimate_pose_classical(&render(0.0, 0.0, 0.0)).unwrap();
        assert!(p.x.abs() < 0.5 && p.y.abs() < 0.5 && p.theta.abs() < 1f64.to_radians());
    }

    #[test]
    fn offset_tilted_edge() {
        let truth = EdgePose::new(2.0, -1.5, 0.3).canonical();
        let p = estimate_pose_classical(&render(2.0, -1.5, 0.3)).unwrap();
        assert!(
            (p.x - truth.x).abs() < 0.5 && (p.y - truth.y).abs() < 0.5,
            "{p:?} vs {truth:?}"
        );
        assert!(line_angle_error(p.theta, truth.theta) < 2f64.to_radians());
    }

    #[test]
    fn uniform_images_rejected() {
        let blank = TactileImage::filled(64, 52, 0.3, 0.1).unwrap();
        assert!(matches!(
            estimate_pose_classical(&blank),
            Err(Error::NoEdgeDetected(_))
        ));
        // Edge barely inside the window: coverage below 5 %.
        assert!(estimate_pose_classical(&render(0.0, 7.5, 0.0)).is_err());
    }
}
