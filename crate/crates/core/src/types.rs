//! Domain types shared across modules: contact classes, edge poses and
//! tactile images.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid_arg, Error, Result};
use crate::geometry::{wrap_line_angle, Vec2};

/// What the tactile sensor is touching.
///
/// The declaration order is the tie-breaking order used by the classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ContactClass {
    Edge,
    Corner,
    InFabric,
    #[serde(rename = "graspfail")]
    GraspFailure,
}

impl ContactClass {
    pub const ALL: [ContactClass; 4] = [
        ContactClass::Edge,
        ContactClass::Corner,
        ContactClass::InFabric,
        ContactClass::GraspFailure,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<ContactClass> {
        Self::ALL.get(i).copied()
    }

    /// Label used in dataset CSV files.
    pub fn label(self) -> &'static str {
        match self {
            ContactClass::Edge => "edge",
            ContactClass::Corner => "corner",
            ContactClass::InFabric => "infabric",
            ContactClass::GraspFailure => "graspfail",
        }
    }

    pub fn has_edge(self) -> bool {
        matches!(self, ContactClass::Edge | ContactClass::Corner)
    }
}

impl fmt::Display for ContactClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for ContactClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ContactClass::ALL
            .into_iter()
            .find(|c| c.label() == s)
            .ok_or_else(|| Error::Parse(format!("unknown contact class `{s}`")))
    }
}

/// Pose of a cloth edge in the sensor frame: `x` along the sensor heading,
/// `y` perpendicular to it (left-handed normal), `theta` the undirected edge
/// direction.
///
/// A straight edge only fixes a line, so poses are compared in canonical
/// form: `(x, y)` is the foot of the perpendicular from the sensor center to
/// the line. See [`EdgePose::canonical`].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EdgePose {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl EdgePose {
    pub const fn new(x: f64, y: f64, theta: f64) -> Self {
        EdgePose { x, y, theta }
    }

    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    /// Unit left normal of the edge direction.
    pub fn normal(&self) -> Vec2 {
        Vec2::new(-self.theta.sin(), self.theta.cos())
    }

    /// Signed distance of the line from the origin along [`EdgePose::normal`].
    pub fn offset(&self) -> f64 {
        self.normal().dot(self.position())
    }

    /// The same line with `(x, y)` moved to the point closest to the origin
    /// and `theta` wrapped into `(-π/2, π/2]`.
    pub fn canonical(&self) -> EdgePose {
        let theta = wrap_line_angle(self.theta);
        let n = Vec2::new(-theta.sin(), theta.cos());
        let foot = n * n.dot(self.position());
        EdgePose::new(foot.x, foot.y, theta)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.theta.is_finite()
    }
}

/// A grayscale tactile observation, row-major, intensities in `[0, 1]`.
///
/// Pixel `(col, row)` has its center at sensor coordinates
/// `x = (col + 0.5 - width/2) * mm_per_px`, `y = (height/2 - row - 0.5) * mm_per_px`:
/// columns run along the sensor heading, row 0 is the top (+y) of the window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TactileImage {
    pub width: usize,
    pub height: usize,
    pub mm_per_px: f64,
    pub pixels: Vec<f64>,
}

impl TactileImage {
    pub fn new(width: usize, height: usize, mm_per_px: f64, pixels: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(invalid_arg("image dimensions must be positive"));
        }
        if !(mm_per_px > 0.0 && mm_per_px.is_finite()) {
            return Err(invalid_arg(format!(
                "mm_per_px must be > 0, got {mm_per_px}"
            )));
        }
        if pixels.len() != width * height {
            return Err(invalid_arg(format!(
                "pixel buffer has {} entries, expected {}",
                pixels.len(),
                width * height
            )));
        }
        if let Some(bad) = pixels.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(invalid_arg(format!("pixel value {bad} outside [0, 1]")));
        }
        Ok(TactileImage {
            width,
            height,
            mm_per_px,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, mm_per_px: f64, value: f64) -> Result<Self> {
        Self::new(width, height, mm_per_px, vec![value; width * height])
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn get(&self, col: usize, row: usize) -> f64 {
        self.pixels[row * self.width + col]
    }

    pub fn same_shape(&self, other: &TactileImage) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn pixel_to_sensor(&self, col: usize, row: usize) -> Vec2 {
        Vec2::new(
            (col as f64 + 0.5 - self.width as f64 / 2.0) * self.mm_per_px,
            (self.height as f64 / 2.0 - row as f64 - 0.5) * self.mm_per_px,
        )
    }

    pub fn half_extent_mm(&self) -> Vec2 {
        Vec2::new(
            self.width as f64 * self.mm_per_px / 2.0,
            self.height as f64 * self.mm_per_px / 2.0,
        )
    }

    /// Fraction of pixels strictly above `threshold`.
    pub fn fraction_above(&self, threshold: f64) -> f64 {
        self.pixels.iter().filter(|&&v| v > threshold).count() as f64 / self.len() as f64
    }

    pub fn mean(&self) -> f64 {
        self.pixels.iter().sum::<f64>() / self.len() as f64
    }
}

/// Number of frames stacked for classification.
pub const SEQUENCE_LEN: usize = 5;

/// Five tactile frames of identical shape, oldest first.
#[derive(Debug, Clone, PartialEq)]
pub struct TactileSequence {
    frames: Vec<TactileImage>,
}

impl TactileSequence {
    pub fn new(frames: Vec<TactileImage>) -> Result<Self> {
        if frames.len() != SEQUENCE_LEN {
            return Err(invalid_arg(format!(
                "a tactile sequence needs {SEQUENCE_LEN} frames, got {}",
                frames.len()
            )));
        }
        if frames.iter().any(|f| !f.same_shape(&frames[0])) {
            return Err(invalid_arg("sequence frames differ in shape"));
        }
        Ok(TactileSequence { frames })
    }

    pub fn frames(&self) -> &[TactileImage] {
        &self.frames
    }

    pub fn last(&self) -> &TactileImage {
        &self.frames[SEQUENCE_LEN - 1]
    }

    pub fn into_frames(self) -> Vec<TactileImage> {
        self.frames
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn canonical_pose_is_foot_of_perpendicular() {
        let p = EdgePose::new(2.0, -1.5, 0.3).canonical();
        // Moving along the line does not change the canonical form.
        let along =
            EdgePose::new(2.0 + 3.0 * 0.3f64.cos(), -1.5 + 3.0 * 0.3f64.sin(), 0.3).canonical();
        assert!((p.x - along.x).abs() < 1e-12 && (p.y - along.y).abs() < 1e-12);
        // Foot is orthogonal to the direction.
        assert!(p.position().dot(Vec2::from_angle(0.3)).abs() < 1e-12);
        let flipped = EdgePose::new(2.0, -1.5, 0.3 + std::f64::consts::PI).canonical();
        assert!((flipped.theta - 0.3).abs() < 1e-12);
    }

    #[test]
    fn canonical_vertical_edge() {
        let p = EdgePose::new(1.5, 4.0, -FRAC_PI_2).canonical();
        assert!((p.theta - FRAC_PI_2).abs() < 1e-12);
        assert!((p.x - 1.5).abs() < 1e-12 && p.y.abs() < 1e-12);
    }

    #[test]
    fn class_labels_roundtrip() {
        for c in ContactClass::ALL {
            assert_eq!(c.label().parse::<ContactClass>().unwrap(), c);
            assert_eq!(ContactClass::from_index(c.index()), Some(c));
        }
        assert!("bogus".parse::<ContactClass>().is_err());
    }

    #[test]
    fn image_validation() {
        assert!(TactileImage::new(2, 2, 0.1, vec![0.0; 3]).is_err());
        assert!(TactileImage::new(2, 2, 0.0, vec![0.0; 4]).is_err());
        assert!(TactileImage::new(2, 2, 0.1, vec![0.0, 0.5, 1.0, 1.5]).is_err());
        let img = TactileImage::new(4, 2, 0.5, vec![0.0; 8]).unwrap();
        let c = img.pixel_to_sensor(0, 0);
        assert!((c.x + 0.75).abs() < 1e-12 && (c.y - 0.25).abs() < 1e-12);
    }

    #[test]
    fn sequence_requires_five_uniform_frames() {
        let f = TactileImage::filled(3, 3, 0.1, 0.1).unwrap();
        assert!(TactileSequence::new(vec![f.clone(); 4]).is_err());
        let odd = TactileImage::filled(3, 4, 0.1, 0.1).unwrap();
        let mut frames = vec![f.clone(); 4];
        frames.push(odd);
        assert!(TactileSequence::new(frames).is_err());
        assert!(TactileSequence::new(vec![f; 5]).is_ok());
    }
}
