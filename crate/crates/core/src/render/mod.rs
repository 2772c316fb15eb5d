//! Procedural tactile image synthesis.
//!
//! Every image is produced from a signed-distance field over the sensing
//! window: positive distances are cloth, negative distances are background.
//! The cloth/background transition follows an error-function profile whose
//! width is `contact_softness_mm`, cloth intensity is modulated by a seeded
//! periodic texture, and Gaussian pixel noise is added last.

mod dataset;
mod pgm;
mod texture;

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::cloth::{ClothEdge, SensorFootprint};
use crate::error::{invalid_arg, Result};
use crate::geometry::{point_segment_distance_sq, Vec2};
use crate::rng::{child_rng, derive_seed, rng_from};
use crate::types::{ContactClass, EdgePose, TactileImage, TactileSequence, SEQUENCE_LEN};

pub use dataset::{
    generate_dataset, generate_samples, read_dataset, write_dataset, Dataset, DatasetSpec,
    ParamsDistribution, PoseRanges, PoseSample, LABELS_FILE,
};
pub use pgm::{decode_pgm, encode_pgm, read_pgm, write_pgm};
pub use texture::Texture;

use texture::TextureField;

/// Intensity threshold separating contact from background in the default
/// intensity scheme (midway between 0.1 and 0.7).
pub const CONTACT_THRESHOLD: f64 = 0.4;

/// Pixel grid of rendered images.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ImageSpec {
    pub width: usize,
    pub height: usize,
    pub mm_per_px: f64,
}

impl Default for ImageSpec {
    /// 64 x 52 px at 0.3 mm/px, a 19.2 x 15.6 mm window.
    fn default() -> Self {
        ImageSpec {
            width: 64,
            height: 52,
            mm_per_px: 0.3,
        }
    }
}

impl ImageSpec {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 || !(self.mm_per_px > 0.0) {
            return Err(invalid_arg(format!("invalid image spec {self:?}")));
        }
        Ok(())
    }

    pub fn half_extent_mm(&self) -> Vec2 {
        Vec2::new(
            self.width as f64 * self.mm_per_px / 2.0,
            self.height as f64 * self.mm_per_px / 2.0,
        )
    }

    fn pixel_to_sensor(&self, col: usize, row: usize) -> Vec2 {
        Vec2::new(
            (col as f64 + 0.5 - self.width as f64 / 2.0) * self.mm_per_px,
            (self.height as f64 / 2.0 - row as f64 - 0.5) * self.mm_per_px,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenderParams {
    pub texture: Texture,
    pub texture_amplitude: f64,
    /// Width of the error-function transition across the edge.
    pub contact_softness_mm: f64,
    pub noise_sigma: f64,
    /// Seeds texture phase/orientation and pixel noise. Never affects labels.
    pub seed: u64,
    pub contact_intensity: f64,
    pub background_intensity: f64,
}

impl Default for RenderParams {
    fn default() -> Self {
        RenderParams {
            texture: Texture::Plain,
            texture_amplitude: 0.0,
            contact_softness_mm: 0.5,
            noise_sigma: 0.0,
            seed: 0,
            contact_intensity: 0.7,
            background_intensity: 0.1,
        }
    }
}

impl RenderParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.texture_amplitude) {
            return Err(invalid_arg(format!(
                "texture_amplitude {} outside [0, 1]",
                self.texture_amplitude
            )));
        }
        if !(self.noise_sigma >= 0.0) {
            return Err(invalid_arg(format!(
                "noise_sigma {} must be >= 0",
                self.noise_sigma
            )));
        }
        if self.texture_amplitude + self.noise_sigma > 1.0 {
            return Err(invalid_arg(
                "texture_amplitude + noise_sigma must not exceed 1",
            ));
        }
        if !(0.1..=5.0).contains(&self.contact_softness_mm) {
            return Err(invalid_arg(format!(
                "contact_softness_mm {} outside [0.1, 5.0]",
                self.contact_softness_mm
            )));
        }
        for v in [self.contact_intensity, self.background_intensity] {
            if !(0.0..=1.0).contains(&v) {
                return Err(invalid_arg(format!("intensity {v} outside [0, 1]")));
            }
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Which side of the directed edge the cloth occupies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClothSide {
    LeftOfEdge,
    RightOfEdge,
}

impl ClothSide {
    fn sign(self) -> f64 {
        match self {
            ClothSide::LeftOfEdge => 1.0,
            ClothSide::RightOfEdge => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeAnnotation {
    pub pose: EdgePose,
    pub cloth_side: ClothSide,
}

/// How the five frames of a class sample evolve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Closure {
    /// Contact ramps up from nothing to the final footprint (grasp closing).
    /// The ramp is `(k / 4)^γ` with a per-sample `γ` in `[0.6, 1.6]`.
    Grasp,
    /// All frames show the final footprint (steady contact while sliding).
    Steady,
}

impl Closure {
    fn strength(self, frame: usize, gamma: f64) -> f64 {
        match self {
            Closure::Grasp => (frame as f64 / (SEQUENCE_LEN - 1) as f64).powf(gamma),
            Closure::Steady => 1.0,
        }
    }
}

/// A rendered five-frame sample with its exact labels.
#[derive(Debug, Clone)]
pub struct ClassSample {
    pub sequence: TactileSequence,
    pub class: ContactClass,
    /// Canonical edge pose of the final frame for edge and corner samples.
    pub pose: Option<EdgePose>,
}

/// Maximum per-frame jitter of the contact geometry.
pub const FRAME_JITTER_MM: f64 = 0.5;

/// `0.5 * (1 + erf(d / softness))`, the fraction of contact at signed distance `d`.
fn contact_profile(sd: f64, softness: f64) -> f64 {
    if sd == f64::INFINITY {
        1.0
    } else if sd == f64::NEG_INFINITY {
        0.0
    } else {
        0.5 * (1.0 + libm::erf(sd / softness))
    }
}

/// Renders an image from a signed-distance field. `field` maps a sensor-frame
/// point to its signed distance (mm, positive on cloth) and the coordinate
/// at which the cloth texture is sampled.
pub fn render_field<F>(
    spec: &ImageSpec,
    params: &RenderParams,
    contact_strength: f64,
    noise_seed: u64,
    field: F,
) -> Result<TactileImage>
where
    F: Fn(Vec2) -> (f64, Vec2),
{
    render_pixels(spec, params, contact_strength, noise_seed, |_, _, p| {
        field(p)
    })
}

/// Row-major pixel loop shared by the renderers; `field` also receives the
/// pixel's row and column.
fn render_pixels<F>(
    spec: &ImageSpec,
    params: &RenderParams,
    contact_strength: f64,
    noise_seed: u64,
    mut field: F,
) -> Result<TactileImage>
where
    F: FnMut(usize, usize, Vec2) -> (f64, Vec2),
{
    spec.validate()?;
    params.validate()?;
    let tex = TextureField::new(params.texture, params.seed);
    let (c, bg) = (params.contact_intensity, params.background_intensity);
    let mut noise_rng = rng_from(noise_seed);
    let normal = (params.noise_sigma > 0.0)
        .then(|| Normal::new(0.0, params.noise_sigma).expect("sigma validated"));
    let mut pixels = Vec::with_capacity(spec.width * spec.height);
    for row in 0..spec.height {
        for col in 0..spec.width {
            let p = spec.pixel_to_sensor(col, row);
            let (sd, uv) = field(row, col, p);
            let cover = contact_profile(sd, params.contact_softness_mm);
            let mut v = bg;
            if cover > 0.0 {
                let level = c + (1.0 - c) * params.texture_amplitude * tex.value(uv);
                v += contact_strength * cover * (level - bg);
            }
            if let Some(n) = &normal {
                v += n.sample(&mut noise_rng);
            }
            pixels.push(v.clamp(0.0, 1.0));
        }
    }
    TactileImage::new(spec.width, spec.height, spec.mm_per_px, pixels)
}

/// Half-plane signed distance for an annotated edge.
fn edge_field(ann: &EdgeAnnotation) -> impl Fn(Vec2) -> f64 {
    let n = ann.pose.normal();
    let d = ann.pose.offset();
    let s = ann.cloth_side.sign();
    move |p| s * (n.dot(p) - d)
}

/// Renders a straight cloth edge.
pub fn render_edge(
    ann: &EdgeAnnotation,
    params: &RenderParams,
    width_px: usize,
    height_px: usize,
    mm_per_px: f64,
) -> Result<TactileImage> {
    let spec = ImageSpec {
        width: width_px,
        height: height_px,
        mm_per_px,
    };
    spec.validate()?;
    let half = spec.half_extent_mm();
    let pose = ann.pose;
    if !pose.is_finite() || pose.x.abs() > half.x || pose.y.abs() > half.y {
        return Err(invalid_arg(format!(
            "annotation position ({}, {}) outside the {:.2} x {:.2} mm image",
            pose.x,
            pose.y,
            2.0 * half.x,
            2.0 * half.y
        )));
    }
    let sd = edge_field(ann);
    render_field(&spec, params, 1.0, derive_seed(params.seed, 100, 0), |p| {
        (sd(p), p)
    })
}

/// Contact geometry of one class sample.
#[derive(Debug, Clone, Copy)]
enum SampleGeometry {
    Empty,
    Full,
    Edge(EdgeAnnotation),
    /// Wedge between the rays `apex + t * dir(a1)` and `apex + t * dir(a2)`,
    /// cloth counter-clockwise from the first ray to the second.
    Wedge {
        apex: Vec2,
        a1: f64,
        a2: f64,
    },
}

impl SampleGeometry {
    fn shifted(self, by: Vec2) -> Self {
        match self {
            SampleGeometry::Edge(mut ann) => {
                ann.pose.x += by.x;
                ann.pose.y += by.y;
                SampleGeometry::Edge(ann)
            }
            SampleGeometry::Wedge { apex, a1, a2 } => SampleGeometry::Wedge {
                apex: apex + by,
                a1,
                a2,
            },
            other => other,
        }
    }

    fn signed_distance(&self, p: Vec2) -> f64 {
        match *self {
            SampleGeometry::Empty => f64::NEG_INFINITY,
            SampleGeometry::Full => f64::INFINITY,
            SampleGeometry::Edge(ann) => edge_field(&ann)(p),
            SampleGeometry::Wedge { apex, a1, a2 } => {
                let n1 = Vec2::from_angle(a1).perp();
                let n2 = -Vec2::from_angle(a2).perp();
                n1.dot(p - apex).min(n2.dot(p - apex))
            }
        }
    }

    fn pose(&self) -> Option<EdgePose> {
        match *self {
            SampleGeometry::Edge(ann) => Some(ann.pose.canonical()),
            SampleGeometry::Wedge { apex, a1, .. } => {
                Some(EdgePose::new(apex.x, apex.y, a1).canonical())
            }
            _ => None,
        }
    }

    fn coverage(&self, spec: &ImageSpec) -> f64 {
        let mut inside = 0usize;
        for row in 0..spec.height {
            for col in 0..spec.width {
                if self.signed_distance(spec.pixel_to_sensor(col, row)) > 0.0 {
                    inside += 1;
                }
            }
        }
        inside as f64 / (spec.width * spec.height) as f64
    }
}

/// Rendering options for [`render_class_sample`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleOptions {
    pub image: ImageSpec,
    pub closure: Closure,
}

impl Default for SampleOptions {
    fn default() -> Self {
        SampleOptions {
            image: ImageSpec::default(),
            closure: Closure::Grasp,
        }
    }
}

fn sample_geometry(cls: ContactClass, spec: &ImageSpec, rng: &mut impl Rng) -> SampleGeometry {
    match cls {
        ContactClass::GraspFailure => SampleGeometry::Empty,
        ContactClass::InFabric => SampleGeometry::Full,
        ContactClass::Edge => {
            let theta = PI / 2.0 - rng.random_range(0.0..PI);
            let d = rng.random_range(-2.0..2.0);
            let n = Vec2::new(-theta.sin(), theta.cos());
            let foot = n * d;
            let side = if rng.random_bool(0.5) {
                ClothSide::LeftOfEdge
            } else {
                ClothSide::RightOfEdge
            };
            SampleGeometry::Edge(EdgeAnnotation {
                pose: EdgePose::new(foot.x, foot.y, theta),
                cloth_side: side,
            })
        }
        ContactClass::Corner => {
            let mut last = SampleGeometry::Empty;
            for _ in 0..200 {
                let apex = Vec2::new(rng.random_range(-4.0..4.0), rng.random_range(-3.0..3.0));
                let a1 = rng.random_range(0.0..2.0 * PI);
                let opening = rng.random_range(75.0f64..105.0).to_radians();
                last = SampleGeometry::Wedge {
                    apex,
                    a1,
                    a2: a1 + opening,
                };
                let cov = last.coverage(spec);
                if (0.12..=0.38).contains(&cov) {
                    break;
                }
            }
            last
        }
    }
}

/// Renders a five-frame sequence whose final frame shows the footprint
/// characteristic of `cls`: nothing, full coverage, a half-plane, or a
/// quarter-plane wedge. `seed` fixes the geometry and labels; `params.seed`
/// fixes texture and noise only.
pub fn render_class_sample(
    cls: ContactClass,
    params: &RenderParams,
    seed: u64,
    opts: &SampleOptions,
) -> Result<ClassSample> {
    params.validate()?;
    opts.image.validate()?;
    let mut rng = child_rng(seed, 10, 0);
    let base = sample_geometry(cls, &opts.image, &mut rng);
    let jitters: Vec<Vec2> = (0..SEQUENCE_LEN)
        .map(|_| {
            let r = FRAME_JITTER_MM * rng.random::<f64>().sqrt();
            Vec2::from_angle(rng.random_range(0.0..2.0 * PI)) * r
        })
        .collect();
    let gamma = child_rng(seed, 11, 0).random_range(0.6..1.6);
    let mut frames = Vec::with_capacity(SEQUENCE_LEN);
    for (k, jitter) in jitters.iter().enumerate() {
        let geom = base.shifted(*jitter);
        let img = render_field(
            &opts.image,
            params,
            opts.closure.strength(k, gamma),
            derive_seed(params.seed, 101, k as u64),
            |p| (geom.signed_distance(p), p),
        )?;
        frames.push(img);
    }
    let final_geom = base.shifted(jitters[SEQUENCE_LEN - 1]);
    Ok(ClassSample {
        sequence: TactileSequence::new(frames)?,
        class: cls,
        pose: final_geom.pose(),
    })
}

/// Renders what a footprint placed on the cloth observes. The texture is
/// anchored to the cloth, so it moves through the window as the sensor slides.
pub fn render_footprint(
    cloth: &ClothEdge,
    fp: &SensorFootprint,
    spec: &ImageSpec,
    params: &RenderParams,
    noise_seed: u64,
) -> Result<TactileImage> {
    // Beyond this distance the contact profile is exactly 0 or 1 in f64.
    let cutoff = 6.0 * params.contact_softness_mm;
    let half = spec.half_extent_mm();
    let margin = 2.0 + cutoff + half.norm();
    let segments: Vec<(Vec2, Vec2)> = cloth
        .local_segments(fp, margin)
        .into_iter()
        .map(|(a, b)| (fp.to_sensor(a), fp.to_sensor(b)))
        .collect();
    let start_x = -half.x - 1.0;
    let mut near: Vec<(Vec2, Vec2, f64, f64)> = Vec::new();
    let mut crossings: Vec<f64> = Vec::new();
    let mut inside_at_start = false;
    let mut passed = 0usize;
    render_pixels(spec, params, 1.0, noise_seed, |_, col, p| {
        if col == 0 {
            // Scanline state: inside/outside at the row start, then parity flips
            // at each boundary crossing to the right of it.
            let y = p.y;
            inside_at_start = cloth.contains(fp.to_world(Vec2::new(start_x, y)));
            crossings.clear();
            near.clear();
            for &(a, b) in &segments {
                if (a.y > y) != (b.y > y) {
                    let x = a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y);
                    if x > start_x {
                        crossings.push(x);
                    }
                }
                if a.y.min(b.y) - cutoff <= y && y <= a.y.max(b.y) + cutoff {
                    near.push((a, b, a.x.min(b.x) - cutoff, a.x.max(b.x) + cutoff));
                }
            }
            crossings.sort_by(f64::total_cmp);
            passed = 0;
        }
        while passed < crossings.len() && crossings[passed] < p.x {
            passed += 1;
        }
        let inside = inside_at_start ^ (passed % 2 == 1);
        let dist_sq = near
            .iter()
            .filter(|s| s.2 <= p.x && p.x <= s.3)
            .map(|&(a, b, _, _)| point_segment_distance_sq(p, a, b))
            .fold(f64::INFINITY, f64::min);
        let mag = if dist_sq > cutoff * cutoff {
            f64::INFINITY
        } else {
            dist_sq.sqrt()
        };
        (if inside { mag } else { -mag }, fp.to_world(p))
    })
}
