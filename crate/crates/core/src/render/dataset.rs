//! Labeled synthetic datasets: class sequences and single-image pose samples,
//! stored as PGM files plus one labels CSV.

use std::f64::consts::FRAC_PI_2;
use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::pgm::{read_pgm, write_pgm};
use super::{
    render_class_sample, render_edge, ClassSample, Closure, ClothSide, EdgeAnnotation, ImageSpec,
    RenderParams, SampleOptions, Texture,
};
use crate::error::{invalid_arg, Error, Result};
use crate::rng::{child_rng, derive_seed};
use crate::types::{ContactClass, EdgePose, TactileImage, TactileSequence, SEQUENCE_LEN};

pub const LABELS_FILE: &str = "labels.csv";

/// Closed box of poses sampled uniformly for pose samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PoseRanges {
    pub x_mm: [f64; 2],
    pub y_mm: [f64; 2],
    pub theta_rad: [f64; 2],
}

impl Default for PoseRanges {
    fn default() -> Self {
        PoseRanges {
            x_mm: [-4.0, 4.0],
            y_mm: [-4.0, 4.0],
            theta_rad: [-FRAC_PI_2, FRAC_PI_2],
        }
    }
}

impl PoseRanges {
    fn validate(&self, image: &ImageSpec) -> Result<()> {
        let half = image.half_extent_mm();
        for (name, r, lim) in [("x_mm", self.x_mm, half.x), ("y_mm", self.y_mm, half.y)] {
            if !(r[0] <= r[1]) || r[0] < -lim || r[1] > lim {
                return Err(invalid_arg(format!(
                    "pose range {name} {r:?} must be ordered and inside ±{lim}"
                )));
            }
        }
        let t = self.theta_rad;
        if !(t[0] <= t[1]) || t[0] < -FRAC_PI_2 || t[1] > FRAC_PI_2 {
            return Err(invalid_arg(format!(
                "theta range {t:?} must be ordered and inside [-π/2, π/2]"
            )));
        }
        Ok(())
    }

    fn sample(&self, rng: &mut impl Rng) -> EdgePose {
        let uni = |rng: &mut dyn rand::RngCore, r: [f64; 2]| {
            if r[0] < r[1] {
                rng.random_range(r[0]..=r[1])
            } else {
                r[0]
            }
        };
        let x = uni(rng, self.x_mm);
        let y = uni(rng, self.y_mm);
        let mut theta = uni(rng, self.theta_rad);
        if theta <= -FRAC_PI_2 {
            theta = FRAC_PI_2;
        }
        EdgePose::new(x, y, theta)
    }
}

/// Distribution of rendering parameters, one draw per sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamsDistribution {
    pub textures: Vec<Texture>,
    pub texture_amplitude: [f64; 2],
    pub noise_sigma: [f64; 2],
    pub contact_softness_mm: [f64; 2],
}

impl Default for ParamsDistribution {
    fn default() -> Self {
        ParamsDistribution {
            textures: Texture::ALL.to_vec(),
            texture_amplitude: [0.0, 0.3],
            noise_sigma: [0.0, 0.1],
            contact_softness_mm: [0.3, 0.8],
        }
    }
}

impl ParamsDistribution {
    /// A distribution that always yields `params` (apart from the seed).
    pub fn fixed(params: &RenderParams) -> Self {
        ParamsDistribution {
            textures: vec![params.texture],
            texture_amplitude: [params.texture_amplitude; 2],
            noise_sigma: [params.noise_sigma; 2],
            contact_softness_mm: [params.contact_softness_mm; 2],
        }
    }

    fn validate(&self) -> Result<()> {
        if self.textures.is_empty() {
            return Err(invalid_arg(
                "params distribution needs at least one texture",
            ));
        }
        for r in [
            self.texture_amplitude,
            self.noise_sigma,
            self.contact_softness_mm,
        ] {
            if !(r[0] <= r[1]) {
                return Err(invalid_arg(format!("range {r:?} is not ordered")));
            }
        }
        // Extremes must satisfy the render-parameter invariants.
        RenderParams {
            texture_amplitude: self.texture_amplitude[1],
            noise_sigma: self.noise_sigma[1],
            contact_softness_mm: self.contact_softness_mm[0],
            ..RenderParams::default()
        }
        .validate()?;
        RenderParams {
            contact_softness_mm: self.contact_softness_mm[1],
            ..RenderParams::default()
        }
        .validate()
    }

    pub fn sample(&self, rng: &mut impl Rng, seed: u64) -> RenderParams {
        let uni = |rng: &mut dyn rand::RngCore, r: [f64; 2]| {
            if r[0] < r[1] {
                rng.random_range(r[0]..r[1])
            } else {
                r[0]
            }
        };
        let texture = self.textures[rng.random_range(0..self.textures.len())];
        RenderParams {
            texture,
            texture_amplitude: uni(rng, self.texture_amplitude),
            noise_sigma: uni(rng, self.noise_sigma),
            contact_softness_mm: uni(rng, self.contact_softness_mm),
            seed,
            ..RenderParams::default()
        }
    }
}

/// Everything that determines a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetSpec {
    pub n_per_class: usize,
    /// Number of single-image pose samples; `None` means `n_per_class`.
    pub n_pose: Option<usize>,
    pub pose_ranges: PoseRanges,
    pub params: ParamsDistribution,
    pub image: ImageSpec,
    /// Fraction of class sequences showing steady contact instead of a grasp ramp.
    pub steady_fraction: f64,
    pub seed: u64,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        DatasetSpec {
            n_per_class: 100,
            n_pose: None,
            pose_ranges: PoseRanges::default(),
            params: ParamsDistribution::default(),
            image: ImageSpec::default(),
            steady_fraction: 0.5,
            seed: 0,
        }
    }
}

/// One image with the exact canonical pose of the rendered edge.
#[derive(Debug, Clone)]
pub struct PoseSample {
    pub image: TactileImage,
    pub pose: EdgePose,
}

/// An in-memory dataset.
#[derive(Debug, Clone, Default)]
pub struct Dataset {
    pub sequences: Vec<ClassSample>,
    pub poses: Vec<PoseSample>,
}

impl DatasetSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_per_class == 0 {
            return Err(invalid_arg("n_per_class must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.steady_fraction) {
            return Err(invalid_arg("steady_fraction must lie in [0, 1]"));
        }
        self.image.validate()?;
        self.pose_ranges.validate(&self.image)?;
        self.params.validate()
    }

    pub fn n_sequences(&self) -> usize {
        self.n_per_class * ContactClass::ALL.len()
    }

    pub fn n_pose_samples(&self) -> usize {
        self.n_pose.unwrap_or(self.n_per_class)
    }

    /// Class sequence `index`; classes cycle in [`ContactClass::ALL`] order.
    pub fn class_sample(&self, index: usize) -> Result<ClassSample> {
        let cls = ContactClass::ALL[index % ContactClass::ALL.len()];
        let mut rng = child_rng(self.seed, 1, index as u64);
        let params = self
            .params
            .sample(&mut rng, derive_seed(self.seed, 2, index as u64));
        let closure = if rng.random::<f64>() < self.steady_fraction {
            Closure::Steady
        } else {
            Closure::Grasp
        };
        let opts = SampleOptions {
            image: self.image,
            closure,
        };
        render_class_sample(cls, &params, derive_seed(self.seed, 3, index as u64), &opts)
    }

    /// Pose sample `index`: an edge drawn from `pose_ranges`, labeled in canonical form.
    pub fn pose_sample(&self, index: usize) -> Result<PoseSample> {
        let mut rng = child_rng(self.seed, 4, index as u64);
        let params = self
            .params
            .sample(&mut rng, derive_seed(self.seed, 5, index as u64));
        let pose = self.pose_ranges.sample(&mut rng);
        let side = if rng.random_bool(0.5) {
            ClothSide::LeftOfEdge
        } else {
            ClothSide::RightOfEdge
        };
        let ann = EdgeAnnotation {
            pose,
            cloth_side: side,
        };
        let image = render_edge(
            &ann,
            &params,
            self.image.width,
            self.image.height,
            self.image.mm_per_px,
        )?;
        Ok(PoseSample {
            image,
            pose: pose.canonical(),
        })
    }
}

/// Renders the dataset in memory (in parallel, identical to serial order).
pub fn generate_samples(spec: &DatasetSpec) -> Result<Dataset> {
    spec.validate()?;
    let sequences = (0..spec.n_sequences())
        .into_par_iter()
        .map(|i| spec.class_sample(i))
        .collect::<Result<_>>()?;
    let poses = (0..spec.n_pose_samples())
        .into_par_iter()
        .map(|i| spec.pose_sample(i))
        .collect::<Result<_>>()?;
    Ok(Dataset { sequences, poses })
}

fn sequence_stem(i: usize) -> String {
    format!("seq_{i:06}")
}

fn frame_file(stem: &str, k: usize) -> String {
    format!("{stem}_f{k}.pgm")
}

fn pose_file(i: usize) -> String {
    format!("pose_{i:06}.pgm")
}

fn label_row(file: &str, pose: Option<EdgePose>, class: ContactClass) -> String {
    match pose {
        Some(p) => format!(
            "{file},{:?},{:?},{:?},{}\n",
            p.x,
            p.y,
            p.theta,
            class.label()
        ),
        None => format!("{file},,,,{}\n", class.label()),
    }
}

const HEADER: &str = "file,x_mm,y_mm,theta_rad,class\n";

fn write_sequence(dir: &Path, stem: &str, seq: &TactileSequence) -> Result<()> {
    for (k, f) in seq.frames().iter().enumerate() {
        write_pgm(f, &dir.join(frame_file(stem, k)))?;
    }
    Ok(())
}

fn write_labels(dir: &Path, rows: &[String]) -> Result<PathBuf> {
    let path = dir.join(LABELS_FILE);
    let mut text = String::from(HEADER);
    rows.iter().for_each(|r| text.push_str(r));
    fs::write(&path, text).map_err(|source| Error::DatasetWrite {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| Error::DatasetWrite {
        path: dir.to_path_buf(),
        source,
    })
}

/// Writes an in-memory dataset; returns the labels path.
pub fn write_dataset(ds: &Dataset, dir: &Path) -> Result<PathBuf> {
    ensure_dir(dir)?;
    let mut rows = Vec::with_capacity(ds.sequences.len() + ds.poses.len());
    for (i, s) in ds.sequences.iter().enumerate() {
        let stem = sequence_stem(i);
        write_sequence(dir, &stem, &s.sequence)?;
        rows.push(label_row(&stem, s.pose, s.class));
    }
    for (i, p) in ds.poses.iter().enumerate() {
        let file = pose_file(i);
        write_pgm(&p.image, &dir.join(&file))?;
        rows.push(label_row(&file, Some(p.pose), ContactClass::Edge));
    }
    write_labels(dir, &rows)
}

/// Renders and writes the dataset sample by sample without holding it in
/// memory; returns the labels path.
pub fn generate_dataset(spec: &DatasetSpec, dir: &Path) -> Result<PathBuf> {
    spec.validate()?;
    ensure_dir(dir)?;
    let mut rows: Vec<String> = (0..spec.n_sequences())
        .into_par_iter()
        .map(|i| {
            let s = spec.class_sample(i)?;
            let stem = sequence_stem(i);
            write_sequence(dir, &stem, &s.sequence)?;
            Ok(label_row(&stem, s.pose, s.class))
        })
        .collect::<Result<_>>()?;
    let pose_rows: Vec<String> = (0..spec.n_pose_samples())
        .into_par_iter()
        .map(|i| {
            let p = spec.pose_sample(i)?;
            let file = pose_file(i);
            write_pgm(&p.image, &dir.join(&file))?;
            Ok(label_row(&file, Some(p.pose), ContactClass::Edge))
        })
        .collect::<Result<_>>()?;
    rows.extend(pose_rows);
    write_labels(dir, &rows)
}

#[derive(Debug, Deserialize)]
struct LabelRecord {
    file: String,
    x_mm: Option<f64>,
    y_mm: Option<f64>,
    theta_rad: Option<f64>,
    class: String,
}

/// Reads a dataset written by [`generate_dataset`] or [`write_dataset`].
/// Rows whose `file` ends in `.pgm` are pose samples; other rows name a
/// five-frame sequence stem.
pub fn read_dataset(dir: &Path) -> Result<Dataset> {
    let labels = dir.join(LABELS_FILE);
    let bad = |msg: String| Error::InvalidDataset(format!("{}: {msg}", labels.display()));
    let mut reader = csv::Reader::from_path(&labels).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => bad(format!("{other:?}")),
    })?;
    let mut ds = Dataset::default();
    for (line, rec) in reader.deserialize::<LabelRecord>().enumerate() {
        let rec = rec.map_err(|e| bad(format!("row {}: {e}", line + 1)))?;
        let class: ContactClass = rec
            .class
            .parse()
            .map_err(|e| bad(format!("row {}: {e}", line + 1)))?;
        let pose = match (rec.x_mm, rec.y_mm, rec.theta_rad) {
            (Some(x), Some(y), Some(t)) => Some(EdgePose::new(x, y, t)),
            (None, None, None) => None,
            _ => return Err(bad(format!("row {}: partial pose", line + 1))),
        };
        if class.has_edge() != pose.is_some() {
            return Err(bad(format!(
                "row {}: pose presence does not match class {class}",
                line + 1
            )));
        }
        let load = |file: &str| {
            read_pgm(&dir.join(file), ImageSpec::default().mm_per_px)
                .map_err(|e| bad(format!("row {}: {file}: {e}", line + 1)))
        };
        if rec.file.ends_with(".pgm") {
            let pose = pose
                .filter(|_| class == ContactClass::Edge)
                .ok_or_else(|| {
                    bad(format!(
                        "row {}: pose sample must be an edge with a pose",
                        line + 1
                    ))
                })?;
            ds.poses.push(PoseSample {
                image: load(&rec.file)?,
                pose,
            });
        } else {
            let frames = (0..SEQUENCE_LEN)
                .map(|k| load(&frame_file(&rec.file, k)))
                .collect::<Result<Vec<_>>>()?;
            let sequence =
                TactileSequence::new(frames).map_err(|e| bad(format!("row {}: {e}", line + 1)))?;
            ds.sequences.push(ClassSample {
                sequence,
                class,
                pose,
            });
        }
    }
    Ok(ds)
}
