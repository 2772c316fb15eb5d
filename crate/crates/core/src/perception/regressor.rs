//! Edge-pose regressor: a linear model over the pooled-gradient feature map
//! predicting `(x, y, sin 2θ, cos 2θ)`. Training starts from a ridge solution
//! and refines it by gradient descent on the pose loss, whose angular part
//! is the cosine loss on the doubled angle.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::features::{pose_features, PoseFeatureParams, POSE_FEATURE_SPEC};
use super::model_io::ModelText;
use super::{pose_errors, PoseErrorSummary};
use crate::error::{invalid_arg, Error, Result};
use crate::metrics::PoseLossWeights;
use crate::render::PoseSample;
use crate::rng::child_rng;
use crate::types::{EdgePose, TactileImage};

const KIND: &str = "regressor";
const N_OUT: usize = 4;
/// Minimum number of training samples.
pub const MIN_REGRESSOR_SAMPLES: usize = 50;
const NORM_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegressorHyperparams {
    pub pool_px: usize,
    pub gradient_floor: f64,
    /// Weight penalty (non-bias weights) in both the ridge start and the loss.
    pub l2: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub validation_fraction: f64,
}

impl Default for RegressorHyperparams {
    fn default() -> Self {
        RegressorHyperparams {
            pool_px: 4,
            gradient_floor: 0.03,
            l2: 1e-4,
            lambda1: 1.0,
            lambda2: 1.0,
            learning_rate: 0.05,
            epochs: 100,
            validation_fraction: 0.1,
        }
    }
}

impl RegressorHyperparams {
    fn validate(&self) -> Result<()> {
        PoseLossWeights::new(self.lambda1, self.lambda2)?;
        if self.pool_px == 0
            || !(self.gradient_floor >= 0.0)
            || !(self.l2 >= 0.0)
            || !(self.learning_rate > 0.0)
            || !(0.0..1.0).contains(&self.validation_fraction)
        {
            return Err(invalid_arg(format!(
                "invalid regressor hyperparameters {self:?}"
            )));
        }
        Ok(())
    }

    pub fn feature_params(&self) -> PoseFeatureParams {
        PoseFeatureParams {
            pool_px: self.pool_px,
            gradient_floor: self.gradient_floor,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressorModel {
    pub hyper: RegressorHyperparams,
    pub width: usize,
    pub height: usize,
    pub feature_mean: Vec<f64>,
    pub feature_scale: Vec<f64>,
    /// Per-output mean and scale of `(x, y, sin 2θ, cos 2θ)`.
    pub output_mean: [f64; N_OUT],
    pub output_scale: [f64; N_OUT],
    /// Row-major `4 x (features + 1)`, bias last.
    pub weights: Vec<f64>,
}

fn pose_targets(p: &EdgePose) -> [f64; N_OUT] {
    [p.x, p.y, (2.0 * p.theta).sin(), (2.0 * p.theta).cos()]
}

fn standardise(f: &[f64], mean: &[f64], scale: &[f64]) -> Vec<f64> {
    f.iter()
        .zip(mean)
        .zip(scale)
        .map(|((v, m), s)| (v - m) / s)
        .collect()
}

fn forward(weights: &[f64], z: &[f64], mean: &[f64; N_OUT], scale: &[f64; N_OUT]) -> [f64; N_OUT] {
    let stride = z.len() + 1;
    let mut out = [0.0; N_OUT];
    for (k, o) in out.iter_mut().enumerate() {
        let row = &weights[k * stride..(k + 1) * stride];
        let lin = row[..stride - 1]
            .iter()
            .zip(z)
            .map(|(w, x)| w * x)
            .sum::<f64>()
            + row[stride - 1];
        *o = mean[k] + scale[k] * lin;
    }
    out
}

fn outputs_to_pose(o: &[f64; N_OUT]) -> EdgePose {
    EdgePose::new(o[0], o[1], 0.5 * o[2].atan2(o[3])).canonical()
}

impl RegressorModel {
    fn n_features(&self) -> usize {
        self.feature_mean.len()
    }

    pub fn predict(&self, img: &TactileImage) -> Result<EdgePose> {
        if img.width != self.width || img.height != self.height {
            return Err(invalid_arg(format!(
                "model expects {}x{} images, got {}x{}",
                self.width, self.height, img.width, img.height
            )));
        }
        let f = pose_features(img, &self.hyper.feature_params());
        let z = standardise(&f, &self.feature_mean, &self.feature_scale);
        Ok(outputs_to_pose(&forward(
            &self.weights,
            &z,
            &self.output_mean,
            &self.output_scale,
        )))
    }

    pub fn to_text(&self) -> String {
        let h = &self.hyper;
        let mut m = ModelText::default();
        m.hyper("feature_spec", POSE_FEATURE_SPEC);
        m.hyper("width", self.width);
        m.hyper("height", self.height);
        m.hyper("n_features", self.n_features());
        m.hyper("pool_px", h.pool_px);
        m.hyper("gradient_floor", format!("{:?}", h.gradient_floor));
        m.hyper("l2", format!("{:?}", h.l2));
        m.hyper("lambda1", format!("{:?}", h.lambda1));
        m.hyper("lambda2", format!("{:?}", h.lambda2));
        m.hyper("learning_rate", format!("{:?}", h.learning_rate));
        m.hyper("epochs", h.epochs);
        m.hyper(
            "validation_fraction",
            format!("{:?}", h.validation_fraction),
        );
        m.param("output_mean", &self.output_mean);
        m.param("output_scale", &self.output_scale);
        m.param("feature_mean", &self.feature_mean);
        m.param("feature_scale", &self.feature_scale);
        m.param("weights", &self.weights);
        m.render(KIND)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let m = ModelText::parse(text, KIND)?;
        if m.get_str("feature_spec")? != POSE_FEATURE_SPEC {
            return Err(Error::InvalidModel(format!(
                "unsupported feature spec `{}`",
                m.get_str("feature_spec")?
            )));
        }
        let hyper = RegressorHyperparams {
            pool_px: m.get("pool_px")?,
            gradient_floor: m.get("gradient_floor")?,
            l2: m.get("l2")?,
            lambda1: m.get("lambda1")?,
            lambda2: m.get("lambda2")?,
            learning_rate: m.get("learning_rate")?,
            epochs: m.get("epochs")?,
            validation_fraction: m.get("validation_fraction")?,
        };
        hyper
            .validate()
            .map_err(|e| Error::InvalidModel(e.to_string()))?;
        let (width, height): (usize, usize) = (m.get("width")?, m.get("height")?);
        let n: usize = m.get("n_features")?;
        if n != hyper.feature_params().feature_len(width, height) {
            return Err(Error::InvalidModel(format!(
                "feature count {n} does not match a {width}x{height} image"
            )));
        }
        let arr = |v: Vec<f64>| -> [f64; N_OUT] { [v[0], v[1], v[2], v[3]] };
        let model = RegressorModel {
            hyper,
            width,
            height,
            output_mean: arr(m.get_param("output_mean", N_OUT)?),
            output_scale: arr(m.get_param("output_scale", N_OUT)?),
            feature_mean: m.get_param("feature_mean", n)?,
            feature_scale: m.get_param("feature_scale", n)?,
            weights: m.get_param("weights", N_OUT * (n + 1))?,
        };
        if model
            .feature_scale
            .iter()
            .chain(&model.output_scale)
            .any(|&s| !(s > 0.0))
        {
            return Err(Error::InvalidModel("scales must be positive".into()));
        }
        Ok(model)
    }
}

/// Forward pass; θ is recovered as `atan2(sin 2θ, cos 2θ) / 2` and the
/// result returned in canonical form.
pub fn estimate_pose(model: &RegressorModel, img: &TactileImage) -> Result<EdgePose> {
    model.predict(img)
}

/// Training loss of the regressor over standardised features:
///
/// `mean_i [ λ1·½((x̂−x)² + (ŷ−y)²) + λ2·(1 − (ŝ·s + ĉ·c)/‖(ŝ, ĉ)‖) ] + ½·l2·‖W‖²`
///
/// where `(s, c) = (sin 2θ, cos 2θ)`, the bias column is not penalised, and
/// parameters are the row-major `4 x (features + 1)` weight matrix.
#[derive(Debug, Clone)]
pub struct RegressorObjective {
    z: Vec<Vec<f64>>,
    targets: Vec<[f64; N_OUT]>,
    output_mean: [f64; N_OUT],
    output_scale: [f64; N_OUT],
    lambda1: f64,
    lambda2: f64,
    l2: f64,
}

impl RegressorObjective {
    pub fn n_params(&self) -> usize {
        N_OUT * (self.n_features() + 1)
    }

    fn n_features(&self) -> usize {
        self.z.first().map_or(0, |z| z.len())
    }

    pub fn loss(&self, params: &[f64]) -> f64 {
        let n = self.z.len() as f64;
        let mut total = 0.0;
        for (z, t) in self.z.iter().zip(&self.targets) {
            let o = forward(params, z, &self.output_mean, &self.output_scale);
            let (dx, dy) = (o[0] - t[0], o[1] - t[1]);
            let r = (o[2] * o[2] + o[3] * o[3] + NORM_EPS * NORM_EPS).sqrt();
            let a = o[2] * t[2] + o[3] * t[3];
            total += self.lambda1 * 0.5 * (dx * dx + dy * dy) + self.lambda2 * (1.0 - a / r);
        }
        total / n + 0.5 * self.l2 * self.penalty_sq(params)
    }

    fn penalty_sq(&self, params: &[f64]) -> f64 {
        let stride = self.n_features() + 1;
        params
            .chunks(stride)
            .map(|row| row[..stride - 1].iter().map(|w| w * w).sum::<f64>())
            .sum()
    }

    pub fn gradient(&self, params: &[f64]) -> Vec<f64> {
        let nf = self.n_features();
        let stride = nf + 1;
        let n = self.z.len() as f64;
        let mut grad = vec![0.0; params.len()];
        for (z, t) in self.z.iter().zip(&self.targets) {
            let o = forward(params, z, &self.output_mean, &self.output_scale);
            let r2 = o[2] * o[2] + o[3] * o[3] + NORM_EPS * NORM_EPS;
            let r = r2.sqrt();
            let a = o[2] * t[2] + o[3] * t[3];
            let d_out = [
                self.lambda1 * (o[0] - t[0]),
                self.lambda1 * (o[1] - t[1]),
                self.lambda2 * (-t[2] / r + a * o[2] / (r2 * r)),
                self.lambda2 * (-t[3] / r + a * o[3] / (r2 * r)),
            ];
            for k in 0..N_OUT {
                let d = d_out[k] * self.output_scale[k] / n;
                let row = &mut grad[k * stride..(k + 1) * stride];
                row[..nf].iter_mut().zip(z).for_each(|(g, x)| *g += d * x);
                row[nf] += d;
            }
        }
        for k in 0..N_OUT {
            for j in 0..nf {
                grad[k * stride + j] += self.l2 * params[k * stride + j];
            }
        }
        grad
    }

    /// Ridge solution of the standardised outputs, used as the starting point.
    pub fn ridge_start(&self) -> Result<Vec<f64>> {
        let nf = self.n_features();
        let d = nf + 1;
        let n = self.z.len() as f64;
        let mut x = DMatrix::<f64>::zeros(self.z.len(), d);
        for (i, z) in self.z.iter().enumerate() {
            for (j, v) in z.iter().enumerate() {
                x[(i, j)] = *v;
            }
            x[(i, nf)] = 1.0;
        }
        let mut a = x.transpose() * &x / n;
        for j in 0..nf {
            a[(j, j)] += self.l2.max(1e-9);
        }
        a[(nf, nf)] += 1e-12;
        let chol = a
            .cholesky()
            .ok_or_else(|| Error::InvalidDataset("ridge system is not positive definite".into()))?;
        let mut params = vec![0.0; N_OUT * d];
        for k in 0..N_OUT {
            let t = DVector::from_iterator(
                self.z.len(),
                self.targets
                    .iter()
                    .map(|t| (t[k] - self.output_mean[k]) / self.output_scale[k]),
            );
            let w = chol.solve(&(x.transpose() * t / n));
            params[k * d..(k + 1) * d].copy_from_slice(w.as_slice());
        }
        Ok(params)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegressorEpoch {
    pub epoch: usize,
    pub train_loss: f64,
    pub validation_loss: Option<f64>,
    pub validation_distance_mm: Option<f64>,
    pub validation_angle_deg: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressorReport {
    /// Entry 0 is the ridge start, then one entry per epoch.
    pub history: Vec<RegressorEpoch>,
    pub validation: Option<PoseErrorSummary>,
}

struct Prepared {
    features: Vec<Vec<f64>>,
    targets: Vec<[f64; N_OUT]>,
    width: usize,
    height: usize,
}

fn prepare(samples: &[PoseSample], hp: &RegressorHyperparams) -> Result<Prepared> {
    if samples.len() < MIN_REGRESSOR_SAMPLES {
        return Err(Error::InvalidDataset(format!(
            "regressor needs at least {MIN_REGRESSOR_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    let (width, height) = (samples[0].image.width, samples[0].image.height);
    if samples
        .iter()
        .any(|s| s.image.width != width || s.image.height != height)
    {
        return Err(Error::InvalidDataset("pose images differ in size".into()));
    }
    let fp = hp.feature_params();
    if fp.feature_len(width, height) <= super::features::ORIENTATION_BINS {
        return Err(Error::InvalidDataset(format!(
            "{width}x{height} images are too small for pooling"
        )));
    }
    let features = samples
        .par_iter()
        .map(|s| pose_features(&s.image, &fp))
        .collect();
    let targets = samples
        .iter()
        .map(|s| pose_targets(&s.pose.canonical()))
        .collect();
    Ok(Prepared {
        features,
        targets,
        width,
        height,
    })
}

fn mean_scale(rows: impl Iterator<Item = Vec<f64>> + Clone, len: usize) -> (Vec<f64>, Vec<f64>) {
    let n = rows.clone().count() as f64;
    let mut mean = vec![0.0; len];
    for r in rows.clone() {
        mean.iter_mut().zip(&r).for_each(|(m, v)| *m += v / n);
    }
    let mut var = vec![0.0; len];
    for r in rows {
        var.iter_mut()
            .zip(&r)
            .zip(&mean)
            .for_each(|((s, v), m)| *s += (v - m) * (v - m) / n);
    }
    let scale = var
        .into_iter()
        .map(|v| if v > 1e-18 { v.sqrt() } else { 1.0 })
        .collect();
    (mean, scale)
}

/// Builds the training objective and the model skeleton for `samples`.
fn build(
    prep: &Prepared,
    idx: &[usize],
    hp: &RegressorHyperparams,
) -> (
    RegressorObjective,
    Vec<f64>,
    Vec<f64>,
    [f64; N_OUT],
    [f64; N_OUT],
) {
    let nf = prep.features[0].len();
    let (fmean, fscale) = mean_scale(idx.iter().map(|&i| prep.features[i].clone()), nf);
    let (omean, oscale) = mean_scale(idx.iter().map(|&i| prep.targets[i].to_vec()), N_OUT);
    let omean = [omean[0], omean[1], omean[2], omean[3]];
    let oscale = [oscale[0], oscale[1], oscale[2], oscale[3]];
    let obj = RegressorObjective {
        z: idx
            .iter()
            .map(|&i| standardise(&prep.features[i], &fmean, &fscale))
            .collect(),
        targets: idx.iter().map(|&i| prep.targets[i]).collect(),
        output_mean: omean,
        output_scale: oscale,
        lambda1: hp.lambda1,
        lambda2: hp.lambda2,
        l2: hp.l2,
    };
    (obj, fmean, fscale, omean, oscale)
}

/// The training objective over all of `samples` (no validation split), for
/// gradient checking.
pub fn regressor_objective(
    samples: &[PoseSample],
    hp: &RegressorHyperparams,
) -> Result<RegressorObjective> {
    hp.validate()?;
    let prep = prepare(samples, hp)?;
    let idx: Vec<usize> = (0..samples.len()).collect();
    Ok(build(&prep, &idx, hp).0)
}

pub fn train_regressor(
    samples: &[PoseSample],
    hp: &RegressorHyperparams,
    seed: u64,
) -> Result<(RegressorModel, RegressorReport)> {
    hp.validate()?;
    let prep = prepare(samples, hp)?;
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.shuffle(&mut child_rng(seed, 30, 0));
    let n_val = ((samples.len() as f64 * hp.validation_fraction) as usize)
        .min(samples.len() - MIN_REGRESSOR_SAMPLES);
    let (val_idx, train_idx) = order.split_at(n_val);
    let mut train_idx = train_idx.to_vec();
    train_idx.sort_unstable();
    let mut val_idx = val_idx.to_vec();
    val_idx.sort_unstable();

    let (obj, fmean, fscale, omean, oscale) = build(&prep, &train_idx, hp);
    let mut model = RegressorModel {
        hyper: *hp,
        width: prep.width,
        height: prep.height,
        feature_mean: fmean,
        feature_scale: fscale,
        output_mean: omean,
        output_scale: oscale,
        weights: obj.ridge_start()?,
    };
    let val_z: Vec<Vec<f64>> = val_idx
        .iter()
        .map(|&i| standardise(&prep.features[i], &model.feature_mean, &model.feature_scale))
        .collect();
    let val_truth: Vec<EdgePose> = val_idx
        .iter()
        .map(|&i| samples[i].pose.canonical())
        .collect();
    let val_obj = RegressorObjective {
        z: val_z.clone(),
        targets: val_idx.iter().map(|&i| prep.targets[i]).collect(),
        ..obj.clone()
    };
    let summarize = |w: &[f64]| -> Option<PoseErrorSummary> {
        if val_z.is_empty() {
            return None;
        }
        let errs = val_z
            .iter()
            .zip(&val_truth)
            .map(|(z, t)| pose_errors(&outputs_to_pose(&forward(w, z, &omean, &oscale)), t));
        Some(PoseErrorSummary::from_errors(errs))
    };
    let record = |w: &[f64], epoch: usize, train_loss: f64| {
        let s = summarize(w);
        RegressorEpoch {
            epoch,
            train_loss,
            validation_loss: (!val_z.is_empty()).then(|| val_obj.loss(w)),
            validation_distance_mm: s.map(|s| s.distance_mm),
            validation_angle_deg: s.map(|s| s.angle_deg),
        }
    };
    let mut loss = obj.loss(&model.weights);
    let mut history = vec![record(&model.weights, 0, loss)];
    let mut lr = hp.learning_rate;
    for epoch in 1..=hp.epochs {
        let grad = obj.gradient(&model.weights);
        // Backtrack so every accepted step lowers the training loss.
        let mut accepted = false;
        for _ in 0..30 {
            let trial: Vec<f64> = model
                .weights
                .iter()
                .zip(&grad)
                .map(|(w, g)| w - lr * g)
                .collect();
            let trial_loss = obj.loss(&trial);
            if trial_loss <= loss {
                model.weights = trial;
                loss = trial_loss;
                accepted = true;
                break;
            }
            lr *= 0.5;
        }
        history.push(record(&model.weights, epoch, loss));
        if !accepted {
            break;
        }
    }
    let validation = summarize(&model.weights);
    Ok((
        model,
        RegressorReport {
            history,
            validation,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::render::{generate_samples, DatasetSpec, ParamsDistribution, RenderParams};

    fn spec(n: usize, seed: u64) -> DatasetSpec {
        DatasetSpec {
            n_per_class: 1,
            n_pose: Some(n),
            params: ParamsDistribution::fixed(&RenderParams::default()),
            seed,
            ..DatasetSpec::default()
        }
    }

    #[test]
    fn repeated_sample_fits_exactly() {
        let one = generate_samples(&spec(1, 3)).unwrap().poses.remove(0);
        let samples = vec![one.clone(); MIN_REGRESSOR_SAMPLES];
        let hp = RegressorHyperparams {
            validation_fraction: 0.0,
            ..Default::default()
        };
        let (model, _) = train_regressor(&samples, &hp, 0).unwrap();
        let p = estimate_pose(&model, &one.image).unwrap();
        assert!((p.x - one.pose.x).abs() < 1e-9 && (p.y - one.pose.y).abs() < 1e-9);
        assert!((p.theta - one.pose.theta).abs() < 1e-9);
    }

    #[test]
    fn too_few_samples_rejected() {
        let ds = generate_samples(&spec(10, 1)).unwrap();
        assert!(matches!(
            train_regressor(&ds.poses, &RegressorHyperparams::default(), 0),
            Err(Error::InvalidDataset(_))
        ));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let ds = generate_samples(&spec(60, 2)).unwrap();
        let hp = RegressorHyperparams::default();
        let obj = regressor_objective(&ds.poses, &hp).unwrap();
        let w = obj.ridge_start().unwrap();
        let g = obj.gradient(&w);
        for j in [0, 7, obj.n_params() / 2, obj.n_params() - 1] {
            let h = 1e-6;
            let mut a = w.clone();
            let mut b = w.clone();
            a[j] += h;
            b[j] -= h;
            let fd = (obj.loss(&a) - obj.loss(&b)) / (2.0 * h);
            assert!(
                (fd - g[j]).abs() <= 1e-5 * (1.0 + g[j].abs()),
                "param {j}: {fd} vs {}",
                g[j]
            );
        }
    }

    #[test]
    fn text_roundtrip() {
        let ds = generate_samples(&spec(60, 4)).unwrap();
        let hp = RegressorHyperparams {
            epochs: 2,
            ..Default::default()
        };
        let (model, _) = train_regressor(&ds.poses, &hp, 0).unwrap();
        let back = RegressorModel::from_text(&model.to_text()).unwrap();
        assert_eq!(back, model);
    }
}
