//! Four-class contact classifier: multinomial logistic regression over
//! standardised sequence features, trained by full-batch gradient descent.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::features::{extract_features, CLASS_FEATURES, CLASS_FEATURE_SPEC};
use super::model_io::ModelText;
use crate::error::{invalid_arg, Error, Result};
use crate::render::ClassSample;
use crate::rng::child_rng;
use crate::types::{ContactClass, TactileSequence};

const N_CLASSES: usize = 4;
const KIND: &str = "classifier";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierHyperparams {
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2: f64,
    /// Fraction of each class held out for validation.
    pub validation_fraction: f64,
}

impl Default for ClassifierHyperparams {
    fn default() -> Self {
        ClassifierHyperparams {
            learning_rate: 0.5,
            epochs: 400,
            l2: 1e-4,
            validation_fraction: 0.2,
        }
    }
}

impl ClassifierHyperparams {
    fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0)
            || !(self.l2 >= 0.0)
            || !(0.0..1.0).contains(&self.validation_fraction)
        {
            return Err(invalid_arg(format!(
                "invalid classifier hyperparameters {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierModel {
    pub hyper: ClassifierHyperparams,
    pub feature_mean: Vec<f64>,
    pub feature_scale: Vec<f64>,
    /// Row-major `4 x (features + 1)`, bias last; rows follow [`ContactClass::ALL`].
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassifierEpoch {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub validation_loss: Option<f64>,
    pub validation_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierReport {
    /// Entry 0 is the untrained model, then one entry per epoch.
    pub history: Vec<ClassifierEpoch>,
    pub train_accuracy: f64,
    pub validation_accuracy: Option<f64>,
}

fn softmax(logits: [f64; N_CLASSES]) -> [f64; N_CLASSES] {
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut p = logits.map(|l| (l - m).exp());
    let s: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= s);
    p
}

/// First index of the maximum, so ties resolve in class declaration order.
fn argmax(scores: &[f64; N_CLASSES]) -> usize {
    let mut best = 0;
    for i in 1..N_CLASSES {
        if scores[i] > scores[best] {
            best = i;
        }
    }
    best
}

impl ClassifierModel {
    fn n_features(&self) -> usize {
        self.feature_mean.len()
    }

    fn logits_std(&self, z: &[f64]) -> [f64; N_CLASSES] {
        let stride = self.n_features() + 1;
        let mut out = [0.0; N_CLASSES];
        for (k, o) in out.iter_mut().enumerate() {
            let row = &self.weights[k * stride..(k + 1) * stride];
            *o = row[..stride - 1]
                .iter()
                .zip(z)
                .map(|(w, x)| w * x)
                .sum::<f64>()
                + row[stride - 1];
        }
        out
    }

    fn standardise(&self, f: &[f64]) -> Vec<f64> {
        f.iter()
            .zip(&self.feature_mean)
            .zip(&self.feature_scale)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }

    /// Class scores for a raw feature vector.
    pub fn scores(&self, features: &[f64]) -> [f64; N_CLASSES] {
        softmax(self.logits_std(&self.standardise(features)))
    }

    pub fn predict_features(&self, features: &[f64]) -> (ContactClass, [f64; N_CLASSES]) {
        let s = self.scores(features);
        (ContactClass::ALL[argmax(&s)], s)
    }

    pub fn to_text(&self) -> String {
        let mut m = ModelText::default();
        m.hyper("feature_spec", CLASS_FEATURE_SPEC);
        m.hyper("n_features", self.n_features());
        m.hyper("classes", ContactClass::ALL.map(|c| c.label()).join(","));
        m.hyper("learning_rate", format!("{:?}", self.hyper.learning_rate));
        m.hyper("epochs", self.hyper.epochs);
        m.hyper("l2", format!("{:?}", self.hyper.l2));
        m.hyper(
            "validation_fraction",
            format!("{:?}", self.hyper.validation_fraction),
        );
        m.param("feature_mean", &self.feature_mean);
        m.param("feature_scale", &self.feature_scale);
        m.param("weights", &self.weights);
        m.render(KIND)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let m = ModelText::parse(text, KIND)?;
        if m.get_str("feature_spec")? != CLASS_FEATURE_SPEC {
            return Err(Error::InvalidModel(format!(
                "unsupported feature spec `{}`",
                m.get_str("feature_spec")?
            )));
        }
        let classes = ContactClass::ALL.map(|c| c.label()).join(",");
        if m.get_str("classes")? != classes {
            return Err(Error::InvalidModel("unexpected class list".into()));
        }
        let n: usize = m.get("n_features")?;
        if n != CLASS_FEATURES {
            return Err(Error::InvalidModel(format!(
                "expected {CLASS_FEATURES} features, found {n}"
            )));
        }
        let model = ClassifierModel {
            hyper: ClassifierHyperparams {
                learning_rate: m.get("learning_rate")?,
                epochs: m.get("epochs")?,
                l2: m.get("l2")?,
                validation_fraction: m.get("validation_fraction")?,
            },
            feature_mean: m.get_param("feature_mean", n)?,
            feature_scale: m.get_param("feature_scale", n)?,
            weights: m.get_param("weights", N_CLASSES * (n + 1))?,
        };
        if model.feature_scale.iter().any(|&s| !(s > 0.0)) {
            return Err(Error::InvalidModel(
                "feature scales must be positive".into(),
            ));
        }
        Ok(model)
    }
}

/// Classifies a five-frame sequence; scores follow [`ContactClass::ALL`].
pub fn classify(
    model: &ClassifierModel,
    seq: &TactileSequence,
) -> (ContactClass, [f64; N_CLASSES]) {
    model.predict_features(&extract_features(seq))
}

/// Extracts features from every sample (in parallel, order preserved).
pub fn sample_features(samples: &[ClassSample]) -> Vec<Vec<f64>> {
    samples
        .par_iter()
        .map(|s| extract_features(&s.sequence))
        .collect()
}

pub fn train_classifier(
    samples: &[ClassSample],
    hp: &ClassifierHyperparams,
    seed: u64,
) -> Result<(ClassifierModel, ClassifierReport)> {
    let labels: Vec<ContactClass> = samples.iter().map(|s| s.class).collect();
    train_classifier_on_features(&sample_features(samples), &labels, hp, seed)
}

/// Mean cross-entropy and accuracy of standardised rows under `model`.
fn evaluate(model: &ClassifierModel, z: &[Vec<f64>], y: &[usize], idx: &[usize]) -> (f64, f64) {
    let mut loss = 0.0;
    let mut correct = 0usize;
    for &i in idx {
        let p = softmax(model.logits_std(&z[i]));
        loss -= p[y[i]].max(1e-300).ln();
        correct += (argmax(&p) == y[i]) as usize;
    }
    let n = idx.len().max(1) as f64;
    (loss / n, correct as f64 / n)
}

pub fn train_classifier_on_features(
    features: &[Vec<f64>],
    labels: &[ContactClass],
    hp: &ClassifierHyperparams,
    seed: u64,
) -> Result<(ClassifierModel, ClassifierReport)> {
    hp.validate()?;
    if features.len() != labels.len() {
        return Err(invalid_arg("features and labels differ in length"));
    }
    if let Some(f) = features.iter().find(|f| f.len() != CLASS_FEATURES) {
        return Err(Error::InvalidDataset(format!(
            "feature vector of length {}, expected {CLASS_FEATURES}",
            f.len()
        )));
    }
    let y: Vec<usize> = labels.iter().map(|c| c.index()).collect();
    // Stratified split keeping at least one training sample per class.
    let mut rng = child_rng(seed, 20, 0);
    let (mut train, mut val) = (Vec::new(), Vec::new());
    for class in ContactClass::ALL {
        let mut idx: Vec<usize> = (0..y.len()).filter(|&i| y[i] == class.index()).collect();
        if idx.is_empty() {
            return Err(Error::InvalidDataset(format!(
                "no samples of class {class}"
            )));
        }
        idx.shuffle(&mut rng);
        let n_val =
            ((idx.len() as f64 * hp.validation_fraction).floor() as usize).min(idx.len() - 1);
        val.extend_from_slice(&idx[..n_val]);
        train.extend_from_slice(&idx[n_val..]);
    }
    train.sort_unstable();
    val.sort_unstable();

    let nf = CLASS_FEATURES;
    let nt = train.len() as f64;
    let mut mean = vec![0.0; nf];
    for &i in &train {
        mean.iter_mut()
            .zip(&features[i])
            .for_each(|(m, v)| *m += v / nt);
    }
    let mut scale = vec![0.0; nf];
    for &i in &train {
        scale
            .iter_mut()
            .zip(&features[i])
            .zip(&mean)
            .for_each(|((s, v), m)| *s += (v - m) * (v - m) / nt);
    }
    scale
        .iter_mut()
        .for_each(|s| *s = if *s > 1e-18 { s.sqrt() } else { 1.0 });

    let mut model = ClassifierModel {
        hyper: *hp,
        feature_mean: mean,
        feature_scale: scale,
        weights: vec![0.0; N_CLASSES * (nf + 1)],
    };
    let z: Vec<Vec<f64>> = features.iter().map(|f| model.standardise(f)).collect();
    let record = |model: &ClassifierModel, epoch: usize| {
        let (tl, ta) = evaluate(model, &z, &y, &train);
        let v = (!val.is_empty()).then(|| evaluate(model, &z, &y, &val));
        ClassifierEpoch {
            epoch,
            train_loss: tl,
            train_accuracy: ta,
            validation_loss: v.map(|v| v.0),
            validation_accuracy: v.map(|v| v.1),
        }
    };
    let mut history = vec![record(&model, 0)];
    let stride = nf + 1;
    for epoch in 1..=hp.epochs {
        let mut grad = vec![0.0; N_CLASSES * stride];
        for &i in &train {
            let p = softmax(model.logits_std(&z[i]));
            for k in 0..N_CLASSES {
                let d = (p[k] - (y[i] == k) as usize as f64) / nt;
                let row = &mut grad[k * stride..(k + 1) * stride];
                row[..nf]
                    .iter_mut()
                    .zip(&z[i])
                    .for_each(|(g, x)| *g += d * x);
                row[nf] += d;
            }
        }
        for k in 0..N_CLASSES {
            for j in 0..nf {
                grad[k * stride + j] += hp.l2 * model.weights[k * stride + j];
            }
        }
        model
            .weights
            .iter_mut()
            .zip(&grad)
            .for_each(|(w, g)| *w -= hp.learning_rate * g);
        history.push(record(&model, epoch));
    }
    let last = *history.last().expect("history has the initial entry");
    let report = ClassifierReport {
        history,
        train_accuracy: last.train_accuracy,
        validation_accuracy: last.validation_accuracy,
    };
    Ok((model, report))
}
