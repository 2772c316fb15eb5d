#![allow(dead_code)]

use std::sync::OnceLock;

use clothslide::perception::train_default_models;
use clothslide::PerceptionModels;

pub const MODEL_SEED: u64 = 7;

/// Default-trained models, shared by every test in one binary.
pub fn models() -> &'static PerceptionModels {
    static MODELS: OnceLock<PerceptionModels> = OnceLock::new();
    MODELS.get_or_init(|| {
        let (classifier, regressor) = train_default_models(MODEL_SEED).expect("default training");
        PerceptionModels {
            classifier,
            regressor,
        }
    })
}
