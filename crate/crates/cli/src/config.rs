//! Versioned scenario files (TOML). Every key has a default and unknown keys
//! are rejected.

use std::path::{Path, PathBuf};

use clothslide::cloth::{make_crumpled, make_flattened_with_noise, FLATTENED_NOISE_MM};
use clothslide::episode::{default_profiles, BenchmarkSuite, FabricProfile};
use clothslide::perception::{ClassifierHyperparams, RegressorHyperparams};
use clothslide::render::{ParamsDistribution, PoseRanges};
use clothslide::rng::derive_seed;
use clothslide::{
    ClothConfiguration, ClothEdge, DatasetSpec, EpisodeGains, EpisodeParams, GripperConfig,
    ImageSpec, RenderParams,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub version: u32,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub cloth: ClothSection,
    pub render: RenderParams,
    pub image: ImageSpec,
    pub gripper: GripperConfig,
    pub gains: EpisodeGains,
    pub episode: EpisodeParams,
    pub dataset: DatasetSection,
    pub training: TrainingSection,
    pub models: ModelPaths,
    pub bench: BenchSection,
    pub workspace: WorkspaceSection,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            version: CONFIG_VERSION,
            seed: 0,
            out_dir: PathBuf::from("out"),
            cloth: ClothSection::default(),
            render: RenderParams::default(),
            image: ImageSpec::default(),
            gripper: GripperConfig::default(),
            gains: EpisodeGains::default(),
            episode: EpisodeParams::default(),
            dataset: DatasetSection::default(),
            training: TrainingSection::default(),
            models: ModelPaths::default(),
            bench: BenchSection::default(),
            workspace: WorkspaceSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClothSection {
    pub configuration: ClothConfiguration,
    pub width_mm: f64,
    pub height_mm: f64,
    /// Boundary noise of a flattened cloth.
    pub boundary_noise_mm: f64,
    pub crumple_severity: f64,
}

impl Default for ClothSection {
    fn default() -> Self {
        ClothSection {
            configuration: ClothConfiguration::Flattened,
            width_mm: 300.0,
            height_mm: 200.0,
            boundary_noise_mm: FLATTENED_NOISE_MM,
            crumple_severity: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetSection {
    pub n_per_class: usize,
    pub n_pose: Option<usize>,
    pub steady_fraction: f64,
    pub pose_ranges: PoseRanges,
    pub params: ParamsDistribution,
}

impl Default for DatasetSection {
    fn default() -> Self {
        let d = DatasetSpec::default();
        DatasetSection {
            n_per_class: d.n_per_class,
            n_pose: d.n_pose,
            steady_fraction: d.steady_fraction,
            pose_ranges: d.pose_ranges,
            params: d.params,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingSection {
    pub classifier: ClassifierHyperparams,
    pub regressor: RegressorHyperparams,
}

/// Trained model files; when absent, commands train default models in
/// process from the scenario seed.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelPaths {
    pub classifier: Option<PathBuf>,
    pub regressor: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchSection {
    pub trials_per_config: usize,
    pub configurations: Vec<ClothConfiguration>,
    pub cloth_width_mm: [f64; 2],
    pub cloth_height_mm: f64,
    pub profiles: Vec<FabricProfile>,
}

impl Default for BenchSection {
    fn default() -> Self {
        let s = BenchmarkSuite::default();
        BenchSection {
            trials_per_config: s.trials_per_config,
            configurations: s.configurations,
            cloth_width_mm: s.cloth_width_mm,
            cloth_height_mm: s.cloth_height_mm,
            profiles: default_profiles(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorkspaceSection {
    pub resolution_mm: f64,
}

impl Default for WorkspaceSection {
    fn default() -> Self {
        WorkspaceSection { resolution_mm: 1.0 }
    }
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        let cfg: ScenarioConfig =
            toml::from_str(text).map_err(|e| CliError::data(format!("config: {e}")))?;
        if cfg.version != CONFIG_VERSION {
            return Err(CliError::data(format!(
                "config: unsupported version {} (expected {CONFIG_VERSION})",
                cfg.version
            )));
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> CliResult<String> {
        toml::to_string(self).map_err(|e| CliError::data(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::env(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn dataset_spec(&self) -> DatasetSpec {
        let d = &self.dataset;
        DatasetSpec {
            n_per_class: d.n_per_class,
            n_pose: d.n_pose,
            pose_ranges: d.pose_ranges,
            params: d.params.clone(),
            image: self.image,
            steady_fraction: d.steady_fraction,
            seed: self.seed,
        }
    }

    pub fn build_cloth(&self) -> CliResult<ClothEdge> {
        let c = &self.cloth;
        let seed = derive_seed(self.seed, 1, 0);
        let cloth = match c.configuration {
            ClothConfiguration::Flattened => {
                make_flattened_with_noise(c.width_mm, c.height_mm, c.boundary_noise_mm, seed)?
            }
            ClothConfiguration::Crumpled => {
                make_crumpled(c.width_mm, c.height_mm, c.crumple_severity, seed)?
            }
        };
        Ok(cloth)
    }

    pub fn benchmark_suite(&self) -> BenchmarkSuite {
        let b = &self.bench;
        BenchmarkSuite {
            profiles: b.profiles.clone(),
            configurations: b.configurations.clone(),
            trials_per_config: b.trials_per_config,
            cloth_width_mm: b.cloth_width_mm,
            cloth_height_mm: b.cloth_height_mm,
            episode: self.episode,
            gripper: self.gripper,
            image: self.image,
        }
    }
}
