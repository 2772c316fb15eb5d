//! Benchmark suite: seven synthetic fabric profiles, flattened and crumpled.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    run_episode, ClothConfiguration, EpisodeConfig, EpisodeGains, EpisodeParams, PerceptionModels,
};
use crate::cloth::{make_crumpled, make_flattened};
use crate::error::{invalid_arg, Result};
use crate::gripper::GripperConfig;
use crate::render::{ImageSpec, RenderParams, Texture};
use crate::rng::{child_rng, derive_seed};

/// Rendering and crumpling settings standing in for one fabric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FabricProfile {
    pub name: String,
    pub texture: Texture,
    pub texture_amplitude: f64,
    pub noise_sigma: f64,
    pub crumple_severity: f64,
}

impl FabricProfile {
    fn new(
        name: &str,
        texture: Texture,
        texture_amplitude: f64,
        noise_sigma: f64,
        crumple_severity: f64,
    ) -> Self {
        FabricProfile {
            name: name.into(),
            texture,
            texture_amplitude,
            noise_sigma,
            crumple_severity,
        }
    }
}

pub fn default_profiles() -> Vec<FabricProfile> {
    use Texture::*;
    vec![
        FabricProfile::new("TF1", Plain, 0.0, 0.02, 0.3),
        FabricProfile::new("TF2", Stripes, 0.15, 0.03, 0.4),
        FabricProfile::new("TF3", Dots, 0.2, 0.03, 0.4),
        FabricProfile::new("TF4", Weave, 0.15, 0.02, 0.3),
        FabricProfile::new("PT1", Stripes, 0.3, 0.05, 0.5),
        FabricProfile::new("LB1", Weave, 0.3, 0.05, 0.6),
        FabricProfile::new("PT2", Dots, 0.3, 0.05, 0.5),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkSuite {
    pub profiles: Vec<FabricProfile>,
    pub configurations: Vec<ClothConfiguration>,
    pub trials_per_config: usize,
    /// Cloth edge length along the slide is drawn from this range.
    pub cloth_width_mm: [f64; 2],
    pub cloth_height_mm: f64,
    pub episode: EpisodeParams,
    pub gripper: GripperConfig,
    pub image: ImageSpec,
}

impl Default for BenchmarkSuite {
    fn default() -> Self {
        BenchmarkSuite {
            profiles: default_profiles(),
            configurations: ClothConfiguration::ALL.to_vec(),
            trials_per_config: 5,
            cloth_width_mm: [260.0, 340.0],
            cloth_height_mm: 200.0,
            episode: EpisodeParams::default(),
            gripper: GripperConfig::default(),
            image: ImageSpec::default(),
        }
    }
}

impl BenchmarkSuite {
    pub fn validate(&self) -> Result<()> {
        if self.trials_per_config == 0 {
            return Err(invalid_arg("trials_per_config must be at least 1"));
        }
        if self.profiles.is_empty() || self.configurations.is_empty() {
            return Err(invalid_arg(
                "suite needs at least one profile and one configuration",
            ));
        }
        let [lo, hi] = self.cloth_width_mm;
        if !(lo > 0.0 && lo <= hi) {
            return Err(invalid_arg(format!(
                "cloth width range {:?} is not ordered and positive",
                self.cloth_width_mm
            )));
        }
        self.episode.validate()?;
        self.gripper.validate()?;
        self.image.validate()
    }

    /// Episode for one trial; every random choice derives from `seed`.
    pub fn trial_config(
        &self,
        profile: usize,
        configuration: ClothConfiguration,
        trial: usize,
        seed: u64,
    ) -> Result<EpisodeConfig> {
        let prof = &self.profiles[profile];
        let conf_index = configuration as u64;
        let trial_seed = derive_seed(
            derive_seed(seed, 20 + conf_index, profile as u64),
            30,
            trial as u64,
        );
        let mut rng = child_rng(trial_seed, 1, 0);
        let [lo, hi] = self.cloth_width_mm;
        let width = if lo < hi {
            rand::Rng::random_range(&mut rng, lo..hi)
        } else {
            lo
        };
        let cloth_seed = derive_seed(trial_seed, 2, 0);
        let cloth = match configuration {
            ClothConfiguration::Flattened => {
                make_flattened(width, self.cloth_height_mm, cloth_seed)?
            }
            ClothConfiguration::Crumpled => make_crumpled(
                width,
                self.cloth_height_mm,
                prof.crumple_severity,
                cloth_seed,
            )?,
        };
        let render = RenderParams {
            texture: prof.texture,
            texture_amplitude: prof.texture_amplitude,
            noise_sigma: prof.noise_sigma,
            seed: derive_seed(trial_seed, 3, 0),
            ..RenderParams::default()
        };
        Ok(EpisodeConfig {
            cloth,
            configuration,
            params: self.episode,
            render,
            image: self.image,
            gripper: self.gripper,
            seed: derive_seed(trial_seed, 4, 0),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkRow {
    pub configuration: ClothConfiguration,
    /// Successes per profile, in suite order.
    pub successes: Vec<usize>,
    pub trials: usize,
    /// Every trial stopped in a terminal phase within the time limit.
    pub all_terminated: bool,
    /// Every logged command stayed within the clip limits.
    pub commands_bounded: bool,
    pub corrections: usize,
}

impl BenchmarkRow {
    pub fn total_successes(&self) -> usize {
        self.successes.iter().sum()
    }

    pub fn total_trials(&self) -> usize {
        self.trials * self.successes.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkTable {
    pub profiles: Vec<String>,
    pub rows: Vec<BenchmarkRow>,
}

impl BenchmarkTable {
    /// `configuration,<profiles...>,average` with `k/n` cells.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("configuration");
        for p in &self.profiles {
            s.push(',');
            s.push_str(p);
        }
        s.push_str(",average\n");
        for r in &self.rows {
            s.push_str(r.configuration.label());
            for k in &r.successes {
                s.push_str(&format!(",{k}/{}", r.trials));
            }
            s.push_str(&format!(",{}/{}\n", r.total_successes(), r.total_trials()));
        }
        s
    }

    pub fn row(&self, configuration: ClothConfiguration) -> Option<&BenchmarkRow> {
        self.rows.iter().find(|r| r.configuration == configuration)
    }
}

/// Runs every (configuration, profile, trial) in parallel; the table does
/// not depend on scheduling.
pub fn run_benchmark(
    suite: &BenchmarkSuite,
    models: &PerceptionModels,
    gains: &EpisodeGains,
    seed: u64,
) -> Result<BenchmarkTable> {
    suite.validate()?;
    models.validate(&suite.image)?;
    let jobs: Vec<(ClothConfiguration, usize, usize)> = suite
        .configurations
        .iter()
        .flat_map(|&c| {
            (0..suite.profiles.len())
                .flat_map(move |p| (0..suite.trials_per_config).map(move |t| (c, p, t)))
        })
        .collect();
    let yaw_lim = gains.alignment.yaw_limit_deg;
    let ab_lim = gains.alignment.ab_limit_deg;
    let outcomes = jobs
        .par_iter()
        .map(|&(c, p, t)| {
            let cfg = suite.trial_config(p, c, t, seed)?;
            let r = run_episode(&cfg, models, gains)?;
            let bounded = r
                .trajectory
                .iter()
                .all(|k| k.u_yaw_deg.abs() <= yaw_lim && k.u_ab_deg.abs() <= ab_lim);
            let terminated = r.final_phase.is_terminal()
                && r.duration_s <= cfg.params.max_duration_s + 1.5 * cfg.params.dt();
            Ok((r.success, terminated, bounded, r.corrections.total()))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rows: Vec<BenchmarkRow> = suite
        .configurations
        .iter()
        .map(|&c| BenchmarkRow {
            configuration: c,
            successes: vec![0; suite.profiles.len()],
            trials: suite.trials_per_config,
            all_terminated: true,
            commands_bounded: true,
            corrections: 0,
        })
        .collect();
    for (&(c, p, _), &(success, terminated, bounded, corr)) in jobs.iter().zip(&outcomes) {
        let row = rows
            .iter_mut()
            .find(|r| r.configuration == c)
            .expect("row per configuration");
        row.successes[p] += usize::from(success);
        row.all_terminated &= terminated;
        row.commands_bounded &= bounded;
        row.corrections += corr;
    }
    Ok(BenchmarkTable {
        profiles: suite.profiles.iter().map(|p| p.name.clone()).collect(),
        rows,
    })
}
