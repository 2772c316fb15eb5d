use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use clothslide::episode::{run_benchmark, run_episode, write_trajectory_jsonl};
use clothslide::gripper::compute_workspace;
use clothslide::perception::{
    evaluate_classical, evaluate_regressor, train_classifier, train_default_models,
    train_regressor, PoseErrorSummary,
};
use clothslide::render::{generate_dataset, read_dataset, write_pgm, Dataset, LABELS_FILE};
use clothslide::{ClassifierModel, EpisodeConfig, PerceptionModels, RegressorModel};
use serde::Serialize;

use crate::config::ScenarioConfig;
use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(
    name = "clothslide",
    version,
    about = "Visuotactile cloth-edge sliding simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by every subcommand; they override the config file.
#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Scenario file (TOML); defaults apply when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    Classifier,
    Regressor,
}

#[derive(Debug, Clone, Args)]
pub struct ModelFlags {
    #[arg(long)]
    pub classifier: Option<PathBuf>,
    #[arg(long)]
    pub regressor: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render a labelled synthetic dataset.
    GenData {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n_per_class: Option<usize>,
    },
    /// Train the contact classifier or the pose regressor on a dataset.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        kind: ModelKind,
        #[arg(long)]
        dataset: PathBuf,
        /// Model file; defaults to `<out>/<kind>.txt`.
        #[arg(long)]
        model_out: Option<PathBuf>,
    },
    /// Compare pose estimators on the pose samples of a dataset.
    EvalPose {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: PathBuf,
        /// Regressor trained without the pose-diversity data.
        #[arg(long)]
        baseline_model: Option<PathBuf>,
        #[arg(long)]
        dataset: PathBuf,
    },
    /// Run one sliding episode and log its trajectory.
    Run {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        models: ModelFlags,
    },
    /// Run the fabric benchmark suite.
    Bench {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        models: ModelFlags,
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Rasterize the finger workspaces with and without abduction.
    Workspace {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        resolution: Option<f64>,
    },
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::GenData { common, .. }
            | Command::Train { common, .. }
            | Command::EvalPose { common, .. }
            | Command::Run { common, .. }
            | Command::Bench { common, .. }
            | Command::Workspace { common, .. } => common,
        }
    }
}

fn load_config(common: &Common) -> CliResult<ScenarioConfig> {
    let mut cfg = match &common.config {
        Some(path) => ScenarioConfig::load(path)?,
        None => ScenarioConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.out_dir = out.clone();
    }
    Ok(cfg)
}

fn prepare_out(cfg: &ScenarioConfig) -> CliResult<&Path> {
    let out = cfg.out_dir.as_path();
    fs::create_dir_all(out)
        .map_err(|e| CliError::env(format!("cannot create {}: {e}", out.display())))?;
    write_file(&out.join("scenario.toml"), cfg.to_toml()?.as_bytes())?;
    Ok(out)
}

fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    fs::write(path, bytes)
        .map_err(|e| CliError::env(format!("cannot write {}: {e}", path.display())))
}

fn read_text(path: &Path, what: &str) -> CliResult<String> {
    fs::read_to_string(path)
        .map_err(|e| CliError::env(format!("cannot read {what} {}: {e}", path.display())))
}

fn load_classifier(path: &Path) -> CliResult<ClassifierModel> {
    ClassifierModel::from_text(&read_text(path, "classifier model")?)
        .map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

fn load_regressor(path: &Path) -> CliResult<RegressorModel> {
    RegressorModel::from_text(&read_text(path, "regressor model")?)
        .map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

/// Models from flags or config; either missing one is trained in process.
fn load_models(cfg: &ScenarioConfig, flags: &ModelFlags) -> CliResult<PerceptionModels> {
    let cls_path = flags
        .classifier
        .clone()
        .or_else(|| cfg.models.classifier.clone());
    let reg_path = flags
        .regressor
        .clone()
        .or_else(|| cfg.models.regressor.clone());
    let classifier = cls_path.as_deref().map(load_classifier).transpose()?;
    let regressor = reg_path.as_deref().map(load_regressor).transpose()?;
    Ok(match (classifier, regressor) {
        (Some(classifier), Some(regressor)) => PerceptionModels {
            classifier,
            regressor,
        },
        (c, r) => {
            eprintln!("training default perception models (seed {})", cfg.seed);
            let (dc, dr) = train_default_models(cfg.seed)?;
            PerceptionModels {
                classifier: c.unwrap_or(dc),
                regressor: r.unwrap_or(dr),
            }
        }
    })
}

fn open_dataset(dir: &Path) -> CliResult<Dataset> {
    if !dir.is_dir() {
        return Err(CliError::env(format!(
            "dataset directory {} not found",
            dir.display()
        )));
    }
    if !dir.join(LABELS_FILE).is_file() {
        return Err(CliError::data(format!(
            "{} has no {LABELS_FILE}",
            dir.display()
        )));
    }
    Ok(read_dataset(dir)?)
}

fn write_csv_rows<T: Serialize>(path: &Path, rows: &[T]) -> CliResult<()> {
    let env = |e: csv::Error| CliError::env(format!("cannot write {}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(env)?;
    for r in rows {
        w.serialize(r).map_err(env)?;
    }
    w.flush()
        .map_err(|e| CliError::env(format!("cannot write {}: {e}", path.display())))
}

pub fn execute(cli: Cli) -> CliResult<()> {
    let cfg = load_config(cli.command.common())?;
    match cli.command {
        Command::GenData { n_per_class, .. } => gen_data(cfg, n_per_class),
        Command::Train {
            kind,
            dataset,
            model_out,
            ..
        } => train(&cfg, kind, &dataset, model_out),
        Command::EvalPose {
            model,
            baseline_model,
            dataset,
            ..
        } => eval_pose(&cfg, &model, baseline_model.as_deref(), &dataset),
        Command::Run { models, .. } => run(&cfg, &models),
        Command::Bench { models, trials, .. } => bench(cfg, &models, trials),
        Command::Workspace { resolution, .. } => workspace(cfg, resolution),
    }
}

fn gen_data(mut cfg: ScenarioConfig, n_per_class: Option<usize>) -> CliResult<()> {
    if let Some(n) = n_per_class {
        cfg.dataset.n_per_class = n;
    }
    let spec = cfg.dataset_spec();
    spec.validate()?;
    let out = prepare_out(&cfg)?;
    let labels = generate_dataset(&spec, out)?;
    println!(
        "sequences={} pose_samples={}",
        spec.n_sequences(),
        spec.n_pose_samples()
    );
    println!("labels={}", labels.display());
    Ok(())
}

fn train(
    cfg: &ScenarioConfig,
    kind: ModelKind,
    dataset: &Path,
    model_out: Option<PathBuf>,
) -> CliResult<()> {
    let ds = open_dataset(dataset)?;
    let out = prepare_out(cfg)?;
    match kind {
        ModelKind::Classifier => {
            let (model, report) =
                train_classifier(&ds.sequences, &cfg.training.classifier, cfg.seed)?;
            let path = model_out.unwrap_or_else(|| out.join("classifier.txt"));
            write_file(&path, model.to_text().as_bytes())?;
            write_csv_rows(&out.join("classifier_metrics.csv"), &report.history)?;
            let held_out = report.validation_accuracy.unwrap_or(report.train_accuracy);
            println!("model={}", path.display());
            println!(
                "train_accuracy={:.4} accuracy={held_out:.4}",
                report.train_accuracy
            );
        }
        ModelKind::Regressor => {
            let (model, report) = train_regressor(&ds.poses, &cfg.training.regressor, cfg.seed)?;
            let path = model_out.unwrap_or_else(|| out.join("regressor.txt"));
            write_file(&path, model.to_text().as_bytes())?;
            write_csv_rows(&out.join("regressor_metrics.csv"), &report.history)?;
            let (split, s) = match report.validation {
                Some(v) => ("validation", v),
                None => ("train", evaluate_regressor(&model, &ds.poses)?),
            };
            println!("model={}", path.display());
            println!(
                "split={split} distance_mm={:.4} angle_deg={:.4}",
                s.distance_mm, s.angle_deg
            );
        }
    }
    Ok(())
}

fn eval_pose(
    cfg: &ScenarioConfig,
    model: &Path,
    baseline: Option<&Path>,
    dataset: &Path,
) -> CliResult<()> {
    let regressor = load_regressor(model)?;
    let ablated = baseline.map(load_regressor).transpose()?;
    let ds = open_dataset(dataset)?;
    if ds.poses.is_empty() {
        return Err(CliError::data(format!(
            "{} has no pose samples",
            dataset.display()
        )));
    }
    let out = prepare_out(cfg)?;
    let row = |name: &str, s: &PoseErrorSummary| {
        format!(
            "{name},{:.4},{:.4},{:.4},{:.4}\n",
            s.x_mm, s.y_mm, s.distance_mm, s.angle_deg
        )
    };
    let mut csv = String::from("method,X,Y,Distance,Angle\n");
    let (classical, misses) = evaluate_classical(&ds.poses);
    csv.push_str(&row("classical", &classical));
    if let Some(m) = &ablated {
        csv.push_str(&row(
            "regressor_without_synthetic",
            &evaluate_regressor(m, &ds.poses)?,
        ));
    }
    csv.push_str(&row(
        "regressor",
        &evaluate_regressor(&regressor, &ds.poses)?,
    ));
    write_file(&out.join("pose_eval.csv"), csv.as_bytes())?;
    print!("{csv}");
    if misses > 0 {
        eprintln!(
            "classical detector found no edge in {misses} of {} images",
            ds.poses.len()
        );
    }
    Ok(())
}

fn run(cfg: &ScenarioConfig, flags: &ModelFlags) -> CliResult<()> {
    let models = load_models(cfg, flags)?;
    let cloth = cfg.build_cloth()?;
    let episode = EpisodeConfig {
        cloth,
        configuration: cfg.cloth.configuration,
        params: cfg.episode,
        render: cfg.render,
        image: cfg.image,
        gripper: cfg.gripper,
        seed: cfg.seed,
    };
    let result = run_episode(&episode, &models, &cfg.gains)?;
    let out = prepare_out(cfg)?;
    let path = out.join("trajectory.jsonl");
    let file = fs::File::create(&path)
        .map_err(|e| CliError::env(format!("cannot write {}: {e}", path.display())))?;
    write_trajectory_jsonl(&result, std::io::BufWriter::new(file))?;
    println!(
        "success={} corrections={} duration_s={:.3} final_phase={}",
        result.success,
        result.corrections.total(),
        result.duration_s,
        result.final_phase.label()
    );
    if let Some(reason) = &result.failure_reason {
        println!("failure_reason={reason}");
    }
    println!("trajectory={}", path.display());
    Ok(())
}

fn bench(mut cfg: ScenarioConfig, flags: &ModelFlags, trials: Option<usize>) -> CliResult<()> {
    if let Some(t) = trials {
        cfg.bench.trials_per_config = t;
    }
    let suite = cfg.benchmark_suite();
    suite.validate()?;
    let models = load_models(&cfg, flags)?;
    let table = run_benchmark(&suite, &models, &cfg.gains, cfg.seed)?;
    let out = prepare_out(&cfg)?;
    let csv = table.to_csv();
    write_file(&out.join("benchmark.csv"), csv.as_bytes())?;
    print!("{csv}");
    Ok(())
}

fn workspace(mut cfg: ScenarioConfig, resolution: Option<f64>) -> CliResult<()> {
    if let Some(r) = resolution {
        cfg.workspace.resolution_mm = r;
    }
    let res = cfg.workspace.resolution_mm;
    let full = compute_workspace(&cfg.gripper, res)?;
    let baseline_cfg = clothslide::GripperConfig {
        abduction_range_rad: 0.0,
        ..cfg.gripper
    };
    let baseline = compute_workspace(&baseline_cfg, res)?;
    let out = prepare_out(&cfg)?;
    let mut csv = String::from("config,area_mm2\n");
    let mut areas = Vec::new();
    for (name, report) in [("full", &full), ("baseline", &baseline)] {
        let area = report.left.area_mm2 + report.right.area_mm2;
        csv.push_str(&format!("{name},{area:.3}\n"));
        areas.push(area);
        for (finger, ws) in [("left", &report.left), ("right", &report.right)] {
            write_pgm(
                &ws.to_image(),
                &out.join(format!("workspace_{name}_{finger}.pgm")),
            )?;
        }
    }
    write_file(&out.join("workspace.csv"), csv.as_bytes())?;
    print!("{csv}");
    let ratio = if areas[1] > 0.0 {
        format!("{:.4}", areas[0] / areas[1])
    } else {
        "inf".to_string()
    };
    println!("area_ratio={ratio}");
    Ok(())
}
