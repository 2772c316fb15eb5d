//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Run with `cargo test -p clothslide --test acceptance`.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use clothslide::control::{AlignmentController, PidController};
use clothslide::episode::{run_benchmark, BenchmarkSuite};
use clothslide::gripper::{compute_workspace, Finger};
use clothslide::metrics::{angular_loss, mse, ssim, SsimParams};
use clothslide::perception::{
    brute_force_pose_oracle, classify, default_classifier_spec, default_regressor_spec,
    estimate_pose, evaluate_classical, evaluate_regressor, pose_errors, regressor_objective,
    train_classifier, train_regressor, ClassifierHyperparams, OracleGrid, PoseErrorSummary,
    RegressorHyperparams,
};
use clothslide::render::{generate_samples, ParamsDistribution, PoseRanges};
use clothslide::rng::rng_from;
use clothslide::{
    AlignmentGains, ClassifierModel, ClothConfiguration, ContactClass, DatasetSpec, EpisodeGains,
    GripperConfig, PerceptionModels, PidGains, RegressorModel, TactileImage, Texture,
};
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;

const SEED: u64 = 7;

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Verdict {
            pass,
            detail: detail.into(),
        }
    }
}

struct Report {
    failures: usize,
}

impl Report {
    fn record(&mut self, id: &str, title: &str, budget: Duration, run: impl FnOnce() -> Verdict) {
        let start = Instant::now();
        let v = run();
        let elapsed = start.elapsed();
        let in_time = elapsed <= budget;
        let pass = v.pass && in_time;
        if !pass {
            self.failures += 1;
        }
        let timing = if in_time {
            String::new()
        } else {
            format!(" over the {budget:?} budget")
        };
        println!(
            "{id} {} {title}: {} [{:.2} s{timing}]",
            if pass { "PASS" } else { "FAIL" },
            v.detail,
            elapsed.as_secs_f64()
        );
    }
}

fn random_image(rng: &mut impl Rng, w: usize, h: usize) -> TactileImage {
    TactileImage::new(w, h, 0.3, (0..w * h).map(|_| rng.random::<f64>()).collect()).unwrap()
}

fn c1_loss_identities() -> Verdict {
    let mut rng = rng_from(101);
    let mut worst_ssim = 0.0f64;
    let mut worst_mse = 0.0f64;
    for i in 0..50 {
        let img = random_image(&mut rng, 8 + i % 24, 8 + i % 17);
        for p in [SsimParams::default(), SsimParams::sliding(7)] {
            worst_ssim = worst_ssim.max((ssim(&img, &img, &p).unwrap() - 1.0).abs());
        }
        worst_mse = worst_mse.max(mse(&img, &img).unwrap());
    }
    let mut worst_self = 0.0f64;
    let mut worst_period = 0.0f64;
    for _ in 0..1000 {
        let a = rng.random_range(-10.0..10.0);
        let b = rng.random_range(-10.0..10.0);
        worst_self = worst_self.max(angular_loss(a, a).abs());
        worst_period = worst_period.max((angular_loss(a + 2.0 * PI, b) - angular_loss(a, b)).abs());
    }
    Verdict::new(
        worst_ssim <= 1e-9 && worst_mse == 0.0 && worst_self == 0.0 && worst_period <= 1e-9,
        format!("|ssim(x,x)-1| {worst_ssim:.1e}, mse(x,x) {worst_mse}, angular(t,t) {worst_self}, periodicity {worst_period:.1e}"),
    )
}

fn pid_outputs(kp: f64, ki: f64, kd: f64, alpha: f64, errors: &[f64], dt: f64) -> Vec<f64> {
    let mut c = PidController::new(PidGains::new(kp, ki, kd, alpha).unwrap()).unwrap();
    errors.iter().map(|&e| c.update(e, dt).unwrap()).collect()
}

fn variance(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n
}

fn c2_pid_contract() -> Verdict {
    let p = pid_outputs(2.0, 0.0, 0.0, 1.0, &[3.0], 0.01);
    let i = pid_outputs(0.0, 1.0, 0.0, 1.0, &[1.0, 1.0, 1.0], 1.0);
    let d = pid_outputs(0.0, 0.0, 1.0, 0.5, &[0.0, 1.0, 1.0], 1.0);
    let exact = p == [6.0] && i == [1.0, 2.0, 3.0] && d == [0.0, 0.5, 0.25];
    let mut rng = rng_from(202);
    let noise: Vec<f64> = (0..1000).map(|_| StandardNormal.sample(&mut rng)).collect();
    let filtered = pid_outputs(0.0, 0.0, 1.0, 0.2, &noise, 0.01);
    let raw = pid_outputs(0.0, 0.0, 1.0, 1.0, &noise, 0.01);
    let ratio = variance(&filtered[1..]) / variance(&raw[1..]);
    Verdict::new(
        exact && ratio < 0.3,
        format!("P {p:?}, I {i:?}, D {d:?}; kd-term variance ratio {ratio:.3} (alpha 0.2 vs 1)"),
    )
}

fn c3_clipping() -> Verdict {
    let mut rng = rng_from(303);
    let gains = AlignmentGains::default();
    let mut worst_yaw = 0.0f64;
    let mut worst_ab = 0.0f64;
    let mut controller = AlignmentController::new(gains).unwrap();
    for k in 0..100_000 {
        if k % 100 == 0 {
            let g = AlignmentGains {
                kpy: rng.random_range(-100.0..100.0),
                kdy: rng.random_range(-10.0..10.0),
                kpt: rng.random_range(-1000.0..1000.0),
                kdt: rng.random_range(-100.0..100.0),
                beta: rng.random_range(-2.0..2.0),
                ..gains
            };
            controller = AlignmentController::new(g).unwrap();
        }
        let u = controller
            .update(
                rng.random_range(-50.0..50.0),
                rng.random_range(-PI..PI),
                rng.random_range(1e-3..0.2),
            )
            .unwrap();
        worst_yaw = worst_yaw.max(u.u_yaw_deg.abs());
        worst_ab = worst_ab.max(u.u_ab_deg.abs());
    }
    Verdict::new(
        worst_yaw <= 5.0 && worst_ab <= 30.0,
        format!("max |u_yaw| {worst_yaw:.3} deg, max |u_ab| {worst_ab:.3} deg over 1e5 calls"),
    )
}

fn classifier_heldout_spec() -> DatasetSpec {
    DatasetSpec {
        n_per_class: 500,
        n_pose: Some(0),
        params: ParamsDistribution {
            noise_sigma: [0.05, 0.05],
            ..ParamsDistribution::default()
        },
        seed: 9001,
        ..DatasetSpec::default()
    }
}

fn c4_classifier(seed: u64, out: &Path) -> (Verdict, ClassifierModel) {
    let train = generate_samples(&default_classifier_spec(seed)).unwrap();
    let (model, _) =
        train_classifier(&train.sequences, &ClassifierHyperparams::default(), seed).unwrap();
    let test = generate_samples(&classifier_heldout_spec()).unwrap();
    let predicted: Vec<ContactClass> = test
        .sequences
        .par_iter()
        .map(|s| classify(&model, &s.sequence).0)
        .collect();
    let mut confusion = [[0usize; 4]; 4];
    for (s, p) in test.sequences.iter().zip(&predicted) {
        confusion[s.class.index()][p.index()] += 1;
    }
    let correct: usize = (0..4).map(|k| confusion[k][k]).sum();
    let accuracy = correct as f64 / test.sequences.len() as f64;
    let precision: Vec<f64> = (0..4)
        .map(|k| {
            let predicted_k: usize = (0..4).map(|t| confusion[t][k]).sum();
            if predicted_k == 0 {
                0.0
            } else {
                confusion[k][k] as f64 / predicted_k as f64
            }
        })
        .collect();
    let mut csv = String::from("class,precision\n");
    for (c, p) in ContactClass::ALL.iter().zip(&precision) {
        csv.push_str(&format!("{},{p}\n", c.label()));
    }
    csv.push_str(&format!("accuracy,{accuracy}\n"));
    fs::write(out.join("classifier.txt"), model.to_text()).unwrap();
    fs::write(out.join("classifier_eval.csv"), csv).unwrap();
    let min_precision = precision.iter().cloned().fold(1.0, f64::min);
    let verdict = Verdict::new(
        accuracy >= 0.96 && min_precision >= 0.90,
        format!("held-out accuracy {accuracy:.4} on 4x500 at noise 0.05, min per-class precision {min_precision:.4}"),
    );
    (verdict, model)
}

fn pose_heldout(textured_noisy: bool, n: usize, seed: u64) -> DatasetSpec {
    let params = if textured_noisy {
        ParamsDistribution {
            textures: vec![Texture::Stripes, Texture::Dots, Texture::Weave],
            texture_amplitude: [0.15, 0.3],
            noise_sigma: [0.03, 0.1],
            ..ParamsDistribution::default()
        }
    } else {
        ParamsDistribution::default()
    };
    DatasetSpec {
        n_per_class: 1,
        n_pose: Some(n),
        params,
        seed,
        ..DatasetSpec::default()
    }
}

fn summary_row(name: &str, s: &PoseErrorSummary) -> String {
    format!(
        "{name},{},{},{},{}\n",
        s.x_mm, s.y_mm, s.distance_mm, s.angle_deg
    )
}

fn c5_pose(seed: u64, out: &Path) -> (Verdict, RegressorModel) {
    let hp = RegressorHyperparams::default();
    let train = generate_samples(&default_regressor_spec(seed)).unwrap();
    let (model, _) = train_regressor(&train.poses, &hp, seed).unwrap();
    let ablation_spec = DatasetSpec {
        n_pose: Some(200),
        ..default_regressor_spec(seed)
    };
    let (ablated, _) =
        train_regressor(&generate_samples(&ablation_spec).unwrap().poses, &hp, seed).unwrap();

    let mut heldout = generate_samples(&pose_heldout(false, 500, 9101))
        .unwrap()
        .poses;
    let textured = generate_samples(&pose_heldout(true, 500, 9102))
        .unwrap()
        .poses;
    heldout.extend(textured.iter().cloned());

    let full = evaluate_regressor(&model, &heldout).unwrap();
    let small = evaluate_regressor(&ablated, &heldout).unwrap();
    let reg_tex = evaluate_regressor(&model, &textured).unwrap();
    let (cls_tex, failures) = evaluate_classical(&textured);

    let mut csv = String::from("method,x_mm,y_mm,distance_mm,angle_deg\n");
    csv.push_str(&summary_row("classical_textured_noisy", &cls_tex));
    csv.push_str(&summary_row("regressor_textured_noisy", &reg_tex));
    csv.push_str(&summary_row("regressor_200_samples", &small));
    csv.push_str(&summary_row("regressor", &full));
    fs::write(out.join("regressor.txt"), model.to_text()).unwrap();
    fs::write(out.join("regressor_200.txt"), ablated.to_text()).unwrap();
    fs::write(out.join("pose_eval.csv"), csv).unwrap();

    let accurate = full.distance_mm < 1.0 && full.angle_deg < 6.0;
    let baseline_worse =
        cls_tex.distance_mm > reg_tex.distance_mm && cls_tex.angle_deg > reg_tex.angle_deg;
    let ablation_worse = small.distance_mm >= full.distance_mm && small.angle_deg >= full.angle_deg;
    let verdict = Verdict::new(
        accurate && baseline_worse && ablation_worse,
        format!(
            "regressor {:.3} mm / {:.2} deg on {} images; textured-noisy classical {:.3} mm / {:.2} deg ({failures} misses) vs regressor {:.3} mm / {:.2} deg; 200-sample model {:.3} mm / {:.2} deg",
            full.distance_mm, full.angle_deg, full.n, cls_tex.distance_mm, cls_tex.angle_deg,
            reg_tex.distance_mm, reg_tex.angle_deg, small.distance_mm, small.angle_deg
        ),
    );
    (verdict, model)
}

fn c6_oracle(model: &RegressorModel) -> Verdict {
    let spec = DatasetSpec {
        n_per_class: 1,
        n_pose: Some(50),
        params: ParamsDistribution {
            noise_sigma: [0.0, 0.0],
            ..ParamsDistribution::default()
        },
        pose_ranges: PoseRanges::default(),
        seed: 9201,
        ..DatasetSpec::default()
    };
    let samples = generate_samples(&spec).unwrap().poses;
    let grid = OracleGrid::default();
    let errs: Vec<_> = samples
        .iter()
        .map(|s| {
            let oracle = brute_force_pose_oracle(&s.image, &grid).unwrap();
            let est = estimate_pose(model, &s.image).unwrap();
            pose_errors(&est, &oracle)
        })
        .collect();
    let worst_d = errs.iter().map(|e| e.distance_mm).fold(0.0, f64::max);
    let worst_a = errs.iter().map(|e| e.angle_deg).fold(0.0, f64::max);
    Verdict::new(
        worst_d < 1.0 && worst_a < 5.0,
        format!(
            "worst oracle-estimate gap {worst_d:.3} mm / {worst_a:.2} deg over {} noiseless images",
            errs.len()
        ),
    )
}

fn c7_benchmark(models: &PerceptionModels, seed: u64, out: &Path) -> Verdict {
    let suite = BenchmarkSuite::default();
    let table = run_benchmark(&suite, models, &EpisodeGains::default(), seed).unwrap();
    fs::write(out.join("benchmark.csv"), table.to_csv()).unwrap();
    let flat = table.row(ClothConfiguration::Flattened).unwrap();
    let crum = table.row(ClothConfiguration::Crumpled).unwrap();
    let terminated = table.rows.iter().all(|r| r.all_terminated);
    let bounded = table.rows.iter().all(|r| r.commands_bounded);
    Verdict::new(
        flat.total_successes() >= 24 && crum.total_successes() >= 20 && terminated && bounded,
        format!(
            "flattened {}/{}, crumpled {}/{}, all terminated {terminated}, commands bounded {bounded}",
            flat.total_successes(),
            flat.total_trials(),
            crum.total_successes(),
            crum.total_trials()
        ),
    )
}

/// Reachable-set area of one finger by uniform sampling of its bounding box.
fn monte_carlo_area(cfg: &GripperConfig, finger: Finger, n: usize) -> f64 {
    let (lo, hi) = cfg.carriage_range(finger);
    let (l, a) = (cfg.finger_length_mm, cfg.abduction_range_rad);
    let (x0, x1) = (lo - l * a.sin(), hi + l * a.sin());
    let (y0, y1) = (l * a.cos(), l);
    let mut rng = rng_from(808);
    let hits = (0..n)
        .filter(|_| {
            let x = rng.random_range(x0..x1);
            let y = rng.random_range(y0..y1);
            let ab = (y / l).acos();
            ab <= a
                && [ab, -ab]
                    .iter()
                    .any(|&t| (lo..=hi).contains(&(x - l * t.sin())))
        })
        .count();
    hits as f64 / n as f64 * (x1 - x0) * (y1 - y0)
}

fn c8_workspace() -> Verdict {
    let full_cfg = GripperConfig::default();
    let base_cfg = GripperConfig {
        abduction_range_rad: 0.0,
        ..full_cfg
    };
    let full = compute_workspace(&full_cfg, 1.0).unwrap();
    let base = compute_workspace(&base_cfg, 1.0).unwrap();
    let mc = monte_carlo_area(&full_cfg, Finger::Right, 1_000_000);
    let rel = (full.right.area_mm2 - mc).abs() / mc;
    Verdict::new(
        full.right.area_mm2 > base.right.area_mm2
            && full.left.area_mm2 > base.left.area_mm2
            && rel < 0.05,
        format!(
            "full {:.1} mm2 vs baseline {:.1} mm2; Monte Carlo {mc:.1} mm2 ({:.2} % apart)",
            full.right.area_mm2,
            base.right.area_mm2,
            100.0 * rel
        ),
    )
}

fn c9_gradient() -> Verdict {
    let spec = DatasetSpec {
        n_per_class: 1,
        n_pose: Some(60),
        seed: 9301,
        ..DatasetSpec::default()
    };
    let samples = generate_samples(&spec).unwrap().poses;
    let obj = regressor_objective(&samples, &RegressorHyperparams::default()).unwrap();
    let start = obj.ridge_start().unwrap();
    let mut rng = rng_from(909);
    let perturb = Normal::new(0.0, 0.05).unwrap();
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let w: Vec<f64> = start.iter().map(|v| v + perturb.sample(&mut rng)).collect();
        let g = obj.gradient(&w);
        let h = 1e-5;
        let fd: Vec<f64> = (0..w.len())
            .into_par_iter()
            .map(|j| {
                let mut a = w.clone();
                let mut b = w.clone();
                a[j] += h;
                b[j] -= h;
                (obj.loss(&a) - obj.loss(&b)) / (2.0 * h)
            })
            .collect();
        let diff = g
            .iter()
            .zip(&fd)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt();
        let scale = g
            .iter()
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt()
            .max(fd.iter().map(|x| x * x).sum::<f64>().sqrt());
        worst = worst.max(diff / scale.max(1e-300));
    }
    Verdict::new(
        worst < 1e-4,
        format!(
            "worst relative error {worst:.2e} over 10 points, {} parameters",
            obj.n_params()
        ),
    )
}

fn files_equal(a: &Path, b: &Path) -> Vec<String> {
    let mut names: Vec<_> = fs::read_dir(a)
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    names
        .into_iter()
        .filter(|n| fs::read(a.join(n)).ok() != fs::read(b.join(n)).ok())
        .map(|n| n.to_string_lossy().into_owned())
        .collect()
}

fn main() {
    let mut report = Report { failures: 0 };
    let secs = Duration::from_secs;
    let dir = tempfile::tempdir().unwrap();
    let (first, second) = (dir.path().join("first"), dir.path().join("second"));
    fs::create_dir_all(&first).unwrap();
    fs::create_dir_all(&second).unwrap();

    report.record("C1", "loss identities", secs(1), c1_loss_identities);
    report.record("C2", "PID contract", secs(1), c2_pid_contract);
    report.record("C3", "alignment clipping", secs(5), c3_clipping);

    let mut classifier = None;
    report.record("C4", "contact classifier", secs(120), || {
        let (v, m) = c4_classifier(SEED, &first);
        classifier = Some(m);
        v
    });
    let mut regressor = None;
    report.record("C5", "pose estimation", secs(300), || {
        let (v, m) = c5_pose(SEED, &first);
        regressor = Some(m);
        v
    });
    let models = PerceptionModels {
        classifier: classifier.unwrap(),
        regressor: regressor.unwrap(),
    };
    report.record("C6", "oracle equivalence", secs(120), || {
        c6_oracle(&models.regressor)
    });
    report.record("C7", "sliding benchmark", secs(600), || {
        c7_benchmark(&models, SEED, &first)
    });
    report.record("C8", "workspace", secs(30), c8_workspace);
    report.record("C9", "regressor gradient check", secs(30), c9_gradient);

    report.record("C10", "determinism", Duration::MAX, || {
        let (_, classifier) = c4_classifier(SEED, &second);
        let (_, regressor) = c5_pose(SEED, &second);
        c7_benchmark(
            &PerceptionModels {
                classifier,
                regressor,
            },
            SEED,
            &second,
        );
        let differing = files_equal(&first, &second);
        let n = fs::read_dir(&first).unwrap().count();
        Verdict::new(
            differing.is_empty() && n == 6,
            if differing.is_empty() {
                format!("{n} output files of criteria 4, 5 and 7 byte-identical across two runs")
            } else {
                format!("files differ: {}", differing.join(", "))
            },
        )
    });

    if report.failures > 0 {
        println!("{} criteria failed", report.failures);
        std::process::exit(1);
    }
}
