use clothslide::control::{AlignmentController, PidController};
use clothslide::rng::rng_from;
use clothslide::{AlignmentGains, PidGains};
use proptest::prelude::*;
use rand_distr::{Distribution, StandardNormal};

fn pid(kp: f64, ki: f64, kd: f64, alpha: f64) -> PidController {
    PidController::new(PidGains::new(kp, ki, kd, alpha).unwrap()).unwrap()
}

fn variance(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n
}

/// kd-term of a derivative-only controller over a white-noise error signal.
fn kd_term_variance(alpha: f64, seed: u64) -> f64 {
    let mut rng = rng_from(seed);
    let errors: Vec<f64> = (0..1000).map(|_| StandardNormal.sample(&mut rng)).collect();
    let mut c = pid(0.0, 0.0, 1.0, alpha);
    let out: Vec<f64> = errors.iter().map(|&e| c.update(e, 0.01).unwrap()).collect();
    variance(&out[1..])
}

#[test]
fn filtered_derivative_reduces_noise_variance() {
    for seed in 0..5 {
        let ratio = kd_term_variance(0.2, seed) / kd_term_variance(1.0, seed);
        assert!(ratio < 0.3, "seed {seed}: ratio {ratio}");
    }
}

#[test]
fn integral_is_consistent_under_time_scaling() {
    // Ramp e(t) = t over 2 s; the integral term tends to ki * t^2 / 2.
    let ki = 1.3;
    let run = |dt: f64| {
        let mut c = pid(0.0, ki, 0.0, 1.0);
        let steps = (2.0 / dt).round() as usize;
        let mut out = 0.0;
        for k in 1..=steps {
            out = c.update(k as f64 * dt, dt).unwrap();
        }
        out
    };
    let coarse = run(0.01);
    let fine = run(0.005);
    assert!((coarse - fine).abs() / fine < 0.01, "{coarse} vs {fine}");
    assert!((fine - ki * 2.0).abs() / (ki * 2.0) < 0.01);
}

proptest! {
    #[test]
    fn proportional_output_is_linear(kp in 0.0f64..50.0, e in -100.0f64..100.0, s in -10.0f64..10.0, dt in 1e-3f64..1.0) {
        let mut a = pid(kp, 0.0, 0.0, 0.7);
        let mut b = pid(kp, 0.0, 0.0, 0.7);
        let ua = a.update(e, dt).unwrap();
        let ub = b.update(s * e, dt).unwrap();
        prop_assert!((ub - s * ua).abs() <= 1e-9 * (1.0 + ub.abs()));
    }

    #[test]
    fn unfiltered_derivative_is_finite_difference(errors in prop::collection::vec(-10.0f64..10.0, 2..20), dt in 1e-3f64..1.0) {
        let mut c = pid(0.0, 0.0, 1.0, 1.0);
        c.update(errors[0], dt).unwrap();
        for w in errors.windows(2) {
            c.update(w[1], dt).unwrap();
            prop_assert_eq!(c.filtered_derivative(), (w[1] - w[0]) / dt);
        }
    }

    #[test]
    fn alignment_commands_respect_limits(
        kpy in -1e3f64..1e3, kdy in -1e3f64..1e3, kpt in -1e4f64..1e4, kdt in -1e3f64..1e3, beta in -5.0f64..5.0,
        inputs in prop::collection::vec((-1e3f64..1e3, -10.0f64..10.0, 1e-4f64..1.0), 1..30),
    ) {
        let gains = AlignmentGains { kpy, kdy, kpt, kdt, beta, ..AlignmentGains::default() };
        let mut c = AlignmentController::new(gains).unwrap();
        for (ey, et, dt) in inputs {
            let u = c.update(ey, et, dt).unwrap();
            prop_assert!(u.u_yaw_deg.abs() <= 5.0 && u.u_ab_deg.abs() <= 30.0);
        }
    }

    #[test]
    fn zero_errors_give_zero_commands(steps in 1usize..200, dt in 1e-3f64..0.5) {
        let mut c = AlignmentController::new(AlignmentGains::default()).unwrap();
        for _ in 0..steps {
            let u = c.update(0.0, 0.0, dt).unwrap();
            prop_assert_eq!((u.u_yaw_deg, u.u_ab_deg), (0.0, 0.0));
        }
    }
}
