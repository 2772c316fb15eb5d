use clothslide::gripper::{
    compute_workspace, forward_kinematics, step_actuators, ActuatorTargets, Finger,
};
use clothslide::rng::rng_from;
use clothslide::{GripperConfig, GripperState, Vec2};
use proptest::prelude::*;
use rand::Rng;

fn state(cfg: &GripperConfig) -> impl Strategy<Value = GripperState> {
    let (l_lo, l_hi) = cfg.carriage_range(Finger::Left);
    let (_, r_hi) = cfg.carriage_range(Finger::Right);
    let gap = cfg.min_carriage_gap_mm;
    let a = cfg.abduction_range_rad;
    (
        l_lo..l_hi,
        0.0f64..1.0,
        -a..=a,
        -a..=a,
        -3.2f64..3.2,
        -500.0f64..500.0,
        -500.0f64..500.0,
    )
        .prop_map(move |(left, f, la, ra, yaw, bx, by)| GripperState {
            left_pos_mm: left,
            right_pos_mm: left + gap + f * (r_hi - left - gap),
            left_ab_rad: la,
            right_ab_rad: ra,
            yaw_rad: yaw,
            base_xy_mm: Vec2::new(bx, by),
        })
}

/// Area of one finger's reachable set by uniform sampling of its bounding box.
fn monte_carlo_area(cfg: &GripperConfig, finger: Finger, n: usize, seed: u64) -> f64 {
    let (lo, hi) = cfg.carriage_range(finger);
    let (l, a) = (cfg.finger_length_mm, cfg.abduction_range_rad);
    let (x0, x1) = (lo - l * a.sin(), hi + l * a.sin());
    let (y0, y1) = (l * a.cos(), l);
    let mut rng = rng_from(seed);
    let mut hits = 0usize;
    for _ in 0..n {
        let x = rng.random_range(x0..x1);
        let y = rng.random_range(y0..y1);
        let ab = (y / l).acos();
        let ok = ab <= a
            && [ab, -ab]
                .iter()
                .any(|&t| (lo..=hi).contains(&(x - l * t.sin())));
        hits += usize::from(ok);
    }
    hits as f64 / n as f64 * (x1 - x0) * (y1 - y0)
}

#[test]
fn workspace_matches_monte_carlo() {
    let cfg = GripperConfig::default();
    let ws = compute_workspace(&cfg, 1.0).unwrap();
    for (finger, area) in [
        (Finger::Left, ws.left.area_mm2),
        (Finger::Right, ws.right.area_mm2),
    ] {
        let mc = monte_carlo_area(&cfg, finger, 400_000, 5);
        assert!((area - mc).abs() / mc < 0.05, "{finger:?}: {area} vs {mc}");
    }
}

#[test]
fn workspace_converges_with_resolution() {
    let cfg = GripperConfig::default();
    let coarse = compute_workspace(&cfg, 5.0).unwrap().right.area_mm2;
    let fine = compute_workspace(&cfg, 1.0).unwrap().right.area_mm2;
    assert!((coarse - fine).abs() / fine < 0.10, "{coarse} vs {fine}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn kinematics_commute_with_rigid_motions(
        s in state(&GripperConfig::default()),
        phi in -3.2f64..3.2,
        tx in -300.0f64..300.0,
        ty in -300.0f64..300.0,
    ) {
        let cfg = GripperConfig::default();
        let t = Vec2::new(tx, ty);
        let moved = GripperState { base_xy_mm: s.base_xy_mm.rotate(phi) + t, yaw_rad: s.yaw_rad + phi, ..s };
        let (l0, r0) = forward_kinematics(&cfg, &s).unwrap();
        let (l1, r1) = forward_kinematics(&cfg, &moved).unwrap();
        for (a, b) in [(l0, l1), (r0, r1)] {
            prop_assert!((a.center.rotate(phi) + t - b.center).norm() < 1e-9);
            prop_assert!((a.heading + phi - b.heading).abs() < 1e-12);
        }
    }

    #[test]
    fn actuators_approach_targets_monotonically(
        s in state(&GripperConfig::default()),
        target in state(&GripperConfig::default()),
        tau in 0.0f64..0.5,
        dt in 1e-3f64..0.2,
    ) {
        let cfg = GripperConfig { actuator_time_constant_s: tau, ..GripperConfig::default() };
        let targets = ActuatorTargets::hold(&target);
        let mut x = s;
        for _ in 0..20 {
            let next = step_actuators(&cfg, &x, &targets, dt);
            let axes = [
                (x.left_pos_mm, next.left_pos_mm, targets.left_pos_mm),
                (x.right_pos_mm, next.right_pos_mm, targets.right_pos_mm),
                (x.left_ab_rad, next.left_ab_rad, targets.left_ab_rad),
                (x.right_ab_rad, next.right_ab_rad, targets.right_ab_rad),
            ];
            for (before, after, goal) in axes {
                prop_assert!((after - goal).abs() <= (before - goal).abs() + 1e-12);
            }
            x = next;
        }
    }

    // Below about 5 deg the reachable band is thinner than the raster's
    // sub-sample spacing.
    #[test]
    fn abduction_strictly_enlarges_workspace(range_deg in 5.0f64..90.0) {
        let base = GripperConfig { abduction_range_rad: 0.0, ..GripperConfig::default() };
        let full = GripperConfig { abduction_range_rad: range_deg.to_radians(), ..base };
        let a0 = compute_workspace(&base, 2.0).unwrap();
        let a1 = compute_workspace(&full, 2.0).unwrap();
        prop_assert!(a1.left.area_mm2 > a0.left.area_mm2);
        prop_assert!(a1.right.area_mm2 > a0.right.area_mm2);
    }
}
